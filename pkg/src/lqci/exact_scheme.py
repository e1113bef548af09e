""" The exact improvisation scheme for DFA specifications.

The scheme needs three operations per cost class: its cost set, its size
and a uniform sampler. For a state-output label DFA and either a
state-output or an accumulated-weight cost DFA all three reduce to products
of DFAs, which :mod:`lqci.automata` counts and samples exactly.
"""

import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .automata import (
    Dfa,
    StateOutputDfa,
    WeightedDfa,
    count_table,
    cost_tracking_dfa,
    enumerate_words,
    possible_costs,
    product,
    restrict_output,
    sample_uniform,
    total_words,
)
from .core import (
    CostClassTable,
    FeasibilityReport,
    ImprovisingDistributionSpec,
    LqciInstance,
    feasibility_check,
)
from .errors import BudgetExceededError, InfeasibleError, InvalidInstanceError, TooManyWordsError
from .utils import Word, categorical_draw, integer_weights, parallel_samples, thread_count

logger = logging.getLogger(__name__)

DEFAULT_COST_BUDGET = 10 ** 4
DEFAULT_ENUMERATION_CAP = 10 ** 5

CostSpec = Union[StateOutputDfa, WeightedDfa]


@dataclass(frozen=True)
class ClassSampler:
    """ Uniform sampler over one cost class I_{i,k}.
    """

    dfa: Dfa
    m: int
    n: int
    size: int

    def sample(self, rng: random.Random) -> Word:
        return sample_uniform(self.dfa, self.m, self.n, count_table(self.dfa, self.n), rng)

    def words(self) -> Iterator[Word]:
        return enumerate_words(self.dfa, self.m, self.n)


def _cost_classes(cost: CostSpec, hard: Dfa, m: int, n: int, budget: int) -> Tuple[List[int], Any]:
    """ Candidate costs and a builder for the DFA accepting each cost.
    """
    if isinstance(cost, StateOutputDfa):
        return cost.values, lambda theta: restrict_output(cost, theta)
    if isinstance(cost, WeightedDfa):
        copies = cost.max_weight * (n + 1)
        if copies > budget:
            raise BudgetExceededError(
                f"Accumulated costs reach {copies} (max weight {cost.max_weight} x {n + 1} steps), budget is {budget}."
            )
        return possible_costs(cost, hard, m, n), lambda theta: cost_tracking_dfa(cost, theta)
    raise InvalidInstanceError(f"Unsupported cost specification {type(cost).__name__}.")


def build_cost_class_table(
    hard: Dfa,
    label: StateOutputDfa,
    cost: CostSpec,
    m: int,
    n: int,
    labels: Optional[Sequence[int]] = None,
    budget: int = DEFAULT_COST_BUDGET,
    workers: Optional[int] = None,
) -> CostClassTable:
    """ Sizes and samplers of every cost class.

    Args:
        hard: Hard constraint DFA.
        label: State-output label DFA.
        cost: State-output or weighted cost DFA.
        m, n: Word length bounds.
        labels: Label values, in label-index order. Defaults to every output
            of the label DFA.
        budget: Cap on the accumulated-cost range of a weighted cost DFA.
        workers: Threads used to count classes. Defaults to IMPROV_THREADS.

    Returns:
        The class table. Costs no word reaches are left out.

    Raises:
        BudgetExceededError: A weighted cost DFA needs more than ``budget``
            cost copies.
    """
    started = time.time()
    labels = tuple(label.values if labels is None else labels)
    thetas, class_dfa = _cost_classes(cost, hard, m, n, budget)
    logger.info("Building class table for %d labels and %d candidate costs.", len(labels), len(thetas))

    by_label = [product(hard, restrict_output(label, value)) for value in labels]
    by_cost = [class_dfa(theta) for theta in thetas]

    def build(cell):
        i, k = cell
        dfa = product(by_label[i], by_cost[k])
        return ClassSampler(dfa, m, n, total_words(dfa, m, n))

    cells = [(i, k) for i in range(len(labels)) for k in range(len(thetas))]
    with ThreadPoolExecutor(max_workers=workers or thread_count()) as pool:
        samplers = list(pool.map(build, cells))

    grid = [[samplers[i * len(thetas) + k] for k in range(len(thetas))] for i in range(len(labels))]
    keep = [k for k in range(len(thetas)) if any(grid[i][k].size for i in range(len(labels)))]
    table = CostClassTable(
        labels=labels,
        costs=tuple(thetas[k] for k in keep),
        sizes=[[grid[i][k].size for k in keep] for i in range(len(labels))],
        samplers=[[grid[i][k] for k in keep] for i in range(len(labels))],
    )

    expected = total_words(hard, m, n)
    if table.total_size != expected:
        logger.warning(
            "Class sizes add up to %d but the hard constraint accepts %d words; some words carry no listed label.",
            table.total_size,
            expected,
        )
    logger.info("Class table built in %.3fs, %d words in total.", time.time() - started, table.total_size)
    return table


def table_for(instance: LqciInstance, budget: int = DEFAULT_COST_BUDGET, workers: Optional[int] = None) -> CostClassTable:
    """ Class table of an instance whose specifications are DFAs.
    """
    if not isinstance(instance.hard, Dfa) or not isinstance(instance.label, StateOutputDfa):
        raise InvalidInstanceError("The exact scheme needs a hard DFA and a state-output label DFA.")
    return build_cost_class_table(
        instance.hard,
        instance.label,
        instance.cost,
        instance.m,
        instance.n,
        labels=instance.labels,
        budget=budget,
        workers=workers,
    )


class Improviser(object):
    """ Samples words from an improvising distribution over a class table.

    A class is picked with one exact categorical draw over all classes with
    positive probability, then a word is drawn uniformly inside it.

    Arguments:
        table: Class table with samplers.
        spec: Distribution over its classes.
        instance: Instance the distribution was built for, if any.
    """

    def __init__(self, table: CostClassTable, spec: ImprovisingDistributionSpec, instance: LqciInstance = None):
        if table.samplers is None:
            raise ValueError("The class table carries no samplers.")
        self.table = table
        self.spec = spec
        self.instance = instance

        joint = spec.joint()
        self._classes = [cell for cell, p in sorted(joint.items()) if p > 0]
        for i, k in self._classes:
            if table.sizes[i][k] == 0:
                raise ValueError(f"Class {(i, k)} is empty but has positive probability.")
        self._weights = integer_weights([joint[cell] for cell in self._classes])

    def __repr__(self):
        return f"<Improviser classes={len(self._classes)} expected_cost={self.spec.expected_cost}>"

    @property
    def expected_cost(self) -> Fraction:
        return self.spec.expected_cost

    def sample_with_class(self, rng: random.Random) -> Tuple[Word, int, int]:
        """ A word together with its (label index, cost index).
        """
        i, k = self._classes[categorical_draw(rng, self._weights)]
        return self.table.sampler(i, k).sample(rng), i, k

    def sample(self, rng: Optional[random.Random] = None) -> Word:
        return self.sample_with_class(rng or random.Random())[0]

    def generate(self, count: int, seed: Optional[int] = None, workers: Optional[int] = None) -> List[Tuple[Word, int, int]]:
        """ ``count`` (word, label index, cost index) samples; see :func:`lqci.utils.parallel_samples`.
        """
        return parallel_samples(self.sample_with_class, count, seed, workers)


def check_instance(
    instance: LqciInstance, budget: int = DEFAULT_COST_BUDGET, workers: Optional[int] = None
) -> Tuple[FeasibilityReport, CostClassTable]:
    """ Builds the class table and decides feasibility.
    """
    table = table_for(instance, budget=budget, workers=workers)
    return feasibility_check(instance, table), table


def build_improviser(
    instance: LqciInstance, budget: int = DEFAULT_COST_BUDGET, workers: Optional[int] = None
) -> Improviser:
    """ Improviser for the greedy (minimum expected cost) distribution.

    Raises:
        InfeasibleError: The instance is infeasible; ``err.report`` holds the verdict.
        BudgetExceededError: Accumulated costs exceed ``budget``.
    """
    report, table = check_instance(instance, budget=budget, workers=workers)
    if not report.feasible:
        raise InfeasibleError(report)
    return Improviser(table, report.spec, instance)


def exact_word_distribution(improviser: Improviser, cap: int = DEFAULT_ENUMERATION_CAP) -> Dict[Word, Fraction]:
    """ Exact output distribution of an improviser, by enumeration.

    Raises:
        TooManyWordsError: The class table holds more than ``cap`` words.
    """
    table = improviser.table
    if table.total_size > cap:
        raise TooManyWordsError(f"{table.total_size} words exceed the enumeration cap of {cap}.")

    distribution = {}
    for i in range(table.label_count):
        for k in range(len(table.costs)):
            p = improviser.spec.word_probability(i, k)
            if p == 0:
                continue
            for word in table.sampler(i, k).words():
                distribution[word] = p
    return distribution


def unlabelled(instance: LqciInstance, alpha=None, beta=None) -> LqciInstance:
    """ The same instance as plain quantitative improvisation: one label covers every word.

    Args:
        instance: Labelled instance with DFA specifications.
        alpha: Word lower bound. Defaults to the smallest per-label alpha.
        beta: Word upper bound. Defaults to the largest per-label beta.
    """
    label = StateOutputDfa(Dfa.universal(instance.alphabet), (0,))
    return instance.replace(
        label=label,
        labels=(0,),
        lam=1,
        rho=1,
        alpha=min(instance.alpha) if alpha is None else alpha,
        beta=max(instance.beta) if beta is None else beta,
    )
