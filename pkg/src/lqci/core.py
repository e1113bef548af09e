""" Exact-rational LQCI data model and the greedy construction.

Everything here works over :class:`fractions.Fraction` and Python integers;
feasibility is an exact "if and only if", so no floating point is used.

The greedy construction has two phases:

    1. The greedy cost construction builds, per label, the cheapest
       class distribution that keeps every word between alpha and beta.
    2. The greedy label construction gives the cheapest labels the largest
       marginal mass allowed by lambda and rho.

Their product is the minimum expected cost distribution among those meeting
the hard and randomness constraints, so comparing its cost with the bound
decides feasibility.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from .errors import (
    AlphaBetaMismatchError,
    AlphaTooLargeError,
    BetaTooSmallError,
    InvalidInstanceError,
    LabelBoundsInfeasibleError,
)
from .utils import RationalLike, fraction_to_json, fraction_to_text, to_fraction

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class LqciInstance:
    """ A labelled quantitative control improvisation instance.

    The hard, cost and label specifications are opaque handles here; the
    exact scheme expects DFAs and the approximate scheme CNF formulas.

    Arguments:
        alphabet: Finite symbol list.
        m, n: Word length bounds, m <= n.
        hard: Hard specification handle.
        cost: Cost specification handle.
        label: Label specification handle.
        labels: The label set, in label-index order.
        c: Expected cost bound (> 0).
        lam, rho: Bounds on each label's marginal probability.
        alpha, beta: Per-label bounds on each word's conditional probability.
            A single value is broadcast to every label.
    """

    alphabet: Tuple[str, ...]
    m: int
    n: int
    hard: Any
    cost: Any
    label: Any
    labels: Tuple[Any, ...]
    c: Fraction
    lam: Fraction
    rho: Fraction
    alpha: Tuple[Fraction, ...]
    beta: Tuple[Fraction, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        set_ = object.__setattr__
        set_(self, "alphabet", tuple(self.alphabet))
        set_(self, "labels", labels)
        set_(self, "c", to_fraction(self.c))
        set_(self, "lam", to_fraction(self.lam))
        set_(self, "rho", to_fraction(self.rho))
        set_(self, "alpha", _per_label(self.alpha, len(labels), "alpha"))
        set_(self, "beta", _per_label(self.beta, len(labels), "beta"))

        if not labels:
            raise InvalidInstanceError("An instance needs at least one label.")
        if len(set(labels)) != len(labels):
            raise InvalidInstanceError("Labels must be distinct.")
        if not 0 <= self.m <= self.n:
            raise InvalidInstanceError(f"Length bounds must satisfy 0 <= m <= n, got m={self.m}, n={self.n}.")
        if not ZERO <= self.lam <= self.rho <= ONE:
            raise InvalidInstanceError(f"Need 0 <= lambda <= rho <= 1, got {self.lam}, {self.rho}.")
        for i, (a, b) in enumerate(zip(self.alpha, self.beta)):
            if not ZERO <= a <= b <= ONE:
                raise InvalidInstanceError(f"Need 0 <= alpha <= beta <= 1 for label {labels[i]!r}, got {a}, {b}.")
        if self.c <= 0:
            raise InvalidInstanceError(f"Cost bound must be positive, got {self.c}.")

    @property
    def label_count(self) -> int:
        return len(self.labels)

    def replace(self, **changes) -> "LqciInstance":
        """ Copy of this instance with some fields changed.
        """
        from dataclasses import replace

        return replace(self, **changes)


def _per_label(values, count: int, name: str) -> Tuple[Fraction, ...]:
    if isinstance(values, (list, tuple)):
        if len(values) != count:
            raise InvalidInstanceError(f"Expected {count} {name} values, got {len(values)}.")
        return tuple(to_fraction(v) for v in values)
    return tuple(to_fraction(values) for _ in range(count))


@dataclass(frozen=True)
class CostClassTable:
    """ Sizes of the cost classes I_{i,k}, one row per label.

    Arguments:
        labels: Label set, row order.
        costs: Possible costs, strictly increasing, column order.
        sizes: sizes[i][k] is |I_{i,k}| as an exact integer.
        samplers: Optional opaque sampler handles with the same shape.
    """

    labels: Tuple[Any, ...]
    costs: Tuple[Fraction, ...]
    sizes: Tuple[Tuple[int, ...], ...]
    samplers: Optional[Tuple[Tuple[Any, ...], ...]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "costs", tuple(to_fraction(c) for c in self.costs))
        object.__setattr__(self, "sizes", tuple(tuple(int(s) for s in row) for row in self.sizes))
        if self.samplers is not None:
            object.__setattr__(self, "samplers", tuple(tuple(row) for row in self.samplers))

        if any(b <= a for a, b in zip(self.costs, self.costs[1:])):
            raise ValueError("Costs must be strictly increasing.")
        if len(self.sizes) != len(self.labels):
            raise ValueError("Need one size row per label.")
        for row in self.sizes:
            if len(row) != len(self.costs):
                raise ValueError("Need one size per cost in every row.")
            if any(s < 0 for s in row):
                raise ValueError("Class sizes must be non-negative.")
        if self.samplers is not None:
            if len(self.samplers) != len(self.labels) or any(len(r) != len(self.costs) for r in self.samplers):
                raise ValueError("Sampler handles must match the size table shape.")

    @classmethod
    def from_classes(cls, classes: Mapping[Tuple[Any, RationalLike], int], labels: Sequence[Any] = None):
        """ Builds a table from a {(label, cost): size} mapping.
        Missing combinations get size 0.
        """
        if labels is None:
            labels = sorted({label for label, _ in classes})
        costs = sorted({to_fraction(cost) for _, cost in classes})
        lookup = {(label, to_fraction(cost)): size for (label, cost), size in classes.items()}
        sizes = [[lookup.get((label, cost), 0) for cost in costs] for label in labels]
        return cls(labels=tuple(labels), costs=tuple(costs), sizes=sizes)

    @property
    def label_count(self) -> int:
        return len(self.labels)

    def label_size(self, i: int) -> int:
        """ |I_i|, the number of words with label index i.
        """
        return sum(self.sizes[i])

    @property
    def total_size(self) -> int:
        return sum(self.label_size(i) for i in range(self.label_count))

    def classes(self, i: int) -> List[Tuple[Fraction, int]]:
        """ (cost, size) pairs of label i in increasing cost order.
        """
        return list(zip(self.costs, self.sizes[i]))

    def sampler(self, i: int, k: int) -> Any:
        if self.samplers is None:
            return None
        return self.samplers[i][k]

    def to_frame(self) -> pd.DataFrame:
        """ One row per (label, cost) class with its size.
        """
        rows = [
            {"label": label, "cost": float(cost), "cost_exact": fraction_to_text(cost), "size": size}
            for label, row in zip(self.labels, self.sizes)
            for cost, size in zip(self.costs, row)
        ]
        return pd.DataFrame(rows, columns=["label", "cost", "cost_exact", "size"])


@dataclass(frozen=True)
class ClassDistribution:
    """ Output of the greedy cost construction for one label.

    Attributes:
        probabilities: Probability of each whole class, aligned with the
            classes passed in (uniform over words inside a class).
        expected_cost: E_i, the expected cost under this distribution.
        overflow_count: o_i, or None when alpha == beta.
        overflow_class: Index r_i of the class receiving the overflow mass,
            None if every class got beta per word.
    """

    probabilities: Tuple[Fraction, ...]
    expected_cost: Fraction
    overflow_count: Optional[Fraction] = None
    overflow_class: Optional[int] = None


@dataclass(frozen=True)
class LabelDistribution:
    """ Output of the greedy label construction.

    Attributes:
        marginals: D-hat, aligned with the expected costs passed in.
        overflow_labels: u, the number of labels given rho (None if lambda == rho).
        order: Label indices in the order they were filled.
    """

    marginals: Tuple[Fraction, ...]
    overflow_labels: Optional[int]
    order: Tuple[int, ...]


def greedy_cost_construction(
    classes: Sequence[Tuple[RationalLike, int]], alpha: RationalLike, beta: RationalLike
) -> ClassDistribution:
    """ Cheapest class distribution keeping each word within [alpha, beta].

    Walks the classes by increasing cost, giving beta to each word until the
    running word count would pass o = (1 - alpha |I|) / (beta - alpha); the
    class where that happens takes the overflow mass and the rest get alpha.

    Args:
        classes: (cost, size) pairs for one label. Empty classes are skipped
            and receive probability 0. Ties keep their given order.
        alpha: Lower bound on each word's conditional probability.
        beta: Upper bound on each word's conditional probability.

    Returns:
        The class distribution, aligned with ``classes``.

    Raises:
        AlphaBetaMismatchError: alpha == beta but alpha |I| != 1.
        AlphaTooLargeError: alpha |I| > 1.
        BetaTooSmallError: beta |I| < 1.
    """
    alpha = to_fraction(alpha)
    beta = to_fraction(beta)
    if not ZERO <= alpha <= beta <= ONE:
        raise ValueError(f"Need 0 <= alpha <= beta <= 1, got {alpha}, {beta}.")

    costs = [to_fraction(cost) for cost, _ in classes]
    sizes = [int(size) for _, size in classes]
    if any(s < 0 for s in sizes):
        raise ValueError("Class sizes must be non-negative.")
    total = sum(sizes)
    order = sorted((k for k in range(len(sizes)) if sizes[k] > 0), key=lambda k: (costs[k], k))
    probabilities = [ZERO] * len(sizes)

    if alpha == beta:
        if alpha * total != 1:
            raise AlphaBetaMismatchError(f"alpha = beta = {alpha} needs exactly {1 / alpha if alpha else 'infinitely many'} words, found {total}.")
        for k in order:
            probabilities[k] = alpha * sizes[k]
        return ClassDistribution(tuple(probabilities), _expected(probabilities, costs))

    if alpha * total > 1:
        raise AlphaTooLargeError(f"alpha * |I_i| = {alpha * total} > 1.")
    if beta * total < 1:
        raise BetaTooSmallError(f"beta * |I_i| = {beta * total} < 1.")

    o = (1 - alpha * total) / (beta - alpha)
    seen = 0
    overflow = None
    for k in order:
        size = sizes[k]
        if overflow is None and seen + size > o:
            probabilities[k] = beta * (o - seen) + alpha * (seen + size - o)
            overflow = k
        elif overflow is None:
            probabilities[k] = beta * size
        else:
            probabilities[k] = alpha * size
        seen += size

    return ClassDistribution(tuple(probabilities), _expected(probabilities, costs), o, overflow)


def _expected(probabilities: Sequence[Fraction], costs: Sequence[Fraction]) -> Fraction:
    return sum((p * c for p, c in zip(probabilities, costs)), ZERO)


def greedy_label_construction(
    expected_costs: Sequence[RationalLike], lam: RationalLike, rho: RationalLike
) -> LabelDistribution:
    """ Cheapest label marginals within [lambda, rho].

    Labels are ranked by expected cost (ties by index); the first
    u = floor((1 - |Omega| lambda) / (rho - lambda)) get rho, the next gets
    what is left after reserving lambda for the rest.

    Raises:
        LabelBoundsInfeasibleError: unless 1/rho <= |Omega| <= 1/lambda.
    """
    lam = to_fraction(lam)
    rho = to_fraction(rho)
    costs = [to_fraction(c) for c in expected_costs]
    count = len(costs)
    if not ZERO <= lam <= rho <= ONE:
        raise ValueError(f"Need 0 <= lambda <= rho <= 1, got {lam}, {rho}.")
    if rho * count < 1 or lam * count > 1:
        raise LabelBoundsInfeasibleError(f"{count} labels lie outside [1/rho, 1/lambda] for lambda={lam}, rho={rho}.")

    order = tuple(sorted(range(count), key=lambda i: (costs[i], i)))
    marginals = [ZERO] * count

    if lam == rho:
        for i in order:
            marginals[i] = lam
        return LabelDistribution(tuple(marginals), None, order)

    u = math.floor((1 - count * lam) / (rho - lam))
    for position, i in enumerate(order):
        if position < u:
            marginals[i] = rho
        elif position == u:
            marginals[i] = 1 - rho * u - lam * (count - u - 1)
        else:
            marginals[i] = lam
    return LabelDistribution(tuple(marginals), u, order)


@dataclass(frozen=True)
class ImprovisingDistributionSpec:
    """ A distribution over cost classes, uniform within each class.

    Attributes:
        labels, costs: Axes of the class table.
        sizes: Class sizes (used for per-word probabilities).
        marginals: D-hat(i) per label.
        conditionals: D_i(I_{i,k}) per label and cost.
        label_costs: E_i per label.
        expected_cost: Overall expected cost.
        overflow_counts: o_i per label (None where alpha == beta).
        overflow_classes: r_i per label (None where no class overflowed).
        overflow_labels: u (None where lambda == rho).
    """

    labels: Tuple[Any, ...]
    costs: Tuple[Fraction, ...]
    sizes: Tuple[Tuple[int, ...], ...]
    marginals: Tuple[Fraction, ...]
    conditionals: Tuple[Tuple[Fraction, ...], ...]
    label_costs: Tuple[Fraction, ...]
    expected_cost: Fraction
    overflow_counts: Tuple[Optional[Fraction], ...] = ()
    overflow_classes: Tuple[Optional[int], ...] = ()
    overflow_labels: Optional[int] = None

    def joint(self) -> Dict[Tuple[int, int], Fraction]:
        """ D(I_{i,k}) = D-hat(I_i) D_i(I_{i,k}) for every (label index, cost index).
        """
        return {
            (i, k): self.marginals[i] * p
            for i, row in enumerate(self.conditionals)
            for k, p in enumerate(row)
        }

    def word_probability(self, i: int, k: int) -> Fraction:
        """ Probability of any single word of class (i, k).
        """
        size = self.sizes[i][k]
        if size == 0:
            return ZERO
        return self.marginals[i] * self.conditionals[i][k] / size

    def to_json(self) -> Dict[str, Any]:
        """ JSON document with exact rationals and decimal approximations.
        """
        return {
            "labels": list(self.labels),
            "costs": [fraction_to_json(c) for c in self.costs],
            "sizes": [[str(s) for s in row] for row in self.sizes],
            "marginals": [fraction_to_json(p) for p in self.marginals],
            "conditionals": [[fraction_to_json(p) for p in row] for row in self.conditionals],
            "label_costs": [fraction_to_json(e) for e in self.label_costs],
            "expected_cost": fraction_to_json(self.expected_cost),
            "overflow_counts": [None if o is None else fraction_to_json(o) for o in self.overflow_counts],
            "overflow_classes": list(self.overflow_classes),
            "overflow_labels": self.overflow_labels,
        }


def combine(
    label_marginal,
    per_label_distributions: Sequence[ClassDistribution],
    table: CostClassTable,
) -> ImprovisingDistributionSpec:
    """ Joins label marginals and per-label class distributions.

    Args:
        label_marginal: A :class:`LabelDistribution` or a plain sequence of
            marginal probabilities.
        per_label_distributions: One :class:`ClassDistribution` per label.
        table: The class table both were computed for.
    """
    if isinstance(label_marginal, LabelDistribution):
        marginals = label_marginal.marginals
        u = label_marginal.overflow_labels
    else:
        marginals = tuple(to_fraction(p) for p in label_marginal)
        u = None
    if len(marginals) != len(per_label_distributions) or len(marginals) != table.label_count:
        raise ValueError("Need one marginal and one class distribution per label.")

    label_costs = tuple(d.expected_cost for d in per_label_distributions)
    expected = sum((p * e for p, e in zip(marginals, label_costs)), ZERO)
    return ImprovisingDistributionSpec(
        labels=table.labels,
        costs=table.costs,
        sizes=table.sizes,
        marginals=tuple(marginals),
        conditionals=tuple(d.probabilities for d in per_label_distributions),
        label_costs=label_costs,
        expected_cost=expected,
        overflow_counts=tuple(d.overflow_count for d in per_label_distributions),
        overflow_classes=tuple(d.overflow_class for d in per_label_distributions),
        overflow_labels=u,
    )


class InfeasibilityReason(Enum):
    LabelCountVsRho = "LabelCountVsRho"
    LabelCountVsLambda = "LabelCountVsLambda"
    ClassTooSmallForBeta = "ClassTooSmallForBeta"
    ClassTooBigForAlpha = "ClassTooBigForAlpha"
    MinCostExceedsBound = "MinCostExceedsBound"


@dataclass(frozen=True)
class FeasibilityReport:
    """ Feasibility verdict. Feasible reports carry the greedy distribution.
    """

    feasible: bool
    spec: Optional[ImprovisingDistributionSpec] = None
    reason: Optional[InfeasibilityReason] = None
    detail: str = ""

    def __bool__(self):
        return self.feasible

    def to_json(self) -> Dict[str, Any]:
        data = {"feasible": self.feasible}
        if self.feasible:
            data["distribution"] = self.spec.to_json()
        else:
            data["reason"] = self.reason.value
            data["detail"] = self.detail
        return data


def _infeasible(reason: InfeasibilityReason, detail: str) -> FeasibilityReport:
    logger.info("Instance infeasible (%s): %s", reason.value, detail)
    return FeasibilityReport(False, reason=reason, detail=detail)


def greedy_distribution(
    table: CostClassTable,
    lam: RationalLike,
    rho: RationalLike,
    alpha: Sequence[RationalLike],
    beta: Sequence[RationalLike],
) -> ImprovisingDistributionSpec:
    """ Both greedy phases over a class table (raises on failure).
    """
    per_label = [greedy_cost_construction(table.classes(i), alpha[i], beta[i]) for i in range(table.label_count)]
    marginal = greedy_label_construction([d.expected_cost for d in per_label], lam, rho)
    return combine(marginal, per_label, table)


def check_bounds(
    table: CostClassTable,
    c: RationalLike,
    lam: RationalLike,
    rho: RationalLike,
    alpha: Sequence[RationalLike],
    beta: Sequence[RationalLike],
) -> FeasibilityReport:
    """ Decides feasibility of explicit bounds over a class table.

    Checks, in order, the label count against rho and lambda, every label
    class size against beta and alpha, and finally the greedy distribution's
    expected cost against the bound c.
    """
    c, lam, rho = to_fraction(c), to_fraction(lam), to_fraction(rho)
    alpha = [to_fraction(a) for a in alpha]
    beta = [to_fraction(b) for b in beta]
    count = table.label_count
    if len(alpha) != count or len(beta) != count:
        raise ValueError(f"Need one alpha and one beta per label, the table has {count} labels.")

    if rho * count < 1:
        return _infeasible(InfeasibilityReason.LabelCountVsRho, f"|Omega| = {count} < 1/rho with rho = {rho}.")
    if lam * count > 1:
        return _infeasible(InfeasibilityReason.LabelCountVsLambda, f"|Omega| = {count} > 1/lambda with lambda = {lam}.")

    for i in range(count):
        size = table.label_size(i)
        if beta[i] * size < 1:
            return _infeasible(
                InfeasibilityReason.ClassTooSmallForBeta,
                f"label {table.labels[i]!r}: |I_i| = {size} < 1/beta with beta = {beta[i]}.",
            )
        if alpha[i] * size > 1:
            return _infeasible(
                InfeasibilityReason.ClassTooBigForAlpha,
                f"label {table.labels[i]!r}: |I_i| = {size} > 1/alpha with alpha = {alpha[i]}.",
            )

    spec = greedy_distribution(table, lam, rho, alpha, beta)
    if spec.expected_cost > c:
        return _infeasible(
            InfeasibilityReason.MinCostExceedsBound,
            f"minimum expected cost {fraction_to_text(spec.expected_cost)} exceeds c = {fraction_to_text(c)}.",
        )
    logger.info("Instance feasible, greedy expected cost %s.", fraction_to_text(spec.expected_cost))
    return FeasibilityReport(True, spec=spec)


def feasibility_check(instance: LqciInstance, table: CostClassTable) -> FeasibilityReport:
    """ Decides feasibility and returns the greedy distribution when feasible.
    """
    if table.label_count != instance.label_count:
        raise ValueError(f"Table has {table.label_count} labels but the instance declares {instance.label_count}.")
    return check_bounds(table, instance.c, instance.lam, instance.rho, instance.alpha, instance.beta)


def improvising_violations(
    joint: Mapping[Tuple[int, int], Fraction],
    table: CostClassTable,
    instance: LqciInstance,
    word_slack: RationalLike = 1,
) -> List[str]:
    """ Lists the improvising-distribution conditions a class distribution breaks.

    The distribution is read as uniform inside each class. Labels with zero
    marginal are skipped in the per-word check since their conditional is
    undefined. ``word_slack`` widens the per-word bounds to
    [alpha / slack, slack * beta] for approximate improvisers.
    """
    slack = to_fraction(word_slack)
    problems = []
    total = sum(joint.values(), ZERO)
    if total != 1:
        problems.append(f"probabilities sum to {total}, not 1")
    for (i, k), p in joint.items():
        if p < 0:
            problems.append(f"class {(i, k)} has negative probability")
        if p > 0 and table.sizes[i][k] == 0:
            problems.append(f"empty class {(i, k)} has probability {p}")

    expected = sum((p * table.costs[k] for (i, k), p in joint.items()), ZERO)
    if expected > instance.c:
        problems.append(f"expected cost {expected} exceeds {instance.c}")

    for i in range(table.label_count):
        marginal = sum((p for (j, _), p in joint.items() if j == i), ZERO)
        if not instance.lam <= marginal <= instance.rho:
            problems.append(f"label {table.labels[i]!r} has marginal {marginal} outside [{instance.lam}, {instance.rho}]")
        if marginal == 0:
            continue
        for k, size in enumerate(table.sizes[i]):
            if size == 0:
                continue
            word = joint.get((i, k), ZERO) / marginal / size
            if not instance.alpha[i] / slack <= word <= instance.beta[i] * slack:
                problems.append(f"words of class {(i, k)} have conditional probability {word}")
    return problems
