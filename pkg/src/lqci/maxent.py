""" Maximum-entropy improvisation.

Without per-word bounds the best distribution is uniform inside every cost
class, so only the class probabilities D(i, k) are unknown. Their entropy,
sum of -D log D + D log |I_{i,k}|, is maximized subject to the cost bound,
the label bounds and the simplex.

The program is solved through its Lagrange dual

    g(nu) = b . nu + log sum_j |I_j| exp(-(A^T nu)_j),    nu >= 0,

with L-BFGS-B, where each row of A x <= b is one inequality. Any nu >= 0
bounds the optimum from above, which certifies the entropy gap. The primal
point is then made exactly feasible in rationals by mixing it with the
greedy distribution.
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.optimize

from .core import CostClassTable, ImprovisingDistributionSpec, LqciInstance, check_bounds
from .errors import InfeasibleError, NoConvergenceError
from .exact_scheme import DEFAULT_COST_BUDGET, Improviser, table_for
from .utils import RationalLike, log2_int, to_fraction

logger = logging.getLogger(__name__)

DEFAULT_GAP = 1e-6
DEFAULT_MAX_ITERATIONS = 10 ** 5
DEFAULT_RESIDUAL_TOLERANCE = 1e-8
DEFAULT_PRECISION = "double"

# Dual evaluation dtype and the denominator cap used when rounding the primal.
PRECISIONS = {
    "double": (np.float64, 10 ** 15),
    "extended": (np.longdouble, 10 ** 18),
}


def _log2_fraction(p: Fraction) -> float:
    return log2_int(p.numerator) - log2_int(p.denominator)


def entropy(distribution: Union[Mapping[Tuple[int, int], RationalLike], Sequence[Sequence[RationalLike]]], sizes) -> float:
    """ Entropy in bits of the distribution uniform inside each class.

    Args:
        distribution: Class probabilities, as a {(i, k): p} mapping or
            nested rows aligned with ``sizes``.
        sizes: Class sizes, sizes[i][k].
    """
    if isinstance(distribution, Mapping):
        cells = distribution.items()
    else:
        cells = (((i, k), p) for i, row in enumerate(distribution) for k, p in enumerate(row))

    total = 0.0
    for (i, k), p in cells:
        p = to_fraction(p)
        if p == 0:
            continue
        if sizes[i][k] == 0:
            raise ValueError(f"Empty class {(i, k)} has probability {p}.")
        total += float(p) * (log2_int(sizes[i][k]) - _log2_fraction(p))
    return total


@dataclass(frozen=True)
class MaxEntProblem:
    """ Class table plus bounds of a maximum-entropy instance.

    Word bounds are fixed to alpha = 0 and beta = 1. ``precision`` selects
    the float type the dual and the primal point are evaluated in, one of
    the ``PRECISIONS`` keys. "extended" uses ``np.longdouble``, which is
    80-bit on x86 Linux and plain float64 on platforms without it.
    """

    table: CostClassTable
    c: Fraction
    lam: Fraction
    rho: Fraction
    gap: float = DEFAULT_GAP
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    tolerance: float = DEFAULT_RESIDUAL_TOLERANCE
    precision: str = DEFAULT_PRECISION

    def __post_init__(self):
        for name in ("c", "lam", "rho"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        if self.precision not in PRECISIONS:
            raise ValueError(f"Unknown precision {self.precision!r}, expected one of {sorted(PRECISIONS)}.")

    @property
    def dtype(self):
        return PRECISIONS[self.precision][0]

    @property
    def repair_denominator(self) -> int:
        return PRECISIONS[self.precision][1]

    @classmethod
    def from_instance(cls, instance: LqciInstance, table: CostClassTable, **options) -> "MaxEntProblem":
        return cls(table, instance.c, instance.lam, instance.rho, **options)

    @property
    def cells(self) -> List[Tuple[int, int]]:
        """ Non-empty classes; empty ones stay pinned at probability 0.
        """
        table = self.table
        return [(i, k) for i in range(table.label_count) for k in range(len(table.costs)) if table.sizes[i][k] > 0]


@dataclass(frozen=True)
class MaxEntSolution:
    """ A certified maximum-entropy class distribution.

    Attributes:
        probabilities: Exact D(i, k), rows per label.
        entropy_bits: Entropy of the distribution.
        gap_bound: Dual bound minus achieved entropy, in bits.
        residuals: Constraint violations of the returned distribution.
        warm_start_entropy: Entropy of the greedy distribution.
        iterations: Solver iterations used.
    """

    table: CostClassTable
    probabilities: Tuple[Tuple[Fraction, ...], ...]
    entropy_bits: float
    gap_bound: float
    residuals: Dict[str, float] = field(default_factory=dict)
    warm_start_entropy: float = 0.0
    iterations: int = 0

    def joint(self) -> Dict[Tuple[int, int], Fraction]:
        return {(i, k): p for i, row in enumerate(self.probabilities) for k, p in enumerate(row)}

    def to_spec(self) -> ImprovisingDistributionSpec:
        table = self.table
        marginals = tuple(sum(row, Fraction(0)) for row in self.probabilities)
        conditionals = tuple(
            tuple(p / m if m else Fraction(0) for p in row) for row, m in zip(self.probabilities, marginals)
        )
        label_costs = tuple(sum((p * c for p, c in zip(row, table.costs)), Fraction(0)) for row in conditionals)
        expected = sum((p * c for row in self.probabilities for p, c in zip(row, table.costs)), Fraction(0))
        return ImprovisingDistributionSpec(
            labels=table.labels,
            costs=table.costs,
            sizes=table.sizes,
            marginals=marginals,
            conditionals=conditionals,
            label_costs=label_costs,
            expected_cost=expected,
            overflow_counts=(None,) * table.label_count,
            overflow_classes=(None,) * table.label_count,
        )

    def to_json(self):
        data = self.to_spec().to_json()
        data["entropy_bits"] = self.entropy_bits
        data["gap_bound"] = self.gap_bound
        data["residuals"] = dict(self.residuals)
        data["warm_start_entropy_bits"] = self.warm_start_entropy
        return data


def _constraints(problem: MaxEntProblem, cells: Sequence[Tuple[int, int]]) -> List[Tuple[List[Fraction], Fraction]]:
    """ Rows (coefficients, bound) of A x <= b over the non-empty cells.
    """
    table = problem.table
    rows = [([table.costs[k] for _, k in cells], problem.c)]
    for label in range(table.label_count):
        member = [Fraction(1 if i == label else 0) for i, _ in cells]
        rows.append((member, problem.rho))
        rows.append(([-v for v in member], -problem.lam))
    return rows


def _residuals(problem: MaxEntProblem, x: Sequence[Fraction], cells) -> Dict[str, float]:
    table = problem.table
    expected = sum((p * table.costs[k] for p, (_, k) in zip(x, cells)), Fraction(0))
    labels = [sum((p for p, (i, _) in zip(x, cells) if i == label), Fraction(0)) for label in range(table.label_count)]
    return {
        "cost": float(max(Fraction(0), expected - problem.c)),
        "label_lower": float(max([Fraction(0)] + [problem.lam - m for m in labels])),
        "label_upper": float(max([Fraction(0)] + [m - problem.rho for m in labels])),
        "sum": float(abs(sum(x, Fraction(0)) - 1)),
        "nonnegative": float(max([Fraction(0)] + [-p for p in x])),
    }


def _fix_marginals(problem: MaxEntProblem, x: List[Fraction], cells, anchor: Sequence[Fraction]) -> List[Fraction]:
    """ Rescales each label's cells so the marginals sit exactly inside [lambda, rho] and sum to 1.
    """
    count = problem.table.label_count
    marginals = [sum((p for p, (i, _) in zip(x, cells) if i == label), Fraction(0)) for label in range(count)]
    anchored = [sum((a for a, (i, _) in zip(anchor, cells) if i == label), Fraction(0)) for label in range(count)]
    target = [min(max(m, problem.lam), problem.rho) for m in marginals]
    excess = sum(target, Fraction(0)) - 1
    for label in range(count):
        if marginals[label] == 0 and anchored[label] == 0:
            continue
        if excess > 0:
            step = min(excess, target[label] - problem.lam)
        else:
            step = -min(-excess, problem.rho - target[label])
        target[label] -= step
        excess -= step

    fixed = []
    for p, a, (i, _) in zip(x, anchor, cells):
        if target[i] == 0:
            fixed.append(Fraction(0))
        elif marginals[i] > 0:
            fixed.append(p * target[i] / marginals[i])
        else:
            fixed.append(a * target[i] / anchored[i])
    return fixed


def _float_fraction(v) -> Fraction:
    # Goes through the shortest decimal so longdouble digits survive.
    return Fraction(np.format_float_positional(v, unique=True, trim="0"))


def _repair(problem: MaxEntProblem, x: np.ndarray, cells, anchor: Sequence[Fraction], rows) -> List[Fraction]:
    """ Rounds to rationals and fixes the label marginals, then mixes toward
    the feasible anchor just enough for every row to hold exactly.
    """
    cap = problem.repair_denominator
    exact = [max(Fraction(0), _float_fraction(v).limit_denominator(cap)) for v in x]
    exact = _fix_marginals(problem, exact, cells, anchor)

    t = Fraction(0)
    for coefficients, bound in rows:
        value = sum((a * v for a, v in zip(coefficients, exact)), Fraction(0))
        if value <= bound:
            continue
        target = sum((a * v for a, v in zip(coefficients, anchor)), Fraction(0))
        t = max(t, (value - bound) / (value - target))
    if t:
        logger.debug("Repair mixes %.3g of the greedy distribution back in.", float(t))
        exact = [(1 - t) * v + t * a for v, a in zip(exact, anchor)]
    return exact


def solve_melqci(problem: MaxEntProblem) -> MaxEntSolution:
    """ Maximum-entropy class distribution within ``problem.gap`` bits of optimal.

    Raises:
        InfeasibleError: The bounds admit no distribution.
        NoConvergenceError: The gap target was not reached within the iteration budget.
    """
    started = time.time()
    table = problem.table
    ones = [1] * table.label_count
    report = check_bounds(table, problem.c, problem.lam, problem.rho, [0] * table.label_count, ones)
    if not report.feasible:
        raise InfeasibleError(report)

    cells = problem.cells
    greedy = report.spec.joint()
    anchor = [greedy[cell] for cell in cells]
    warm = entropy(greedy, table.sizes)

    rows = _constraints(problem, cells)
    dtype = problem.dtype
    ln2 = np.log(dtype(2))
    A = np.array([[dtype(a.numerator) / dtype(a.denominator) for a in coefficients] for coefficients, _ in rows], dtype=dtype)
    b = np.array([dtype(bound.numerator) / dtype(bound.denominator) for _, bound in rows], dtype=dtype)
    log_sizes = np.array([dtype(log2_int(table.sizes[i][k])) * ln2 for i, k in cells], dtype=dtype)

    def point(nu):
        scores = log_sizes - A.T @ np.asarray(nu, dtype=dtype)
        top = scores.max()
        norm = top + np.log(np.exp(scores - top).sum())
        return b @ np.asarray(nu, dtype=dtype) + norm, np.exp(scores - norm)

    def dual(nu):
        # L-BFGS-B iterates in float64; only the evaluation runs at ``dtype``.
        value, x = point(nu)
        return float(value), (b - A @ x).astype(np.float64)

    result = scipy.optimize.minimize(
        dual,
        np.zeros(len(rows)),
        jac=True,
        method="L-BFGS-B",
        bounds=[(0, None)] * len(rows),
        options={"maxiter": problem.max_iterations, "maxfun": 2 * problem.max_iterations, "ftol": 1e-16, "gtol": 1e-12},
    )
    value, primal = point(result.x)
    bound_bits = float(value / ln2)

    x = _repair(problem, primal, cells, anchor, rows)
    achieved = entropy({cell: p for cell, p in zip(cells, x)}, table.sizes)
    if achieved < warm:
        logger.info("Solver point has less entropy than the greedy start, keeping the greedy distribution.")
        x, achieved = anchor, warm
    gap = max(0.0, bound_bits - achieved)

    logger.info(
        "Max-entropy solve: %.6f bits, gap %.3g, %d iterations in %.3fs (%s precision).",
        achieved, gap, result.nit, time.time() - started, problem.precision,
    )
    if gap > problem.gap:
        raise NoConvergenceError(f"Entropy gap {gap:.3g} bits exceeds the target {problem.gap:.3g} after {result.nit} iterations.")

    residuals = _residuals(problem, x, cells)
    if max(residuals.values()) > problem.tolerance:
        raise NoConvergenceError(f"Constraint residuals {residuals} exceed {problem.tolerance}.")

    probabilities = [[Fraction(0)] * len(table.costs) for _ in range(table.label_count)]
    for (i, k), p in zip(cells, x):
        probabilities[i][k] = p
    return MaxEntSolution(
        table=table,
        probabilities=tuple(tuple(row) for row in probabilities),
        entropy_bits=achieved,
        gap_bound=gap,
        residuals=residuals,
        warm_start_entropy=warm,
        iterations=int(result.nit),
    )


class MaxEntImproviser(Improviser):
    """ Improviser over a maximum-entropy solution.
    """

    def __init__(self, table: CostClassTable, solution: MaxEntSolution, instance: LqciInstance = None):
        super().__init__(table, solution.to_spec(), instance)
        self.solution = solution


def build_maxent_improviser(
    instance: LqciInstance,
    gap: float = DEFAULT_GAP,
    budget: int = DEFAULT_COST_BUDGET,
    workers: Optional[int] = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    precision: str = DEFAULT_PRECISION,
) -> MaxEntImproviser:
    """ Maximum-entropy improviser for an instance with DFA specifications.

    The instance's word bounds are ignored.

    Raises:
        InfeasibleError: No distribution meets the cost and label bounds.
        NoConvergenceError: The gap target was not reached.
    """
    table = table_for(instance, budget=budget, workers=workers)
    problem = MaxEntProblem.from_instance(
        instance, table, gap=gap, max_iterations=max_iterations, precision=precision
    )
    return MaxEntImproviser(table, solve_melqci(problem), instance)
