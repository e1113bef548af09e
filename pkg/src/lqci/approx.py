""" Approximate improvisation for Boolean-formula specifications.

Costs of CNF instances can range over exponentially many values, so cost
classes are grouped into geometric buckets [r^(k-1), r^k). Bucket sizes
come from a counting oracle and words from a generating oracle; both may be
approximate, and the parameters are derived so the combined error stays
within the requested tolerances with the requested confidence.

Variable groups are declared with DIMACS comment lines::

    c ind x 1 2 3 0
    c cost y 4 5 6
    c label bits 7 8
    c labels 1 2
    c aux z 9 10
    c section hard

A cost bitvector y of width w denotes its big-endian value when non-zero
and 2^w when all bits are 0, so every assignment is a cost in [1, 2^w].
The label bits read big-endian must equal the label value.
"""

import abc
import logging
import math
import random
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pycosat

from .core import LabelDistribution, LqciInstance, greedy_label_construction
from .errors import CapExceededError, InvalidInstanceError, LabelBoundsInfeasibleError, OracleError
from .utils import RationalLike, Word, categorical_draw, fraction_to_json, integer_weights, parallel_samples, to_fraction

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 2 ** 24

Clause = Tuple[int, ...]


@dataclass(frozen=True)
class Formula:
    """ A CNF formula with the variables counted or sampled over.
    """

    num_vars: int
    clauses: Tuple[Clause, ...]
    projection: Tuple[int, ...]

    def to_dimacs(self) -> str:
        """ DIMACS text whose first line names the projection variables.
        """
        lines = ["c ind " + " ".join(str(v) for v in self.projection) + " 0"]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in self.clauses)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CnfSpec:
    """ Hard, label and cost constraints as CNF clause lists over shared variables.

    Arguments:
        num_vars: Highest variable id used.
        hard: Clauses of h(x, z).
        label: Clauses of l(x, label bits, z).
        cost: Clauses of k(x, y, z).
        x_vars: Trace bits, in word order.
        y_vars: Cost bits, most significant first.
        label_vars: Label bits, most significant first.
        z_vars: Auxiliary variables.
        labels: Label values; defaults to every value of the label bits.
    """

    num_vars: int
    hard: Tuple[Clause, ...]
    label: Tuple[Clause, ...]
    cost: Tuple[Clause, ...]
    x_vars: Tuple[int, ...]
    y_vars: Tuple[int, ...]
    label_vars: Tuple[int, ...]
    z_vars: Tuple[int, ...] = ()
    labels: Tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("hard", "label", "cost"):
            object.__setattr__(self, name, tuple(tuple(int(lit) for lit in clause) for clause in getattr(self, name)))
        for name in ("x_vars", "y_vars", "label_vars", "z_vars", "labels"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(2 ** len(self.label_vars))))

        groups = [self.x_vars, self.y_vars, self.label_vars, self.z_vars]
        declared = [v for group in groups for v in group]
        if len(set(declared)) != len(declared):
            raise InvalidInstanceError("Variable groups x, y, label and z must be disjoint.")
        if any(not 1 <= v <= self.num_vars for v in declared):
            raise InvalidInstanceError("Declared variables must lie in 1..num_vars.")
        if not self.x_vars:
            raise InvalidInstanceError("No trace variables declared (c ind x ...).")
        for clause in self.hard + self.label + self.cost:
            if any(lit == 0 or abs(lit) > self.num_vars for lit in clause):
                raise InvalidInstanceError(f"Clause {clause} uses an undeclared variable.")
        limit = 2 ** len(self.label_vars)
        if any(not 0 <= value < limit for value in self.labels):
            raise InvalidInstanceError(f"Label values must fit in {len(self.label_vars)} label bits.")

    @property
    def cost_width(self) -> int:
        return len(self.y_vars)

    def label_clauses(self, value: int) -> List[Clause]:
        """ Unit clauses fixing the label bits to ``value``.
        """
        width = len(self.label_vars)
        return [(v if (value >> (width - 1 - j)) & 1 else -v,) for j, v in enumerate(self.label_vars)]

    def formula(
        self,
        label_value: Optional[int] = None,
        cost_range: Optional[Tuple[int, int]] = None,
        extra_projection: Sequence[int] = (),
    ) -> Formula:
        """ h and l and k, optionally restricted to one label and a cost interval.

        Args:
            label_value: Label to fix, or None for every label.
            cost_range: Inclusive (lo, hi) cost interval, or None for any cost.
            extra_projection: Variables projected on besides x.
        """
        clauses = list(self.hard + self.label + self.cost)
        num_vars = self.num_vars
        if label_value is not None:
            clauses.extend(self.label_clauses(label_value))
        if cost_range is not None:
            lo, hi = cost_range
            interval, aux = cost_interval_clauses(self.y_vars, lo, hi, num_vars + 1)
            clauses.extend(interval)
            num_vars += len(aux)
        return Formula(num_vars, tuple(clauses), self.x_vars + tuple(extra_projection))

    def word(self, bits: Sequence[bool]) -> Word:
        """ Word over {0, 1} for an assignment of the trace bits.
        """
        return tuple("1" if bit else "0" for bit in bits)

    def cost_value(self, bits: Sequence[bool]) -> int:
        """ Cost denoted by an assignment of the cost bits.
        """
        value = 0
        for bit in bits:
            value = 2 * value + int(bit)
        return value or 2 ** len(bits)

    def to_dimacs(self) -> str:
        """ Annotated DIMACS text that :func:`parse_dimacs` reads back.
        """
        lines = [
            "c ind x " + " ".join(str(v) for v in self.x_vars) + " 0",
            "c cost y " + " ".join(str(v) for v in self.y_vars),
            "c label bits " + " ".join(str(v) for v in self.label_vars),
            "c labels " + " ".join(str(v) for v in self.labels),
        ]
        if self.z_vars:
            lines.append("c aux z " + " ".join(str(v) for v in self.z_vars))
        lines.append(f"p cnf {self.num_vars} {len(self.hard) + len(self.label) + len(self.cost)}")
        for name in ("hard", "label", "cost"):
            lines.append(f"c section {name}")
            lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in getattr(self, name))
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str, labels: Sequence[int] = None) -> CnfSpec:
    """ Reads an annotated DIMACS CNF into a :class:`CnfSpec`.

    Clauses before any ``c section`` line belong to the hard constraint.

    Raises:
        InvalidInstanceError: Malformed lines or missing annotations.
    """
    groups = {"x": [], "y": [], "label": [], "z": [], "labels": []}
    sections = {"hard": [], "label": [], "cost": []}
    current = "hard"
    num_vars = None
    pending: List[int] = []

    def numbers(tokens):
        values = [int(t) for t in tokens]
        return values[:-1] if values and values[-1] == 0 else values

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "c":
                head = tokens[1:3]
                if head[:2] == ["ind", "x"]:
                    groups["x"].extend(numbers(tokens[3:]))
                elif head[:1] == ["ind"]:
                    groups["x"].extend(numbers(tokens[2:]))
                elif head[:2] == ["cost", "y"]:
                    groups["y"].extend(numbers(tokens[3:]))
                elif head[:2] == ["label", "bits"]:
                    groups["label"].extend(numbers(tokens[3:]))
                elif head[:1] == ["labels"]:
                    groups["labels"].extend(int(t) for t in tokens[2:])
                elif head[:2] == ["aux", "z"]:
                    groups["z"].extend(numbers(tokens[3:]))
                elif head[:1] == ["section"]:
                    if len(tokens) < 3 or tokens[2] not in sections:
                        raise ValueError("section must be hard, label or cost")
                    current = tokens[2]
                continue
            if tokens[0] == "p":
                if len(tokens) != 4 or tokens[1] != "cnf":
                    raise ValueError(f"invalid problem line {line!r}")
                num_vars = int(tokens[2])
                continue
            pending.extend(int(t) for t in tokens)
            while 0 in pending:
                end = pending.index(0)
                sections[current].append(tuple(pending[:end]))
                pending = pending[end + 1:]
        except ValueError as err:
            raise InvalidInstanceError(f"DIMACS line {number}: {err}") from err

    if pending:
        raise InvalidInstanceError("Last clause is not terminated by 0.")
    if num_vars is None:
        raise InvalidInstanceError("Missing 'p cnf' problem line.")
    return CnfSpec(
        num_vars=num_vars,
        hard=sections["hard"],
        label=sections["label"],
        cost=sections["cost"],
        x_vars=groups["x"],
        y_vars=groups["y"],
        label_vars=groups["label"],
        z_vars=groups["z"],
        labels=tuple(labels) if labels else tuple(groups["labels"]),
    )


def _bits(value: int, width: int) -> List[int]:
    return [(value >> (width - 1 - j)) & 1 for j in range(width)]


def _prefix_equal(y_vars: Sequence[int], bits: Sequence[int], next_var: int) -> Tuple[List[Clause], List[int]]:
    """ Aux e_j <-> (y_1..y_j equals bits_1..bits_j), for j < width.
    """
    clauses = []
    aux = []
    previous = None
    for j in range(len(y_vars) - 1):
        e = next_var + j
        lit = y_vars[j] if bits[j] else -y_vars[j]
        if previous is None:
            clauses += [(-e, lit), (e, -lit)]
        else:
            clauses += [(-e, previous), (-e, lit), (e, -previous, -lit)]
        aux.append(e)
        previous = e
    return clauses, aux


def cost_interval_clauses(y_vars: Sequence[int], lo: int, hi: int, next_var: int) -> Tuple[List[Clause], List[int]]:
    """ Clauses holding exactly when lo <= cost(y) <= hi.

    The comparisons are prefix-equality circuits on fresh auxiliaries
    numbered from ``next_var``, each fully determined by y.

    Args:
        y_vars: Cost bits, most significant first.
        lo, hi: Inclusive bounds, 1 <= lo <= hi <= 2^width.
        next_var: First free variable id.

    Returns:
        The clauses and the auxiliary variables they introduce.
    """
    y_vars = list(y_vars)
    width = len(y_vars)
    top = 2 ** width
    if not 1 <= lo <= hi <= top:
        raise ValueError(f"Need 1 <= lo <= hi <= {top}, got [{lo}, {hi}].")
    if lo <= 1 and hi == top:
        return [], []
    if lo == top:
        return [(-v,) for v in y_vars], []

    clauses: List[Clause] = []
    aux: List[int] = []

    # y >= lo: where lo has a 1, a matching prefix forces y to have a 1 too.
    guard: Tuple[int, ...] = ()
    if hi == top:
        nz = next_var
        next_var += 1
        aux.append(nz)
        clauses.append(tuple([-nz] + y_vars))
        clauses.extend((nz, -v) for v in y_vars)
        guard = (-nz,)
    lo_bits = _bits(lo, width)
    equal, equal_aux = _prefix_equal(y_vars, lo_bits, next_var)
    clauses += equal
    aux += equal_aux
    next_var += len(equal_aux)
    for j, bit in enumerate(lo_bits):
        if bit:
            prefix = (-equal_aux[j - 1],) if j else ()
            clauses.append(guard + prefix + (y_vars[j],))

    # y <= hi: where hi has a 0, a matching prefix forces y to have a 0 too.
    if hi < top:
        hi_bits = _bits(hi, width)
        equal, equal_aux = _prefix_equal(y_vars, hi_bits, next_var)
        clauses += equal
        aux += equal_aux
        for j, bit in enumerate(hi_bits):
            if not bit:
                prefix = (-equal_aux[j - 1],) if j else ()
                clauses.append(prefix + (-y_vars[j],))
    return clauses, aux


@dataclass(frozen=True)
class BucketPlan:
    """ Geometric cost buckets over [1, 2^width].

    Bucket k (0-based) covers the integers [ceil(r^k), ceil(r^(k+1)) - 1];
    the last bucket extends to 2^width. Ranges can be empty for small r.
    """

    ratio: Fraction
    width: int
    bounds: Tuple[Tuple[int, int], ...]

    @classmethod
    def build(cls, ratio: RationalLike, width: int) -> "BucketPlan":
        ratio = to_fraction(ratio)
        if ratio <= 1:
            raise ValueError("Bucket ratio must exceed 1.")
        top = 2 ** width
        count = 1
        while ratio ** count < top:
            count += 1
        bounds = []
        for k in range(count):
            lo = math.ceil(ratio ** k)
            hi = top if k == count - 1 else min(math.ceil(ratio ** (k + 1)) - 1, top)
            bounds.append((lo, hi))
        return cls(ratio, width, tuple(bounds))

    @property
    def count(self) -> int:
        return len(self.bounds)

    def low(self, k: int) -> Fraction:
        """ Representative low cost r^k of bucket k.
        """
        return self.ratio ** k

    def bucket_of(self, cost: int) -> int:
        for k, (lo, hi) in enumerate(self.bounds):
            if lo <= cost <= hi:
                return k
        raise ValueError(f"Cost {cost} lies outside [1, {2 ** self.width}].")


@dataclass(frozen=True)
class BucketEstimates:
    """ Result of the approximate greedy cost pass for one label.
    """

    counts: Tuple[int, ...]
    probabilities: Tuple[Fraction, ...]
    lows: Tuple[Fraction, ...]

    @property
    def lo(self) -> Fraction:
        """ Lower bound sum p_k r^k on the label's expected cost.
        """
        return sum((p * low for p, low in zip(self.probabilities, self.lows)), Fraction(0))


class CounterOracle(abc.ABC):
    """ Projected model counter within a factor (1 + tau) with probability 1 - delta.
    """

    @abc.abstractmethod
    def count(self, formula: Formula, tau: Fraction, delta: float) -> int:
        pass


class GeneratorOracle(abc.ABC):
    """ Projected sampler within a factor (1 + epsilon) of uniform.
    """

    @abc.abstractmethod
    def sample(self, formula: Formula, epsilon: Fraction, rng: random.Random) -> Tuple[bool, ...]:
        pass


class ExactEnumerationOracle(CounterOracle, GeneratorOracle):
    """ Exact projected counting and uniform sampling by enumeration.

    Distinct projections are found with a SAT call per solution plus a
    blocking clause over the projection variables. Solution lists are cached
    per formula.

    Arguments:
        cap: Largest number of candidate projection assignments accepted.
    """

    def __init__(self, cap: int = DEFAULT_ENUMERATION_CAP):
        self.cap = cap
        self._cache: Dict[Formula, List[Tuple[bool, ...]]] = {}
        self._lock = threading.Lock()

    def solutions(self, formula: Formula) -> List[Tuple[bool, ...]]:
        """ Every distinct assignment of the projection variables that extends to a model.

        Raises:
            CapExceededError: 2^|projection| exceeds the cap.
        """
        with self._lock:
            cached = self._cache.get(formula)
        if cached is not None:
            return cached
        if 2 ** len(formula.projection) > self.cap:
            raise CapExceededError(f"{len(formula.projection)} projection bits exceed the enumeration cap of {self.cap}.")

        clauses = [list(clause) for clause in formula.clauses]
        found = []
        while True:
            model = pycosat.solve(clauses, vars=formula.num_vars)
            if model == "UNSAT":
                break
            if model == "UNKNOWN":
                raise OracleError("SAT solver gave up while enumerating.")
            values = {abs(lit): lit > 0 for lit in model}
            bits = tuple(values.get(v, False) for v in formula.projection)
            found.append(bits)
            clauses.append([-v if bit else v for v, bit in zip(formula.projection, bits)])
            if not formula.projection:
                break
        found.sort()
        logger.debug("Enumerated %d projected solutions.", len(found))
        with self._lock:
            self._cache[formula] = found
        return found

    def count(self, formula: Formula, tau=0, delta=0.0) -> int:
        return len(self.solutions(formula))

    def sample(self, formula: Formula, epsilon=0, rng: random.Random = None) -> Tuple[bool, ...]:
        found = self.solutions(formula)
        if not found:
            raise OracleError("Cannot sample from an unsatisfiable formula.")
        return found[(rng or random.Random()).randrange(len(found))]


def exact_enumeration_oracle(max_x_bits: int = 24) -> Tuple[CounterOracle, GeneratorOracle]:
    """ Exact counter and generator (tau = epsilon = 0) sharing one enumeration cache.
    """
    oracle = ExactEnumerationOracle(cap=2 ** max_x_bits)
    return oracle, oracle


class ExecOracle(CounterOracle, GeneratorOracle):
    """ Counter and generator backed by an external command.

    The command is run once per call as ``<command> count --tau T --delta D``
    or ``<command> sample --epsilon E --seed S`` with the formula as DIMACS on
    stdin. A count answers one decimal integer line; a sample answers one
    line of signed literals covering the projection, terminated by 0.
    """

    def __init__(self, command: Union[str, Sequence[str]], timeout: Optional[float] = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout

    def _run(self, formula: Formula, arguments: List[str]) -> str:
        try:
            done = subprocess.run(
                self.command + arguments,
                input=formula.to_dimacs(),
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.SubprocessError) as err:
            raise OracleError(f"Oracle command {self.command} failed: {err}") from err
        if done.returncode != 0:
            raise OracleError(f"Oracle exited with status {done.returncode}: {done.stderr.strip()}")
        lines = [line.strip() for line in done.stdout.splitlines() if line.strip()]
        if len(lines) != 1:
            raise OracleError(f"Oracle answered {len(lines)} lines, expected 1.")
        return lines[0]

    def count(self, formula: Formula, tau=0, delta=0.0) -> int:
        answer = self._run(formula, ["count", "--tau", repr(float(tau)), "--delta", repr(float(delta))])
        if not answer.isdigit():
            raise OracleError(f"Malformed count {answer!r}.")
        return int(answer)

    def sample(self, formula: Formula, epsilon=0, rng: random.Random = None) -> Tuple[bool, ...]:
        seed = (rng or random.Random()).randrange(2 ** 31)
        answer = self._run(formula, ["sample", "--epsilon", repr(float(epsilon)), "--seed", str(seed)])
        try:
            literals = [int(t) for t in answer.split()]
        except ValueError:
            raise OracleError(f"Malformed sample {answer!r}.")
        if not literals or literals[-1] != 0:
            raise OracleError("Sample line must end with 0.")
        values = {abs(lit): lit > 0 for lit in literals[:-1]}
        missing = [v for v in formula.projection if v not in values]
        if missing:
            raise OracleError(f"Sample leaves projection variables {missing} unassigned.")
        return tuple(values[v] for v in formula.projection)


class SerializedOracle(CounterOracle, GeneratorOracle):
    """ Wraps an oracle so that only one call runs at a time.
    """

    def __init__(self, oracle):
        self.oracle = oracle
        self._lock = threading.Lock()

    def count(self, formula: Formula, tau=0, delta=0.0) -> int:
        with self._lock:
            return self.oracle.count(formula, tau, delta)

    def sample(self, formula: Formula, epsilon=0, rng: random.Random = None) -> Tuple[bool, ...]:
        with self._lock:
            return self.oracle.sample(formula, epsilon, rng)


def _icbrt(n: int) -> int:
    """ Integer cube root, rounded down (Newton's method from above).
    """
    if n < 2:
        return n
    root = 1 << (n.bit_length() // 3 + 1)
    while True:
        smaller = (2 * root + n // (root * root)) // 3
        if smaller >= root:
            return root
        root = smaller


def _cube_root_floor(value: Fraction, precision: int = 10 ** 12) -> Fraction:
    """ Exact rational cube root when one exists, else the largest j / precision below it.
    """
    num, den = _icbrt(value.numerator), _icbrt(value.denominator)
    if num ** 3 == value.numerator and den ** 3 == value.denominator:
        return Fraction(num, den)
    return Fraction(_icbrt(value.numerator * precision ** 3 // value.denominator), precision)


@dataclass(frozen=True)
class DerivedParams:
    """ Parameters derived for one run of the approximate scheme.
    """

    ratio: Fraction
    buckets: int
    tau: Fraction
    epsilon: Fraction
    count_delta: float

    def to_json(self):
        return {
            "ratio": fraction_to_json(self.ratio),
            "buckets": self.buckets,
            "tau": fraction_to_json(self.tau),
            "epsilon": fraction_to_json(self.epsilon),
            "count_delta": self.count_delta,
        }


@dataclass(frozen=True)
class ApproxParams:
    """ User tolerances: cost factor zeta, randomness factor gamma, failure probability delta.
    """

    zeta: Fraction
    gamma: Fraction
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "zeta", to_fraction(self.zeta))
        object.__setattr__(self, "gamma", to_fraction(self.gamma))
        object.__setattr__(self, "delta", float(self.delta))
        if self.zeta <= 0:
            raise ValueError("zeta must be positive.")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative.")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1).")

    def derive(self, label_count: int, cost_width: int) -> DerivedParams:
        """ r = 1 + zeta, tau = epsilon with (1 + tau)^3 <= 1 + gamma, and the
        per-count failure probability d with (1 - d)^(labels * buckets) >= 1 - delta.
        """
        ratio = 1 + self.zeta
        buckets = BucketPlan.build(ratio, cost_width).count
        tau = _cube_root_floor(1 + self.gamma) - 1
        calls = max(1, label_count * buckets)
        d = -math.expm1(math.log1p(-self.delta) / calls) if self.delta else 0.0
        target = 1 - Fraction(self.delta)
        while d > 0 and (1 - Fraction(d)) ** calls < target:
            d = math.nextafter(d, 0.0)
        return DerivedParams(ratio, buckets, tau, tau, d)


def approximate_greedy_cost(
    spec: CnfSpec,
    label_index: int,
    alpha: RationalLike,
    beta: RationalLike,
    plan: BucketPlan,
    tau: RationalLike,
    delta: float,
    counter: CounterOracle,
) -> Union[BucketEstimates, bool]:
    """ Greedy cost construction over cost buckets with estimated sizes.

    Starts every bucket at its lowest admissible mass alpha c_k / (1 + tau),
    then raises buckets cheapest first towards (1 + tau) beta c_k until the
    masses sum to one.

    Returns:
        The bucket estimates, or False if the bounds cannot be met.
    """
    alpha = to_fraction(alpha)
    beta = to_fraction(beta)
    tau = to_fraction(tau)
    value = spec.labels[label_index]

    counts = []
    for lo, hi in plan.bounds:
        if lo > hi:
            counts.append(0)
            continue
        counts.append(counter.count(spec.formula(value, (lo, hi)), tau, delta))

    p = [alpha * c / (1 + tau) for c in counts]
    if sum(p) > 1:
        logger.info("Label %r: lower word bounds need mass %s > 1.", value, sum(p))
        return False
    for k in range(plan.count):
        rest = sum(p) - p[k]
        p[k] = min((1 + tau) * beta * counts[k], 1 - rest)
        if sum(p) == 1:
            break
    if sum(p) < 1:
        logger.info("Label %r: upper word bounds allow mass %s < 1.", value, sum(p))
        return False
    return BucketEstimates(tuple(counts), tuple(p), tuple(plan.low(k) for k in range(plan.count)))


@dataclass(frozen=True)
class ApproxPlan:
    """ Outcome of the approximate scheme's planning phase.

    Attributes:
        feasible: False means infeasible with the requested confidence.
        reason: Why planning stopped, when infeasible.
        params: Derived parameters.
        plan: Cost buckets.
        estimates: Per-label bucket estimates (None where the pass failed).
        marginals: Label marginals, when the label pass succeeded.
        low: Certified lower bound on the expected cost.
    """

    feasible: bool
    reason: str
    params: DerivedParams
    plan: BucketPlan
    estimates: Tuple[Optional[BucketEstimates], ...]
    marginals: Optional[LabelDistribution] = None
    low: Optional[Fraction] = None

    @property
    def cost_interval(self) -> Tuple[Fraction, Fraction]:
        """ [low, r * low], which contains the sampler's expected cost.
        """
        return self.low, self.plan.ratio * self.low

    def to_json(self):
        data = {"feasible": self.feasible, "params": self.params.to_json()}
        if self.reason:
            data["reason"] = self.reason
        data["label_lows"] = [None if e is None else fraction_to_json(e.lo) for e in self.estimates]
        data["bucket_probabilities"] = [
            None if e is None else [fraction_to_json(p) for p in e.probabilities] for e in self.estimates
        ]
        if self.marginals is not None:
            data["marginals"] = [fraction_to_json(p) for p in self.marginals.marginals]
        if self.low is not None:
            data["low"] = fraction_to_json(self.low)
            data["high"] = fraction_to_json(self.cost_interval[1])
        return data


def plan_approx(
    spec: CnfSpec,
    instance: LqciInstance,
    params: ApproxParams,
    counter: CounterOracle,
) -> ApproxPlan:
    """ Runs the bucketed greedy pass per label, then the label pass.
    """
    started = time.time()
    if len(spec.labels) != instance.label_count:
        raise InvalidInstanceError(f"CNF declares {len(spec.labels)} labels, the instance {instance.label_count}.")
    derived = params.derive(len(spec.labels), spec.cost_width)
    plan = BucketPlan.build(derived.ratio, spec.cost_width)
    logger.info("Approximate scheme: %d buckets, tau=%s, d=%.3g.", plan.count, derived.tau, derived.count_delta)

    estimates = []
    for i in range(len(spec.labels)):
        result = approximate_greedy_cost(
            spec, i, instance.alpha[i], instance.beta[i], plan, derived.tau, derived.count_delta, counter
        )
        if result is False:
            return ApproxPlan(False, f"word bounds unsatisfiable for label {spec.labels[i]}", derived, plan,
                              tuple(estimates) + (None,))
        estimates.append(result)

    try:
        marginals = greedy_label_construction([e.lo for e in estimates], instance.lam, instance.rho)
    except LabelBoundsInfeasibleError as err:
        return ApproxPlan(False, str(err), derived, plan, tuple(estimates))

    low = sum((p * e.lo for p, e in zip(marginals.marginals, estimates)), Fraction(0))
    logger.info("Approximate plan: low=%s in %.3fs.", low, time.time() - started)
    if low > instance.c:
        return ApproxPlan(False, f"certified lower bound {low} exceeds c = {instance.c}", derived, plan,
                          tuple(estimates), marginals, low)
    return ApproxPlan(True, "", derived, plan, tuple(estimates), marginals, low)


class ApproxImproviser(object):
    """ Samples a label, then a bucket, then a word from the bucket's formula.
    """

    def __init__(self, spec: CnfSpec, plan: ApproxPlan, generator: GeneratorOracle):
        if not plan.feasible:
            raise ValueError("Cannot sample from an infeasible plan.")
        self.spec = spec
        self.plan = plan
        self.generator = generator
        self._label_weights = integer_weights(plan.marginals.marginals)
        self._bucket_weights = [integer_weights(e.probabilities) for e in plan.estimates]

    @property
    def low(self) -> Fraction:
        return self.plan.low

    def formula(self, i: int, k: int) -> Formula:
        return self.spec.formula(self.spec.labels[i], self.plan.plan.bounds[k])

    def sample_with_class(self, rng: random.Random) -> Tuple[Word, int, int]:
        """ A word with its label index and bucket index.
        """
        i = categorical_draw(rng, self._label_weights)
        k = categorical_draw(rng, self._bucket_weights[i])
        bits = self.generator.sample(self.formula(i, k), self.plan.params.epsilon, rng)
        return self.spec.word(bits), i, k

    def sample(self, rng: Optional[random.Random] = None) -> Word:
        return self.sample_with_class(rng or random.Random())[0]

    def generate(self, count: int, seed: Optional[int] = None, workers: Optional[int] = None):
        return parallel_samples(self.sample_with_class, count, seed, workers)

    def word_distribution(self, oracle: ExactEnumerationOracle) -> Dict[Word, Fraction]:
        """ Exact output distribution when the generator is exactly uniform.
        """
        distribution: Dict[Word, Fraction] = {}
        for i, estimates in enumerate(self.plan.estimates):
            marginal = self.plan.marginals.marginals[i]
            for k, p in enumerate(estimates.probabilities):
                if marginal * p == 0:
                    continue
                found = oracle.solutions(self.formula(i, k))
                for bits in found:
                    word = self.spec.word(bits)
                    distribution[word] = distribution.get(word, Fraction(0)) + marginal * p / len(found)
        return distribution


def build_approx_improviser(
    spec: CnfSpec,
    instance: LqciInstance,
    params: ApproxParams,
    counter: CounterOracle,
    generator: GeneratorOracle,
) -> Optional[ApproxImproviser]:
    """ Approximate improviser, or None when the instance is infeasible with confidence.
    """
    plan = plan_approx(spec, instance, params, counter)
    if not plan.feasible:
        logger.info("Approximate scheme found no improviser: %s.", plan.reason)
        return None
    return ApproxImproviser(spec, plan, generator)


def cnf_instance(spec: CnfSpec, m: int = None, n: int = None, **bounds) -> LqciInstance:
    """ Instance whose three specifications are the CNF spec itself.
    """
    width = len(spec.x_vars)
    return LqciInstance(
        alphabet=("0", "1"),
        m=width if m is None else m,
        n=width if n is None else n,
        hard=spec,
        cost=spec,
        label=spec,
        labels=spec.labels,
        **bounds,
    )
