""" Command line interface.

    lqci check <bundle>                      feasibility verdict and greedy distribution
    lqci sample <bundle> --count N --seed S  N traces, one per line
    lqci stats <bundle> --samples N          empirical report as JSON
    lqci table <bundle>                      cost class table as CSV

Exit codes: 0 success, 1 error, 2 infeasible. Logs go to stderr (-v, -vv).
"""

import argparse
import json
import logging
import math
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .approx import ApproxImproviser, ApproxParams, ExactEnumerationOracle, ExecOracle, SerializedOracle, plan_approx
from .bundle import Bundle, load_bundle
from .core import LqciInstance
from .errors import InfeasibleError, LqciError
from .exact_scheme import DEFAULT_COST_BUDGET, build_improviser, check_instance, table_for, unlabelled
from .gridworld import render_path, replay
from .maxent import DEFAULT_GAP, DEFAULT_PRECISION, PRECISIONS, build_maxent_improviser
from .utils import Word, format_word, fraction_to_text, to_fraction

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

CONFIDENCE = 0.99
MAX_LISTED_WORDS = 1000


@dataclass
class EmpiricalReport:
    """ Statistics of a batch of samples checked against an instance's bounds.

    The verdicts are heuristic: a label passes when its exact binomial 99%
    interval meets [lambda, rho], the cost when mean - 3 SE <= c, and the
    hard constraint when every sample satisfies it.
    """

    samples: int
    label_counts: Dict[Any, int]
    label_intervals: Dict[Any, Tuple[float, float]]
    mean_cost: Optional[float]
    cost_se: Optional[float]
    cost_histogram: Dict[str, int]
    hard_violations: int
    verdicts: Dict[str, bool]
    word_counts: Optional[Dict[str, int]] = None
    traces: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_json(self) -> Dict[str, Any]:
        data = {
            "samples": self.samples,
            "labels": {
                str(label): {
                    "count": count,
                    "frequency": count / self.samples if self.samples else None,
                    "interval": list(self.label_intervals[label]),
                }
                for label, count in self.label_counts.items()
            },
            "mean_cost": self.mean_cost,
            "cost_se": self.cost_se,
            "cost_histogram": self.cost_histogram,
            "hard_violations": self.hard_violations,
            "verdicts": self.verdicts,
            "passed": self.passed,
        }
        if self.word_counts is not None:
            data["words"] = self.word_counts
        if self.traces:
            data["traces"] = self.traces
        data.update(self.extra)
        return data


def label_interval(count: int, total: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    """ Exact (Clopper-Pearson) binomial interval for a frequency.
    """
    if total == 0:
        return 0.0, 1.0
    ci = binomtest(count, total).proportion_ci(confidence_level=confidence, method="exact")
    return float(ci.low), float(ci.high)


def empirical_report(
    samples: Sequence[Tuple[Word, Any, Any]],
    instance: LqciInstance,
    hard_check=None,
) -> EmpiricalReport:
    """ Builds the report for (word, label, cost) samples.

    Args:
        samples: Sampled words with their label value and cost.
        instance: Bounds to check against. Every label of the instance is
            reported, including labels never sampled.
        hard_check: Predicate on words; defaults to the instance's hard DFA
            and length bounds when it has one.
    """
    if hard_check is None:
        accepts = getattr(instance.hard, "accepts", None)
        hard_check = (lambda w: instance.m <= len(w) <= instance.n and accepts(w)) if accepts else (lambda w: True)

    total = len(samples)
    counts = Counter(label for _, label, _ in samples)
    label_counts = {label: counts.get(label, 0) for label in instance.labels}
    for label in counts:
        label_counts.setdefault(label, counts[label])
    intervals = {label: label_interval(count, total) for label, count in label_counts.items()}

    costs = np.array([float(cost) for _, _, cost in samples])
    mean = float(costs.mean()) if total else None
    se = float(costs.std(ddof=1) / math.sqrt(total)) if total > 1 else (0.0 if total else None)
    histogram = Counter(to_fraction(cost) for _, _, cost in samples)
    violations = sum(1 for word, _, _ in samples if not hard_check(word))

    lam, rho = float(instance.lam), float(instance.rho)
    verdicts = {
        "hard": violations == 0,
        "labels": all(
            lo <= rho and hi >= lam for label, (lo, hi) in intervals.items() if label in instance.labels
        ) and set(counts) <= set(instance.labels),
        "cost": total == 0 or mean - 3 * se <= float(instance.c),
    }

    words = Counter(format_word(word) for word, _, _ in samples)
    return EmpiricalReport(
        samples=total,
        label_counts=label_counts,
        label_intervals=intervals,
        mean_cost=mean,
        cost_se=se,
        cost_histogram={fraction_to_text(cost): count for cost, count in sorted(histogram.items())},
        hard_violations=violations,
        verdicts=verdicts,
        word_counts=dict(sorted(words.items())) if len(words) <= MAX_LISTED_WORDS else None,
    )


def _dfa_bundle(bundle: Bundle, command: str):
    if not bundle.has_dfas:
        raise LqciError(f"'{command}' needs DFA specifications or a map; use 'sample --approx' for CNF bundles.")


def _oracle(spec: str):
    if spec == "exact":
        return ExactEnumerationOracle()
    if spec.startswith("exec:"):
        return SerializedOracle(ExecOracle(spec[len("exec:"):]))
    raise LqciError(f"Unknown oracle {spec!r}; use 'exact' or 'exec:<command>'.")


def command_check(args) -> int:
    bundle = load_bundle(args.bundle)
    _dfa_bundle(bundle, "check")
    report, _ = check_instance(bundle.instance, budget=args.budget, workers=args.workers)
    data = report.to_json()
    if report.feasible:
        data["expected_cost"] = fraction_to_text(report.spec.expected_cost)
    print(json.dumps(data, indent=2))
    if not report.feasible:
        print(f"infeasible: {report.reason.value}: {report.detail}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _approx_improviser(bundle: Bundle, args) -> ApproxImproviser:
    if bundle.cnf is None:
        raise LqciError("--approx needs a bundle with a cnf_file.")
    oracle = _oracle(args.oracle)
    params = ApproxParams(args.zeta, args.gamma, args.delta)
    plan = plan_approx(bundle.cnf, bundle.instance, params, oracle)
    if not plan.feasible:
        raise InfeasibleError(plan, f"Infeasible with confidence: {plan.reason}")
    low, high = plan.cost_interval
    logger.info("Expected cost certified within [%s, %s].", fraction_to_text(low), fraction_to_text(high))
    return ApproxImproviser(bundle.cnf, plan, oracle)


def _improviser(bundle: Bundle, args, instance: LqciInstance = None):
    instance = instance or bundle.instance
    if getattr(args, "approx", False):
        return _approx_improviser(bundle, args)
    _dfa_bundle(bundle, args.command)
    if args.maxent:
        return build_maxent_improviser(
            instance, gap=args.gap, budget=args.budget, workers=args.workers, precision=args.precision
        )
    return build_improviser(instance, budget=args.budget, workers=args.workers)


def command_sample(args) -> int:
    bundle = load_bundle(args.bundle)
    improviser = _improviser(bundle, args)
    out = sys.stdout
    for word, _, _ in improviser.generate(args.count, seed=args.seed, workers=args.workers):
        out.write(format_word(word) + "\n")
    return EXIT_OK


def command_stats(args) -> int:
    bundle = load_bundle(args.bundle)
    _dfa_bundle(bundle, "stats")
    instance = bundle.instance
    improviser = _improviser(bundle, args, unlabelled(instance) if args.unlabelled else instance)
    table = improviser.table

    samples = []
    for word, i, k in improviser.generate(args.samples, seed=args.seed, workers=args.workers):
        samples.append((word, instance.label.output(word), table.costs[k]))

    hard_check = None
    if bundle.grid is not None:
        grid = bundle.grid
        hard_check = lambda word: instance.m <= len(word) <= instance.n and replay(grid, word).valid
    report = empirical_report(samples, instance, hard_check)
    report.extra["expected_cost"] = fraction_to_text(improviser.expected_cost)
    report.extra["expected_cost_decimal"] = float(improviser.expected_cost)
    report.extra["mode"] = "maxent" if args.maxent else ("unlabelled" if args.unlabelled else "greedy")
    solution = getattr(improviser, "solution", None)
    if solution is not None:
        report.extra["entropy_bits"] = solution.entropy_bits
        report.extra["gap_bound"] = solution.gap_bound
    if bundle.grid is not None:
        report.traces = [render_path(bundle.grid, word) for word, _, _ in samples[: args.traces]]

    text = json.dumps(report.to_json(), indent=2)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def command_table(args) -> int:
    bundle = load_bundle(args.bundle)
    _dfa_bundle(bundle, "table")
    table = table_for(bundle.instance, budget=args.budget, workers=args.workers)
    table.to_frame().to_csv(sys.stdout, index=False)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lqci", description="Labelled quantitative control improvisation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug logs")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub):
        sub.add_argument("bundle", help="instance bundle JSON")
        sub.add_argument("--budget", type=int, default=DEFAULT_COST_BUDGET, help="cap on accumulated cost copies")
        sub.add_argument("--workers", type=int, default=None, help="worker threads (default: IMPROV_THREADS or 1)")

    def improviser_options(sub):
        sub.add_argument("--seed", type=int, default=None, help="random seed")
        sub.add_argument("--maxent", action="store_true", help="use the maximum-entropy distribution")
        sub.add_argument("--gap", type=float, default=DEFAULT_GAP, help="entropy gap target in bits")
        sub.add_argument(
            "--precision", choices=sorted(PRECISIONS), default=DEFAULT_PRECISION, help="float type of the max-entropy solver"
        )

    check = commands.add_parser("check", help="decide feasibility")
    common(check)
    check.set_defaults(handler=command_check)

    sample = commands.add_parser("sample", help="emit traces")
    common(sample)
    improviser_options(sample)
    sample.add_argument("--count", type=int, default=1, help="number of traces")
    sample.add_argument("--approx", action="store_true", help="use the approximate scheme on the bundle's CNF")
    sample.add_argument("--zeta", type=str, default="1", help="cost tolerance")
    sample.add_argument("--gamma", type=str, default="0", help="randomness tolerance")
    sample.add_argument("--delta", type=float, default=0.0, help="failure probability")
    sample.add_argument("--oracle", default="exact", help="'exact' or 'exec:<command>'")
    sample.set_defaults(handler=command_sample)

    stats = commands.add_parser("stats", help="empirical report")
    common(stats)
    improviser_options(stats)
    stats.add_argument("--samples", type=int, default=10 ** 4, help="number of samples")
    stats.add_argument("--unlabelled", action="store_true", help="ignore labels when building the improviser")
    stats.add_argument("--traces", type=int, default=3, help="rendered traces for map bundles")
    stats.add_argument("--output", default=None, help="write the report here instead of stdout")
    stats.set_defaults(handler=command_stats)

    table = commands.add_parser("table", help="cost class table as CSV")
    common(table)
    table.set_defaults(handler=command_table)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command == "sample" and args.count < 0:
        print("error: --count must be non-negative", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.handler(args)
    except InfeasibleError as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (LqciError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
