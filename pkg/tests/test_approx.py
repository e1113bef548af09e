""" Tests for the approximate scheme over CNF specifications.
"""

import itertools
import os
import random
import sys
from collections import Counter
from fractions import Fraction as F
import pycosat
import pytest
from lqci import approx, core, errors


@pytest.fixture(scope="module")
def toy_cnf(data_dir):
    with open(os.path.join(data_dir, "toy.cnf")) as f:
        yield approx.parse_dimacs(f.read())


@pytest.fixture(scope="module")
def toy_cnf_instance(toy_cnf):
    yield approx.cnf_instance(toy_cnf, c="129/50", lam="1/5", rho=1, alpha="1/10", beta="1/2")


@pytest.fixture(scope="function")
def oracle():
    yield approx.ExactEnumerationOracle()


def _solve(clauses, num_vars):
    return pycosat.solve([list(c) for c in clauses], vars=num_vars) != "UNSAT"


class TestDimacs(object):
    def test_annotations(self, toy_cnf):
        assert toy_cnf.x_vars == (1, 2, 3)
        assert toy_cnf.y_vars == (4, 5, 6)
        assert toy_cnf.label_vars == (7, 8)
        assert toy_cnf.labels == (1, 2)
        assert toy_cnf.cost_width == 3
        assert len(toy_cnf.hard) == 1 and len(toy_cnf.label) == 10 and len(toy_cnf.cost) == 6

    def test_reads_back(self, toy_cnf):
        assert approx.parse_dimacs(toy_cnf.to_dimacs()) == toy_cnf

    def test_formula_header(self, toy_cnf):
        text = toy_cnf.formula(1).to_dimacs()
        assert text.splitlines()[0] == "c ind 1 2 3 0"

    def test_label_values_default(self):
        spec = approx.parse_dimacs("c ind 1 0\nc label bits 2 3\np cnf 3 1\n1 0\n")
        assert spec.labels == (0, 1, 2, 3)

    @pytest.mark.parametrize(
        "text",
        [
            "c ind x 1 0\n1 0\n",
            "c ind x 1 0\np cnf 1 1\n1 2 0\n",
            "c ind x 1 0\np cnf 1 1\n1\n",
            "p cnf 1 1\n1 0\n",
            "c ind x 1 0\nc section body\np cnf 1 1\n1 0\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(errors.InvalidInstanceError):
            approx.parse_dimacs(text)

    def test_cost_value(self, toy_cnf):
        assert toy_cnf.cost_value((False, True, True)) == 3
        assert toy_cnf.cost_value((False, False, False)) == 8


class TestCostIntervals(object):
    def test_every_interval(self):
        y = [1, 2, 3]
        for lo, hi in itertools.combinations_with_replacement(range(1, 9), 2):
            clauses, aux = approx.cost_interval_clauses(y, lo, hi, 4)
            num_vars = 3 + len(aux)
            for bits in itertools.product([False, True], repeat=3):
                value = int("".join("1" if b else "0" for b in bits), 2) or 8
                units = [(v if b else -v,) for v, b in zip(y, bits)]
                assert _solve(clauses + units, max(num_vars, 3)) == (lo <= value <= hi), (lo, hi, bits)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            approx.cost_interval_clauses([1, 2], 3, 2, 3)


class TestBuckets(object):
    def test_doubling(self):
        plan = approx.BucketPlan.build(2, 3)
        assert plan.bounds == ((1, 1), (2, 3), (4, 8))
        assert [plan.low(k) for k in range(plan.count)] == [1, 2, 4]
        assert plan.bucket_of(7) == 2

    def test_buckets_cover_every_cost(self):
        plan = approx.BucketPlan.build(F(5, 4), 4)
        covered = [c for lo, hi in plan.bounds for c in range(lo, hi + 1)]
        assert covered == list(range(1, 17))

    def test_ratio_must_exceed_one(self):
        with pytest.raises(ValueError):
            approx.BucketPlan.build(1, 3)


class TestParams(object):
    def test_exact_cube_root(self):
        derived = approx.ApproxParams(1, "0.728", 0).derive(2, 3)
        assert derived.tau == F(1, 5)
        assert derived.epsilon == F(1, 5)
        assert derived.ratio == 2
        assert derived.buckets == 3

    def test_inexact_cube_root(self):
        tau = approx.ApproxParams(1, 1, 0).derive(1, 3).tau
        assert (1 + tau) ** 3 <= 2
        assert (1 + tau + F(1, 10 ** 11)) ** 3 > 2

    def test_failure_probability_split(self):
        derived = approx.ApproxParams(1, 0, "0.1").derive(2, 3)
        assert 0 < derived.count_delta < 0.1
        assert (1 - F(derived.count_delta)) ** 6 >= F(9, 10)

    @pytest.mark.parametrize("zeta, gamma, delta", [(0, 0, 0), (1, -1, 0), (1, 0, 1)])
    def test_invalid(self, zeta, gamma, delta):
        with pytest.raises(ValueError):
            approx.ApproxParams(zeta, gamma, delta)


class TestOracles(object):
    def test_projected_count_ignores_aux(self, oracle):
        formula = approx.Formula(3, ((1, 2),), (1, 2))
        assert oracle.count(formula) == 3
        assert oracle.solutions(formula) == [(False, True), (True, False), (True, True)]

    def test_unsat(self, oracle):
        formula = approx.Formula(1, ((1,), (-1,)), (1,))
        assert oracle.count(formula) == 0
        with pytest.raises(errors.OracleError):
            oracle.sample(formula)

    def test_cap(self):
        with pytest.raises(errors.CapExceededError):
            approx.ExactEnumerationOracle(cap=4).count(approx.Formula(3, (), (1, 2, 3)))

    def test_exact_pair_shares_cache(self):
        counter, generator = approx.exact_enumeration_oracle(max_x_bits=2)
        assert counter is generator
        formula = approx.Formula(2, ((1, 2),), (1, 2))
        assert counter.count(formula) == 3
        with pytest.raises(errors.CapExceededError):
            counter.count(approx.Formula(3, (), (1, 2, 3)))

    def test_toy_counts(self, toy_cnf, oracle):
        assert oracle.count(toy_cnf.formula()) == 7
        assert oracle.count(toy_cnf.formula(1)) == 4
        assert oracle.count(toy_cnf.formula(2, (2, 3))) == 1

    def test_exec_oracle(self, tmp_path):
        script = tmp_path / "oracle.py"
        script.write_text(
            "import sys\n"
            "sys.stdin.read()\n"
            "print('5' if sys.argv[1] == 'count' else '1 -2 3 0')\n"
        )
        oracle = approx.SerializedOracle(approx.ExecOracle([sys.executable, str(script)], timeout=30))
        formula = approx.Formula(3, ((1,),), (1, 2, 3))
        assert oracle.count(formula, F(1, 5), 0.1) == 5
        assert oracle.sample(formula, F(1, 5)) == (True, False, True)

    def test_exec_oracle_failure(self, tmp_path):
        script = tmp_path / "broken.py"
        script.write_text("import sys\nsys.exit(3)\n")
        oracle = approx.ExecOracle([sys.executable, str(script)])
        with pytest.raises(errors.OracleError):
            oracle.count(approx.Formula(1, (), (1,)))


class TestPlan(object):
    def test_toy_plan(self, toy_cnf, toy_cnf_instance, oracle):
        plan = approx.plan_approx(toy_cnf, toy_cnf_instance, approx.ApproxParams(1, 0, 0), oracle)
        assert plan.feasible
        first, second = plan.estimates
        assert first.counts == (1, 1, 2)
        assert first.probabilities == (F(1, 2), F(3, 10), F(1, 5))
        assert first.lo == F(19, 10)
        assert second.counts == (0, 1, 2)
        assert second.probabilities == (0, F(1, 2), F(1, 2))
        assert second.lo == 3
        assert plan.marginals.marginals == (F(4, 5), F(1, 5))
        assert plan.low == F(53, 25)
        assert plan.cost_interval == (F(53, 25), F(106, 25))

    def test_alpha_too_large(self, toy_cnf, toy_cnf_instance, oracle):
        instance = toy_cnf_instance.replace(alpha="1/2", beta="1/2")
        result = approx.approximate_greedy_cost(
            toy_cnf, 0, instance.alpha[0], instance.beta[0], approx.BucketPlan.build(2, 3), 0, 0, oracle
        )
        assert result is False
        assert not approx.plan_approx(toy_cnf, instance, approx.ApproxParams(1, 0, 0), oracle).feasible

    def test_beta_too_small(self, toy_cnf, oracle):
        result = approx.approximate_greedy_cost(toy_cnf, 0, 0, "1/5", approx.BucketPlan.build(2, 3), 0, 0, oracle)
        assert result is False

    def test_low_above_bound(self, toy_cnf, toy_cnf_instance, oracle):
        params = approx.ApproxParams(1, 0, 0)
        assert approx.build_approx_improviser(toy_cnf, toy_cnf_instance.replace(c=2), params, oracle, oracle) is None
        plan = approx.plan_approx(toy_cnf, toy_cnf_instance.replace(c=2), params, oracle)
        assert "lower bound" in plan.reason

    def test_label_bounds(self, toy_cnf, toy_cnf_instance, oracle):
        plan = approx.plan_approx(toy_cnf, toy_cnf_instance.replace(lam="3/5"), approx.ApproxParams(1, 0, 0), oracle)
        assert not plan.feasible

    def test_label_count_mismatch(self, toy_cnf, toy_instance, oracle):
        instance = toy_instance.replace(labels=(1, 2, 3), alpha="1/10", beta="1/2", lam=0)
        with pytest.raises(errors.InvalidInstanceError):
            approx.plan_approx(toy_cnf, instance, approx.ApproxParams(1, 0, 0), oracle)


@pytest.fixture(scope="module")
def toy_approx(toy_cnf, toy_cnf_instance):
    oracle = approx.ExactEnumerationOracle()
    yield approx.build_approx_improviser(toy_cnf, toy_cnf_instance, approx.ApproxParams(1, 0, 0), oracle, oracle)


class TestApproxImproviser(object):
    def test_word_distribution(self, toy_approx):
        distribution = toy_approx.word_distribution(approx.ExactEnumerationOracle())
        assert {"".join(w): p for w, p in distribution.items()} == {
            "001": F(2, 5),
            "010": F(6, 25),
            "100": F(2, 25),
            "111": F(2, 25),
            "011": F(1, 10),
            "101": F(1, 20),
            "110": F(1, 20),
        }

    def test_cost_within_certified_interval(self, toy_approx, toy_cnf):
        distribution = toy_approx.word_distribution(approx.ExactEnumerationOracle())
        expected = sum(p * int("".join(w), 2) for w, p in distribution.items())
        low, high = toy_approx.plan.cost_interval
        assert low <= expected <= high

    def test_samples(self, toy_approx):
        samples = toy_approx.generate(100, seed=3, workers=2)
        assert samples == toy_approx.generate(100, seed=3, workers=2)
        for word, i, k in samples:
            assert len(word) == 3 and "1" in word
            value = int("".join(word), 2)
            assert toy_approx.plan.plan.bucket_of(value) == k
            assert bin(value).count("1") % 2 == (1 if i == 0 else 0)

    def test_word_conditionals_within_bounds(self, toy_approx, toy_cnf_instance):
        distribution = toy_approx.word_distribution(approx.ExactEnumerationOracle())
        for i, parity in enumerate((1, 0)):
            words = [w for w in itertools.product("01", repeat=3) if "1" in w and w.count("1") % 2 == parity]
            marginal = sum(distribution.get(w, 0) for w in words)
            assert marginal == toy_approx.plan.marginals.marginals[i]
            for word in words:
                conditional = distribution.get(word, 0) / marginal
                assert toy_cnf_instance.alpha[i] <= conditional <= toy_cnf_instance.beta[i]


def _random_cnf(rng, width):
    """ Random hard clauses over x, cost y equal to x, label bit copying one x bit.
    """
    x_vars = list(range(1, width + 1))
    y_vars = list(range(width + 1, 2 * width + 1))
    label_bit = 2 * width + 1
    hard = []
    for _ in range(rng.randint(0, 3)):
        chosen = rng.sample(x_vars, min(3, width))
        hard.append(tuple(v if rng.random() < 0.5 else -v for v in chosen))
    pivot = rng.choice(x_vars)
    spec = approx.CnfSpec(
        num_vars=label_bit,
        hard=hard,
        label=[(label_bit, -pivot), (-label_bit, pivot)],
        cost=[clause for a, b in zip(x_vars, y_vars) for clause in ((-a, b), (a, -b))],
        x_vars=x_vars,
        y_vars=y_vars,
        label_vars=(label_bit,),
        labels=(0, 1),
    )
    return spec, pivot - 1


def _word_cost(word):
    return int("".join(word), 2) or 2 ** len(word)


def _random_cnf_case(seed):
    """ A random CNF with both labels inhabited and bounds it can meet.
    """
    rng = random.Random(seed)
    oracle = approx.ExactEnumerationOracle()
    while True:
        spec, pivot = _random_cnf(rng, rng.randint(3, 6))
        words = [[spec.word(bits) for bits in oracle.solutions(spec.formula(v))] for v in spec.labels]
        if all(words):
            break
    alpha, beta = [], []
    for group in words:
        size = len(group)
        beta.append(F(1, rng.randint(1, size)))
        alpha.append(rng.choice([F(0), F(1, rng.randint(size, 2 * size))]))
    instance = approx.cnf_instance(
        spec,
        c=2 ** len(spec.x_vars) + 1,
        lam=F(rng.randint(0, 5), 10),
        rho=F(1, 2) + F(rng.randint(0, 5), 10),
        alpha=alpha,
        beta=beta,
    )
    return spec, pivot, words, instance, oracle, rng


class TestRandomCnf(object):
    @pytest.mark.parametrize("seed", range(60))
    def test_cost_within_certified_interval(self, seed):
        spec, pivot, words, instance, oracle, rng = _random_cnf_case(seed)
        params = approx.ApproxParams(rng.choice([F(1, 4), F(1, 2), 1, 2]), 0, 0)
        improviser = approx.build_approx_improviser(spec, instance, params, oracle, oracle)
        assert improviser is not None
        ratio = improviser.plan.plan.ratio
        distribution = improviser.word_distribution(oracle)
        assert sum(distribution.values()) == 1
        for word in distribution:
            assert word in words[int(word[pivot])]

        total = F(0)
        for i, group in enumerate(words):
            marginal = sum(distribution.get(w, 0) for w in group)
            assert marginal == improviser.plan.marginals.marginals[i]
            if marginal == 0:
                continue
            expected = sum(distribution.get(w, 0) * _word_cost(w) for w in group) / marginal
            lo = improviser.plan.estimates[i].lo
            assert lo <= expected <= ratio * lo
            for word in group:
                assert instance.alpha[i] <= distribution.get(word, 0) / marginal <= instance.beta[i]
            total += marginal * expected
        low, high = improviser.plan.cost_interval
        assert low <= total <= high

    @pytest.mark.parametrize("seed", range(10))
    def test_single_cost_buckets_match_exact_greedy(self, seed):
        spec, _, words, instance, oracle, _ = _random_cnf_case(seed)
        plan = approx.plan_approx(spec, instance, approx.ApproxParams(F(1, 100), 0, 0), oracle)
        assert plan.feasible
        for i, group in enumerate(words):
            sizes = Counter(_word_cost(w) for w in group)
            classes = sorted(sizes.items())
            greedy = core.greedy_cost_construction(classes, instance.alpha[i], instance.beta[i])
            estimates = plan.estimates[i]
            by_cost = {}
            for (lo, hi), count, p in zip(plan.plan.bounds, estimates.counts, estimates.probabilities):
                if count:
                    assert lo == hi
                    by_cost[lo] = p
            assert by_cost == {cost: p for (cost, _), p in zip(classes, greedy.probabilities)}
