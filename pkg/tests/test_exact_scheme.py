""" Tests for the exact scheme over DFA specifications.
"""

import random
from collections import Counter
from fractions import Fraction as F
import pytest
from scipy.stats import chisquare
from lqci import automata, core, errors, exact_scheme


TOY_DISTRIBUTION = {
    "001": F(2, 5),
    "010": F(6, 25),
    "100": F(2, 25),
    "111": F(2, 25),
    "011": F(1, 10),
    "101": F(2, 25),
    "110": F(1, 50),
}


@pytest.fixture(scope="module")
def improviser(toy_instance):
    yield exact_scheme.build_improviser(toy_instance, workers=1)


@pytest.fixture(scope="module")
def ones_cost():
    # Entering state 1 means a 1 was just read.
    d = automata.Dfa(("0", "1"), 2, ((0, 1), (0, 1)), 0, frozenset([0, 1]))
    yield automata.WeightedDfa(d, (0, 1))


class TestClassTable(object):
    def test_samplers(self, toy_table):
        sampler = toy_table.sampler(1, 4)
        assert sampler.size == 1
        assert list(sampler.words()) == [("1", "0", "1")]
        assert sampler.sample(random.Random(0)) == ("1", "0", "1")

    def test_accumulated_cost(self, toy_instance, ones_cost):
        table = exact_scheme.table_for(toy_instance.replace(cost=ones_cost), workers=2)
        assert table.costs == (1, 2, 3)
        assert table.sizes == ((3, 0, 1), (0, 3, 0))

    def test_budget(self, toy_instance):
        heavy = automata.WeightedDfa(automata.Dfa.universal(("0", "1")), (10,))
        with pytest.raises(errors.BudgetExceededError):
            exact_scheme.table_for(toy_instance.replace(cost=heavy), budget=10)

    def test_unlisted_labels_are_left_out(self, toy_instance, toy_hard, toy_label, toy_cost):
        table = exact_scheme.build_cost_class_table(toy_hard, toy_label, toy_cost, 3, 3, labels=[1])
        assert table.total_size == 4


class TestImproviser(object):
    def test_expected_cost(self, improviser):
        assert improviser.expected_cost == F(129, 50)

    def test_exact_distribution(self, improviser):
        distribution = exact_scheme.exact_word_distribution(improviser)
        assert {"".join(w): p for w, p in distribution.items()} == TOY_DISTRIBUTION

    def test_enumeration_cap(self, improviser):
        with pytest.raises(errors.TooManyWordsError):
            exact_scheme.exact_word_distribution(improviser, cap=3)

    def test_samples_carry_their_class(self, improviser, toy_instance):
        for word, i, k in improviser.generate(200, seed=4, workers=1):
            assert toy_instance.hard.accepts(word)
            assert toy_instance.label.output(word) == improviser.table.labels[i]
            assert toy_instance.cost.output(word) == improviser.table.costs[k]

    @pytest.mark.parametrize("workers", [1, 3])
    def test_reproducible(self, improviser, workers):
        first = improviser.generate(30, seed=8, workers=workers)
        assert first == improviser.generate(30, seed=8, workers=workers)

    def test_zero_samples(self, improviser):
        assert improviser.generate(0, seed=1) == []

    @pytest.mark.statistical
    def test_frequencies(self, improviser):
        samples = improviser.generate(20000, seed=12, workers=2)
        counts = Counter("".join(word) for word, _, _ in samples)
        words = sorted(TOY_DISTRIBUTION)
        observed = [counts[w] for w in words]
        expected = [float(TOY_DISTRIBUTION[w]) * len(samples) for w in words]
        assert chisquare(observed, expected).pvalue > 1e-3

    def test_infeasible(self, toy_instance):
        with pytest.raises(errors.InfeasibleError) as info:
            exact_scheme.build_improviser(toy_instance.replace(c="5/2"))
        assert info.value.report.reason == core.InfeasibilityReason.MinCostExceedsBound

    def test_check_instance(self, toy_instance):
        report, table = exact_scheme.check_instance(toy_instance.replace(lam="3/5"))
        assert not report
        assert report.reason == core.InfeasibilityReason.LabelCountVsLambda
        assert table.total_size == 7


class TestUnlabelled(object):
    def test_collapses_labels(self, toy_instance):
        plain = exact_scheme.unlabelled(toy_instance)
        assert plain.labels == (0,)
        assert plain.lam == plain.rho == 1
        table = exact_scheme.table_for(plain)
        assert table.sizes == ((1,) * 7,)

    def test_greedy_cost(self, toy_instance):
        improviser = exact_scheme.build_improviser(exact_scheme.unlabelled(toy_instance, alpha=0, beta=1))
        assert improviser.expected_cost == 1
        improviser = exact_scheme.build_improviser(exact_scheme.unlabelled(toy_instance).replace(c=4))
        assert improviser.expected_cost == F(31, 10)
