""" Tests for the command line interface.
"""

import io
import json
import os
from fractions import Fraction as F
import pandas as pd
import pytest
from lqci import cli, exact_scheme

TOY_WORDS = {"001", "010", "011", "100", "101", "110", "111"}


@pytest.fixture(scope="module")
def toy_path(data_dir):
    yield os.path.join(data_dir, "toy.json")


@pytest.fixture(scope="module")
def grid_path(data_dir):
    yield os.path.join(data_dir, "grid4x4.json")


@pytest.fixture(scope="function")
def infeasible_path(tmp_path, toy_path):
    with open(toy_path) as f:
        data = json.load(f)
    del data["cnf_file"]
    data["c"] = "5/2"
    path = tmp_path / "infeasible.json"
    path.write_text(json.dumps(data))
    yield str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCheck(object):
    def test_feasible(self, capsys, toy_path):
        code, out, _ = run(capsys, "check", toy_path)
        assert code == cli.EXIT_OK
        data = json.loads(out)
        assert data["feasible"] is True
        assert data["expected_cost"] == "129/50"

    def test_infeasible(self, capsys, infeasible_path):
        code, out, err = run(capsys, "check", infeasible_path)
        assert code == cli.EXIT_INFEASIBLE
        assert json.loads(out)["reason"] == "MinCostExceedsBound"
        assert "MinCostExceedsBound" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "check", str(tmp_path / "absent.json"))
        assert code == cli.EXIT_ERROR
        assert err.startswith("error:")


class TestSample(object):
    def test_reproducible(self, capsys, toy_path):
        code, first, _ = run(capsys, "sample", toy_path, "--count", "20", "--seed", "7")
        assert code == cli.EXIT_OK
        lines = first.splitlines()
        assert len(lines) == 20
        assert set(lines) <= TOY_WORDS
        _, second, _ = run(capsys, "sample", toy_path, "--count", "20", "--seed", "7")
        assert first == second

    def test_workers_reproducible(self, capsys, toy_path):
        _, first, _ = run(capsys, "sample", toy_path, "--count", "20", "--seed", "7", "--workers", "3")
        _, second, _ = run(capsys, "sample", toy_path, "--count", "20", "--seed", "7", "--workers", "3")
        assert first == second

    def test_zero_count(self, capsys, toy_path):
        code, out, _ = run(capsys, "sample", toy_path, "--count", "0")
        assert code == cli.EXIT_OK
        assert out == ""

    def test_negative_count(self, capsys, toy_path):
        code, _, _ = run(capsys, "sample", toy_path, "--count", "-1")
        assert code == cli.EXIT_ERROR

    def test_infeasible(self, capsys, infeasible_path):
        code, out, err = run(capsys, "sample", infeasible_path, "--count", "3")
        assert code == cli.EXIT_INFEASIBLE
        assert out == ""
        assert err.startswith("infeasible:")

    def test_maxent(self, capsys, toy_path):
        code, out, _ = run(capsys, "sample", toy_path, "--count", "10", "--seed", "1", "--maxent")
        assert code == cli.EXIT_OK
        assert set(out.splitlines()) <= TOY_WORDS

    def test_maxent_extended_precision(self, capsys, toy_path):
        code, out, _ = run(
            capsys, "sample", toy_path, "--count", "10", "--seed", "1", "--maxent", "--precision", "extended"
        )
        assert code == cli.EXIT_OK
        assert set(out.splitlines()) <= TOY_WORDS

    def test_approx(self, capsys, toy_path):
        code, out, _ = run(capsys, "-v", "sample", toy_path, "--count", "10", "--seed", "1", "--approx", "--zeta", "1")
        assert code == cli.EXIT_OK
        assert len(out.splitlines()) == 10
        assert set(out.splitlines()) <= TOY_WORDS

    def test_approx_needs_cnf(self, capsys, grid_path):
        code, _, err = run(capsys, "sample", grid_path, "--approx")
        assert code == cli.EXIT_ERROR
        assert "cnf_file" in err

    def test_unknown_oracle(self, capsys, toy_path):
        code, _, _ = run(capsys, "sample", toy_path, "--approx", "--oracle", "magic")
        assert code == cli.EXIT_ERROR


class TestTable(object):
    def test_csv(self, capsys, toy_path):
        code, out, _ = run(capsys, "table", toy_path)
        assert code == cli.EXIT_OK
        frame = pd.read_csv(io.StringIO(out))
        assert list(frame.columns) == ["label", "cost", "cost_exact", "size"]
        assert frame["size"].sum() == 7


class TestStats(object):
    @pytest.mark.statistical
    def test_greedy_on_map(self, capsys, grid_path, tmp_path):
        output = tmp_path / "report.json"
        code, out, _ = run(
            capsys, "stats", grid_path, "--samples", "2000", "--seed", "3", "--traces", "2", "--output", str(output)
        )
        assert code == cli.EXIT_OK
        assert out == ""
        report = json.loads(output.read_text())
        assert report["samples"] == 2000
        assert report["hard_violations"] == 0
        assert report["verdicts"] == {"hard": True, "labels": True, "cost": True}
        assert report["expected_cost"] == "29/5"
        assert len(report["traces"]) == 2

    def test_unlabelled_fails_label_bounds(self, capsys, grid_path):
        code, out, _ = run(capsys, "stats", grid_path, "--samples", "1000", "--seed", "3", "--unlabelled")
        assert code == cli.EXIT_OK
        report = json.loads(out)
        assert report["mode"] == "unlabelled"
        assert report["verdicts"]["labels"] is False
        assert report["labels"]["2"]["count"] == 0

    def test_maxent_spreads_labels_at_higher_cost(self, capsys, grid_path):
        _, out, _ = run(capsys, "stats", grid_path, "--samples", "1000", "--seed", "3", "--unlabelled")
        plain = json.loads(out)
        _, out, _ = run(capsys, "stats", grid_path, "--samples", "1000", "--seed", "3", "--maxent")
        spread = json.loads(out)
        assert spread["mode"] == "maxent"
        assert spread["expected_cost_decimal"] > plain["expected_cost_decimal"]
        assert spread["labels"]["2"]["count"] > plain["labels"]["2"]["count"]
        assert spread["verdicts"]["labels"] is True
        assert spread["entropy_bits"] > 0


class TestEmpiricalReport(object):
    def test_uniform_sampler_ignoring_bounds(self, toy_instance):
        # Uniform over all words: label 1 gets 4/7 and the mean cost is 4.
        words = sorted(TOY_WORDS) * 300
        samples = [(tuple(w), toy_instance.label.output(w), toy_instance.cost.output(w)) for w in words]
        report = cli.empirical_report(samples, toy_instance)
        assert report.verdicts["hard"] is True
        assert report.verdicts["labels"] is True
        assert report.verdicts["cost"] is False
        assert report.mean_cost == pytest.approx(4.0)
        assert not report.passed

    def test_hard_violation(self, toy_instance):
        samples = [(("0", "0", "0"), 2, 0)]
        report = cli.empirical_report(samples, toy_instance)
        assert report.hard_violations == 1
        assert report.verdicts["hard"] is False

    @pytest.mark.statistical
    def test_matches_greedy(self, toy_instance):
        improviser = exact_scheme.build_improviser(toy_instance)
        samples = [
            (word, improviser.table.labels[i], improviser.table.costs[k])
            for word, i, k in improviser.generate(5000, seed=2)
        ]
        report = cli.empirical_report(samples, toy_instance)
        assert report.passed
        assert report.mean_cost == pytest.approx(float(F(129, 50)), abs=0.1)
        assert set(report.word_counts) <= TOY_WORDS

    def test_interval(self):
        low, high = cli.label_interval(50, 100)
        assert low < 0.5 < high
        assert cli.label_interval(0, 0) == (0.0, 1.0)
