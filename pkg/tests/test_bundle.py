""" Tests for instance bundles.
"""

import json
import os
from fractions import Fraction as F
import pytest
from lqci import approx, bundle, errors, gridworld


class TestLoad(object):
    def test_toy(self, data_dir):
        loaded = bundle.load_bundle(os.path.join(data_dir, "toy.json"))
        instance = loaded.instance
        assert loaded.has_dfas
        assert instance.labels == (1, 2)
        assert instance.c == F(129, 50)
        assert instance.alpha == (F(1, 10), F(1, 10))
        assert loaded.cnf.labels == (1, 2)
        assert instance.cost.output(("1", "0", "1")) == 5
        assert instance.label.output(("1", "0", "1")) == 2

    def test_map_file(self, data_dir):
        loaded = bundle.load_bundle(os.path.join(data_dir, "grid4x4.json"))
        assert loaded.grid is not None
        assert loaded.instance.alphabet == gridworld.ALPHABET
        assert loaded.instance.labels == (1, 2)
        assert loaded.instance.beta == (1, 1)

    def test_inline_map(self):
        data = {"map": "S0 1 C1 / 1 X O1 / C2 1 E0", "m": 4, "n": 6, "c": "9", "lambda": "0", "rho": "1", "alpha": "0", "beta": "1"}
        loaded = bundle.parse_bundle(data)
        assert loaded.grid.end == (2, 2)

    def test_cnf_only(self, tmp_path, data_dir):
        with open(os.path.join(data_dir, "toy.cnf")) as f:
            (tmp_path / "only.cnf").write_text(f.read())
        data = {"cnf_file": "only.cnf", "m": 3, "n": 3, "c": "3", "lambda": "1/5", "rho": "1", "alpha": "1/10", "beta": "1/2"}
        loaded = bundle.parse_bundle(data, str(tmp_path))
        assert not loaded.has_dfas
        assert isinstance(loaded.instance.hard, approx.CnfSpec)
        assert loaded.instance.labels == (1, 2)


class TestCanonical(object):
    @pytest.mark.parametrize("name", ["toy.json", "grid4x4.json"])
    def test_dump_is_stable(self, data_dir, name):
        text = bundle.dump_bundle(bundle.load_bundle(os.path.join(data_dir, name)))
        again = bundle.dump_bundle(bundle.parse_bundle(json.loads(text), data_dir))
        assert text == again
        assert text.endswith("\n")

    def test_rationals_as_text(self, data_dir):
        data = json.loads(bundle.dump_bundle(bundle.load_bundle(os.path.join(data_dir, "toy.json"))))
        assert data["c"] == "129/50"
        assert data["alpha"] == ["1/10", "1/10"]
        assert data["cost"]["kind"] == "output"


class TestErrors(object):
    @pytest.fixture(scope="function")
    def toy_data(self, data_dir):
        with open(os.path.join(data_dir, "toy.json")) as f:
            data = json.load(f)
        del data["cnf_file"]
        yield data

    def test_missing_fields(self, toy_data):
        del toy_data["rho"]
        with pytest.raises(errors.BundleError):
            bundle.parse_bundle(toy_data)

    def test_bad_cost_kind(self, toy_data):
        toy_data["cost"]["kind"] = "sum"
        with pytest.raises(errors.BundleError):
            bundle.parse_bundle(toy_data)

    def test_bad_rational(self, toy_data):
        toy_data["c"] = "lots"
        with pytest.raises(errors.BundleError):
            bundle.parse_bundle(toy_data)

    def test_no_specifications(self, toy_data):
        del toy_data["hard"]
        with pytest.raises(errors.BundleError):
            bundle.parse_bundle(toy_data)

    def test_invalid_instance(self, toy_data):
        toy_data["alpha"] = "3/4"
        with pytest.raises(errors.LqciError):
            bundle.parse_bundle(toy_data)

    def test_not_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(errors.BundleError):
            bundle.load_bundle(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(errors.BundleError):
            bundle.load_bundle(str(tmp_path / "absent.json"))
