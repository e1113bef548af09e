""" Instance bundles: one JSON document holding an instance's specifications and bounds.

A bundle names its specifications in one of three ways:

    * ``hard``, ``label`` and ``cost`` DFAs inline, the cost tagged with
      ``"kind": "output"`` or ``"kind": "accumulated"``;
    * a grid map, inline as ``map`` or as a path in ``map_file``;
    * only a ``cnf_file`` with an annotated DIMACS CNF.

A ``cnf_file`` may also accompany DFA specifications, giving the same
instance in CNF form for the approximate scheme. Bounds are ``m``, ``n``,
``c``, ``lambda``, ``rho`` and per-label (or scalar) ``alpha`` / ``beta``,
with rationals written as "p/q" strings. Paths are relative to the bundle.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from .approx import CnfSpec, parse_dimacs
from .automata import Dfa, StateOutputDfa, WeightedDfa
from .core import LqciInstance
from .errors import BundleError
from .gridworld import ALPHABET, GridMap, encode, parse_map
from .utils import fraction_to_text, to_fraction

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("m", "n", "c", "lambda", "rho", "alpha", "beta")
COST_KINDS = {"output": StateOutputDfa, "accumulated": WeightedDfa}


@dataclass
class Bundle:
    """ A loaded bundle.

    Attributes:
        instance: The instance, DFA form when DFAs or a map were given.
        cnf: CNF form, when a ``cnf_file`` was given.
        grid: The map, for map bundles.
        sources: File references and inline text as written in the bundle.
    """

    instance: LqciInstance
    cnf: Optional[CnfSpec] = None
    grid: Optional[GridMap] = None
    sources: Dict[str, str] = field(default_factory=dict)

    @property
    def has_dfas(self) -> bool:
        return isinstance(self.instance.hard, Dfa)


def _read(base_dir: str, name: str) -> str:
    path = os.path.join(base_dir, name)
    try:
        with open(path) as f:
            return f.read()
    except OSError as err:
        raise BundleError(f"Cannot read {path}: {err}") from err


def _rational(data: Dict[str, Any], key: str):
    try:
        return to_fraction(data[key])
    except (TypeError, ValueError, ZeroDivisionError) as err:
        raise BundleError(f"Field {key!r} is not a rational: {data[key]!r}") from err


def _rationals(data: Dict[str, Any], key: str):
    value = data[key]
    if isinstance(value, list):
        return tuple(_rational({key: v}, key) for v in value)
    return _rational(data, key)


def parse_bundle(data: Dict[str, Any], base_dir: str = ".") -> Bundle:
    """ Builds a bundle from its decoded JSON.

    Raises:
        BundleError: Missing or malformed fields.
    """
    if not isinstance(data, dict):
        raise BundleError("A bundle must be a JSON object.")
    missing = [key for key in REQUIRED_FIELDS if key not in data]
    if missing:
        raise BundleError(f"Bundle is missing fields: {', '.join(missing)}.")

    sources = {key: data[key] for key in ("map", "map_file", "cnf_file") if key in data}
    labels = data.get("labels")
    cnf = None
    if "cnf_file" in data:
        cnf = parse_dimacs(_read(base_dir, data["cnf_file"]), labels=labels)

    grid = None
    if "map" in data or "map_file" in data:
        grid = parse_map(data["map"] if "map" in data else _read(base_dir, data["map_file"]))
        hard, label, cost = encode(grid)
        alphabet = ALPHABET
        labels = labels or list(range(1, len(grid.stations) + 1))
    elif all(key in data for key in ("hard", "label", "cost")):
        hard = Dfa.from_json(data["hard"])
        label = StateOutputDfa.from_json(data["label"])
        kind = data["cost"].get("kind")
        if kind not in COST_KINDS:
            raise BundleError(f"Cost kind must be one of {sorted(COST_KINDS)}, got {kind!r}.")
        cost = COST_KINDS[kind].from_json(data["cost"])
        alphabet = hard.alphabet
        labels = labels or label.values
    elif cnf is not None:
        hard = label = cost = cnf
        alphabet = ("0", "1")
        labels = cnf.labels
    else:
        raise BundleError("Bundle needs hard/label/cost DFAs, a map, or a cnf_file.")

    try:
        instance = LqciInstance(
            alphabet=alphabet,
            m=int(data["m"]),
            n=int(data["n"]),
            hard=hard,
            cost=cost,
            label=label,
            labels=tuple(labels),
            c=_rational(data, "c"),
            lam=_rational(data, "lambda"),
            rho=_rational(data, "rho"),
            alpha=_rationals(data, "alpha"),
            beta=_rationals(data, "beta"),
        )
    except (TypeError, ValueError) as err:
        raise BundleError(f"Malformed bundle: {err}") from err
    return Bundle(instance, cnf, grid, sources)


def load_bundle(path: str) -> Bundle:
    """ Reads a bundle file.
    """
    text = _read(os.path.dirname(os.path.abspath(path)), os.path.basename(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise BundleError(f"{path} is not valid JSON: {err}") from err
    bundle = parse_bundle(data, os.path.dirname(os.path.abspath(path)))
    logger.info("Loaded bundle %s with %d labels.", path, bundle.instance.label_count)
    return bundle


def bundle_to_json(bundle: Bundle) -> Dict[str, Any]:
    """ Canonical JSON form of a bundle.
    """
    instance = bundle.instance
    data = {
        "m": instance.m,
        "n": instance.n,
        "c": fraction_to_text(instance.c),
        "lambda": fraction_to_text(instance.lam),
        "rho": fraction_to_text(instance.rho),
        "alpha": [fraction_to_text(a) for a in instance.alpha],
        "beta": [fraction_to_text(b) for b in instance.beta],
        "labels": list(instance.labels),
    }
    data.update(bundle.sources)
    if bundle.grid is None and bundle.has_dfas:
        data["hard"] = instance.hard.to_json()
        data["label"] = instance.label.to_json()
        cost = instance.cost.to_json()
        cost["kind"] = "output" if isinstance(instance.cost, StateOutputDfa) else "accumulated"
        data["cost"] = cost
    return data


def dump_bundle(bundle: Bundle) -> str:
    """ Canonical text: sorted keys, two-space indent, trailing newline.
    """
    return json.dumps(bundle_to_json(bundle), indent=2, sort_keys=True) + "\n"
