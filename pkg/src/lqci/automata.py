""" DFA machinery for the exact improvisation scheme.

Automata are immutable dense tables. Products and cost-tracking automata
only materialize reachable states. Counting uses the suffix-count
recurrence, sampling walks the same table with exact big-integer draws.

References:
    Counting and uniform generation of words of a regular language follow
    the standard dynamic program over (state, remaining length).
"""

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, Hashable, Iterator, List, Optional, Sequence, Set, Tuple

from .errors import AlphabetMismatchError, EmptyLanguageError, InvalidDfaError
from .utils import Word, categorical_draw

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CountTable:
    """ Suffix counts: counts[s][q] accepted words of length s read from q.
    """

    counts: Tuple[Tuple[int, ...], ...]

    @property
    def max_length(self) -> int:
        return len(self.counts) - 1

    def count(self, state: int, remaining: int) -> int:
        return self.counts[remaining][state]


@dataclass(frozen=True)
class Dfa:
    """ A complete deterministic finite automaton.

    Arguments:
        alphabet: Symbols, in transition-column order.
        num_states: Number of states, numbered 0..num_states-1.
        transitions: transitions[q][a] is the successor of q on symbol index a.
        initial: Initial state.
        accepting: Accepting states.
    """

    alphabet: Tuple[str, ...]
    num_states: int
    transitions: Tuple[Tuple[int, ...], ...]
    initial: int
    accepting: FrozenSet[int]
    _count_cache: Dict[str, CountTable] = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(str(a) for a in self.alphabet))
        object.__setattr__(self, "transitions", tuple(tuple(int(t) for t in row) for row in self.transitions))
        object.__setattr__(self, "accepting", frozenset(int(q) for q in self.accepting))

        if not self.alphabet:
            raise InvalidDfaError("Alphabet is empty.")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InvalidDfaError("Alphabet symbols must be distinct.")
        if self.num_states < 1:
            raise InvalidDfaError("A DFA needs at least one state.")
        if len(self.transitions) != self.num_states:
            raise InvalidDfaError(f"Expected {self.num_states} transition rows, got {len(self.transitions)}.")
        width = len(self.alphabet)
        for q, row in enumerate(self.transitions):
            if len(row) != width:
                raise InvalidDfaError(f"Partial transition row for state {q}: {len(row)} of {width} symbols.")
            if any(not 0 <= t < self.num_states for t in row):
                raise InvalidDfaError(f"State {q} has a transition to an unknown state.")
        if not 0 <= self.initial < self.num_states:
            raise InvalidDfaError(f"Initial state {self.initial} is out of range.")
        if any(not 0 <= q < self.num_states for q in self.accepting):
            raise InvalidDfaError("Accepting set refers to an unknown state.")

    @classmethod
    def universal(cls, alphabet: Sequence[str]) -> "Dfa":
        """ One accepting state looping on every symbol.
        """
        return cls(tuple(alphabet), 1, ((0,) * len(alphabet),), 0, frozenset([0]))

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Dfa":
        """ Reads {"alphabet", "states", "initial", "accepting"?, "transitions"}.
        A missing accepting list means every state accepts.
        """
        try:
            states = int(data["states"])
            accepting = data.get("accepting")
            return cls(
                alphabet=tuple(data["alphabet"]),
                num_states=states,
                transitions=tuple(tuple(row) for row in data["transitions"]),
                initial=int(data.get("initial", 0)),
                accepting=frozenset(range(states) if accepting is None else accepting),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise InvalidDfaError(f"Malformed DFA description: {err}") from err

    def to_json(self) -> Dict[str, Any]:
        return {
            "alphabet": list(self.alphabet),
            "states": self.num_states,
            "initial": self.initial,
            "accepting": sorted(self.accepting),
            "transitions": [list(row) for row in self.transitions],
        }

    def symbol_index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise InvalidDfaError(f"Symbol {symbol!r} is not in the alphabet {self.alphabet}.")

    def run(self, word: Sequence[str], state: Optional[int] = None) -> int:
        """ State reached after reading ``word``.
        """
        q = self.initial if state is None else state
        for symbol in word:
            q = self.transitions[q][self.symbol_index(symbol)]
        return q

    def accepts(self, word: Sequence[str]) -> bool:
        return self.run(word) in self.accepting

    def with_accepting(self, accepting) -> "Dfa":
        return Dfa(self.alphabet, self.num_states, self.transitions, self.initial, frozenset(accepting))


@dataclass(frozen=True)
class StateOutputDfa:
    """ A DFA whose run's final state outputs a non-negative integer (label id or cost).
    """

    dfa: Dfa
    outputs: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(int(v) for v in self.outputs))
        if len(self.outputs) != self.dfa.num_states:
            raise InvalidDfaError("Every state needs an output.")
        if any(v < 0 for v in self.outputs):
            raise InvalidDfaError("Outputs must be non-negative integers.")

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "StateOutputDfa":
        if "outputs" not in data:
            raise InvalidDfaError("State-output DFA needs an 'outputs' list.")
        return cls(Dfa.from_json(data), tuple(data["outputs"]))

    def to_json(self) -> Dict[str, Any]:
        data = self.dfa.to_json()
        data["outputs"] = list(self.outputs)
        return data

    @property
    def values(self) -> List[int]:
        """ Distinct output values in increasing order.
        """
        return sorted(set(self.outputs))

    def output(self, word: Sequence[str]) -> int:
        return self.outputs[self.dfa.run(word)]


@dataclass(frozen=True)
class WeightedDfa:
    """ A DFA with a non-negative integer weight per state.

    A word's cost is the initial state's weight plus the weight of every
    state entered, so a length-n word sums n+1 weights.
    """

    dfa: Dfa
    weights: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(v) for v in self.weights))
        if len(self.weights) != self.dfa.num_states:
            raise InvalidDfaError("Every state needs a weight.")
        if any(v < 0 for v in self.weights):
            raise InvalidDfaError("Weights must be non-negative integers.")

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "WeightedDfa":
        if "weights" not in data:
            raise InvalidDfaError("Weighted DFA needs a 'weights' list.")
        return cls(Dfa.from_json(data), tuple(data["weights"]))

    def to_json(self) -> Dict[str, Any]:
        data = self.dfa.to_json()
        data["weights"] = list(self.weights)
        return data

    @property
    def max_weight(self) -> int:
        return max(self.weights)

    def cost(self, word: Sequence[str]) -> int:
        q = self.dfa.initial
        total = self.weights[q]
        for symbol in word:
            q = self.dfa.transitions[q][self.dfa.symbol_index(symbol)]
            total += self.weights[q]
        return total


def explore(
    alphabet: Sequence[str],
    start: Hashable,
    step: Callable[[Hashable, str], Hashable],
    accept: Callable[[Hashable], bool],
) -> Tuple[Dfa, List[Hashable]]:
    """ Builds a DFA over the states reachable from ``start``.

    Args:
        alphabet: Symbols of the resulting DFA.
        start: Hashable key of the initial state.
        step: Successor key for a key and a symbol.
        accept: Whether a key is accepting.

    Returns:
        The DFA and the key of each state, indexed by state number.
    """
    index = {start: 0}
    keys = [start]
    rows = []
    queue = deque([start])
    while queue:
        key = queue.popleft()
        row = []
        for symbol in alphabet:
            target = step(key, symbol)
            if target not in index:
                index[target] = len(keys)
                keys.append(target)
                queue.append(target)
            row.append(index[target])
        rows.append(tuple(row))
    accepting = frozenset(i for i, key in enumerate(keys) if accept(key))
    return Dfa(tuple(alphabet), len(keys), tuple(rows), 0, accepting), keys


def _aligned(a: Dfa, b: Dfa) -> Tuple[int, ...]:
    """ Column of each of a's symbols in b's transition table.
    """
    if a.alphabet == b.alphabet:
        return tuple(range(len(a.alphabet)))
    if set(a.alphabet) != set(b.alphabet):
        raise AlphabetMismatchError(f"Alphabets differ: {a.alphabet} vs {b.alphabet}.")
    return tuple(b.alphabet.index(symbol) for symbol in a.alphabet)


def product_with_pairs(a: Dfa, b: Dfa) -> Tuple[Dfa, List[Tuple[int, int]]]:
    """ Reachable product of two DFAs plus the (a state, b state) pair of each product state.
    """
    columns = _aligned(a, b)
    index = {(a.initial, b.initial): 0}
    pairs = [(a.initial, b.initial)]
    rows = []
    queue = deque([(a.initial, b.initial)])
    while queue:
        p, q = queue.popleft()
        a_row = a.transitions[p]
        b_row = b.transitions[q]
        row = []
        for x, y in enumerate(columns):
            target = (a_row[x], b_row[y])
            if target not in index:
                index[target] = len(pairs)
                pairs.append(target)
                queue.append(target)
            row.append(index[target])
        rows.append(tuple(row))
    accepting = frozenset(i for i, (p, q) in enumerate(pairs) if p in a.accepting and q in b.accepting)
    logger.debug("Product of %d x %d states has %d reachable states.", a.num_states, b.num_states, len(pairs))
    return Dfa(a.alphabet, len(pairs), tuple(rows), 0, accepting), pairs


def product(a: Dfa, b: Dfa) -> Dfa:
    """ DFA for the intersection of two languages (reachable states only).

    Raises:
        AlphabetMismatchError: The alphabets are different sets.
    """
    return product_with_pairs(a, b)[0]


def count_table(d: Dfa, n: int) -> CountTable:
    """ Suffix-count table up to length n, memoized on the DFA.
    """
    cached = d._count_cache.get("table")
    if cached is not None and cached.max_length >= n:
        return cached

    accepting = d.accepting
    rows = list(cached.counts) if cached is not None else [tuple(1 if q in accepting else 0 for q in range(d.num_states))]
    transitions = d.transitions
    while len(rows) <= n:
        previous = rows[-1]
        rows.append(tuple(sum(previous[t] for t in transitions[q]) for q in range(d.num_states)))
    table = CountTable(tuple(rows))
    d._count_cache["table"] = table
    return table


def count_words(d: Dfa, m: int, n: int) -> Dict[int, int]:
    """ Exact number of accepted words of each length in m..n.
    """
    if not 0 <= m <= n:
        raise ValueError(f"Need 0 <= m <= n, got m={m}, n={n}.")
    table = count_table(d, n)
    return {length: table.count(d.initial, length) for length in range(m, n + 1)}


def total_words(d: Dfa, m: int, n: int) -> int:
    return sum(count_words(d, m, n).values())


def sample_uniform(
    d: Dfa, m: int, n: int, table: Optional[CountTable] = None, rng: Optional[random.Random] = None
) -> Word:
    """ Draws an accepted word of length m..n uniformly at random.

    A length is drawn in proportion to its word count, then each symbol in
    proportion to the accepted completions it leaves.

    Raises:
        EmptyLanguageError: No accepted word in the length range.
    """
    if table is None or table.max_length < n:
        table = count_table(d, n)
    if rng is None:
        rng = random.Random()

    lengths = list(range(m, n + 1))
    weights = [table.count(d.initial, s) for s in lengths]
    if sum(weights) == 0:
        raise EmptyLanguageError(f"No accepted word with length in {m}..{n}.")
    remaining = lengths[categorical_draw(rng, weights)]

    q = d.initial
    word = []
    while remaining > 0:
        successors = d.transitions[q]
        choice = categorical_draw(rng, [table.count(t, remaining - 1) for t in successors])
        word.append(d.alphabet[choice])
        q = successors[choice]
        remaining -= 1
    return tuple(word)


def word_probability(d: Dfa, m: int, n: int, word: Sequence[str], table: Optional[CountTable] = None) -> Fraction:
    """ Exact probability that :func:`sample_uniform` returns ``word``.

    Multiplies the length draw and every per-symbol draw the sampler makes.
    """
    if not m <= len(word) <= n:
        return Fraction(0)
    if table is None or table.max_length < n:
        table = count_table(d, n)
    total = sum(table.count(d.initial, s) for s in range(m, n + 1))
    if total == 0:
        return Fraction(0)

    probability = Fraction(table.count(d.initial, len(word)), total)
    q = d.initial
    remaining = len(word)
    for symbol in word:
        here = table.count(q, remaining)
        if here == 0:
            return Fraction(0)
        q = d.transitions[q][d.symbol_index(symbol)]
        remaining -= 1
        probability *= Fraction(table.count(q, remaining), here)
    return probability


def enumerate_words(d: Dfa, m: int, n: int) -> Iterator[Word]:
    """ Yields every accepted word of length m..n, shortest first.

    Only branches with accepted completions are visited.
    """
    table = count_table(d, n)

    def walk(q: int, remaining: int, prefix: List[str]):
        if remaining == 0:
            yield tuple(prefix)
            return
        for symbol, target in zip(d.alphabet, d.transitions[q]):
            if table.count(target, remaining - 1):
                prefix.append(symbol)
                yield from walk(target, remaining - 1, prefix)
                prefix.pop()

    for length in range(m, n + 1):
        if table.count(d.initial, length):
            yield from walk(d.initial, length, [])


def restrict_output(s: StateOutputDfa, value: int) -> Dfa:
    """ Keeps the accepting states whose output equals ``value``.

    Output DFAs usually accept everywhere, in which case the result accepts
    exactly the words whose final state outputs ``value``.
    """
    return s.dfa.with_accepting(q for q in s.dfa.accepting if s.outputs[q] == value)


def possible_costs(w: WeightedDfa, hard: Dfa, m: int, n: int) -> List[int]:
    """ Sorted costs of the hard-accepted words of length m..n.

    Dynamic program over the reachable product: the set of accumulated costs
    per product state and length, starting from the initial weight.
    """
    if not 0 <= m <= n:
        raise ValueError(f"Need 0 <= m <= n, got m={m}, n={n}.")
    joint, pairs = product_with_pairs(hard, w.dfa)
    weights = [w.weights[q] for _, q in pairs]

    found: Set[int] = set()
    current: Dict[int, Set[int]] = {joint.initial: {weights[joint.initial]}}
    for length in range(n + 1):
        if length >= m:
            for q, costs in current.items():
                if q in joint.accepting:
                    found.update(costs)
        if length == n:
            break
        following: Dict[int, Set[int]] = {}
        for q, costs in current.items():
            for target in set(joint.transitions[q]):
                bucket = following.setdefault(target, set())
                bucket.update(c + weights[target] for c in costs)
        current = following
    return sorted(found)


def cost_tracking_dfa(w: WeightedDfa, k: int) -> Dfa:
    """ DFA accepting the words of ``w`` whose cost is exactly k.

    States pair an original state with the accumulated cost saturated at
    k+1, which stands for "more than k".
    """
    if k < 0:
        raise ValueError("Cost must be non-negative.")
    cap = k + 1
    base = w.dfa

    def step(key, symbol):
        q, acc = key
        target = base.transitions[q][base.symbol_index(symbol)]
        return target, min(acc + w.weights[target], cap)

    def accept(key):
        q, acc = key
        return q in base.accepting and acc == k

    start = (base.initial, min(w.weights[base.initial], cap))
    dfa, keys = explore(base.alphabet, start, step, accept)
    logger.debug("Cost-tracking DFA for cost %d has %d states.", k, len(keys))
    return dfa
