""" Shared helpers: exact rationals, big-integer randomness and formatting.
"""

import math
import os
import random
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import accumulate
from numbers import Rational
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

THREADS_ENV_VAR = "IMPROV_THREADS"

Word = Tuple[str, ...]
RationalLike = Union[Rational, int, str, float]


def to_fraction(value: RationalLike) -> Fraction:
    """ Converts a number or a "p/q" / decimal string to an exact Fraction.

    Floats are converted through their shortest repr, so ``0.1`` becomes
    exactly 1/10 rather than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("Booleans are not rationals.")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Cannot convert {value} to a rational.")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, dict) and "num" in value and "den" in value:
        return Fraction(int(value["num"]), int(value["den"]))
    raise TypeError(f"Cannot convert {value!r} to a rational.")


def fraction_to_json(value: Fraction) -> Dict[str, Any]:
    """ Exact JSON form of a rational plus a decimal approximation.
    """
    value = Fraction(value)
    return {"num": str(value.numerator), "den": str(value.denominator), "decimal": float(value)}


def fraction_to_text(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def log2_int(n: int) -> float:
    """ log2 of a non-negative big integer without overflowing floats.

    Uses the exact bit length plus a mantissa correction from the top 64 bits.
    """
    if n <= 0:
        raise ValueError("log2 is only defined for positive integers.")
    shift = n.bit_length() - 64
    if shift <= 0:
        return math.log2(n)
    return shift + math.log2(n >> shift)


def categorical_draw(rng: random.Random, weights: Sequence[int]) -> int:
    """ Draws an index with probability proportional to non-negative integer weights.

    The draw is exact: a uniform integer below the total weight is located in
    the cumulative sums, so arbitrarily large weights carry no rounding.
    """
    cumulative = list(accumulate(weights))
    if not cumulative or cumulative[-1] <= 0:
        raise ValueError("Cannot draw from an empty or all-zero weight vector.")
    ticket = rng.randrange(cumulative[-1])
    return bisect_right(cumulative, ticket)


def integer_weights(probabilities: Sequence[Fraction]) -> Tuple[int, ...]:
    """ Scales exact probabilities onto a common denominator.
    """
    denominator = 1
    for p in probabilities:
        denominator = denominator * Fraction(p).denominator // math.gcd(denominator, Fraction(p).denominator)
    return tuple(int(Fraction(p) * denominator) for p in probabilities)


def make_rng(seed: Optional[int] = None, stream: Optional[int] = None) -> random.Random:
    """ Seeded randomness source. A stream index derives independent,
    reproducible sub-streams from one seed (one per worker).
    """
    if seed is None:
        return random.Random()
    if stream is None:
        return random.Random(seed)
    return random.Random(f"{seed}/{stream}")


def thread_count(default: int = 1) -> int:
    """ Worker count from the IMPROV_THREADS environment variable.
    """
    raw = os.environ.get(THREADS_ENV_VAR)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}.")


def format_word(word: Sequence[str]) -> str:
    """ Concatenates single-character symbols, otherwise joins with spaces.
    """
    if all(len(symbol) == 1 for symbol in word):
        return "".join(word)
    return " ".join(word)


def parallel_samples(draw: Callable[[random.Random], Any], count: int, seed: Optional[int] = None, workers: Optional[int] = None) -> List[Any]:
    """ ``count`` draws split into contiguous chunks, one chunk per worker.

    Worker j draws from its own stream derived from (seed, j) and the chunks
    are joined in worker order, so a fixed seed and worker count always give
    the same sequence.
    """
    workers = max(1, min(workers or thread_count(), count or 1))
    base, extra = divmod(count, workers)
    chunks = [base + (1 if j < extra else 0) for j in range(workers)]

    def run(j):
        rng = make_rng(seed, j)
        return [draw(rng) for _ in range(chunks[j])]

    if workers == 1:
        return run(0)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run, range(workers)))
    return [sample for part in parts for sample in part]
