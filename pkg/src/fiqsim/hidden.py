"""Deterministic completion of FIQs by (truncated) real numbers.

A completion fixes every digit of a FIQ up to ``D`` by sampling its
propensities once; afterwards evolution consumes no randomness.  The
equivalence oracle checks that completing-then-evolving and
evolving-then-measuring give the same statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actualization import sample_prefixes
from .dynamics import bernoulli_shift
from .fiq import FiqState, sample_bit, sample_bits

MAX_COMPLETION_DIGITS = 64


@dataclass(frozen=True)
class Completion:
    digits: tuple[int, ...]
    source: FiqState

    def __post_init__(self):
        n = self.source.n_determined
        if len(self.digits) < n or self.digits[:n] != self.source.determined:
            raise ValueError("completion disagrees with the determined prefix of its source")


def _check_digits(s: FiqState, D: int):
    if D > MAX_COMPLETION_DIGITS:
        raise ValueError("completion length %d exceeds %d digits" % (D, MAX_COMPLETION_DIGITS))
    if D < s.n_determined:
        raise ValueError("completion shorter than the determined prefix")


def complete(s: FiqState, D: int, rng: np.random.Generator) -> Completion:
    _check_digits(s, D)
    n = s.n_determined
    digits = s.determined + tuple(sample_bit(s.propensity_at(j), rng) for j in range(n, D))
    return Completion(digits, s)


def complete_many(s: FiqState, D: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent completions as an (n, D) digit array."""
    _check_digits(s, D)
    return sample_bits(s.propensities(D), n, rng)


def deterministic_evolve(c: Completion, steps: int) -> Completion:
    """Shift map on the completed digits; the source shifts along with them."""
    if not 0 <= steps <= len(c.digits):
        raise ValueError("steps must lie in [0, %d]" % len(c.digits))
    return Completion(c.digits[steps:], bernoulli_shift(c.source, steps))


@dataclass(frozen=True)
class EquivalenceReport:
    tvd: float
    threshold: float
    passed: bool
    completed_freqs: tuple[float, ...]
    measured_freqs: tuple[float, ...]


def _pattern_counts(bits: np.ndarray) -> np.ndarray:
    k = bits.shape[1]
    codes = bits.astype(np.int64) @ (1 << np.arange(k - 1, -1, -1, dtype=np.int64))
    return np.bincount(codes, minlength=2**k)


def equivalence_oracle(s: FiqState, steps: int, D: int, n: int, rng: np.random.Generator,
                       k: int = 1) -> EquivalenceReport:
    """Compare the first ``k`` digits after ``steps`` shifts along both routes.

    Route 1 completes ``s`` to ``D`` digits and shifts deterministically;
    route 2 shifts the FIQ itself and measures the leading digits.  Passes
    when the total variation distance is at most 5 sqrt(2**k / n).
    """
    if n < 10_000:
        raise ValueError("equivalence oracle needs n >= 10^4")
    if k < 1 or steps < 0 or steps + k > D:
        raise ValueError("need k >= 1 and steps + k <= D")
    _check_digits(s, D)
    completed = complete_many(s, D, n, rng)[:, steps : steps + k]
    measured = sample_prefixes(bernoulli_shift(s, steps), k, n, rng)
    f1 = _pattern_counts(completed) / n
    f2 = _pattern_counts(measured) / n
    tvd = 0.5 * float(np.abs(f1 - f2).sum())
    threshold = 5 * math.sqrt(2**k / n)
    return EquivalenceReport(tvd, threshold, tvd <= threshold, tuple(f1.tolist()), tuple(f2.tolist()))
