"""Finite-information quantities.

A FIQ is a binary fraction whose digits carry propensities instead of fixed
values: a determined prefix (propensities exactly 0 or 1), a finite biased
zone (propensities strictly between 0 and 1) and an implicit tail of fair
digits (propensity 1/2).  Propensities are exact rationals; entropy and
information are evaluated in floating point only when reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

MAX_DENOMINATOR = 10**9
HALF = Fraction(1, 2)

Propensity = Fraction


def propensity(value, max_denominator: int = MAX_DENOMINATOR) -> Fraction:
    """Coerce ``value`` to an exact propensity in [0, 1].

    Floats are converted exactly (``Fraction(0.1)`` is not 1/10), so pass
    strings such as ``"1/10"`` or ``Fraction`` objects when the rational
    value matters.
    """
    if isinstance(value, float):
        raise TypeError("propensities must be exact rationals, got float %r" % value)
    q = Fraction(value)
    if not 0 <= q <= 1:
        raise ValueError("propensity %s outside [0, 1]" % q)
    if q.denominator > max_denominator:
        raise ValueError(
            "propensity %s has denominator above the maximum %d" % (q, max_denominator)
        )
    return q


def binary_entropy(q) -> float:
    """Binary entropy of ``q`` in bits, with 0 log 0 = 0."""
    q = Fraction(q)
    if q == 0 or q == 1:
        return 0.0
    p = float(q)
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def info_content(q) -> float:
    """Information carried by one digit of propensity ``q``: 1 - H(q) bits."""
    q = Fraction(q)
    if q == HALF:
        return 0.0
    return 1.0 - binary_entropy(q)


@dataclass(frozen=True)
class InfoReport:
    per_bit: tuple[float, ...]
    total: float


@dataclass(frozen=True)
class FiqState:
    """Immutable FIQ in canonical form.

    Leading biased entries equal to 0 or 1 are promoted into the determined
    prefix and trailing 1/2 entries are dropped into the implicit tail, so
    two states describing the same propensity list compare equal.
    """

    determined: tuple[int, ...] = ()
    biased: tuple[Fraction, ...] = ()

    def __post_init__(self):
        bits = tuple(int(b) for b in self.determined)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("determined digits must be 0 or 1, got %r" % (self.determined,))
        qs = [propensity(q) for q in self.biased]
        while qs and qs[0] in (0, 1):
            bits += (int(qs.pop(0)),)
        while qs and qs[-1] == HALF:
            qs.pop()
        for q in qs:
            if q in (0, 1):
                raise ValueError(
                    "determined digit inside the biased zone; actualize digits in order"
                )
        object.__setattr__(self, "determined", bits)
        object.__setattr__(self, "biased", tuple(qs))

    @classmethod
    def from_propensities(cls, qs: Iterable) -> "FiqState":
        return cls((), tuple(qs))

    @classmethod
    def parse(cls, text: str) -> "FiqState":
        """Parse the canonical ``prefix=101;biased=2/3,1/4;`` form."""
        fields = {}
        for part in text.strip().split(";"):
            if not part.strip():
                continue
            key, sep, value = part.partition("=")
            if not sep or key.strip() not in ("prefix", "biased"):
                raise ValueError("malformed FIQ field %r in %r" % (part, text))
            fields[key.strip()] = value.strip()
        prefix = fields.get("prefix", "")
        if any(c not in "01" for c in prefix):
            raise ValueError("prefix must be a string of 0/1 digits, got %r" % prefix)
        biased = fields.get("biased", "")
        qs = [propensity(Fraction(tok.strip())) for tok in biased.split(",") if tok.strip()]
        return cls(tuple(int(c) for c in prefix), tuple(qs))

    def __str__(self) -> str:
        prefix = "".join(str(b) for b in self.determined)
        biased = ",".join("%d/%d" % (q.numerator, q.denominator) for q in self.biased)
        return "prefix=%s;biased=%s;" % (prefix, biased)

    @property
    def n_determined(self) -> int:
        return len(self.determined)

    @property
    def depth(self) -> int:
        """Index M after which every digit is fair."""
        return len(self.determined) + len(self.biased)

    def propensity_at(self, j: int) -> Fraction:
        """Propensity of the digit at zero-based position ``j``."""
        if j < 0:
            raise IndexError(j)
        n = len(self.determined)
        if j < n:
            return Fraction(self.determined[j])
        if j < n + len(self.biased):
            return self.biased[j - n]
        return HALF

    def propensities(self, length: int) -> list[Fraction]:
        return [self.propensity_at(j) for j in range(length)]


def total_information(s: FiqState) -> InfoReport:
    per_bit = tuple([1.0] * len(s.determined) + [info_content(q) for q in s.biased])
    return InfoReport(per_bit=per_bit, total=math.fsum(per_bit))


def to_interval(s: FiqState) -> tuple[Fraction, Fraction]:
    """Dyadic interval [lo, hi) fixed by the determined prefix."""
    lo = Fraction(0)
    for j, b in enumerate(s.determined, start=1):
        if b:
            lo += Fraction(1, 2**j)
    return lo, lo + Fraction(1, 2 ** len(s.determined))


def states_identical(a: FiqState, b: FiqState) -> bool:
    # Pure states are propensity lists: a biased digit is never the same
    # state as a mixture of its actualized outcomes.
    return a.determined == b.determined and a.biased == b.biased


def sample_bit(q, rng: np.random.Generator) -> int:
    """Return 1 with probability exactly ``q``.

    Draws a uniform integer below the denominator, so the event probability
    is the rational itself rather than a float approximation of it.
    """
    q = Fraction(q)
    return int(rng.integers(q.denominator) < q.numerator)


def sample_bits(qs: Sequence, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` independent rows of digits, column ``j`` with propensity ``qs[j]``."""
    out = np.empty((n, len(qs)), dtype=np.int8)
    for j, q in enumerate(qs):
        q = Fraction(q)
        out[:, j] = rng.integers(q.denominator, size=n) < q.numerator
    return out
