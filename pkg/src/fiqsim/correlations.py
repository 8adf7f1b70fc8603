"""Nonlocal correlations without signalling.

Covers the single-particle branch collapse, the correlated pair whose
relative distance is sharper than either position, the nonsignalling
harness, and CHSH estimation for local strategies.

Indeterminacies of the pair are stored as widths ``delta = sqrt(12) * sigma``
(the width of a uniform distribution with standard deviation ``sigma``), so
the variance identity db**2 = da**2 + dl**2 reads the same for widths and
for standard deviations.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .fiq import propensity, sample_bit

SQRT12 = math.sqrt(12.0)
FAMILIES = ("uniform", "gaussian")


@dataclass(frozen=True)
class BranchedPosition:
    left: tuple[float, float]
    right: tuple[float, float]
    p_left: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "p_left", propensity(self.p_left))
        if not (self.left[0] <= self.left[1] < self.right[0] <= self.right[1]):
            raise ValueError("branches must be ordered, disjoint intervals")

    @property
    def p_right(self) -> Fraction:
        return 1 - self.p_left


def collapse_branch(s: BranchedPosition, rng: np.random.Generator) -> BranchedPosition:
    """Actualize the branch: the chosen side gets propensity 1, the other 0."""
    return replace(s, p_left=Fraction(sample_bit(s.p_left, rng)))


@dataclass(frozen=True)
class CorrelatedPair:
    """Two positions whose difference b - a is constrained to l0 +- delta_l / 2.

    ``reference`` names the side whose indeterminacy was set directly (by
    construction or the latest local actualization); the other side obeys
    other**2 = reference**2 + delta_l**2.
    """

    a_center: float
    b_center: float
    delta_a: float
    delta_b: float
    delta_l: float
    reference: str = "A"

    @property
    def l0(self) -> float:
        return self.b_center - self.a_center

    def identity_residual(self) -> float:
        if self.reference == "A":
            return self.delta_b**2 - self.delta_a**2 - self.delta_l**2
        return self.delta_a**2 - self.delta_b**2 - self.delta_l**2


def make_pair(a_center: float, b_center: float, delta_a: float, delta_l: float) -> CorrelatedPair:
    if delta_a <= 0 or delta_l < 0:
        raise ValueError("need delta_a > 0 and delta_l >= 0")
    if delta_l >= delta_a:
        raise ValueError("outside the correlated regime delta_l < min(delta_a, delta_b)")
    return CorrelatedPair(a_center, b_center, delta_a, math.hypot(delta_a, delta_l), delta_l, "A")


def actualize_local(pair: CorrelatedPair, side: str, rng: np.random.Generator) -> CorrelatedPair:
    """Halve one side's indeterminacy and update the other through the identity.

    The actualized particle lands in the lower or upper half of its interval
    with propensity 1/2 each; the partner's centre follows at fixed l0.
    """
    if side not in ("A", "B"):
        raise ValueError("side must be 'A' or 'B'")
    width = pair.delta_a if side == "A" else pair.delta_b
    new_width = width / 2
    # the regime delta_l < width is required of the state being actualized
    if pair.delta_l >= width:
        raise ValueError("regime exhausted: further halving breaks delta_l < delta_%s"
                         % side.lower())
    shift = width / 4 if sample_bit(Fraction(1, 2), rng) else -width / 4
    other = math.hypot(new_width, pair.delta_l)
    l0 = pair.l0
    if side == "A":
        a = pair.a_center + shift
        return CorrelatedPair(a, a + l0, new_width, other, pair.delta_l, "A")
    b = pair.b_center + shift
    return CorrelatedPair(b - l0, b, other, new_width, pair.delta_l, "B")


def _noise(rng, width: float, n: int, family: str) -> np.ndarray:
    if family == "uniform":
        return rng.uniform(-width / 2, width / 2, size=n)
    if family == "gaussian":
        return rng.normal(0.0, width / SQRT12, size=n)
    raise ValueError("unknown family %r, expected one of %s" % (family, FAMILIES))


def sample_joint(pair: CorrelatedPair, n: int, rng: np.random.Generator,
                 family: str = "uniform") -> tuple[np.ndarray, np.ndarray]:
    """Draw (a, b) from p(a, b) = rho_a(a) * rho_l(b - a) around the pair's centres."""
    a = pair.a_center + _noise(rng, pair.delta_a, n, family)
    b = a + pair.l0 + _noise(rng, pair.delta_l, n, family)
    return a, b


@dataclass(frozen=True)
class VarianceCheck:
    family: str
    var_a: float
    var_l: float
    var_b: float
    rel_error: float


def variance_oracle(pair: CorrelatedPair, n: int, rng: np.random.Generator,
                    family: str = "uniform") -> VarianceCheck:
    """Empirical Var(b) against Var(a) + Var(l) from joint samples."""
    a, b = sample_joint(pair, n, rng, family)
    var_a, var_l, var_b = float(np.var(a)), float(np.var(b - a)), float(np.var(b))
    return VarianceCheck(family, var_a, var_l, var_b, abs(var_b - (var_a + var_l)) / var_b)


@dataclass(frozen=True)
class SignalingReport:
    tvd: float
    threshold: float
    passed: bool
    bins: int
    n_trials: int

    def to_json(self) -> str:
        return json.dumps({"tvd": self.tvd, "threshold": self.threshold, "pass": self.passed})


def _b_samples(pair: CorrelatedPair, n: int, rng, actualize: bool, signal_shift: float):
    a_center = np.full(n, pair.a_center)
    delta_a = pair.delta_a
    if actualize:
        # vectorized actualize_local(pair, "A"): pick a half of A's interval
        upper = rng.integers(2, size=n)
        a_center = a_center + np.where(upper == 1, delta_a / 4, -delta_a / 4)
        delta_a = delta_a / 2
    a = a_center + rng.uniform(-delta_a / 2, delta_a / 2, size=n)
    b = a + pair.l0 + rng.uniform(-pair.delta_l / 2, pair.delta_l / 2, size=n)
    if actualize and signal_shift:
        b = b + signal_shift
    return b


def nonsignaling_test(pair: CorrelatedPair, n_trials: int, rng: np.random.Generator,
                      signal_shift: float = 0.0) -> SignalingReport:
    """Compare Bob's coarse-grained marginal with and without Alice actualizing.

    Positions are binned at resolution delta_b / 8 over Bob's support, with
    one overflow bin on each side.  ``signal_shift`` builds a mutant that
    moves Bob's particle whenever Alice measures; it exists to check that
    the harness can fail.
    """
    if n_trials < 10_000:
        raise ValueError("nonsignaling test needs at least 10^4 trials")
    if pair.delta_l >= pair.delta_a:
        raise ValueError("regime exhausted: Alice cannot actualize with delta_l >= delta_a")
    half_support = (pair.delta_a + pair.delta_l) / 2
    width = pair.delta_b / 8
    k = math.ceil(2 * half_support / width)
    edges = pair.b_center - half_support + width * np.arange(k + 1)
    edges = np.concatenate(([-np.inf], edges, [np.inf]))
    free = np.histogram(_b_samples(pair, n_trials, rng, False, 0.0), edges)[0]
    measured = np.histogram(_b_samples(pair, n_trials, rng, True, signal_shift), edges)[0]
    tvd = 0.5 * float(np.abs(free - measured).sum()) / n_trials
    bins = len(edges) - 1
    threshold = 5 * math.sqrt(bins / n_trials)
    return SignalingReport(tvd, threshold, tvd <= threshold, bins, n_trials)


# ---------------------------------------------------------------- CHSH

CHSH_SIGNS = {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}


@dataclass(frozen=True)
class ResponseTable:
    """Behaviour p(a, b | x, y) with outcomes a, b in {+1, -1}, 16 entries."""

    probs: tuple[tuple[int, int, int, int, Fraction], ...]

    @classmethod
    def from_functions(cls, alice: Callable[[int], int],
                       bob: Callable[[int, int], int]) -> "ResponseTable":
        """Deterministic table; ``bob`` receives both settings so mutants can cheat."""
        rows = []
        for x, y, a, b in itertools.product((0, 1), (0, 1), (1, -1), (1, -1)):
            hit = alice(x) == a and bob(x, y) == b
            rows.append((x, y, a, b, Fraction(int(hit))))
        return cls(tuple(rows))

    @classmethod
    def deterministic(cls, a0: int, a1: int, b0: int, b1: int) -> "ResponseTable":
        a, b = (a0, a1), (b0, b1)
        return cls.from_functions(lambda x: a[x], lambda x, y: b[y])

    @classmethod
    def mixture(cls, tables: Sequence["ResponseTable"], weights: Sequence) -> "ResponseTable":
        weights = [Fraction(w) for w in weights]
        if sum(weights) != 1 or any(w < 0 for w in weights):
            raise ValueError("mixture weights must be a probability vector")
        rows = []
        for i, (x, y, a, b, _) in enumerate(tables[0].probs):
            p = sum((w * t.probs[i][4] for t, w in zip(tables, weights)), Fraction(0))
            rows.append((x, y, a, b, p))
        return cls(tuple(rows))

    def correlator(self, x: int, y: int) -> Fraction:
        return sum((a * b * p for xx, yy, a, b, p in self.probs if (xx, yy) == (x, y)),
                   Fraction(0))

    def chsh(self) -> Fraction:
        return sum((s * self.correlator(x, y) for (x, y), s in CHSH_SIGNS.items()), Fraction(0))

    def to_json(self) -> str:
        entries = [{"x": x, "y": y, "a": a, "b": b, "p": str(p)} for x, y, a, b, p in self.probs]
        return json.dumps({"entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "ResponseTable":
        entries = json.loads(text)["entries"]
        if len(entries) != 16:
            raise ValueError("a CHSH response table has 16 entries, got %d" % len(entries))
        return cls(tuple((e["x"], e["y"], e["a"], e["b"], Fraction(e["p"])) for e in entries))


def deterministic_tables() -> list[ResponseTable]:
    return [ResponseTable.deterministic(*signs)
            for signs in itertools.product((1, -1), repeat=4)]


def chsh_max_deterministic() -> Fraction:
    """Largest |S| over all 16 deterministic local response tables."""
    return max(abs(t.chsh()) for t in deterministic_tables())


@dataclass(frozen=True)
class ChshStrategy:
    """Local strategy: each party sees only its own setting and the shared state.

    ``source`` draws the shared classical state from a random stream; remote
    settings and remote propensities are never passed to a response function.
    """

    alice: Callable[[int, Any], int]
    bob: Callable[[int, Any], int]
    source: Callable[[np.random.Generator], Any]

    @classmethod
    def from_table(cls, table_signs: Sequence[int]) -> "ChshStrategy":
        a0, a1, b0, b1 = table_signs
        return cls(lambda x, lam: (a0, a1)[x], lambda y, lam: (b0, b1)[y], lambda rng: None)

    @classmethod
    def shared_mixture(cls, signs: Sequence[Sequence[int]], weights: Sequence[float]) -> "ChshStrategy":
        """Shared randomness picks one deterministic table per round."""
        signs = [tuple(s) for s in signs]
        cdf = np.cumsum(np.asarray(weights, dtype=float))
        cdf /= cdf[-1]
        return cls(lambda x, lam: lam[x], lambda y, lam: lam[2 + y],
                   lambda rng: signs[min(int(np.searchsorted(cdf, rng.random(), "right")),
                                         len(signs) - 1)])


@dataclass(frozen=True)
class ChshEstimate:
    value: float
    stderr: float
    correlators: dict

    def __float__(self) -> float:
        return self.value


def chsh_value(strategy: ChshStrategy, n_trials: int, rng: np.random.Generator) -> ChshEstimate:
    """Monte Carlo S = E00 + E01 + E10 - E11 with uniform i.i.d. settings."""
    products: dict[tuple[int, int], list[int]] = {k: [] for k in CHSH_SIGNS}
    xs = rng.integers(2, size=n_trials)
    ys = rng.integers(2, size=n_trials)
    for x, y in zip(xs.tolist(), ys.tolist()):
        lam = strategy.source(rng)
        a, b = strategy.alice(x, lam), strategy.bob(y, lam)
        if a not in (1, -1) or b not in (1, -1):
            raise ValueError("responses must be +1 or -1")
        products[(x, y)].append(a * b)
    s, var = 0.0, 0.0
    corr = {}
    for key, sign in CHSH_SIGNS.items():
        vals = np.asarray(products[key], dtype=float)
        if vals.size < 2:
            raise ValueError("too few trials to estimate every correlator")
        corr["%d%d" % key] = float(vals.mean())
        s += sign * vals.mean()
        var += vals.var(ddof=1) / vals.size
    return ChshEstimate(float(s), math.sqrt(var), corr)
