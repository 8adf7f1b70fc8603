"""Actualization of propensities.

Each policy turns indeterminate digits into determined ones in a different
way: an apparatus cut at a fixed depth, Poisson-timed spontaneous jumps,
branching into every outcome, or conditioning on an observed prefix.  The
classical Wigner's friend scenario compares the friend's post-measurement
state with the description held outside the isolated box.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .fiq import FiqState, sample_bit, sample_bits

MAX_MEASURE_DEPTH = 64
MAX_BRANCH_DEPTH = 20

POLICY_KINDS = ("apparatus_cut", "spontaneous_jump", "branch_all", "bayesian_update")


def measure(s: FiqState, depth: int, rng: np.random.Generator,
            max_depth: int = MAX_MEASURE_DEPTH) -> FiqState:
    """Actualize every digit up to position ``depth`` by sampling it.

    Digits already determined are left alone, so a depth at or below the
    current prefix returns ``s`` itself.
    """
    if depth > max_depth:
        raise ValueError("measurement depth %d exceeds maximum %d" % (depth, max_depth))
    n = s.n_determined
    if depth <= n:
        return s
    new_bits = tuple(sample_bit(s.propensity_at(j), rng) for j in range(n, depth))
    return FiqState(s.determined + new_bits, s.biased[depth - n :])


def apparatus_measure(system: FiqState, apparatus_depth: int, rng: np.random.Generator,
                      max_depth: int = MAX_MEASURE_DEPTH) -> FiqState:
    """Copenhagen-style cut: the system is determined down to the apparatus's own level."""
    if apparatus_depth < 0:
        raise ValueError("apparatus depth must be non-negative")
    return measure(system, apparatus_depth, rng, max_depth)


def spontaneous_process(s: FiqState, rate: float, duration: float, rng: np.random.Generator,
                        max_depth: int = MAX_MEASURE_DEPTH) -> tuple[FiqState, list[float]]:
    """Poisson jumps of intensity ``rate`` on [0, duration], one digit per jump.

    Jumps past ``max_depth`` determined digits are still reported but no
    longer actualize anything.
    """
    if rate < 0 or duration < 0:
        raise ValueError("rate and duration must be non-negative")
    times: list[float] = []
    if rate > 0:
        t = rng.exponential(1.0 / rate)
        while t <= duration:
            times.append(float(t))
            t += rng.exponential(1.0 / rate)
    depth = min(s.n_determined + len(times), max(max_depth, s.n_determined))
    return measure(s, depth, rng, max_depth), times


@dataclass(frozen=True)
class BranchSet:
    branches: tuple[tuple[FiqState, Fraction], ...]

    @property
    def weights(self) -> list[Fraction]:
        return [w for _, w in self.branches]

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def outcome_weights(self, depth: int) -> dict[tuple[int, ...], Fraction]:
        return {st.determined[:depth]: w for st, w in self.branches}

    def marginals(self, length: int) -> list[Fraction]:
        """Weight-averaged propensity of each of the first ``length`` digits."""
        return [sum((w * st.propensity_at(j) for st, w in self.branches), Fraction(0))
                for j in range(length)]


def enumerate_branches(s: FiqState, depth: int,
                       max_depth: int = MAX_BRANCH_DEPTH) -> BranchSet:
    """Every outcome of actualizing digits up to ``depth``, with exact weights.

    Branches of zero weight never actualize and are omitted.
    """
    if depth > max_depth:
        raise ValueError("enumeration depth %d exceeds maximum %d" % (depth, max_depth))
    n = s.n_determined
    if depth <= n:
        return BranchSet(((s, Fraction(1)),))
    qs = [s.propensity_at(j) for j in range(n, depth)]
    branches = []
    for bits in itertools.product((0, 1), repeat=len(qs)):
        w = Fraction(1)
        for b, q in zip(bits, qs):
            w *= q if b else 1 - q
        if w:
            branches.append((FiqState(s.determined + bits, s.biased[depth - n :]), w))
    return BranchSet(tuple(branches))


def bayesian_update(s: FiqState, observed: Sequence[int]) -> FiqState:
    """Condition ``s`` on having observed its leading digits."""
    observed = tuple(int(b) for b in observed)
    for j, b in enumerate(observed):
        q = s.propensity_at(j)
        if (b == 1 and q == 0) or (b == 0 and q == 1):
            raise ValueError("zero-propensity event observed at digit %d" % j)
    n = s.n_determined
    if len(observed) <= n:
        return s
    return FiqState(observed, s.biased[len(observed) - n :])


@dataclass(frozen=True)
class ActualizationPolicy:
    """One interpretation's actualization mechanism.

    ``depth`` is the apparatus depth for ``apparatus_cut``, the enumeration
    depth for ``branch_all`` and the observed depth for ``bayesian_update``.
    """

    kind: str
    depth: int = 0
    rate: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError("unknown policy %r, expected one of %s" % (self.kind, POLICY_KINDS))
        if self.depth < 0 or self.rate < 0 or self.duration < 0:
            raise ValueError("policy parameters must be non-negative")

    def apply(self, s: FiqState, rng: np.random.Generator) -> FiqState | BranchSet:
        if self.kind == "apparatus_cut":
            return apparatus_measure(s, self.depth, rng)
        if self.kind == "spontaneous_jump":
            return spontaneous_process(s, self.rate, self.duration, rng)[0]
        if self.kind == "branch_all":
            return enumerate_branches(s, self.depth)
        # the agent's observation is itself drawn from the world's propensities
        seen = measure(s, self.depth, rng).determined[: self.depth]
        return bayesian_update(s, seen)


@dataclass(frozen=True)
class WignerScenario:
    inside_state: FiqState
    outside_state: FiqState
    box_isolated: bool = True


def wigner_friend_run(s: FiqState, friend_depth: int, rng: np.random.Generator,
                      box_isolated: bool = True) -> WignerScenario:
    """Friend measures inside the box; Wigner outside keeps the unmeasured state."""
    if not box_isolated:
        raise ValueError("the Wigner's friend scenario requires an isolated box")
    return WignerScenario(measure(s, friend_depth, rng), s, True)


def sample_prefixes(s: FiqState, depth: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent measurements of the first ``depth`` digits, as an (n, depth) array."""
    return sample_bits(s.propensities(depth), n, rng)
