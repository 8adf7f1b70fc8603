"""Evolutions of indeterminate states.

* ``bernoulli_shift``: the doubling map x -> 2x mod 1 acting on FIQ digits,
  which moves unknown digits towards the front (indeterminacy amplification).
* free particle on [0, l] with elastic walls, velocity known to an interval.
* cell permutations of a grid distribution, the discrete stand-in for
  Liouville flow.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .fiq import FiqState

NORM_TOL = 1e-12


def bernoulli_shift(s: FiqState, steps: int) -> FiqState:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    n = len(s.determined)
    if steps <= n:
        return FiqState(s.determined[steps:], s.biased)
    return FiqState((), s.biased[steps - n :])


def spread_width(dv0: float, t: float, length: float) -> float:
    """Position indeterminacy after time ``t``: t*dv0, saturating at ``length``."""
    if dv0 < 0 or t < 0 or length <= 0:
        raise ValueError("need dv0 >= 0, t >= 0, length > 0")
    return min(t * dv0, length)


def critical_time(length: float, dv0: float) -> float:
    if dv0 == 0:
        raise ValueError("deterministic velocity: no finite critical time")
    if dv0 < 0 or length <= 0:
        raise ValueError("need dv0 > 0 and length > 0")
    return length / dv0


@dataclass(frozen=True)
class ParticleState:
    """Particle on the segment [0, length], position and velocity as intervals.

    ``diameter`` is the particle's own size; it sets the localization scale of
    a position measurement but walls act on the centre.
    """

    position: tuple[float, float]
    velocity: tuple[float, float]
    length: float = 1.0
    diameter: float = 0.0

    def __post_init__(self):
        x_lo, x_hi = self.position
        v_lo, v_hi = self.velocity
        if self.length <= 0:
            raise ValueError("segment length must be positive")
        if not 0 <= x_lo <= x_hi <= self.length:
            raise ValueError("position interval must satisfy 0 <= lo <= hi <= length")
        if v_lo > v_hi:
            raise ValueError("velocity interval reversed")
        if self.diameter < 0:
            raise ValueError("diameter must be non-negative")

    @property
    def position_width(self) -> float:
        return self.position[1] - self.position[0]

    @property
    def velocity_width(self) -> float:
        return self.velocity[1] - self.velocity[0]


def _fold(u: float, length: float) -> tuple[float, int]:
    """Triangle-wave fold onto [0, length]; also returns the reflection parity."""
    period = 2.0 * length
    r = math.fmod(u, period)
    if r < 0:
        r += period
    if r <= length:
        return r, 0
    return period - r, 1


def _contains_multiple(lo: float, hi: float, step: float, offset: float) -> bool:
    # any offset + k*step inside [lo, hi]
    k = math.ceil((lo - offset) / step)
    return offset + k * step <= hi


def evolve_particle(s: ParticleState, t: float) -> ParticleState:
    """Transport the state for time ``t`` with elastic reflections.

    The unfolded position set is [x_lo + v_lo t, x_hi + v_hi t]; its folded
    image is an interval whose ends reach 0 (or ``length``) whenever the
    unfolded set crosses an even (odd) multiple of the length.  The velocity
    interval keeps its width and magnitude and is mirrored according to the
    reflection parity of the central trajectory.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    ell = s.length
    u_lo = s.position[0] + s.velocity[0] * t
    u_hi = s.position[1] + s.velocity[1] * t
    f_lo, _ = _fold(u_lo, ell)
    f_hi, _ = _fold(u_hi, ell)
    lo, hi = min(f_lo, f_hi), max(f_lo, f_hi)
    if _contains_multiple(u_lo, u_hi, 2 * ell, 0.0):
        lo = 0.0
    if _contains_multiple(u_lo, u_hi, 2 * ell, ell):
        hi = ell
    _, parity = _fold(0.5 * (u_lo + u_hi), ell)
    v_lo, v_hi = s.velocity
    velocity = (v_lo, v_hi) if parity == 0 else (-v_hi, -v_lo)
    return ParticleState((lo, hi), velocity, ell, s.diameter)


@dataclass(frozen=True)
class GridDistribution:
    """Normalized weights on a finite grid; ``shape`` lists the factor grids."""

    weights: np.ndarray
    shape: tuple[int, ...] = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        shape = tuple(self.shape) or (w.size,)
        if math.prod(shape) != w.size:
            raise ValueError("grid shape %r does not match %d weights" % (shape, w.size))
        if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if abs(math.fsum(w) - 1.0) > NORM_TOL:
            raise ValueError("weights sum to %r, not 1" % math.fsum(w))
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def delta(cls, n: int, cell: int) -> "GridDistribution":
        w = np.zeros(n)
        w[cell] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n: int) -> "GridDistribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, raw, shape=()) -> "GridDistribution":
        raw = np.asarray(raw, dtype=float)
        return cls(raw / math.fsum(raw.ravel()), shape)

    @property
    def size(self) -> int:
        return self.weights.size

    def to_json(self) -> str:
        return json.dumps({"grid": {"shape": list(self.shape)}, "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GridDistribution":
        data = json.loads(text)
        return cls(np.array(data["weights"], dtype=float), tuple(data["grid"]["shape"]))


def product(*factors: GridDistribution) -> GridDistribution:
    """Independent joint distribution of the factors (first factor slowest)."""
    w = reduce(np.multiply.outer, [f.weights for f in factors]).ravel()
    shape = sum((f.shape for f in factors), ())
    # outer products of normalized vectors can drift by a few ulp
    return GridDistribution(w / math.fsum(w), shape)


def is_permutation(perm: Sequence[int], n: int) -> bool:
    perm = np.asarray(perm)
    return perm.shape == (n,) and np.array_equal(np.sort(perm), np.arange(n))


def liouville_permute(p: GridDistribution, perm: Sequence[int]) -> GridDistribution:
    """Move the weight of cell ``i`` to cell ``perm[i]``."""
    if not is_permutation(perm, p.size):
        raise ValueError("not measure-preserving: cell map is not a bijection")
    w = np.empty_like(p.weights)
    w[np.asarray(perm)] = p.weights
    return GridDistribution(w, p.shape)


def push_forward(p: GridDistribution, cell_map: Sequence[int]) -> GridDistribution:
    """Image of ``p`` under an arbitrary cell map (merges allowed)."""
    cell_map = np.asarray(cell_map)
    if cell_map.shape != (p.size,) or cell_map.min() < 0 or cell_map.max() >= p.size:
        raise ValueError("cell map must send every cell into the grid")
    w = np.zeros(p.size)
    np.add.at(w, cell_map, p.weights)
    return GridDistribution(w, p.shape)
