"""Kullback-Leibler bookkeeping behind classical no-cloning.

K(P1, P2) is conserved by measure-preserving maps.  A cloner would send
machine x system x register from P^m P^s P^r to Q^m P^s P^s for every system
state, so K would have to grow by K(Qm1, Qm2) + K(P1s, P2s), which is
positive unless the two system states coincide.  Distributions with disjoint
support have K = +inf on both sides, and the conservation law no longer
forbids copying them.

KL values here are in nats; ``fiq`` reports information in bits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dynamics import GridDistribution, liouville_permute, product, push_forward
from .fiq import FiqState

INF = math.inf
CONSERVATION_TOL = 1e-12
MAX_FIQ_DEPTH = 16


def _check_grid(p1: GridDistribution, p2: GridDistribution):
    if p1.shape != p2.shape:
        raise ValueError("grid mismatch: %r vs %r" % (p1.shape, p2.shape))


def kl_divergence(p1: GridDistribution, p2: GridDistribution) -> float:
    """Sum of p1 ln(p1/p2) over cells where p1 > 0; ``math.inf`` on support mismatch."""
    _check_grid(p1, p2)
    w1, w2 = p1.weights, p2.weights
    live = w1 > 0
    if np.any(w2[live] == 0):
        return INF
    terms = w1[live] * np.log(w1[live] / w2[live])
    # fsum is order independent, so permuted grids give bit-identical K
    return max(math.fsum(terms.tolist()), 0.0)


def kl_product_additivity(p1: GridDistribution, p2: GridDistribution,
                          shared: GridDistribution) -> tuple[float, float]:
    """Return (K(p1 x shared, p2 x shared), K(p1, p2)); a shared factor cancels."""
    _check_grid(p1, p2)
    return kl_divergence(product(p1, shared), product(p2, shared)), kl_divergence(p1, p2)


def _same(k1: float, k2: float) -> bool:
    if math.isinf(k1) or math.isinf(k2):
        return k1 == k2
    return abs(k1 - k2) < CONSERVATION_TOL


def conservation_check(cell_map: Sequence[int], p1: GridDistribution, p2: GridDistribution,
                       strict: bool = True) -> bool:
    """Is K(p1, p2) unchanged by mapping both distributions through ``cell_map``?

    With ``strict`` the map must be a bijection (a ``ValueError`` otherwise);
    ``strict=False`` pushes weight through any map, which is how merging
    mutants are shown to break conservation.
    """
    if strict:
        q1, q2 = liouville_permute(p1, cell_map), liouville_permute(p2, cell_map)
    else:
        q1, q2 = push_forward(p1, cell_map), push_forward(p2, cell_map)
    return _same(kl_divergence(p1, p2), kl_divergence(q1, q2))


@dataclass(frozen=True)
class TripartiteDistribution:
    machine: GridDistribution
    system: GridDistribution
    register: GridDistribution

    def joint(self) -> GridDistribution:
        return product(self.machine, self.system, self.register)


@dataclass(frozen=True)
class CloneReport:
    k_initial: float
    k_final_required: float
    deficit: float
    clonable: bool

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else v  # noqa: E731
        return {"k_initial": enc(self.k_initial), "k_final_required": enc(self.k_final_required),
                "deficit": enc(self.deficit), "clonable": self.clonable}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def clone_deficit(p1s: GridDistribution, p2s: GridDistribution,
                  qm1: GridDistribution, qm2: GridDistribution) -> CloneReport:
    """Conservation balance for a would-be cloner.

    Initially machine and register are the same for both inputs and add
    nothing to K; after cloning the machine, system and register factors
    contribute K(qm1, qm2) + 2 K(p1s, p2s).
    """
    k_sys = kl_divergence(p1s, p2s)
    k_machine = kl_divergence(qm1, qm2)
    k_initial = k_sys
    k_final = k_machine + 2 * k_sys
    deficit = k_machine + k_sys
    if math.isinf(k_initial):
        clonable = True
    else:
        clonable = deficit < CONSERVATION_TOL
    return CloneReport(k_initial, k_final, deficit, clonable)


def fiq_distribution(s: FiqState, depth: int) -> GridDistribution:
    """Weights of the 2**depth digit patterns, first digit most significant."""
    if not 0 <= depth <= MAX_FIQ_DEPTH:
        raise ValueError("depth overflow: %d not in [0, %d]" % (depth, MAX_FIQ_DEPTH))
    w = np.ones(1)
    for q in s.propensities(depth):
        q = Fraction(q)
        w = np.multiply.outer(w, [float(1 - q), float(q)]).ravel()
    return GridDistribution(w)


def fiq_clone_deficit(s1: FiqState, s2: FiqState, depth: int) -> CloneReport:
    machine = GridDistribution.delta(1, 0)
    return clone_deficit(fiq_distribution(s1, depth), fiq_distribution(s2, depth),
                         machine, machine)
