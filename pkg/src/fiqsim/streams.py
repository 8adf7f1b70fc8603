"""Seeded, splittable random streams.

Every ensemble member draws from its own counter-based (Philox) stream keyed
by ``(master, run_index)``, so results do not depend on execution order.
The fixture sequence for golden tests is ``seed_stream(0, 0)``.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def seed_stream(master: int, run_index: int = 0) -> np.random.Generator:
    if not 0 <= master <= MASK64:
        raise ValueError("master seed must be a 64-bit unsigned integer, got %r" % master)
    if run_index < 0:
        raise ValueError("run_index must be non-negative")
    seq = np.random.SeedSequence(master, spawn_key=(run_index,))
    return np.random.Generator(np.random.Philox(seq))


def ensemble_streams(master: int, n: int, start: int = 0):
    for i in range(start, start + n):
        yield seed_stream(master, i)
