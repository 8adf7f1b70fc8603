import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fiqsim import FiqState, seed_stream
from fiqsim.dynamics import GridDistribution as G, product
from fiqsim.nocloning import (CloneReport, TripartiteDistribution, clone_deficit,
                              conservation_check, fiq_clone_deficit, fiq_distribution,
                              kl_divergence, kl_product_additivity)


def _brute_kl(w1, w2):
    total = 0.0
    for a, b in zip(w1, w2):
        if a > 0:
            if b == 0:
                return math.inf
            total += a * math.log(a / b)
    return total


@st.composite
def distributions(draw, n=5):
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    return G.normalized(raw)


def test_kl_examples():
    p = G([0.5, 0.5])
    assert kl_divergence(p, p) == 0.0
    # mpmath: 0.143841036225890463719609502997
    assert kl_divergence(p, G([0.25, 0.75])) == pytest.approx(0.143841036225890, abs=1e-12)
    assert kl_divergence(G.delta(2, 0), G.delta(2, 1)) == math.inf
    with pytest.raises(ValueError, match="grid mismatch"):
        kl_divergence(G([1.0]), G([0.5, 0.5]))


@given(distributions(), distributions())
def test_gibbs_inequality(p1, p2):
    k = kl_divergence(p1, p2)
    assert k >= 0
    assert k == pytest.approx(_brute_kl(p1.weights, p2.weights), abs=1e-12)
    if np.allclose(p1.weights, p2.weights, atol=0, rtol=0):
        assert k == 0
    elif k <= 1e-12:
        assert np.allclose(p1.weights, p2.weights, atol=1e-5)


@pytest.mark.parametrize("shared", [G.uniform(4), G.delta(3, 1), G([0.1, 0.2, 0.7])])
def test_product_additivity(shared):
    rng = seed_stream(13, 0)
    for _ in range(50):
        p1 = G.normalized(rng.dirichlet(np.ones(6)))
        p2 = G.normalized(rng.dirichlet(np.ones(6)))
        joint, direct = kl_product_additivity(p1, p2, shared)
        assert abs(joint - direct) < 1e-12
        assert joint == pytest.approx(_brute_kl(product(p1, shared).weights,
                                                product(p2, shared).weights), abs=1e-12)
    p = G([0.3, 0.7])
    assert kl_product_additivity(p, p, G.uniform(2)) == (0.0, 0.0)


def test_conservation_identity_and_random():
    p1, p2 = G([0.2, 0.3, 0.5]), G([0.6, 0.3, 0.1])
    assert conservation_check([0, 1, 2], p1, p2)
    rng = seed_stream(14, 0)
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        q1 = G.normalized(rng.dirichlet(np.ones(n)))
        q2 = G.normalized(rng.dirichlet(np.ones(n)))
        assert conservation_check(rng.permutation(n), q1, q2)


def test_conservation_infinite_case():
    assert conservation_check([1, 0], G.delta(2, 0), G.delta(2, 1))


def test_merge_mutant_breaks_conservation():
    p1, p2 = G([0.2, 0.3, 0.5]), G([0.6, 0.3, 0.1])
    with pytest.raises(ValueError, match="not measure-preserving"):
        conservation_check([0, 0, 2], p1, p2)
    assert not conservation_check([0, 0, 2], p1, p2, strict=False)


def test_conservation_composes():
    rng = seed_stream(15, 0)
    p1 = G.normalized(rng.dirichlet(np.ones(8)))
    p2 = G.normalized(rng.dirichlet(np.ones(8)))
    a, b = rng.permutation(8), rng.permutation(8)
    composed = b[a]
    assert conservation_check(a, p1, p2) and conservation_check(b, p1, p2)
    assert conservation_check(composed, p1, p2)


def test_clone_deficit_examples():
    p = G([0.5, 0.5])
    assert clone_deficit(p, p, G.uniform(3), G.uniform(3)).clonable
    q = G.uniform(3)
    rep = clone_deficit(G([0.5, 0.5]), G([0.25, 0.75]), q, q)
    assert rep.deficit == pytest.approx(0.143841036225890, abs=1e-12)
    assert not rep.clonable
    delta = clone_deficit(G.delta(4, 0), G.delta(4, 2), q, G.delta(3, 0))
    assert delta.clonable and math.isinf(delta.k_initial)
    assert json.loads(delta.to_json())["k_initial"] == "inf"


def test_clone_accounting_matches_joint_grids():
    # oracle: build the tripartite joint distributions before and after cloning
    rng = seed_stream(16, 0)
    for _ in range(20):
        p1s = G.normalized(rng.dirichlet(np.ones(3)))
        p2s = G.normalized(rng.dirichlet(np.ones(3)))
        m0, r0 = G.normalized(rng.dirichlet(np.ones(2))), G.delta(3, 0)
        qm1 = G.normalized(rng.dirichlet(np.ones(2)))
        qm2 = G.normalized(rng.dirichlet(np.ones(2)))
        before1 = TripartiteDistribution(m0, p1s, r0).joint()
        before2 = TripartiteDistribution(m0, p2s, r0).joint()
        after1 = TripartiteDistribution(qm1, p1s, p1s).joint()
        after2 = TripartiteDistribution(qm2, p2s, p2s).joint()
        rep = clone_deficit(p1s, p2s, qm1, qm2)
        assert rep.k_initial == pytest.approx(kl_divergence(before1, before2), abs=1e-12)
        assert rep.k_final_required == pytest.approx(kl_divergence(after1, after2), abs=1e-12)
        assert rep.deficit == pytest.approx(rep.k_final_required - rep.k_initial, abs=1e-12)


@settings(max_examples=200)
@given(distributions(), distributions(), distributions(3), distributions(3))
def test_deficit_positive_for_distinct_states(p1, p2, q1, q2):
    rep = clone_deficit(p1, p2, q1, q2)
    k = kl_divergence(p1, p2)
    assert rep.deficit >= k
    if k > 1e-12:
        assert rep.deficit > 0 and not rep.clonable
    assert clone_deficit(p2, p1, q1, q2).clonable == rep.clonable


def test_fiq_distribution():
    w = fiq_distribution(FiqState((1,), (F(1, 4),)), 2).weights
    assert w.tolist() == [0.0, 0.0, 0.75, 0.25]
    with pytest.raises(ValueError, match="depth overflow"):
        fiq_distribution(FiqState(), 17)


def test_fiq_clone_examples():
    s = FiqState((), (F(2, 3),))
    assert fiq_clone_deficit(s, s, 3).clonable
    rep = fiq_clone_deficit(s, FiqState((), (F(1, 3),)), 1)
    # (1/3) ln 2, mpmath: 0.231049060186648436472410707153
    assert rep.deficit == pytest.approx(0.231049060186648, abs=1e-12)
    assert not rep.clonable
    assert fiq_clone_deficit(FiqState((0,)), FiqState((1,)), 1).clonable


def test_clone_report_fields():
    rep = CloneReport(0.1, 0.3, 0.2, False)
    assert rep.to_dict() == {"k_initial": 0.1, "k_final_required": 0.3, "deficit": 0.2,
                             "clonable": False}
