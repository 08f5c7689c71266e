import numpy as np
import pytest
from hypothesis import given, strategies as st

from nhmart.errors import NoBlock, NoParent
from nhmart.experiments import block_measures, mixing_layout, swap_block
from nhmart.lattice import from_parents, uniform_radic
from nhmart.mfunc import lp_norm, weighted_lp
from nhmart.mixing import classify, nondegeneracy_cert
from nhmart.paraprod import TransformBlocks, transform_operator

import randgen

seeds = st.integers(0, 2 ** 32 - 1)


def eight(delta):
    m = block_measures(1.0, delta)
    lat = from_parents([None] + [0] * 8, [1.0] + list(m))
    return lat, TransformBlocks(lat, {0: swap_block(m)})


def closed_form_p2(T, node):
    """|I|^{1/2} times the Euclidean norm of the row, restricted and projected in √m coordinates."""
    lat = T.lattice
    par = lat.parent[node]
    kids = lat.children[par]
    i = int(np.flatnonzero(kids == node)[0])
    free = np.arange(len(kids)) != i
    m = lat.measure[kids][free]
    a = T.blocks[par][i][free] / np.sqrt(m)
    u = np.sqrt(m) / np.linalg.norm(np.sqrt(m))
    return np.sqrt(lat.measure[node]) * np.linalg.norm(a - (a @ u) * u)


def test_identity_block_on_two_children():
    lat = uniform_radic(2, 1)
    c = nondegeneracy_cert(TransformBlocks(lat, {0: 1.0}), 1, 2.0)
    assert c.epsilon_nocap == 0.0 and c.epsilon_cap == 0.0


def test_swap_block_target_first_child():
    lat, T = eight(1.0)
    c = nondegeneracy_cert(T, 1, 2.0)
    assert c.epsilon_nocap == pytest.approx(2 ** -0.5, abs=1e-12)


def test_cap_lowers_epsilon_for_small_delta():
    lat, T = eight(1e-4)
    c = nondegeneracy_cert(T, 1, 2.0, K=10.0)
    assert c.small and c.feasible
    assert c.epsilon_cap < c.epsilon_nocap - 1e-3


def test_errors():
    lat = uniform_radic(2, 2)
    T = TransformBlocks(lat, {0: 1.0})
    with pytest.raises(NoParent):
        nondegeneracy_cert(T, 0, 2.0)
    with pytest.raises(NoBlock):
        nondegeneracy_cert(T, 3, 2.0)


def test_identity_transform_is_nowhere_mixing():
    lat = uniform_radic(2, 3)
    T = TransformBlocks(lat, {int(i): 1.0 for i in lat.internal})
    cl = classify(T, 2.0, 0.1, 10.0)
    assert all(v.eps_T == 0.0 and v.eps_adjoint == 0.0 for v in cl.verdicts)
    assert not cl.strong and not cl.weak


def test_swap_construction_strong_for_moderate_delta():
    lay = mixing_layout([0.25])
    assert classify(lay.T, 2.0, 0.5, 1e6).strong


def test_swap_construction_not_strong_for_tiny_delta():
    lay = mixing_layout([1e-4])
    cl = classify(lay.T, 2.0, 0.5, 10.0)
    assert not cl.strong
    small = set(lay.lattice.children[lay.hosts[0]][:4].tolist())
    assert small <= set(cl.failing)


def test_p2_matches_closed_form():
    worst = 0.0
    for seed in range(500):
        lat, rng = randgen.lattice(seed, max_depth=3, max_nodes=30, max_children=5)
        T = randgen.blocks(lat, rng)
        node = int(rng.integers(1, lat.n))
        c = nondegeneracy_cert(T, node, 2.0)
        worst = max(worst, abs(c.epsilon_nocap - closed_form_p2(T, node)))
    assert worst < 1e-8


@given(seeds, st.sampled_from([1.3, 2.0, 3.0, 5.0]), st.sampled_from([None, 1.5, 3.0, 10.0]))
def test_certificate_invariants(seed, p, K):
    lat, rng = randgen.lattice(seed, max_depth=3, max_nodes=30, max_children=6)
    T = randgen.blocks(lat, rng)
    node = int(rng.integers(1, lat.n))
    c = nondegeneracy_cert(T, node, p, K)
    assert c.epsilon_cap <= c.epsilon_nocap * (1 + 1e-9) + 1e-12
    op = transform_operator(T).matrix
    sl = lat.leaf_slice(node)
    for eps, h in ((c.epsilon_nocap, c.witness_nocap), (c.epsilon_cap, c.witness_cap)):
        if h is None or eps == 0.0:
            continue
        assert lp_norm(h, p) == pytest.approx(1.0, abs=1e-9)
        assert not np.any(h.values[sl])
        Th = op @ h.values
        assert weighted_lp(Th[sl], lat.w[sl], p) == pytest.approx(eps, rel=1e-8, abs=1e-12)
    if c.small and c.feasible and c.witness_cap is not None:
        cap = K * lat.measure[lat.parent[node]] ** (-1.0 / p)
        assert np.abs(c.witness_cap.values).max() <= cap * (1 + 1e-9)


def max_vertex_norm(m, cap, p):
    """Largest ‖v‖_p over vertices of {m·v = 0, |v| ≤ cap}, by direct enumeration."""
    import itertools
    k, best = len(m), 0.0
    for j in range(k):
        rest = [i for i in range(k) if i != j]
        for s in itertools.product((-1.0, 1.0), repeat=k - 1):
            v = np.zeros(k)
            v[rest] = cap * np.array(s)
            v[j] = -(m[rest] @ v[rest]) / m[j]
            if abs(v[j]) <= cap * (1 + 1e-12):
                best = max(best, weighted_lp(v, m, p))
    return best


def test_capped_regime_against_brute_force():
    rng = np.random.default_rng(99)
    for seed in range(80):
        lat, lrng = randgen.lattice(seed, max_depth=3, max_nodes=30, max_children=6)
        T = randgen.blocks(lat, lrng)
        node = int(lrng.integers(1, lat.n))
        par = lat.parent[node]
        kids = lat.children[par]
        free = kids != node
        m = lat.measure[kids][free]
        a = T.blocks[par][int(np.flatnonzero(~free)[0])][free]
        for p in (1.3, 2.0, 5.0):
            for K in (1.5, 3.0, 10.0):
                c = nondegeneracy_cert(T, node, p, K)
                if not c.small or len(m) < 2:
                    continue
                cap = K * lat.measure[par] ** (-1.0 / p)
                assert c.feasible == (max_vertex_norm(m, cap, p) >= 1.0)
                if not c.feasible:
                    continue
                X = rng.standard_normal((len(m), 4000))
                X -= np.outer(np.ones(len(m)), m @ X / m.sum())
                X /= weighted_lp(X, m, p)
                X = X[:, np.abs(X).max(axis=0) <= cap]
                if X.shape[1]:
                    found = lat.measure[node] ** (1 / p) * np.abs(a @ X).max()
                    assert found <= c.epsilon_cap * (1 + 1e-6)
