import numpy as np
import pytest
from hypothesis import given, strategies as st

from nhmart.errors import ExponentError, LatticeMismatch
from nhmart.experiments import gen_bmo_divergent
from nhmart.gspace import (CoefSequence, bmoq_norm, carleson_operator, conjugate,
                           coordinate_projection, embedding_test, flatten, ginf_norm, gpq_norm,
                           pairing)
from nhmart.lattice import from_parents, uniform_radic
from nhmart.mfunc import StepFunction, constant, decompose, hpq_norm, indicator, MartDecomp
from nhmart.opnorm import indicator_lower, norm_2, norm_p

import randgen

seeds = st.integers(0, 2 ** 32 - 1)
HALVES = uniform_radic(2, 1)


def seq(lat, entries):
    return CoefSequence(lat, entries)


def ones(lat):
    return CoefSequence.from_dense(lat, np.ones(lat.n))


def test_flatten_examples():
    s = flatten(decompose(StepFunction(HALVES, np.array([1.0, 3.0]))))
    assert s.entries == {0: 2.0, 1: -1.0, 2: 1.0}
    c = flatten(decompose(constant(uniform_radic(2, 2), 4.0)))
    assert c.entries.keys() == {0} and c.entries[0] == pytest.approx(4.0)
    assert len(flatten(MartDecomp(HALVES, np.zeros(3)))) == 0


def test_gpq_examples():
    root = from_parents([None], [1.0])
    for p, q in [(1, 1), (2, 3), (4, 2)]:
        assert gpq_norm(seq(root, {0: 2.0}), p, q) == pytest.approx(2.0)
    assert gpq_norm(seq(HALVES, {0: 1.0, 1: 1.0}), 2, 2) == pytest.approx(np.sqrt(1.5))
    assert gpq_norm(seq(HALVES, {}), 2, 2) == 0.0
    with pytest.raises(ExponentError):
        gpq_norm(seq(HALVES, {0: 1.0}), 0.5, 2)


@given(seeds, st.sampled_from([1.0, 2.0, 3.0]), st.sampled_from([1.0, 2.0, 4.0]))
def test_gpq_agrees_with_hpq(seed, p, q):
    _, f, _ = randgen.case(seed)
    d = decompose(f)
    assert gpq_norm(flatten(d), p, q) == pytest.approx(hpq_norm(d, p, q), rel=1e-12)


def test_ginf_examples():
    assert ginf_norm(seq(HALVES, {0: 1.0}), 2, 1) == pytest.approx(1.0)
    for D in range(5):
        assert ginf_norm(ones(uniform_radic(2, D)), 2, 2) == pytest.approx(np.sqrt(D + 1))
    with pytest.raises(ExponentError):
        ginf_norm(seq(HALVES, {0: 1.0}), 2, 0)


@given(seeds)
def test_ginf_monotone_in_r(seed):
    lat, rng = randgen.lattice(seed)
    s = CoefSequence.from_dense(lat, rng.standard_normal(lat.n))
    vals = [ginf_norm(s, 2.0, r) for r in (1.0, 1.5, 2.0, 4.0)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_coordinate_projection():
    s = ones(uniform_radic(2, 2))
    assert coordinate_projection(s, lambda i: i % 2 == 0).entries.keys() == {0, 2, 4, 6}


def test_pairing_examples():
    root = from_parents([None], [1.0])
    assert pairing(seq(root, {0: 1.0}), seq(root, {0: 1.0})) == 1.0
    assert pairing(seq(HALVES, {1: 3.0}), seq(HALVES, {2: 5.0})) == 0.0
    assert pairing(ones(HALVES), ones(HALVES)) == pytest.approx(2.0)
    with pytest.raises(LatticeMismatch):
        pairing(ones(HALVES), ones(uniform_radic(2, 1)))


@given(seeds, st.sampled_from([1.5, 2.0, 3.0]))
def test_duality_inequality(seed, q):
    lat, rng = randgen.lattice(seed)
    f = CoefSequence.from_dense(lat, rng.standard_normal(lat.n))
    g = CoefSequence.from_dense(lat, rng.standard_normal(lat.n))
    g = CoefSequence.from_dense(lat, g.dense() / ginf_norm(g, conjugate(q), 1.0))
    assert abs(pairing(f, g)) <= 4 * gpq_norm(f, 1.0, q) + 1e-9


def test_bmo_examples():
    first, second = bmoq_norm(decompose(StepFunction(HALVES, np.array([1.0, -1.0]))), 2, 2)
    assert first == pytest.approx(1.0) and second == pytest.approx(1.0)
    _, d = gen_bmo_divergent(10)
    first, second = bmoq_norm(d, 2, 2)
    assert first <= np.sqrt(2) and second == 1.0
    assert bmoq_norm(MartDecomp(HALVES, np.zeros(3)), 2, 2) == (0.0, 0.0)


def test_carleson_operator_examples():
    lat = uniform_radic(2, 2)
    rng = np.random.default_rng(0)
    f = StepFunction(lat, rng.standard_normal(lat.n_leaves))
    A = carleson_operator(seq(lat, {0: 1.0}))
    assert A(f) == pytest.approx([f.values.mean()])
    alpha = ones(lat)
    A = carleson_operator(alpha)
    np.testing.assert_allclose(A(f), lat.averages(f.values), rtol=1e-13)
    g = carleson_operator(CoefSequence.from_dense(lat, np.arange(1.0, lat.n + 1)))(indicator(lat, 1))
    for J in lat.subtree(1):
        assert g[J] == pytest.approx(J + 1.0)


def test_embedding_examples():
    lat = uniform_radic(2, 3)
    rep = embedding_test(seq(lat, {0: 1.0}), 2, 2)
    assert rep.K == pytest.approx(1.0) and rep.estimate == pytest.approx(1.0)
    rep = embedding_test(ones(lat), 2, 2)
    assert rep.K == pytest.approx(2.0)
    assert 2.0 - 1e-9 <= rep.estimate <= 4.0
    leaf = int(lat.leaves[3])
    rep = embedding_test(seq(lat, {leaf: -2.5}), 3, 2)
    assert rep.estimate == pytest.approx(2.5)


@given(seeds, st.sampled_from([(2.0, 2.0), (3.0, 2.0), (1.5, 2.0), (2.0, 3.0)]))
def test_carleson_constant_is_lower_bound(seed, pq):
    p, q = pq
    lat, rng = randgen.lattice(seed, max_depth=5, max_nodes=60)
    alpha = CoefSequence.from_dense(lat, rng.standard_normal(lat.n) * (rng.random(lat.n) < 0.6))
    K = ginf_norm(alpha, q, q)
    A = carleson_operator(alpha)
    assert K <= indicator_lower(A, p, q) * (1 + 1e-12) + 1e-15
    if p == q == 2:
        assert norm_2(A) <= 2 * K + 1e-6
