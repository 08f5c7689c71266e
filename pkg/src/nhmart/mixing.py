"""Non-degeneracy certificates for martingale transforms.

For a target interval I with parent I' the quantity to maximize is
(T_{I'} h)(I) = a·v over child-value vectors v of h with v_I = 0, zero
weighted mean and ‖h‖_p ≤ 1, where a is the row of the block belonging to I.

Without a cap this is a dual-norm computation: the maximum equals
min_t ‖a − t·m‖_* over the coordinates other than I, a convex problem in one
variable whose minimizer also yields the witness. With the cap
|v_j| ≤ C the same multiplier t is found by bisection; each inner box+ball
problem has a closed form via sorted breakpoints. If that optimum sits strictly
inside the p-ball, the answer is the largest level a·v whose slice of the
polytope {m·v = 0, |v| ≤ C} still reaches ‖h‖_p = 1. Polytope vertices decide
feasibility exactly and seed a bisection on that level.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoBlock, NoParent
from .gspace import conjugate
from .lattice import Lattice
from .mfunc import StepFunction
from .paraprod import TransformBlocks

NORM_TOL = 1e-12
MAX_ENUM = 14


@dataclass(frozen=True, eq=False)
class MixingCert:
    node: int
    parent: int
    p: float
    K: float | None
    small: bool
    epsilon_nocap: float
    epsilon_cap: float
    witness_nocap: StepFunction
    witness_cap: StepFunction | None
    feasible: bool

    def nondegenerate(self, eps: float) -> bool:
        return self.feasible and self.epsilon_cap >= eps


def _wnorm(v, m, p):
    return float(np.sum(m * np.abs(v) ** p) ** (1.0 / p))


def _uncapped(a, m, p):
    """Maximize a·v over {m·v = 0, Σ m|v|^p ≤ 1}; returns v (zeros when the maximum is 0)."""
    k = len(a)
    if k < 2:
        return np.zeros(k)
    ratios = a / m
    lo, hi = ratios.min(), ratios.max()
    if hi - lo <= 1e-15 * max(abs(hi), abs(lo), 1e-300):
        # the functional vanishes on the subspace: any unit vector is optimal
        v = np.zeros(k)
        v[0], v[1] = m[1], -m[0]
        return v / _wnorm(v, m, p)
    e = conjugate(p) - 1.0

    def vec(t):
        c = a - t * m
        return np.sign(c) * (np.abs(c) / m) ** e

    t = brentq(lambda t: float(m @ vec(t)), lo, hi, xtol=1e-15 * max(abs(lo), abs(hi)), rtol=1e-15,
               maxiter=500)
    v = vec(t)
    v -= (m @ v) / m.sum()                 # remove the root-finding residue
    return v / _wnorm(v, m, p)


def _box_ball_argmax(c, m, p, cap):
    """argmax c·v over {Σ m|v|^p ≤ 1, |v| ≤ cap} (separable).

    With multiplier λ the optimum is v_j = sign(c_j)·min(cap, (|c_j|/(λ m_j))^{1/(p-1)}).
    Coordinate j sits at the cap iff λ ≤ |c_j|/(m_j cap^{p-1}); between consecutive
    breakpoints the norm equation is solved in closed form.
    """
    at_cap = np.sign(c) * cap
    if _wnorm(at_cap, m, p) <= 1.0:
        return at_cap
    pc = conjugate(p)
    active = np.flatnonzero(c)
    ca, ma = np.abs(c[active]), m[active]
    breaks = ca / (ma * cap ** (p - 1.0))
    order = np.argsort(-breaks)
    capped_mass = np.concatenate([[0.0], np.cumsum(ma[order] * cap ** p)])
    weight = ma * (ca / ma) ** pc
    free_weight = np.concatenate([np.cumsum(weight[order][::-1])[::-1], [0.0]])
    hi_edge = np.concatenate([[np.inf], breaks[order]])
    lo_edge = np.concatenate([breaks[order], [0.0]])
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (free_weight / (1.0 - capped_mass)) ** (1.0 / pc)
    ok = (capped_mass < 1.0) & (free_weight > 0) & (lam <= hi_edge * (1 + 1e-12)) & (lam >= lo_edge * (1 - 1e-12))
    j = int(np.flatnonzero(ok)[0])
    v = np.zeros_like(c)
    v[active] = np.sign(c[active]) * np.minimum(cap, (ca / (lam[j] * ma)) ** (1.0 / (p - 1.0)))
    return v


def _capped_relaxation(a, m, p, cap):
    """Maximize a·v over {m·v = 0, Σ m|v|^p ≤ 1, |v_j| ≤ cap}."""
    k = len(a)
    if k < 2:
        return np.zeros(k)
    ratios = a / m
    t_lo, t_hi = ratios.min(), ratios.max()
    if t_hi - t_lo <= 1e-15 * max(abs(t_hi), abs(t_lo), 1e-300):
        return np.zeros(k)
    # at the bracket ends every coefficient has one sign; clip rounding residue that says otherwise
    v_lo = _box_ball_argmax(np.maximum(a - t_lo * m, 0.0), m, p, cap)
    v_hi = _box_ball_argmax(np.minimum(a - t_hi * m, 0.0), m, p, cap)
    for _ in range(200):
        t = 0.5 * (t_lo + t_hi)
        if t in (t_lo, t_hi):
            break
        v = _box_ball_argmax(a - t * m, m, p, cap)
        s = m @ v
        if s > 0:
            t_lo, v_lo = t, v
        elif s < 0:
            t_hi, v_hi = t, v
        else:
            return v
    s_lo, s_hi = m @ v_lo, m @ v_hi
    if s_lo == s_hi:
        return v_lo
    theta = s_lo / (s_lo - s_hi)
    return (1 - theta) * v_lo + theta * v_hi


def _slice_vertices(a, m, cap, level):
    """Vertices of {m·v = 0, a·v = level, |v_j| ≤ cap}, one row per vertex."""
    k = len(a)
    out = []
    for basic in itertools.combinations(range(k), 2):
        basic = list(basic)
        rest = [j for j in range(k) if j not in basic]
        M = np.array([m[basic], a[basic]])
        if abs(np.linalg.det(M)) < 1e-14 * (np.abs(M).max() ** 2 + 1e-300):
            continue
        R = cap * np.array(list(itertools.product((-1.0, 1.0), repeat=len(rest)))).reshape(-1, len(rest))
        rhs = np.stack([-(R @ m[rest]), level - R @ a[rest]])
        vb = np.linalg.solve(M, rhs).T
        ok = np.all(np.abs(vb) <= cap * (1 + 1e-12), axis=1)
        V = np.zeros((int(ok.sum()), k))
        V[:, rest] = R[ok]
        V[:, basic] = np.clip(vb[ok], -cap, cap)
        out.append(V)
    return np.vstack(out) if out else np.zeros((0, k))


def _to_sphere(v, target, m, p):
    """Point on the segment v→target with unit norm (norm(v) < 1 <= norm(target))."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _wnorm(v + mid * (target - v), m, p) < 1.0:
            lo = mid
        else:
            hi = mid
    return v + hi * (target - v)


def _polytope_vertices(m, cap):
    """Vertices of {m·v = 0, |v_j| ≤ cap}: all coordinates but one at ±cap."""
    k = len(m)
    out = []
    for j in range(k):
        rest = [i for i in range(k) if i != j]
        for signs in itertools.product((-1.0, 1.0), repeat=k - 1):
            v = np.zeros(k)
            v[rest] = cap * np.array(signs)
            v[j] = -(m[rest] @ v[rest]) / m[j]
            if abs(v[j]) <= cap * (1 + 1e-12):
                v[j] = np.clip(v[j], -cap, cap)
                out.append(v)
    return out


def _far_vertex(a, m, p, cap, level):
    verts = _slice_vertices(a, m, cap, level)
    if not len(verts):
        return None
    norms = np.sum(m * np.abs(verts) ** p, axis=1)
    best = int(np.argmax(norms))
    return verts[best] if norms[best] >= 1.0 else None


def _capped(a, m, p, cap):
    """Best v on the unit sphere inside the box, or None when none exists."""
    v = _capped_relaxation(a, m, p, cap)
    if abs(_wnorm(v, m, p) - 1.0) <= NORM_TOL:
        return v
    if len(a) > MAX_ENUM or len(a) < 2:
        return None
    best = float(a @ v)
    # the sphere meets the box iff some vertex reaches norm 1; such a vertex certifies its level
    certified = []
    for x in _polytope_vertices(m, cap):
        if _wnorm(x, m, p) >= 1.0:
            x = x if a @ x >= 0 else -x
            certified.append((min(float(a @ x), best), x))
    if not certified:
        return None
    level, far = max(certified, key=lambda t: t[0])
    upper = None
    for grid in np.linspace(best, 0.0, 257):
        if grid <= level:
            break
        cand = _far_vertex(a, m, p, cap, grid)
        if cand is not None:
            level, far = grid, cand
            break
        upper = grid
    if upper is not None:
        for _ in range(60):
            mid = 0.5 * (level + upper)
            cand = _far_vertex(a, m, p, cap, mid)
            if cand is None:
                upper = mid
            else:
                level, far = mid, cand
    start = v * (level / best) if best > 0 else np.zeros_like(v)
    return _to_sphere(start, far, m, p)


def _witness(lat: Lattice, parent: int, v_children: np.ndarray) -> StepFunction:
    vals = np.zeros(lat.n_leaves)
    for child, val in zip(lat.children[parent], v_children):
        vals[lat.leaf_slice(child)] = val
    return StepFunction(lat, vals)


def nondegeneracy_cert(T: TransformBlocks, node: int, p: float, K: float | None = None) -> MixingCert:
    lat = T.lattice
    node = lat.check_node(node)
    par = int(lat.parent[node])
    if par < 0:
        raise NoParent(f"node {node} is a root")
    if par not in T.blocks:
        raise NoBlock(f"parent {par} of node {node} carries no block")
    block = T.blocks[par]
    kids = lat.children[par]
    i = int(np.flatnonzero(kids == node)[0])
    free = np.array([j for j in range(len(kids)) if j != i], dtype=np.int64)
    m = lat.measure[kids]
    a = block[i]

    def full(v_free):
        v = np.zeros(len(kids))
        v[free] = v_free
        return v

    def score(v):
        return float(lat.measure[node] ** (1.0 / p) * abs(block[i] @ v))

    v0 = full(_uncapped(a[free], m[free], p))
    eps0 = score(v0)
    small = K is not None and lat.measure[node] < lat.measure[par] / K
    if len(free) < 2:
        # only h = 0 vanishes on the target and has zero mean
        w0 = _witness(lat, par, v0)
        return MixingCert(node, par, p, K, small, 0.0, 0.0, w0, None, False)
    if not small:
        w0 = _witness(lat, par, v0)
        return MixingCert(node, par, p, K, False, eps0, eps0, w0, w0, True)
    cap = K * lat.measure[par] ** (-1.0 / p)
    if np.max(np.abs(v0)) <= cap:
        w0 = _witness(lat, par, v0)
        return MixingCert(node, par, p, K, True, eps0, eps0, w0, w0, True)
    vc = _capped(a[free], m[free], p, cap)
    if vc is None:
        return MixingCert(node, par, p, K, True, eps0, 0.0, _witness(lat, par, v0), None, False)
    vc = full(vc)
    return MixingCert(node, par, p, K, True, eps0, score(vc), _witness(lat, par, v0),
                      _witness(lat, par, vc), True)


@dataclass(frozen=True)
class Verdict:
    node: int
    eps_T: float
    eps_adjoint: float
    forward: bool
    adjoint: bool


@dataclass
class Classification:
    p: float
    eps: float
    K: float
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def strong(self) -> bool:
        return all(v.forward for v in self.verdicts)

    @property
    def weak(self) -> bool:
        return all(v.forward or v.adjoint for v in self.verdicts)

    @property
    def failing(self) -> list[int]:
        return [v.node for v in self.verdicts if not v.forward]

    @property
    def failing_weak(self) -> list[int]:
        return [v.node for v in self.verdicts if not (v.forward or v.adjoint)]


def _safe_cert(T, node, p, K):
    try:
        return nondegeneracy_cert(T, node, p, K)
    except NoBlock:
        return None


def classify(T: TransformBlocks, p: float, eps: float, K: float) -> Classification:
    lat = T.lattice
    star = T.adjoint()
    pc = conjugate(p)
    out = Classification(p, eps, K)
    for node in range(lat.n):
        if lat.parent[node] < 0:
            continue
        c1 = _safe_cert(T, node, p, K)
        c2 = _safe_cert(star, node, pc, K)
        e1 = c1.epsilon_cap if c1 and c1.feasible else 0.0
        e2 = c2.epsilon_cap if c2 and c2.feasible else 0.0
        out.verdicts.append(Verdict(node, e1, e2, bool(c1 and c1.nondegenerate(eps)),
                                    bool(c2 and c2.nondegenerate(eps))))
    return out
