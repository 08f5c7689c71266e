"""Induced operator norms from weighted L^p on leaves.

Square operators are measured L^p → L^p. Family-valued operators are
measured L^p → L^p(ℓ^q), the codomain norm being the ġ_p^q-type mixed norm
of their rows.

For p = 2 (and q = 2) the norm is a weighted spectral norm, computed by
block power iteration with Rayleigh-Ritz extraction. Other exponents use a
Boyd-type iteration: x ← dual map of Aᵀ∇N(Ax). The ratio ‖Ax‖/‖x‖ never
decreases along it, but it can stall at a local maximum, so many starts are
run side by side and the best one is kept.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExponentError
from .gspace import cell_aggregate
from .linop import LinearOp
from .mfunc import StepFunction, weighted_lp

RAYLEIGH_TOL = 1e-12
STAGNATION_TOL = 1e-10
STAGNATION_WINDOW = 5


@dataclass(frozen=True)
class NormReport:
    lower_bound: float
    estimate: float
    witness: StepFunction
    restarts_used: int
    seed: int


class _Codomain:
    """Norm of the operator output and its Euclidean gradient, batched over columns."""

    def __init__(self, op: LinearOp, p: float, q: float | None):
        self.op, self.p = op, p
        lat = op.lattice
        if op.square:
            self.q = p
            self.out_w = lat.w
        else:
            self.q = 2.0 if q is None else float(q)
            self.out_w = lat.measure[op.cells]

    def value(self, Y: np.ndarray) -> np.ndarray:
        if self.op.square:
            return weighted_lp(Y, self.out_w, self.p)
        G = cell_aggregate(self.op.lattice, self.op.cells, Y, self.q)
        return weighted_lp(G ** (1.0 / self.q), self.op.lattice.w, self.p)

    def grad(self, Y: np.ndarray) -> np.ndarray:
        p, q = self.p, self.q
        norms = self.value(Y)
        safe = np.where(norms > 0, norms, 1.0)
        sgn = np.sign(Y) * np.abs(Y) ** (q - 1.0)
        if self.op.square:
            g = self.out_w[:, None] * sgn
        else:
            lat = self.op.lattice
            G = cell_aggregate(lat, self.op.cells, Y, q)
            with np.errstate(divide="ignore", invalid="ignore"):
                inner = np.where(G > 0, G ** (p / q - 1.0), 0.0)
            sums = lat.node_sums(lat.w[:, None] * inner)
            g = sums[self.op.cells] * sgn
        return g * safe ** (1.0 - p)


def _dual_map(Z: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    """Columns x maximizing ⟨x, z⟩ subject to Σ w|x|^p = 1."""
    X = np.sign(Z) * (np.abs(Z) / w[:, None]) ** (1.0 / (p - 1.0))
    norms = weighted_lp(X, w, p)
    return X / np.where(norms > 0, norms, 1.0)


def _normalize(X, w, p):
    norms = weighted_lp(X, w, p)
    keep = norms > 0
    return X[:, keep] / norms[keep]


def _spectral(op: LinearOp, seed: int = 0, block: int = 8, max_iter: int = 10_000):
    """Top singular value of the weighted matrix and the matching input vector."""
    lat = op.lattice
    w_in = lat.w
    w_out = op.lattice.w if op.square else lat.measure[op.cells]
    B = np.sqrt(w_out)[:, None] * op.matrix / np.sqrt(w_in)[None, :]
    n = B.shape[1]
    if not np.any(B):
        return 0.0, np.zeros(n)
    G = B.T @ B
    k = min(n, block)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    theta_prev = -np.inf
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(G @ Q)
        vals, vecs = np.linalg.eigh(Q.T @ G @ Q)
        theta = vals[-1]
        if abs(theta - theta_prev) <= RAYLEIGH_TOL * abs(theta) or k == n:
            break
        theta_prev = theta
    top = Q @ vecs[:, -1]
    return float(np.sqrt(max(theta, 0.0))), top / np.sqrt(w_in)


def norm_2(A: LinearOp) -> float:
    return _spectral(A)[0]


def _check_p(p):
    if not 1 < p < np.inf:
        raise ExponentError(f"p must lie in (1, inf), got {p}")


def _indicator_columns(op: LinearOp) -> np.ndarray:
    lat = op.lattice
    X = np.zeros((lat.n_leaves, lat.n))
    for node in range(lat.n):
        X[lat.leaf_slice(node), node] = 1.0
    return X


def _ratios(op, cod, X, p):
    num = cod.value(op.matrix @ X)
    den = weighted_lp(X, op.lattice.w, p)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def indicator_lower(A: LinearOp, p: float, q: float | None = None) -> float:
    cod = _Codomain(A, p, q)
    return float(np.max(_ratios(A, cod, _indicator_columns(A), p)))


def norm_p(A: LinearOp, p: float, restarts: int = 32, seed: int = 0,
           q: float | None = None, max_iter: int = 2000) -> NormReport:
    _check_p(p)
    lat = A.lattice
    w = lat.w
    if not np.any(A.matrix):
        return NormReport(0.0, 0.0, StepFunction(lat, np.zeros(lat.n_leaves)), 0, seed)
    cod = _Codomain(A, p, q)
    rng = np.random.default_rng(seed)
    starts = [rng.standard_normal((lat.n_leaves, restarts)), _indicator_columns(A)]
    if A.square or cod.q == 2.0:
        starts.append(_spectral(A, seed)[1][:, None])
    X = _normalize(np.hstack(starts), w, p)
    history = [cod.value(A.matrix @ X)]
    for it in range(max_iter):
        Y = A.matrix @ X
        Z = A.matrix.T @ cod.grad(Y)
        Xn = _dual_map(Z, w, p)
        vals = cod.value(A.matrix @ Xn)
        # a column whose gradient vanished keeps its previous iterate
        improved = (vals >= history[-1]) & np.any(Xn != 0, axis=0)
        X = np.where(improved[None, :], Xn, X)
        history.append(np.maximum(vals, history[-1]))
        if len(history) > STAGNATION_WINDOW:
            old, new = history[-1 - STAGNATION_WINDOW], history[-1]
            if np.all(new - old <= STAGNATION_TOL * np.maximum(new, 1e-300)):
                break
    ratios = _ratios(A, cod, X, p)
    best = int(np.argmax(ratios))
    witness = StepFunction(lat, X[:, best])
    lower = float(ratios[best])
    return NormReport(lower, lower, witness, X.shape[1], seed)


def evaluate_ratio(A: LinearOp, x: np.ndarray, p: float, q: float | None = None) -> float:
    cod = _Codomain(A, p, q)
    x = np.asarray(x, dtype=float)[:, None]
    return float(_ratios(A, cod, x, p)[0])
