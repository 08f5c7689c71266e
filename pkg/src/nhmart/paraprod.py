"""Paraproducts, martingale transforms and related operators as dense matrices.

Operators are assembled by applying them to the leaf indicators. Along the
path ``root = I_0 ⊃ I_1 ⊃ … ⊃ I_m = leaf`` the difference at ``I_d`` takes the
value ``coef[I_{d+1}]`` and the expectation at ``I_d`` the value
``avg[I_d]``, which is all the formulas below need.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import LatticeMismatch, NhmartError, ZeroMeanViolated
from .gspace import averaging_family, difference_rows, family_rows, local_sup
from .lattice import Lattice
from .linop import LinearOp
from .mfunc import StepFunction, coefficients, decompose

KINDS = ("mult", "pi", "pi_star", "pi_extstar", "lambda", "lambda0", "lambda1", "remainder")
BLOCK_TOL = 1e-10
_CHUNK = 512


def _path_tables(lat: Lattice, F: np.ndarray):
    """(avg along path, coefficient one step further down) for a batch of functions.

    Both arrays have shape [leaf, depth, batch]; entry d is meaningful for
    d < depth(leaf) and zero beyond.
    """
    avg = lat.averages(F)
    coef = coefficients(lat, F)
    E = lat.gather_path(avg)
    D = np.zeros_like(E)
    D[:, :-1] = lat.gather_path(coef)[:, 1:]
    internal = np.zeros(lat.path.shape, dtype=bool)
    internal[:, :-1] = lat.path[:, 1:] >= 0
    E = E * internal[:, :, None]
    return E, D, avg, coef


def _parent_mean(lat: Lattice, child_vals: np.ndarray) -> np.ndarray:
    """Per node I: Σ_{J∈child(I)} child_vals[J]|J| / |I|."""
    out = np.zeros_like(child_vals)
    nonroot = lat.parent >= 0
    np.add.at(out, lat.parent[nonroot], child_vals[nonroot] * lat.measure[nonroot, None])
    return out / lat.measure[:, None]


def _apply(kind: str, b: np.ndarray, lat: Lattice, F: np.ndarray) -> np.ndarray:
    Eb, Db, avg_b, coef_b = _path_tables(lat, b[:, None])
    Ef, Df, avg_f, coef_f = _path_tables(lat, F)
    nonroot = (lat.parent >= 0)[:, None]
    if kind == "mult":
        return b[:, None] * F
    if kind == "pi":
        return (Db * Ef).sum(axis=1)
    if kind == "pi_extstar":
        return (Db * Df).sum(axis=1)
    if kind == "lambda0":
        return (Eb * Df).sum(axis=1)
    if kind == "remainder":
        root = lat.path[:, 0]
        return avg_b[root, 0][:, None] * avg_f[root]
    if kind == "pi_star":
        # E_I((Δ_I b)(Δ_I f)) on I, summed over the path
        c = _parent_mean(lat, np.where(nonroot, coef_b * coef_f, 0.0))
        return _sum_internal(lat, c)
    if kind == "lambda1":
        c = _parent_mean(lat, np.where(nonroot, coef_b * coef_f, 0.0))
        return (Db * Df).sum(axis=1) - _sum_internal(lat, c)
    if kind == "lambda":
        # Δ_I(b·Δ_I f) on child J: ⟨b⟩_J (Δ_I f)(J) − ⟨b Δ_I f⟩_I
        prod = np.where(nonroot, avg_b * coef_f, 0.0)
        c = _parent_mean(lat, prod)
        down = np.zeros_like(Ef)
        down[:, :-1] = lat.gather_path(prod)[:, 1:]
        return down.sum(axis=1) - _sum_internal(lat, c)
    raise NhmartError(f"unknown operator kind {kind!r}; choose from {KINDS}")


def _sum_internal(lat: Lattice, node_vals: np.ndarray) -> np.ndarray:
    """Σ over internal path nodes of node_vals."""
    vals = np.where(lat.nchildren[:, None] > 0, node_vals, 0.0)
    return lat.gather_path(vals).sum(axis=1)


def _columns(lat: Lattice, apply) -> np.ndarray:
    n = lat.n_leaves
    out = np.empty((n, n))
    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        E = np.zeros((n, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out[:, start:stop] = apply(E)
    return out


def assemble(kind: str, b: StepFunction, lat: Lattice | None = None) -> LinearOp:
    lat = b.lattice if lat is None else lat
    if b.lattice is not lat:
        raise LatticeMismatch("b does not live on the given lattice")
    if kind not in KINDS:
        raise NhmartError(f"unknown operator kind {kind!r}; choose from {KINDS}")
    return LinearOp(lat, _columns(lat, lambda F: _apply(kind, b.values, lat, F)))


def generalized_paraproduct(lat: Lattice, family: Mapping[int, object]) -> LinearOp:
    """f ↦ (⟨f⟩_I b^I)_I for ``family = {I: scalar | values of b^I on child(I)}``."""
    owners, cells, vals = family_rows(lat, family)
    return averaging_family(lat, owners, cells, vals)


def difference_family(b: StepFunction) -> dict[int, np.ndarray]:
    d = decompose(b)
    lat = b.lattice
    return {int(i): d.coefs[lat.children[i]] for i in lat.internal}


def paraproduct_family_op(b: StepFunction) -> LinearOp:
    """π_b as a map into the flattened family (codomain excludes root averages)."""
    return generalized_paraproduct(b.lattice, difference_family(b))


def commutator(A: LinearOp, B: LinearOp) -> LinearOp:
    return A @ B - B @ A


def verify_decomposition(b: StepFunction, lat: Lattice | None = None) -> float:
    lat = b.lattice if lat is None else lat
    ops = {k: assemble(k, b, lat).matrix for k in KINDS}
    lhs = ops["mult"] - ops["remainder"]
    residuals = [
        lhs - (ops["pi_extstar"] + ops["lambda0"] + ops["pi"]),
        lhs - (ops["pi_star"] + ops["lambda"] + ops["pi"]),
        ops["lambda"] - ops["lambda0"] - ops["lambda1"],
    ]
    return float(max(np.max(np.abs(r), initial=0.0) for r in residuals))


def testing_constant(b, p: float, q: float, lat: Lattice | None = None) -> float:
    """sup_I ((1/|I|)∫_I (Σ_{J⊆I}|Δ_J b|^q)^{p/q})^{1/p}.

    ``b`` is a StepFunction, or a family ``{J: scalar | child values}`` in which
    case |b^J| replaces |Δ_J b| (``lat`` is then required).
    """
    if isinstance(b, StepFunction):
        owners, cells, vals = difference_rows(decompose(b))
        lat = b.lattice
    else:
        if lat is None:
            raise NhmartError("a lattice is needed for family input")
        owners, cells, vals = family_rows(lat, b)
    return local_sup(lat, owners, cells, vals, q, p)


@dataclass(frozen=True, eq=False)
class TransformBlocks:
    """Per-node blocks acting on the zero-mean child-constant functions of the node.

    Each block is a (children × children) matrix in child-indicator
    coordinates. Inputs are projected onto zero-mean vectors on construction;
    outputs must already have zero mean.
    """
    lattice: Lattice
    blocks: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lat = self.lattice
        clean = {}
        for node, mat in dict(self.blocks).items():
            node = lat.check_node(node)
            kids = lat.children[node]
            mat = np.array(mat, dtype=float)
            c = len(kids)
            if mat.ndim == 0:
                mat = mat * np.eye(c)
            if c == 0 or mat.shape != (c, c):
                raise NhmartError(f"node {node}: block must be {c}x{c}, got {mat.shape}")
            P = zero_mean_projector(lat.measure[kids])
            mat = mat @ P
            m = lat.measure[kids]
            out_mean = m @ mat
            scale = np.max(m @ np.abs(mat), initial=0.0)
            if np.max(np.abs(out_mean)) > BLOCK_TOL * scale:
                raise ZeroMeanViolated(f"block at node {node} does not preserve zero mean")
            mat.setflags(write=False)
            clean[node] = mat
        object.__setattr__(self, "blocks", clean)

    def adjoint(self) -> "TransformBlocks":
        lat = self.lattice
        out = {}
        for node, mat in self.blocks.items():
            m = lat.measure[lat.children[node]]
            out[node] = (mat.T * m[None, :]) / m[:, None]
        return TransformBlocks(lat, out)

    @classmethod
    def multiplier(cls, lat: Lattice, signs: Mapping[int, float]) -> "TransformBlocks":
        return cls(lat, {node: float(s) * np.eye(lat.nchildren[node]) for node, s in signs.items()})


def zero_mean_projector(measures) -> np.ndarray:
    """Projection v ↦ v − (Σ v_J|J| / Σ|J|)·1 in child coordinates."""
    m = np.asarray(measures, dtype=float)
    return np.eye(len(m)) - np.outer(np.ones(len(m)), m / m.sum())


def transform_operator(T: TransformBlocks) -> LinearOp:
    lat = T.lattice

    def apply(F):
        coef = coefficients(lat, F)
        out = np.zeros_like(coef)
        for node, mat in T.blocks.items():
            kids = lat.children[node]
            out[kids] = mat @ coef[kids]
        return lat.gather_path(out).sum(axis=1)

    return LinearOp(lat, _columns(lat, apply))
