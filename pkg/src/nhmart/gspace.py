"""Node-indexed sequence spaces, BMO norms and the Carleson embedding."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ExponentError, LatticeMismatch, NhmartError, SupportViolation
from .lattice import Lattice
from .linop import LinearOp
from .mfunc import MartDecomp, weighted_lp


@dataclass(frozen=True, eq=False)
class CoefSequence:
    """Sparse scalar-per-node sequence; absent nodes are zero."""
    lattice: Lattice
    entries: Mapping[int, float]

    def __post_init__(self):
        clean = {}
        for node, val in dict(self.entries).items():
            node = self.lattice.check_node(node)
            val = float(val)
            if not np.isfinite(val):
                raise NhmartError("sequence entries must be finite")
            clean[node] = val
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_dense(cls, lat: Lattice, values) -> "CoefSequence":
        values = np.asarray(values, dtype=float)
        return cls(lat, {int(i): values[i] for i in np.flatnonzero(values)})

    def dense(self) -> np.ndarray:
        out = np.zeros(self.lattice.n)
        for node, val in self.entries.items():
            out[node] = val
        return out

    def __len__(self):
        return len(self.entries)


def _check_exponent(name, value, lo=1.0):
    if not (lo <= value < np.inf):
        raise ExponentError(f"{name} must lie in [{lo}, inf), got {value}")


def conjugate(p: float) -> float:
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def flatten(d: MartDecomp) -> CoefSequence:
    return CoefSequence.from_dense(d.lattice, d.coefs)


# -- row families: (owner node, cell node, value) ---------------------------------

def difference_rows(d: MartDecomp, include_roots: bool = False):
    lat = d.lattice
    keep = lat.parent >= 0
    if include_roots:
        keep = np.ones(lat.n, dtype=bool)
    nodes = np.flatnonzero(keep & (d.coefs != 0))
    owners = np.where(lat.parent[nodes] >= 0, lat.parent[nodes], nodes)
    return owners, nodes, d.coefs[nodes]


def sequence_rows(s: CoefSequence):
    nodes = np.array(sorted(s.entries), dtype=np.int64)
    vals = np.array([s.entries[i] for i in nodes], dtype=float)
    return nodes, nodes, vals


def family_rows(lat: Lattice, family: Mapping[int, object]):
    """Rows for ``{owner: scalar | values on its children}``.

    A scalar means the owner's function is constant on the owner; an array
    gives the (child-constant) values on the owner's children.
    """
    owners, cells, vals = [], [], []
    for node, spec in family.items():
        node = lat.check_node(node)
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 0:
            owners.append(node)
            cells.append(node)
            vals.append(float(arr))
            continue
        kids = lat.children[node]
        if arr.shape != kids.shape:
            raise SupportViolation(
                f"node {node}: expected a scalar or {len(kids)} child values, got shape {arr.shape}")
        owners.extend([node] * len(kids))
        cells.extend(kids.tolist())
        vals.extend(arr.tolist())
    return (np.array(owners, dtype=np.int64), np.array(cells, dtype=np.int64),
            np.array(vals, dtype=float))


def cell_aggregate(lat: Lattice, cells, values, q: float) -> np.ndarray:
    """Leaf values of Σ_r |values_r|^q 1_{cells_r}; ``values`` may carry trailing batch axes."""
    values = np.abs(np.asarray(values, dtype=float))
    per_node = np.zeros((lat.n,) + values.shape[1:])
    np.add.at(per_node, np.asarray(cells, dtype=np.int64), values ** q)
    return lat.push_down(per_node)


def mixed_norm(lat: Lattice, cells, values, p: float, q: float):
    """‖(Σ_r |y_r|^q 1_{cell_r})^{1/q}‖_{L^p}, batched over trailing axes."""
    agg = cell_aggregate(lat, cells, values, q) ** (1.0 / q)
    return weighted_lp(agg, lat.w, p)


def local_sup(lat: Lattice, owners, cells, values, q: float, r: float, *, argmax: bool = False):
    """sup_J ((1/|J|) ∫_J (Σ_{rows owned inside J} |y|^q 1_cell)^{r/q})^{1/r}.

    Contributions are split by the depth of their owner and summed from the
    deepest level up, so no cancellation occurs.
    """
    owners = np.asarray(owners, dtype=np.int64)
    cells = np.asarray(cells, dtype=np.int64)
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0 or not values.any():
        return (0.0, int(lat.roots[0])) if argmax else 0.0
    D = lat.max_depth + 1
    table = np.zeros((lat.n, D))
    np.add.at(table, (cells, lat.depth[owners]), values ** q)
    by_depth = lat.push_down(table)                       # [leaf, owner depth]
    suffix = np.cumsum(by_depth[:, ::-1], axis=1)[:, ::-1]  # owners at depth >= d
    integrals = lat.node_sums(lat.w[:, None] * suffix ** (r / q))
    local = integrals[np.arange(lat.n), lat.depth] / lat.measure
    best = int(np.argmax(local))
    val = float(local[best] ** (1.0 / r))
    return (val, best) if argmax else val


def gpq_norm(s: CoefSequence, p: float, q: float) -> float:
    _check_exponent("p", p)
    _check_exponent("q", q)
    nodes, cells, vals = sequence_rows(s)
    if vals.size == 0:
        return 0.0
    return float(mixed_norm(s.lattice, cells, vals, p, q))


def ginf_norm(s: CoefSequence, q: float, r: float) -> float:
    _check_exponent("q", q)
    _check_exponent("r", r)
    owners, cells, vals = sequence_rows(s)
    return local_sup(s.lattice, owners, cells, vals, q, r)


def coordinate_projection(s: CoefSequence, subset: Callable[[int], bool]) -> CoefSequence:
    return CoefSequence(s.lattice, {i: v for i, v in s.entries.items() if subset(i)})


def pairing(s: CoefSequence, t: CoefSequence) -> float:
    if s.lattice is not t.lattice:
        raise LatticeMismatch("sequences live on different lattices")
    m = s.lattice.measure
    return float(sum(v * t.entries[i] * m[i] for i, v in s.entries.items() if i in t.entries))


def bmoq_norm(d: MartDecomp, q: float, r: float) -> tuple[float, float]:
    """(sup_I of the local r-average of (Σ_{J⊆I}|Δ_J f|^q)^{1/q}, sup_I ‖Δ_I f‖_∞)."""
    _check_exponent("q", q)
    _check_exponent("r", r)
    owners, cells, vals = difference_rows(d)
    first = local_sup(d.lattice, owners, cells, vals, q, r)
    second = float(np.max(np.abs(vals), initial=0.0))
    return first, second


def carleson_operator(alpha: CoefSequence) -> LinearOp:
    """f ↦ (α_I ⟨f⟩_I)_I as a family-valued operator (one row per entry of α)."""
    lat = alpha.lattice
    nodes, _, vals = sequence_rows(alpha)
    return averaging_family(lat, nodes, nodes, vals)


def averaging_family(lat: Lattice, owners, cells, values) -> LinearOp:
    """Rows y_r = values_r·⟨f⟩_{owners_r} living on ``cells_r``."""
    owners = np.asarray(owners, dtype=np.int64)
    mat = np.zeros((len(owners), lat.n_leaves))
    for row, (own, val) in enumerate(zip(owners, values)):
        sl = lat.leaf_slice(own)
        mat[row, sl] = val * lat.w[sl] / lat.measure[own]
    return LinearOp(lat, mat, cells=np.asarray(cells, dtype=np.int64), owners=owners)


@dataclass(frozen=True)
class EmbeddingReport:
    K: float
    lower_bound: float
    estimate: float
    ratio: float
    p: float
    q: float
    seed: int


def embedding_test(alpha: CoefSequence, p: float, q: float, trials: int = 32,
                   seed: int = 0) -> EmbeddingReport:
    from .opnorm import norm_p

    K = ginf_norm(alpha, q, q)
    op = carleson_operator(alpha)
    if len(alpha) == 0:
        return EmbeddingReport(0.0, 0.0, 0.0, float("nan"), p, q, seed)
    rep = norm_p(op, p, restarts=trials, seed=seed, q=q)
    ratio = rep.estimate / K if K > 0 else float("nan")
    return EmbeddingReport(K, rep.lower_bound, rep.estimate, ratio, p, q, seed)
