"""Martingale calculus for leaf-constant functions on a lattice."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ExponentError, LatticeMismatch, LeafNode, NegativeInput, NhmartError,
                     ZeroMeanViolated)
from .lattice import Lattice

ZERO_MEAN_TOL = 1e-10
SERIES_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StepFunction:
    lattice: Lattice
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.lattice.n_leaves,):
            raise NhmartError(f"expected {self.lattice.n_leaves} leaf values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise NhmartError("step function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _other(self, other):
        if isinstance(other, StepFunction):
            if other.lattice is not self.lattice:
                raise LatticeMismatch("step functions live on different lattices")
            return other.values
        return other

    def __add__(self, other):
        return StepFunction(self.lattice, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return StepFunction(self.lattice, self.values - self._other(other))

    def __mul__(self, other):
        return StepFunction(self.lattice, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return StepFunction(self.lattice, -self.values)

    def __repr__(self):
        return f"StepFunction({np.array2string(self.values, precision=4, threshold=8)})"


def indicator(lat: Lattice, node: int) -> StepFunction:
    node = lat.check_node(node)
    v = np.zeros(lat.n_leaves)
    v[lat.leaf_slice(node)] = 1.0
    return StepFunction(lat, v)


def constant(lat: Lattice, c: float) -> StepFunction:
    return StepFunction(lat, np.full(lat.n_leaves, float(c)))


@dataclass(frozen=True, eq=False)
class MartDecomp:
    """Martingale differences and root averages, stored one number per node.

    ``coefs[J]`` is the value of the parent's difference on ``J`` for a non-root
    ``J``, and the average over ``J`` when ``J`` is a root. The difference at an
    internal node ``I`` is therefore ``coefs[children(I)]``.
    """
    lattice: Lattice
    coefs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefs, dtype=float)
        if c.shape != (self.lattice.n,):
            raise NhmartError(f"expected {self.lattice.n} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NhmartError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefs", c)

    @classmethod
    def from_components(cls, lat: Lattice, differences: dict | None = None,
                        root_averages: dict | None = None) -> "MartDecomp":
        """Build from ``{internal node: values on its children}`` and ``{root: average}``."""
        c = np.zeros(lat.n)
        for node, vals in (differences or {}).items():
            node = lat.check_node(node)
            kids = lat.children[node]
            if len(kids) == 0:
                raise LeafNode(f"node {node} has no children")
            vals = np.asarray(vals, dtype=float)
            if vals.shape != kids.shape:
                raise NhmartError(f"node {node} has {len(kids)} children, got {vals.size} values")
            c[kids] = vals
        for root, avg in (root_averages or {}).items():
            root = lat.check_node(root)
            if lat.parent[root] >= 0:
                raise NhmartError(f"node {root} is not a root")
            c[root] = avg
        return cls(lat, c)

    def difference_values(self, node: int) -> np.ndarray:
        node = self.lattice.check_node(node)
        if self.lattice.is_leaf(node):
            raise LeafNode(f"node {node} is a leaf")
        return self.coefs[self.lattice.children[node]]

    def root_average(self, root: int) -> float:
        return float(self.coefs[root])

    def zero_mean_residuals(self) -> np.ndarray:
        """Per node: |Σ v_J|J|| / Σ|v_J||J| over children (0 for leaves and zero components)."""
        lat = self.lattice
        nonroot = lat.parent >= 0
        signed = np.zeros(lat.n)
        absolute = np.zeros(lat.n)
        wc = self.coefs * lat.measure
        np.add.at(signed, lat.parent[nonroot], wc[nonroot])
        np.add.at(absolute, lat.parent[nonroot], np.abs(wc[nonroot]))
        out = np.zeros(lat.n)
        pos = absolute > 0
        out[pos] = np.abs(signed[pos]) / absolute[pos]
        return out


# -- batch primitives on leaf-value arrays of shape (n_leaves, ...) ------------

def node_averages(lat: Lattice, leaf_vals) -> np.ndarray:
    return lat.averages(leaf_vals)


def coefficients(lat: Lattice, leaf_vals) -> np.ndarray:
    """Per-node martingale coefficients (see :class:`MartDecomp`) for a batch of functions."""
    avg = lat.averages(leaf_vals)
    out = avg.copy()
    nonroot = lat.parent >= 0
    out[nonroot] = avg[nonroot] - avg[lat.parent[nonroot]]
    return out


def path_sums(lat: Lattice, coefs) -> np.ndarray:
    return lat.gather_path(coefs).sum(axis=1)


# -- single-function API ----------------------------------------------------------

def _node(f: StepFunction, node) -> int:
    return f.lattice.check_node(node)


def average(f: StepFunction, node: int) -> float:
    node = _node(f, node)
    sl = f.lattice.leaf_slice(node)
    lat = f.lattice
    return float(np.dot(f.values[sl], lat.w[sl]) / lat.measure[node])


def expectation(f: StepFunction, node: int) -> StepFunction:
    node = _node(f, node)
    v = np.zeros(f.lattice.n_leaves)
    v[f.lattice.leaf_slice(node)] = average(f, node)
    return StepFunction(f.lattice, v)


def difference(f: StepFunction, node: int) -> StepFunction:
    node = _node(f, node)
    lat = f.lattice
    if lat.is_leaf(node):
        raise LeafNode(f"node {node} is a leaf")
    mean = average(f, node)
    v = np.zeros(lat.n_leaves)
    for child in lat.children[node]:
        v[lat.leaf_slice(child)] = average(f, child) - mean
    return StepFunction(lat, v)


def decompose(f: StepFunction) -> MartDecomp:
    return MartDecomp(f.lattice, coefficients(f.lattice, f.values))


def reconstruct(d: MartDecomp) -> StepFunction:
    bad = np.flatnonzero(d.zero_mean_residuals() > ZERO_MEAN_TOL)
    if bad.size:
        raise ZeroMeanViolated(f"difference at node {int(bad[0])} does not have zero mean")
    return StepFunction(d.lattice, path_sums(d.lattice, d.coefs))


def weighted_lp(values, w, p: float):
    """(Σ|v|^p w)^{1/p} along axis 0; max |v| for p = inf."""
    values = np.abs(np.asarray(values, dtype=float))
    if p < 1:
        raise ExponentError(f"p must be >= 1, got {p}")
    if np.isinf(p):
        return values.max(axis=0) if values.size else 0.0
    w = np.asarray(w).reshape((-1,) + (1,) * (values.ndim - 1))
    return (values ** p * w).sum(axis=0) ** (1.0 / p)


def lp_norm(f: StepFunction, p: float) -> float:
    return float(weighted_lp(f.values, f.lattice.w, p))


def _path_terms(d: MartDecomp, extended: bool) -> np.ndarray:
    """[leaf, depth] array of the coefficients met along each path (root term optional)."""
    terms = d.lattice.gather_path(d.coefs)
    if not extended:
        terms[:, 0] = 0.0
    return terms


def square_function(d: MartDecomp, extended: bool = True) -> StepFunction:
    terms = _path_terms(d, extended)
    return StepFunction(d.lattice, np.sqrt((terms ** 2).sum(axis=1)))


def maximal_function(f: StepFunction) -> StepFunction:
    lat = f.lattice
    avg = np.abs(lat.averages(f.values))
    return StepFunction(lat, lat.gather_path(avg).max(axis=1))


def hpq_norm(d: MartDecomp, p: float, q: float, extended: bool = True) -> float:
    if not (1 <= p < np.inf) or not (1 <= q < np.inf):
        raise ExponentError(f"need p, q in [1, inf), got p={p}, q={q}")
    terms = np.abs(_path_terms(d, extended))
    agg = (terms ** q).sum(axis=1) ** (1.0 / q)
    return float(weighted_lp(agg, d.lattice.w, p))


def maximal_operator_bound(lat: Lattice, p: float) -> float:
    """Admissible upper bound for the L^p operator norm of the maximal function.

    Doob's inequality gives p/(p-1); the finite depth gives (depth+1)^{1/p}
    since M f is dominated by the ℓ^p sum of the per-level averages.
    """
    return min(p / (p - 1.0), (lat.max_depth + 1) ** (1.0 / p))


def a1_majorant(f: StepFunction, p: float, max_terms: int = 10_000) -> StepFunction:
    if not 1 < p < np.inf:
        raise ExponentError(f"p must lie in (1, inf), got {p}")
    if np.any(f.values < 0):
        raise NegativeInput("a1_majorant needs a nonnegative function")
    gamma = 1.0 / (2.0 * maximal_operator_bound(f.lattice, p))
    total = f.values.copy()
    term = f
    for _ in range(max_terms):
        term = maximal_function(term) * gamma
        total += term.values
        if np.max(term.values, initial=0.0) < SERIES_TOL:
            break
    return StepFunction(f.lattice, total)


def a1_gamma(lat: Lattice, p: float) -> float:
    return 1.0 / (2.0 * maximal_operator_bound(lat, p))
