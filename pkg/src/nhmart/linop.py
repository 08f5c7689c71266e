"""Dense linear operators on leaf-value vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LatticeMismatch, NhmartError
from .lattice import Lattice
from .mfunc import StepFunction


@dataclass(frozen=True, eq=False)
class LinearOp:
    """Matrix acting on leaf values.

    Square operators map leaf values to leaf values. Family-valued operators
    (``cells`` given) produce one number per row; row ``r`` stands for the
    function ``y_r·1_{cells[r]}`` owned by node ``owners[r]``, and the rows are
    aggregated pointwise in ℓ^q when a norm is taken.
    """
    lattice: Lattice
    matrix: np.ndarray
    cells: np.ndarray | None = None
    owners: np.ndarray | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] != self.lattice.n_leaves:
            raise NhmartError(f"matrix must have {self.lattice.n_leaves} columns, got {m.shape}")
        if self.cells is None:
            if m.shape[0] != self.lattice.n_leaves:
                raise NhmartError("square operator expected")
        else:
            cells = np.asarray(self.cells, dtype=np.int64)
            owners = cells if self.owners is None else np.asarray(self.owners, dtype=np.int64)
            if cells.shape != (m.shape[0],) or owners.shape != cells.shape:
                raise NhmartError("one cell and one owner per row required")
            cells.setflags(write=False)
            owners.setflags(write=False)
            object.__setattr__(self, "cells", cells)
            object.__setattr__(self, "owners", owners)
        if not np.all(np.isfinite(m)):
            raise NhmartError("operator entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def square(self) -> bool:
        return self.cells is None

    def __call__(self, f: StepFunction):
        if f.lattice is not self.lattice:
            raise LatticeMismatch("operator and function live on different lattices")
        out = self.matrix @ f.values
        return StepFunction(self.lattice, out) if self.square else out

    def _same(self, other: "LinearOp"):
        if other.lattice is not self.lattice:
            raise LatticeMismatch("operators live on different lattices")
        if not (self.square and other.square):
            raise NhmartError("operator algebra needs square operators")

    def __add__(self, other: "LinearOp") -> "LinearOp":
        self._same(other)
        return LinearOp(self.lattice, self.matrix + other.matrix)

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        self._same(other)
        return LinearOp(self.lattice, self.matrix - other.matrix)

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        self._same(other)
        return LinearOp(self.lattice, self.matrix @ other.matrix)

    def scaled(self, c: float) -> "LinearOp":
        return LinearOp(self.lattice, c * self.matrix, self.cells, self.owners)

    def weighted_adjoint(self) -> "LinearOp":
        """Adjoint for the pairing ∫ f g: D^{-1} Aᵀ D with D the leaf measures."""
        if not self.square:
            raise NhmartError("adjoint only defined for square operators")
        w = self.lattice.w
        return LinearOp(self.lattice, (self.matrix.T * w[None, :]) / w[:, None])


def identity(lat: Lattice) -> LinearOp:
    return LinearOp(lat, np.eye(lat.n_leaves))
