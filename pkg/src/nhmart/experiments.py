"""Generators for the explicit constructions and the drivers that measure them."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ExponentError, ParameterError
from .gspace import bmoq_norm
from .lattice import Lattice, _TreeBuilder
from .mfunc import MartDecomp, StepFunction, decompose, hpq_norm, reconstruct, weighted_lp
from .mixing import nondegeneracy_cert
from .opnorm import norm_2, norm_p
from .paraprod import TransformBlocks, assemble, commutator, transform_operator

AVG_CONVENTION = "root interval normalized to [0,1), children I_k=[0,r^k), J_k=[r^k,r^(k-1))"


@dataclass
class ExperimentRow:
    params: dict
    measured: dict
    seed: int | None = None

    def flat(self) -> dict:
        out = dict(self.params)
        out.update(self.measured)
        if self.seed is not None:
            out["seed"] = self.seed
        return out


def rows_to_csv(rows: list[ExperimentRow]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    flat = [r.flat() for r in rows]
    writer = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
    writer.writeheader()
    for rec in flat:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
    return buf.getvalue()


def rows_to_json(rows: list[ExperimentRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2)


# -- averaging counterexample -------------------------------------------------------

def gen_avg_counterexample(n: int, *, allow_boundary: bool = False) -> tuple[Lattice, MartDecomp]:
    """Chain lattice I_0 ⊃ I_1 ⊃ … ⊃ I_n with side intervals J_k.

    Δ_{I_{k-1}} f = 1_{J_k} − α 1_{I_k} with α = 1/(n−1). ``allow_boundary``
    admits n = 2 (α = 1) for probing.
    """
    if int(n) != n or n < 2 or (n == 2 and not allow_boundary):
        raise ParameterError(f"n must be an integer > 2, got {n}")
    n = int(n)
    alpha = 1.0 / (n - 1)
    tb = _TreeBuilder()
    coef: dict[int, float] = {}

    def measure_i(k):
        return (n - 1) ** k / n ** k

    def grow(parent, k):
        node = tb.add(parent, measure_i(k))
        if k < n:
            child = grow(node, k + 1)
            coef[child] = -alpha
            side = tb.add(node, (n - 1) ** k / n ** (k + 1))
            coef[side] = 1.0
        return node

    grow(None, 0)
    lat = tb.build()
    c = np.zeros(lat.n)
    for node, val in coef.items():
        c[node] = val
    return lat, MartDecomp(lat, c)


def averaged_square_norm(d: MartDecomp, p: float) -> float:
    """‖(Σ_I (E_I|Δ_I f|^p)^{2/p} 1_I)^{1/2}‖_p."""
    lat = d.lattice
    nonroot = lat.parent >= 0
    e = np.zeros(lat.n)
    np.add.at(e, lat.parent[nonroot], np.abs(d.coefs[nonroot]) ** p * lat.measure[nonroot])
    e /= lat.measure
    agg = lat.push_down(e ** (2.0 / p))
    return float(weighted_lp(np.sqrt(agg), lat.w, p))


def run_avg_experiment(p: float, ns: list[int]) -> list[ExperimentRow]:
    if p == 2:
        raise ExponentError("both sides coincide at p = 2; choose p != 2")
    if not 1 <= p < np.inf:
        raise ExponentError(f"p must lie in [1, inf), got {p}")
    rows = []
    for n in ns:
        _, d = gen_avg_counterexample(n)
        lhs = averaged_square_norm(d, p)
        rhs = hpq_norm(d, p, 2.0, extended=False)
        rows.append(ExperimentRow({"n": int(n), "p": float(p)},
                                  {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}))
    return rows


# -- basis counterexample --------------------------------------------------------------

def solved_beta(n: int, p: float) -> float:
    """β with ‖h_J + α h_I‖_p = β‖h_J + h_I‖_p on one four-child block (scale free)."""
    m = np.array([(n - 1) / (2 * n)] * 2 + [1 / (2 * n)] * 2)
    df = np.array([-1.0 / (n - 1), 1.0 / (n - 1), -1.0, 1.0])
    return float(weighted_lp(df, m, p) / weighted_lp(np.array([-1.0, 1.0, -1.0, 1.0]), m, p))


def gen_basis_counterexample(n: int, levels: int, p: float = 4.0) -> tuple[Lattice, MartDecomp, MartDecomp]:
    """Four children per node (two halves of I, two halves of J), recursing on the I halves.

    Δf = h_J + α h_I and Δg = β(h_J + h_I), with β fixed per node by ‖Δf‖_p = ‖Δg‖_p.
    """
    if int(n) != n or n <= 2:
        raise ParameterError(f"n must be an integer > 2, got {n}")
    if levels < 0:
        raise ParameterError("levels must be >= 0")
    n = int(n)
    alpha = 1.0 / (n - 1)
    tb = _TreeBuilder()
    blocks = []

    def grow(parent, measure, depth):
        node = tb.add(parent, measure)
        if depth < levels:
            kids = []
            half_i = measure * (n - 1) / (2 * n)
            for _ in range(2):
                kids.append(grow(node, half_i, depth + 1))
            for _ in range(2):
                kids.append(tb.add(node, measure / (2 * n)))
            blocks.append(kids)
        return node

    grow(None, 1.0, 0)
    lat = tb.build()
    cf, cg = np.zeros(lat.n), np.zeros(lat.n)
    for kids in blocks:
        m = lat.measure[kids]
        df = np.array([-alpha, alpha, -1.0, 1.0])
        shape = np.array([-1.0, 1.0, -1.0, 1.0])
        beta = weighted_lp(df, m, p) / weighted_lp(shape, m, p)
        cf[kids] = df
        cg[kids] = beta * shape
    return lat, MartDecomp(lat, cf), MartDecomp(lat, cg)


# -- mixing counterexample --------------------------------------------------------------

def block_measures(total: float, delta: float) -> np.ndarray:
    """Eight children: four equal parts of I¹ (|I¹| = δ|I²|), then four of I²."""
    small = total * delta / (4.0 * (1.0 + delta))
    big = total / (4.0 * (1.0 + delta))
    return np.array([small] * 4 + [big] * 4)


def swap_block(measures) -> np.ndarray:
    """Block swapping h¹↔h², h³↔h⁴ (h^k = 1_{I_{2k}} − 1_{I_{2k−1}}), zero on their complement."""
    m = np.asarray(measures, dtype=float)
    h = np.zeros((4, 8))
    for k in range(4):
        h[k, 2 * k] = -1.0
        h[k, 2 * k + 1] = 1.0
    image = h[[1, 0, 3, 2]]
    mat = np.zeros((8, 8))
    for k in range(4):
        mat += np.outer(image[k], h[k] * m) / (h[k] @ (m * h[k]))
    return mat


@dataclass
class MixingLayout:
    lattice: Lattice
    b: StepFunction
    T: TransformBlocks
    hosts: list[int] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)


def mixing_layout(deltas: list[float], aux_delta: float = 1.0) -> MixingLayout:
    """Chain of auxiliary 8-child nodes A_0 ⊃ A_1 ⊃ …; host H_k is a child of A_{k-1}.

    Every internal node carries a swap block; b has a nonzero difference only at the hosts.
    """
    deltas = [float(x) for x in deltas]
    if not deltas or any(not 0 < x < 1 for x in deltas):
        raise ParameterError("deltas must be a nonempty list of numbers in (0, 1)")
    tb = _TreeBuilder()
    hosts, host_children, internal = [], [], []

    def aux(parent, measure, k):
        node = tb.add(parent, measure)
        internal.append(node)
        ms = block_measures(measure, aux_delta)
        kids = []
        for j, mj in enumerate(ms):
            if j == 4:
                h = tb.add(node, mj)
                internal.append(h)
                hosts.append(h)
                hm = block_measures(mj, deltas[k])
                host_children.append([tb.add(h, x) for x in hm])
                kids.append(h)
            elif j == 7 and k + 1 < len(deltas):
                kids.append(aux(node, mj, k + 1))
            else:
                kids.append(tb.add(node, mj))
        return node

    aux(None, 1.0, 0)
    lat = tb.build()
    blocks = {node: swap_block(lat.measure[lat.children[node]]) for node in internal}
    T = TransformBlocks(lat, blocks)
    coef = np.zeros(lat.n)
    for delta, kids in zip(deltas, host_children):
        coef[kids[:4]] = delta ** -0.5
        coef[kids[4:]] = -delta ** 0.5
    b = reconstruct(MartDecomp(lat, coef))
    return MixingLayout(lat, b, T, hosts, deltas)


def gen_mixing_counterexample(deltas: list[float]) -> tuple[Lattice, StepFunction, TransformBlocks]:
    lay = mixing_layout(deltas)
    return lay.lattice, lay.b, lay.T


def run_commutator_experiment(deltas: list[float], p: float = 2.0, K: float = 10.0,
                              restarts: int = 32, seed: int = 0,
                              with_norm: bool = True) -> list[ExperimentRow]:
    """Per δ (blocks accumulated in the given order): ‖[M_b, T]‖, sup‖Δb‖_∞ and mixing certificates."""
    if not 1 < p < np.inf:
        raise ExponentError(f"p must lie in (1, inf), got {p}")
    rows = []
    for k in range(len(deltas)):
        lay = mixing_layout(deltas[:k + 1])
        lat = lay.lattice
        measured = {}
        if with_norm:
            C = commutator(assemble("mult", lay.b), transform_operator(lay.T))
            measured["commutator_norm"] = (norm_2(C) if p == 2 else
                                           norm_p(C, p, restarts=restarts, seed=seed).estimate)
        sup_diff = float(np.max(np.abs(decompose(lay.b).coefs[lat.parent >= 0])))
        host = lay.hosts[k]
        certs = [nondegeneracy_cert(lay.T, int(J), p, K) for J in lat.children[host]]
        measured.update(sup_diff_inf=sup_diff,
                        eps_nocap=min(c.epsilon_nocap for c in certs),
                        eps_cap=min(c.epsilon_cap if c.feasible else 0.0 for c in certs))
        rows.append(ExperimentRow({"delta": float(deltas[k]), "p": float(p), "K": float(K)},
                                  measured, seed if with_norm and p != 2 else None))
    return rows


# -- divergent BMO series -------------------------------------------------------------

def gen_bmo_divergent(N: int) -> tuple[Lattice, MartDecomp]:
    """Lattice over [0, 2^N): I_k = [0, 2^k) splits into I_{k-1} and [2^{k-1}, 2^k)."""
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be an integer >= 1, got {N}")
    N = int(N)
    tb = _TreeBuilder()
    coef: dict[int, float] = {}

    def grow(parent, k):
        node = tb.add(parent, 2.0 ** k)
        if k > 0:
            left = grow(node, k - 1)
            right = tb.add(node, 2.0 ** (k - 1))
            coef[left], coef[right] = 1.0, -1.0
        return node

    grow(None, N)
    lat = tb.build()
    c = np.zeros(lat.n)
    for node, val in coef.items():
        c[node] = val
    return lat, MartDecomp(lat, c)


def run_bmo_experiment(Ns: list[int], q: float = 2.0, r: float = 2.0) -> list[ExperimentRow]:
    rows = []
    for N in Ns:
        lat, d = gen_bmo_divergent(N)
        first, second = bmoq_norm(d, q, r)
        partial = reconstruct(d).values
        rows.append(ExperimentRow({"N": int(N), "q": float(q), "r": float(r)},
                                  {"bmo_local": first, "bmo_sup_diff": second,
                                   "max_partial_sum": float(partial.max()),
                                   "leftmost_value": float(partial[0])}))
    return rows


def run_basis_experiment(n: int, levels_list: list[int], p: float = 4.0) -> list[ExperimentRow]:
    rows = []
    for levels in levels_list:
        lat, f, g = gen_basis_counterexample(n, levels, p)
        rows.append(ExperimentRow({"n": int(n), "levels": int(levels), "p": float(p)},
                                  {"beta": solved_beta(n, p),
                                   "square_norm_f": hpq_norm(f, p, 2.0),
                                   "square_norm_g": hpq_norm(g, p, 2.0),
                                   "averaged_norm_f": averaged_square_norm(f, p),
                                   "averaged_norm_g": averaged_square_norm(g, p)}))
    return rows


def log2_slopes(xs, ys) -> list[float]:
    return [(math.log2(y1) - math.log2(y0)) / (math.log2(x1) - math.log2(x0))
            for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:])]
