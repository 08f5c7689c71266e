"""Level sets of the maximal function and stopping generations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeInput
from .lattice import Lattice
from .mfunc import StepFunction, maximal_function

AVG_TOL = 1e-12


def _maximal_below(f: StepFunction) -> np.ndarray:
    """Per node, min over its leaves of Mf: the node lies in E_k iff this exceeds 2^k."""
    return f.lattice.node_min(maximal_function(f).values)


def level_rank(m: float) -> int | None:
    """Largest integer k with 2^k < m (None when m <= 0)."""
    if not m > 0:
        return None
    mant, exp = math.frexp(m)       # m = mant·2^exp, mant in [0.5, 1)
    return exp - 2 if mant == 0.5 else exp - 1


def maximal_nodes(lat: Lattice, inside: np.ndarray, within: int | None = None) -> list[int]:
    """Maximal nodes with ``inside`` true, optionally restricted to strict descendants of ``within``."""
    out = []
    stack = list(lat.roots[::-1]) if within is None else list(lat.children[within][::-1])
    while stack:
        i = int(stack.pop())
        if inside[i]:
            out.append(i)
        else:
            stack.extend(lat.children[i][::-1].tolist())
    return out


def level_sets(f: StepFunction, k_lo: int, k_hi: int) -> dict[int, frozenset[int]]:
    low = _maximal_below(f)
    return {k: frozenset(np.flatnonzero(low > 2.0 ** k).tolist()) for k in range(k_lo, k_hi + 1)}


@dataclass
class StoppingForest:
    generations: list[list[int]]
    rank: dict[int, int]
    k0: int
    parent_of: dict[int, int] = field(default_factory=dict)

    def members(self) -> list[tuple[int, int]]:
        """(generation index starting at 1, node) pairs."""
        return [(g + 1, J) for g, gen in enumerate(self.generations) for J in gen]

    def to_dict(self, lat: Lattice) -> dict:
        ids = lat.ids
        return {
            "k0": self.k0,
            "generations": [[int(ids[J]) for J in gen] for gen in self.generations],
            "rank": {str(int(ids[J])): r for J, r in self.rank.items()},
        }


def stopping_generations(f: StepFunction, k0: int) -> StoppingForest:
    if np.any(f.values < 0):
        raise NegativeInput("stopping generations need a nonnegative function")
    lat = f.lattice
    low = _maximal_below(f)
    rank = {}
    gens: list[list[int]] = []
    parent_of: dict[int, int] = {}
    current = maximal_nodes(lat, low > 2.0 ** k0)
    while current:
        gens.append(current)
        nxt = []
        for J in current:
            r = level_rank(low[J])
            rank[J] = r
            kids = maximal_nodes(lat, low > 2.0 ** (r + 2), within=J)
            for I in kids:
                parent_of[I] = J
            nxt.extend(kids)
        current = nxt
    return StoppingForest(gens, rank, k0, parent_of)


@dataclass(frozen=True)
class LemmaViolation:
    rule: str
    node: int
    generation: int
    detail: str = ""


def _covered(lat: Lattice, nodes) -> np.ndarray:
    """Per node: True when the node lies inside one of ``nodes``."""
    mark = np.zeros(lat.n)
    mark[list(nodes)] = 1.0
    acc = mark.copy()
    for d in range(1, lat.max_depth + 1):
        lvl = lat.levels[d]
        acc[lvl] += acc[lat.parent[lvl]]
    return acc > 0


def verify_lemma(f: StepFunction, forest: StoppingForest) -> list[LemmaViolation]:
    lat = f.lattice
    avg = lat.averages(f.values)
    low = _maximal_below(f)
    out: list[LemmaViolation] = []
    gens = forest.generations
    for g, gen in enumerate(gens, start=1):
        # structure: disjoint within a generation, nested in the previous one
        cov = np.zeros(lat.n_leaves, dtype=int)
        for J in gen:
            cov[lat.leaf_slice(J)] += 1
        for J in gen:
            if cov[lat.leaf_slice(J)].max() > 1:
                out.append(LemmaViolation("Overlap", J, g))
        if g > 1:
            prev = gens[g - 2]
            for J in gen:
                if not any(P != J and lat.contains(P, J) for P in prev):
                    out.append(LemmaViolation("NotNested", J, g))
    for g, gen in enumerate(gens, start=1):
        nxt = gens[g] if g < len(gens) else []
        in_next = _covered(lat, nxt) if nxt else np.zeros(lat.n, dtype=bool)
        for J in gen:
            r = level_rank(low[J])
            if r is None:
                out.append(LemmaViolation("OutsideLevelSet", J, g))
                continue
            a = avg[J]
            if a > 2.0 ** (r + 1) * (1 + AVG_TOL):
                out.append(LemmaViolation("AverageTooLarge", J, g, f"{a} > 2^{r + 1}"))
            if a < 2.0 ** r * (1 - AVG_TOL):
                out.append(LemmaViolation("AverageTooSmall", J, g, f"{a} < 2^{r}"))
            for I in lat.subtree(J):
                if not in_next[I] and avg[I] > 2.0 ** (r + 2) * (1 + AVG_TOL):
                    out.append(LemmaViolation("StoppedTooLate", I, g, f"inside {J}"))
            inner = sum(lat.measure[I] for I in nxt if lat.contains(J, I))
            if inner > 0.5 * lat.measure[J] * (1 + AVG_TOL):
                out.append(LemmaViolation("NoHalving", J, g, f"{inner} > |J|/2"))
    return out


def carleson_excess(lat: Lattice, forest: StoppingForest) -> float:
    """max over nodes I of Σ_{J in forest, J⊆I}|J| / |I| (at most 2 by the lemma)."""
    mass = np.zeros(lat.n)
    for _, J in forest.members():
        mass[J] += lat.measure[J]
    total = mass.copy()
    for d in range(lat.max_depth, 0, -1):
        lvl = lat.levels[d]
        np.add.at(total, lat.parent[lvl], total[lvl])
    return float(np.max(total / lat.measure))
