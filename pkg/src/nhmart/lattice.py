"""Finite measured forests used as interval lattices.

A node stands for an interval; only its measure and its place in the tree are
stored. Nodes are addressed by their position in the build order (``0..n-1``);
the original integer ids are kept for serialization and error messages.
Leaves are ordered depth first, so the leaf order follows the children order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import LATTICE_RULES, LatticeError, UnknownNode

REL_TOL = 1e-12


@dataclass(frozen=True)
class NodeSpec:
    id: int
    parent: int | None
    measure: float
    generation: int | None = None


@dataclass(frozen=True)
class LatticeSpec:
    nodes: tuple[NodeSpec, ...]

    @classmethod
    def from_parents(cls, parents: Sequence[int | None], measures: Sequence[float],
                     generations: Sequence[int | None] | None = None) -> "LatticeSpec":
        """Node ``i`` gets id ``i``; ``parents[i]`` is an id or None."""
        gens = generations if generations is not None else [None] * len(parents)
        return cls(tuple(NodeSpec(i, None if p is None else int(p), float(m), g)
                         for i, (p, m, g) in enumerate(zip(parents, measures, gens))))

    def to_dict(self) -> dict:
        out = []
        for nd in self.nodes:
            rec = {"id": nd.id, "parent": nd.parent, "measure": nd.measure}
            if nd.generation is not None:
                rec["generation"] = nd.generation
            out.append(rec)
        return {"nodes": out}

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec":
        nodes = []
        for rec in data["nodes"]:
            gen = rec.get("generation")
            nodes.append(NodeSpec(int(rec["id"]),
                                  None if rec.get("parent") is None else int(rec["parent"]),
                                  float(rec["measure"]),
                                  None if gen is None else int(gen)))
        return cls(tuple(nodes))


@dataclass(frozen=True)
class Violation:
    rule: str
    node: int
    detail: str = ""

    def __str__(self):
        return f"{self.rule}({self.node}){': ' + self.detail if self.detail else ''}"


def _structure(spec: LatticeSpec):
    """Index map, parent positions, ordered children and the violations found so far."""
    violations: list[Violation] = []
    index: dict[int, int] = {}
    for pos, nd in enumerate(spec.nodes):
        if nd.id in index:
            violations.append(Violation("DuplicateId", nd.id))
        else:
            index[nd.id] = pos
    n = len(spec.nodes)
    parent = np.full(n, -1, dtype=np.int64)
    children: list[list[int]] = [[] for _ in range(n)]
    for pos, nd in enumerate(spec.nodes):
        if nd.parent is None:
            continue
        if nd.parent not in index:
            violations.append(Violation("UnknownParent", nd.id, f"parent {nd.parent}"))
            continue
        parent[pos] = index[nd.parent]
        children[index[nd.parent]].append(pos)
    return index, parent, children, violations


def _reachable(parent: np.ndarray, children: list[list[int]]) -> np.ndarray:
    seen = np.zeros(len(parent), dtype=bool)
    stack = [i for i in range(len(parent)) if parent[i] < 0]
    while stack:
        i = stack.pop()
        if seen[i]:
            continue
        seen[i] = True
        stack.extend(children[i])
    return seen


def validate_spec(spec: LatticeSpec) -> list[Violation]:
    index, parent, children, violations = _structure(spec)
    # with broken parent links reachability is meaningless
    if all(v.rule != "UnknownParent" for v in violations):
        seen = _reachable(parent, children)
        for pos in np.flatnonzero(~seen):
            violations.append(Violation("CycleDetected", spec.nodes[pos].id))
        if not seen.all():
            return violations
    nodes = spec.nodes
    for pos, nd in enumerate(nodes):
        if not (math.isfinite(nd.measure) and nd.measure > 0):
            violations.append(Violation("NonPositiveMeasure", nd.id, f"measure {nd.measure!r}"))
    for pos, nd in enumerate(nodes):
        kids = children[pos]
        if len(kids) == 1:
            violations.append(Violation("SingleChild", nd.id))
        if kids:
            total = math.fsum(nodes[k].measure for k in kids)
            if abs(total - nd.measure) > REL_TOL * abs(nd.measure):
                violations.append(Violation("MeasureMismatch", nd.id,
                                            f"children sum {total!r} vs {nd.measure!r}"))
    if all(v.rule != "UnknownParent" for v in violations):
        gen = _generations(spec, parent, children)
        for pos in range(len(nodes)):
            if parent[pos] >= 0 and gen[pos] <= gen[parent[pos]]:
                violations.append(Violation("GenerationOrder", nodes[pos].id,
                                            f"{gen[pos]} <= parent's {gen[parent[pos]]}"))
    return violations


def _generations(spec, parent, children) -> np.ndarray:
    n = len(spec.nodes)
    depth = np.zeros(n, dtype=np.int64)
    order = _bfs(parent, children)
    for i in order:
        if parent[i] >= 0:
            depth[i] = depth[parent[i]] + 1
    return np.array([nd.generation if nd.generation is not None else depth[i]
                     for i, nd in enumerate(spec.nodes)], dtype=np.int64)


def _bfs(parent, children) -> list[int]:
    order = [i for i in range(len(parent)) if parent[i] < 0]
    k = 0
    while k < len(order):
        order.extend(children[order[k]])
        k += 1
    return order


class Lattice:
    """Validated measured forest. Build with :func:`build_lattice`."""

    def __init__(self, spec: LatticeSpec):
        index, parent, children, _ = _structure(spec)
        self.spec = spec
        self.ids = np.array([nd.id for nd in spec.nodes], dtype=np.int64)
        self._index = index
        self.n = len(spec.nodes)
        self.parent = parent
        self.children = tuple(np.array(c, dtype=np.int64) for c in children)
        self.nchildren = np.array([len(c) for c in children], dtype=np.int64)
        self.measure = np.array([nd.measure for nd in spec.nodes], dtype=float)
        self.generation = _generations(spec, parent, children)
        self.roots = np.flatnonzero(parent < 0)
        self.internal = np.flatnonzero(self.nchildren > 0)

        depth = np.zeros(self.n, dtype=np.int64)
        for i in _bfs(parent, children):
            if parent[i] >= 0:
                depth[i] = depth[parent[i]] + 1
        self.depth = depth
        self.max_depth = int(depth.max()) if self.n else 0
        self.levels = tuple(np.flatnonzero(depth == d) for d in range(self.max_depth + 1))

        leaves: list[int] = []
        paths: list[list[int]] = []
        for r in self.roots:
            stack = [(int(r), [int(r)])]
            while stack:
                i, path = stack.pop()
                if not children[i]:
                    leaves.append(i)
                    paths.append(path)
                else:
                    for c in reversed(children[i]):
                        stack.append((c, path + [c]))
        self.leaves = np.array(leaves, dtype=np.int64)
        self.n_leaves = len(leaves)
        self.leaf_pos = np.full(self.n, -1, dtype=np.int64)
        self.leaf_pos[self.leaves] = np.arange(self.n_leaves)
        self.w = self.measure[self.leaves]
        self.path = np.full((self.n_leaves, self.max_depth + 1), -1, dtype=np.int64)
        for k, pth in enumerate(paths):
            self.path[k, :len(pth)] = pth
        # leaves under a node are contiguous in depth-first order
        first = np.arange(self.n_leaves, dtype=float)
        lo = self.node_min(first).astype(np.int64)
        hi = (-self.node_min(-first)).astype(np.int64) + 1
        self.lo, self.hi = lo, hi
        for arr in (self.parent, self.nchildren, self.measure, self.generation, self.depth,
                    self.leaves, self.leaf_pos, self.w, self.path, self.lo, self.hi):
            arr.setflags(write=False)

    # -- navigation -------------------------------------------------------
    def index(self, node_id: int) -> int:
        try:
            return self._index[int(node_id)]
        except KeyError:
            raise UnknownNode(f"no node with id {node_id}") from None

    def check_node(self, node) -> int:
        node = int(node)
        if not 0 <= node < self.n:
            raise UnknownNode(f"node {node} not in lattice of {self.n} nodes")
        return node

    def is_leaf(self, node: int) -> bool:
        return self.nchildren[node] == 0

    def contains(self, outer: int, inner: int) -> bool:
        """True when ``inner`` is ``outer`` or one of its descendants."""
        return self.lo[outer] <= self.lo[inner] and self.hi[inner] <= self.hi[outer] \
            and self.depth[inner] >= self.depth[outer]

    def subtree(self, node: int) -> list[int]:
        out, stack = [], [node]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(self.children[i].tolist())
        return out

    def leaf_slice(self, node: int) -> slice:
        return slice(int(self.lo[node]), int(self.hi[node]))

    # -- vectorized tree sweeps ------------------------------------------
    def node_sums(self, leaf_vals) -> np.ndarray:
        """Sum of leaf values under every node, accumulated bottom-up."""
        leaf_vals = np.asarray(leaf_vals, dtype=float)
        out = np.zeros((self.n,) + leaf_vals.shape[1:])
        out[self.leaves] = leaf_vals
        for d in range(self.max_depth, 0, -1):
            lvl = self.levels[d]
            np.add.at(out, self.parent[lvl], out[lvl])
        return out

    def averages(self, leaf_vals) -> np.ndarray:
        leaf_vals = np.asarray(leaf_vals, dtype=float)
        w = self.w.reshape((-1,) + (1,) * (leaf_vals.ndim - 1))
        m = self.measure.reshape((-1,) + (1,) * (leaf_vals.ndim - 1))
        return self.node_sums(leaf_vals * w) / m

    def node_min(self, leaf_vals) -> np.ndarray:
        out = np.full(self.n, np.inf)
        out[self.leaves] = leaf_vals
        for d in range(self.max_depth, 0, -1):
            lvl = self.levels[d]
            np.minimum.at(out, self.parent[lvl], out[lvl])
        return out

    def push_down(self, node_vals) -> np.ndarray:
        """Leaf values of Σ_I node_vals[I]·1_I, accumulated top-down."""
        acc = np.array(node_vals, dtype=float, copy=True)
        for d in range(1, self.max_depth + 1):
            lvl = self.levels[d]
            acc[lvl] += acc[self.parent[lvl]]
        return acc[self.leaves]

    def gather_path(self, node_vals) -> np.ndarray:
        """Array [leaf, depth, ...] of node values along each root-to-leaf path, 0 past the leaf."""
        node_vals = np.asarray(node_vals, dtype=float)
        padded = np.concatenate([node_vals, np.zeros((1,) + node_vals.shape[1:])])
        return padded[self.path]

    # -- serialization ------------------------------------------------------
    def to_spec(self) -> LatticeSpec:
        return self.spec

    def to_json(self) -> str:
        return json.dumps(self.spec.to_dict())

    def __repr__(self):
        return f"Lattice(nodes={self.n}, leaves={self.n_leaves}, roots={len(self.roots)})"


def validate(obj: Lattice | LatticeSpec) -> list[Violation]:
    spec = obj.spec if isinstance(obj, Lattice) else obj
    return validate_spec(spec)


def build_lattice(spec: LatticeSpec | dict) -> Lattice:
    if isinstance(spec, dict):
        spec = LatticeSpec.from_dict(spec)
    if not spec.nodes:
        raise LatticeError("empty lattice")
    problems = validate_spec(spec)
    if problems:
        cls = LATTICE_RULES.get(problems[0].rule, LatticeError)
        raise cls("; ".join(str(v) for v in problems))
    return Lattice(spec)


def lattice_from_json(text: str) -> Lattice:
    return build_lattice(LatticeSpec.from_dict(json.loads(text)))


def load_lattice(path: str | Path) -> Lattice:
    return lattice_from_json(Path(path).read_text())


def from_parents(parents: Sequence[int | None], measures: Sequence[float],
                 generations=None) -> Lattice:
    return build_lattice(LatticeSpec.from_parents(parents, measures, generations))


class _TreeBuilder:
    """Accumulates nodes in depth-first preorder so ids equal positions."""

    def __init__(self):
        self.parents: list[int | None] = []
        self.measures: list[float] = []

    def add(self, parent: int | None, measure: float) -> int:
        self.parents.append(parent)
        self.measures.append(float(measure))
        return len(self.parents) - 1

    def build(self) -> Lattice:
        return from_parents(self.parents, self.measures)


def uniform_radic(r: int, depth: int, total: float = 1.0) -> Lattice:
    if int(r) != r or r < 2:
        raise LatticeError(f"branching factor must be an integer >= 2, got {r}")
    if depth < 0 or not total > 0:
        raise LatticeError("depth must be >= 0 and total positive")
    tb = _TreeBuilder()

    def grow(parent, level):
        node = tb.add(parent, total / r ** level)
        if level < depth:
            for _ in range(r):
                grow(node, level + 1)

    grow(None, 0)
    return tb.build()


def random_lattice(rng: np.random.Generator, max_depth: int = 6, max_children: int = 3,
                   leaf_prob: float = 0.35, max_nodes: int = 200, total: float = 1.0,
                   n_roots: int = 1) -> Lattice:
    """Random proper lattice; children measures are random splits of the parent."""
    tb = _TreeBuilder()
    count = [0]

    def grow(parent, measure, level):
        node = tb.add(parent, measure)
        count[0] += 1
        if level >= max_depth or count[0] >= max_nodes:
            return
        if level > 0 and rng.random() < leaf_prob:
            return
        c = int(rng.integers(2, max_children + 1))
        split = np.maximum(rng.dirichlet(np.ones(c)), 0.02)
        split /= split.sum()
        for s in split:
            grow(node, measure * s, level + 1)

    for _ in range(n_roots):
        grow(None, total * float(rng.uniform(0.5, 2.0)) if n_roots > 1 else total, 0)
    return tb.build()


def ids_of(lat: Lattice, nodes: Iterable[int]) -> list[int]:
    return [int(lat.ids[i]) for i in nodes]
