"""Capacitated undirected multigraphs: construction, generators, file IO, exact expansion.

Vertices are 0..n-1. Parallel edges are kept as separate records distinguished by a
`key`; self-loops never appear in input and are only attached by lazification.
Capacities are exact rationals; derived float matrices are cached per graph.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphInputError
from .util import substream


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    capacity: Fraction
    key: int = 0


def _as_capacity(value) -> Fraction:
    if isinstance(value, Fraction):
        cap = value
    elif isinstance(value, (int, np.integer)):
        cap = Fraction(int(value))
    elif isinstance(value, (float, np.floating)):
        if not math.isfinite(float(value)):
            raise GraphInputError(f"capacity must be finite, got {value}")
        cap = Fraction(float(value))
    elif isinstance(value, str):
        try:
            cap = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphInputError(f"cannot parse capacity {value!r}") from exc
    else:
        raise GraphInputError(f"unsupported capacity type {type(value).__name__}")
    if cap <= 0:
        raise GraphInputError(f"capacity must be positive, got {cap}")
    return cap


class Graph:
    """Immutable capacitated multigraph with optional per-vertex self-loop capacity."""

    def __init__(self, n: int, edges: Sequence[Edge], loops: Sequence[Fraction] | None = None):
        n = int(n)
        if n < 1:
            raise GraphInputError("graph needs at least one vertex")
        edges = tuple(edges)
        for e in edges:
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise GraphInputError(f"edge ({e.u},{e.v}) out of vertex range [0,{n})")
            if e.u == e.v:
                raise GraphInputError("self-loops are attached by lazification, not as edges")
            if e.u > e.v:
                raise GraphInputError("edge records must be stored with u <= v")
            if e.capacity <= 0:
                raise GraphInputError("edge capacity must be positive")
        if loops is None:
            loops = (Fraction(0),) * n
        else:
            loops = tuple(Fraction(c) for c in loops)
            if len(loops) != n:
                raise GraphInputError("loop capacity list must have one entry per vertex")
            if any(c < 0 for c in loops):
                raise GraphInputError("loop capacities must be nonnegative")
        self.n = n
        self.edges = edges
        self.loops = loops

    # -- derived structure ---------------------------------------------------

    @cached_property
    def pair_capacity(self) -> dict[tuple[int, int], Fraction]:
        caps: dict[tuple[int, int], Fraction] = {}
        for e in self.edges:
            caps[(e.u, e.v)] = caps.get((e.u, e.v), Fraction(0)) + e.capacity
        return caps

    @cached_property
    def edge_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.pair_capacity))

    @cached_property
    def degrees(self) -> tuple[Fraction, ...]:
        deg = [Fraction(0)] * self.n
        for e in self.edges:
            deg[e.u] += e.capacity
            deg[e.v] += e.capacity
        for x, cap in enumerate(self.loops):
            deg[x] += cap
        return tuple(deg)

    @cached_property
    def degree_array(self) -> np.ndarray:
        return np.array([float(d) for d in self.degrees])

    @cached_property
    def capacity_matrix(self) -> np.ndarray:
        """Symmetric float capacity matrix; loop capacity on the diagonal (counted once)."""
        C = np.zeros((self.n, self.n))
        for (u, v), cap in self.pair_capacity.items():
            C[u, v] = C[v, u] = float(cap)
        for x, cap in enumerate(self.loops):
            C[x, x] = float(cap)
        return C

    @cached_property
    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic walk matrix: step x->y with probability c(x,y)/d_x."""
        d = self.degree_array
        if (d <= 0).any():
            raise GraphInputError("every vertex needs positive degree for a walk matrix")
        return self.capacity_matrix / d[:, None]

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.pair_capacity:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(tuple(sorted(s)) for s in adj)

    @cached_property
    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            x = stack.pop()
            for y in self.neighbors[x]:
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
        return bool(seen.all())

    @cached_property
    def has_loops(self) -> bool:
        return any(cap > 0 for cap in self.loops)

    def loop_capacity(self, x: int) -> Fraction:
        return self.loops[x]

    def with_loops(self, loops: Sequence[Fraction]) -> "Graph":
        return Graph(self.n, self.edges, loops)

    def __repr__(self) -> str:
        tag = ", lazy loops" if self.has_loops else ""
        return f"Graph(n={self.n}, edges={len(self.edges)}{tag})"

    def to_json(self) -> dict:
        def cap_json(cap: Fraction):
            return int(cap) if cap.denominator == 1 else str(cap)

        obj = {"n": self.n, "edges": [[e.u, e.v, cap_json(e.capacity)] for e in self.edges]}
        if self.has_loops:
            obj["loops"] = [cap_json(c) for c in self.loops]
        return obj


def build_graph(edge_list: Iterable, n: int | None = None) -> Graph:
    """Build a graph from (u, v, capacity) triples; repeated pairs become parallel edges."""
    records: list[Edge] = []
    keys: dict[tuple[int, int], int] = {}
    max_vertex = -1
    for item in edge_list:
        try:
            u, v, cap = item
        except (TypeError, ValueError) as exc:
            raise GraphInputError(f"edge entry must be (u, v, capacity), got {item!r}") from exc
        u, v = int(u), int(v)
        if u == v:
            raise GraphInputError(f"self-edge at vertex {u} is not allowed in input")
        if u < 0 or v < 0:
            raise GraphInputError("vertex ids must be nonnegative")
        a, b = (u, v) if u < v else (v, u)
        key = keys.get((a, b), 0)
        keys[(a, b)] = key + 1
        records.append(Edge(a, b, _as_capacity(cap), key))
        max_vertex = max(max_vertex, b)
    if n is None:
        if max_vertex < 0:
            raise GraphInputError("cannot infer vertex count from an empty edge list")
        n = max_vertex + 1
    return Graph(n, records)


# -- generators ---------------------------------------------------------------


def hypercube(dim: int) -> Graph:
    """Unit-capacity hypercube on 2**dim vertices; ids adjacent iff they differ in one bit."""
    if dim < 1:
        raise GraphInputError("hypercube dimension must be >= 1")
    n = 1 << dim
    edges = [(x, x ^ (1 << b), 1) for x in range(n) for b in range(dim) if x < (x ^ (1 << b))]
    return build_graph(edges, n)


def complete(n: int) -> Graph:
    if n < 2:
        raise GraphInputError("complete graph needs n >= 2")
    return build_graph([(u, v, 1) for u in range(n) for v in range(u + 1, n)], n)


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphInputError("cycle needs n >= 3")
    return build_graph([(x, (x + 1) % n, 1) for x in range(n)], n)


def grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise GraphInputError("grid dimensions must be >= 1")
    edges = []
    for r in range(rows):
        for c in range(cols):
            x = r * cols + c
            if c + 1 < cols:
                edges.append((x, x + 1, 1))
            if r + 1 < rows:
                edges.append((x, x + cols, 1))
    return build_graph(edges, rows * cols)


def random_regular(n: int, d: int, seed: int) -> Graph:
    """Uniform-ish simple connected d-regular graph by the pairing model with rejection."""
    if not (0 < d < n):
        raise GraphInputError("need 0 < d < n for a regular graph")
    if (n * d) % 2:
        raise GraphInputError("n*d must be even")
    rng = substream(seed, "random-regular", n, d)
    for _ in range(20000):
        stubs = np.repeat(np.arange(n), d)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        u = np.minimum(pairs[:, 0], pairs[:, 1])
        v = np.maximum(pairs[:, 0], pairs[:, 1])
        if (u == v).any():
            continue
        codes = u.astype(np.int64) * n + v
        if len(np.unique(codes)) != len(codes):
            continue
        g = build_graph([(int(a), int(b), 1) for a, b in zip(u, v)], n)
        if g.is_connected:
            return g
    raise RuntimeError(f"pairing model failed to produce a simple connected {d}-regular graph")


_GENERATORS = {
    "hypercube": (hypercube, 1),
    "complete": (complete, 1),
    "cycle": (cycle, 1),
    "grid": (grid, 2),
    "random_regular": (random_regular, 3),
}


def generate(spec: str) -> Graph:
    """Build a named graph from a colon-separated spec, e.g. 'random_regular:16:4:7'."""
    parts = spec.split(":")
    name = parts[0]
    if name not in _GENERATORS:
        known = ", ".join(sorted(_GENERATORS))
        raise GraphInputError(f"unknown generator {name!r}; known kinds: {known}")
    fn, arity = _GENERATORS[name]
    args = parts[1:]
    if len(args) != arity:
        raise GraphInputError(f"generator {name} takes {arity} integer argument(s), got {len(args)}")
    try:
        values = [int(a) for a in args]
    except ValueError as exc:
        raise GraphInputError(f"generator arguments must be integers: {spec!r}") from exc
    return fn(*values)


# -- file formats --------------------------------------------------------------


def parse_edge_list(text: str) -> Graph:
    """Whitespace-separated 'u v capacity' lines; '#' starts a comment; capacity may be p/q."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise GraphInputError(f"line {lineno}: expected 'u v capacity', got {raw!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise GraphInputError(f"line {lineno}: vertex ids must be integers") from exc
        edges.append((u, v, fields[2]))
    return build_graph(edges)


def graph_from_json(obj: dict) -> Graph:
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise GraphInputError("graph JSON must be an object with 'n' and 'edges'")
    edges = []
    for entry in obj["edges"]:
        if len(entry) != 3:
            raise GraphInputError(f"edge entry must be [u, v, capacity], got {entry!r}")
        u, v, cap = entry
        # JSON numbers arrive as floats; reinterpret their decimal text exactly.
        if isinstance(cap, float):
            cap = Fraction(repr(cap))
        edges.append((u, v, cap))
    return build_graph(edges, n=int(obj["n"]))


def load_graph(path: str) -> Graph:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphInputError(f"invalid graph JSON in {path}: {exc}") from exc
        return graph_from_json(obj)
    return parse_edge_list(text)


# -- unit-capacity expansion ----------------------------------------------------


@dataclass(frozen=True)
class ExpansionResult:
    """Unit-capacity multigraph together with the projection back to source edges.

    edge_map[i] is the index (into the source graph's edges) that expanded edge i
    projects to; scale is the common denominator all capacities were multiplied by.
    """

    graph: Graph
    edge_map: tuple[int, ...]
    scale: int


def unit_capacity_expansion(graph: Graph, max_edges: int = 200_000) -> ExpansionResult:
    """Scale capacities to integers and split every edge into parallel unit edges.

    Degrees scale uniformly, so walk transition probabilities are unchanged. Loop
    capacity is scaled but kept as a single loop record (loops carry no congestion).
    """
    denominators = [e.capacity.denominator for e in graph.edges]
    denominators += [c.denominator for c in graph.loops if c > 0]
    scale = math.lcm(*denominators) if denominators else 1
    counts = [e.capacity * scale for e in graph.edges]
    total = sum(int(c) for c in counts)
    if total > max_edges:
        raise GraphInputError(
            f"exact expansion needs {total} unit edges (> {max_edges}); "
            "capacity representation is too fine to expand"
        )
    records: list[Edge] = []
    edge_map: list[int] = []
    key_counter: dict[tuple[int, int], int] = {}
    for idx, (e, count) in enumerate(zip(graph.edges, counts)):
        for _ in range(int(count)):
            key = key_counter.get((e.u, e.v), 0)
            key_counter[(e.u, e.v)] = key + 1
            records.append(Edge(e.u, e.v, Fraction(1), key))
            edge_map.append(idx)
    loops = tuple(c * scale for c in graph.loops)
    return ExpansionResult(Graph(graph.n, records, loops), tuple(edge_map), scale)
