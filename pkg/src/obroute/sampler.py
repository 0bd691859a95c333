"""Random-walk path sample space and two-leg path selection.

From every vertex x the space stores ceil(m * pi_x) walks of length k, bucketed by
unordered endpoint pair with the walk's origin remembered. Routing x -> y picks a
stationary-random intermediate r, one stored walk from bucket {x, r} and one from
{r, y} (reversing stored walks whose origin is the far endpoint), and concatenates
them into a 2k-step path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GraphInputError
from .graph import Graph
from .spectral import SpectralProfile, routing_profile
from .util import substream
from .validation import check_connected

_MAX_CONDITIONED_TRIES = 200_000


def _transition_cdf(graph: Graph) -> np.ndarray:
    cdf = np.cumsum(graph.transition_matrix, axis=1)
    cdf[:, -1] = 1.0  # guard against rounding drift at the top bin
    return cdf


def _run_walks(cdf: np.ndarray, origins: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Simulate all walks jointly; each trajectory depends only on its own uniforms."""
    total, k = uniforms.shape
    walks = np.empty((total, k + 1), dtype=np.int32)
    walks[:, 0] = origins
    pos = origins.astype(np.int32, copy=True)
    for step in range(k):
        u = uniforms[:, step]
        nxt = np.empty(total, dtype=np.int32)
        order = np.argsort(pos, kind="stable")
        sorted_pos = pos[order]
        bounds = np.searchsorted(sorted_pos, np.arange(cdf.shape[0] + 1))
        for x in range(cdf.shape[0]):
            rows = order[bounds[x]:bounds[x + 1]]
            if rows.size:
                nxt[rows] = np.searchsorted(cdf[x], u[rows], side="right")
        pos = nxt
        walks[:, step + 1] = pos
    return walks


@dataclass(frozen=True, eq=False)
class PathSpace:
    """Immutable bucketed walk collection for one (graph, seed)."""

    graph: Graph
    profile: SpectralProfile
    m: int
    seed: int
    walks: np.ndarray
    origins: np.ndarray
    buckets: dict[int, np.ndarray]

    @property
    def k(self) -> int:
        return int(self.profile.k)

    @property
    def total_walks(self) -> int:
        return int(self.walks.shape[0])

    def bucket_rows(self, x: int, y: int) -> np.ndarray:
        a, b = (x, y) if x <= y else (y, x)
        return self.buckets.get(a * self.graph.n + b, _EMPTY_ROWS)

    def empty_bucket_fraction(self) -> float:
        """Fraction of unordered endpoint pairs (including x == y) with no stored walk."""
        n = self.graph.n
        pairs = n * (n + 1) // 2
        filled = len(self.buckets)
        return (pairs - filled) / pairs

    def leg_from(self, x: int, row: int) -> np.ndarray:
        """Stored walk `row` oriented to start at x (x must be one of its endpoints)."""
        path = self.walks[row]
        if self.origins[row] == x:
            return path.copy()
        if path[-1] != x:
            raise ValueError(f"walk {row} does not touch vertex {x}")
        return path[::-1].copy()

    def to_json(self) -> dict:
        n = self.graph.n
        buckets = {}
        for code in sorted(self.buckets):
            a, b = divmod(code, n)
            buckets[f"{a}-{b}"] = self.walks[self.buckets[code]].tolist()
        return {
            "m": self.m,
            "k": self.k,
            "seed": self.seed,
            "buckets": buckets,
        }


_EMPTY_ROWS = np.empty(0, dtype=np.int64)


def walk_budget(n: int, pi_min: float) -> int:
    """m = ceil(24 ln n / pi_min^2); per-vertex counts are ceil(m * pi_x)."""
    if n < 2:
        raise GraphInputError("sample space needs n >= 2")
    return math.ceil(24.0 * math.log(n) / (pi_min * pi_min))


def build_sample_space(graph: Graph, profile: SpectralProfile, seed: int) -> PathSpace:
    """Sample the walk collection for a routed (possibly lazified) graph.

    Walk uniforms come from one labeled substream per origin vertex, so the result
    is independent of construction order and identical for identical (graph, seed).
    """
    check_connected(graph)
    if profile.k is None:
        raise GraphInputError("profile must carry a walk length k; use routing_profile()")
    if not profile.lambda_bar < 1.0:
        raise GraphInputError("sample space needs lambda_bar < 1")
    n = graph.n
    pi = profile.pi
    m = walk_budget(n, profile.pi_min)
    k = profile.k
    counts = [math.ceil(m * float(p)) for p in pi]
    origins = np.repeat(np.arange(n, dtype=np.int32), counts)
    blocks = [substream(seed, "walks", x).random((counts[x], k)) for x in range(n)]
    uniforms = np.vstack(blocks)
    walks = _run_walks(_transition_cdf(graph), origins, uniforms)

    ends = walks[:, -1].astype(np.int64)
    starts = origins.astype(np.int64)
    codes = np.minimum(starts, ends) * n + np.maximum(starts, ends)
    order = np.argsort(codes, kind="stable")
    buckets: dict[int, np.ndarray] = {}
    sorted_codes = codes[order]
    cut = np.flatnonzero(np.diff(sorted_codes)) + 1
    for chunk in np.split(order, cut):
        buckets[int(codes[chunk[0]])] = chunk
    return PathSpace(graph, profile, m, int(seed), walks, origins, buckets)


def _draw_stationary(cum_pi: np.ndarray, rng: np.random.Generator) -> int:
    return int(np.searchsorted(cum_pi, rng.random(), side="right"))


def _conditioned_walk(cdf: np.ndarray, start: int, end: int, k: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Fresh k-step walk from `start` conditioned (by rejection) to end at `end`."""
    path = np.empty(k + 1, dtype=np.int32)
    for attempt in range(1, _MAX_CONDITIONED_TRIES + 1):
        path[0] = start
        pos = start
        for step, u in enumerate(rng.random(k)):
            pos = int(np.searchsorted(cdf[pos], u, side="right"))
            path[step + 1] = pos
        if pos == end:
            return path.copy(), attempt
    raise RuntimeError(f"could not sample a walk from {start} to {end} in {_MAX_CONDITIONED_TRIES} tries")


def _select_leg(space: PathSpace, start: int, end: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Uniform stored walk from bucket {start, end} oriented from start; resample if empty."""
    rows = space.bucket_rows(start, end)
    if rows.size:
        return space.leg_from(start, int(rows[rng.integers(rows.size)])), 0
    path, tries = _conditioned_walk(_transition_cdf(space.graph), start, end, space.k, rng)
    return path, tries


@dataclass(frozen=True)
class TwoLegPath:
    """Concatenation of two k-step legs through a stationary-random intermediate."""

    source: int
    target: int
    via: int
    vertices: np.ndarray
    resamples: int = 0

    @property
    def k(self) -> int:
        return (len(self.vertices) - 1) // 2

    @property
    def first_leg(self) -> np.ndarray:
        return self.vertices[: self.k + 1]

    @property
    def second_leg(self) -> np.ndarray:
        return self.vertices[self.k:]


def select_path(space: PathSpace, x: int, y: int, seed: int) -> TwoLegPath:
    """Two-leg path from x to y; deterministic per (space, x, y, seed).

    Redraws the intermediate up to 3 times while either bucket is empty, then
    falls back to fresh conditioned walks; all fallback activity is counted in
    the resamples field.
    """
    n = space.graph.n
    if not (0 <= x < n and 0 <= y < n) or x == y:
        raise ValueError(f"need two distinct vertices in [0,{n}), got ({x},{y})")
    rng = substream(seed, "two-leg", x, y)
    cum_pi = np.cumsum(space.profile.pi)
    cum_pi[-1] = 1.0
    resamples = 0
    via = -1
    for attempt in range(3):
        via = _draw_stationary(cum_pi, rng)
        rows_a = space.bucket_rows(x, via)
        rows_b = space.bucket_rows(via, y)
        if rows_a.size and rows_b.size:
            resamples += attempt
            first = space.leg_from(x, int(rows_a[rng.integers(rows_a.size)]))
            second = space.leg_from(via, int(rows_b[rng.integers(rows_b.size)]))
            return TwoLegPath(x, y, via, np.concatenate([first, second[1:]]), resamples)
    resamples += 3
    first, tries_a = _select_leg(space, x, via, rng)
    second, tries_b = _select_leg(space, via, y, rng)
    resamples += tries_a + tries_b
    return TwoLegPath(x, y, via, np.concatenate([first, second[1:]]), resamples)


def draw_leg_assignment(space: PathSpace, rng: np.random.Generator) -> tuple[list[np.ndarray], np.ndarray, int]:
    """One first leg per vertex toward an independent stationary-random intermediate.

    Returns (legs, intermediates, resamples); legs[x] is a (k+1)-vertex walk from x.
    """
    n = space.graph.n
    cum_pi = np.cumsum(space.profile.pi)
    cum_pi[-1] = 1.0
    legs: list[np.ndarray] = []
    vias = np.empty(n, dtype=int)
    resamples = 0
    for x in range(n):
        via = _draw_stationary(cum_pi, rng)
        rows = space.bucket_rows(x, via)
        tries = 0
        while not rows.size and tries < 3:
            via = _draw_stationary(cum_pi, rng)
            rows = space.bucket_rows(x, via)
            tries += 1
        resamples += tries
        leg, extra = _select_leg(space, x, via, rng)
        resamples += extra
        vias[x] = via
        legs.append(leg)
    return legs, vias, resamples


# -- edge loads -------------------------------------------------------------------


def path_real_edges(vertices: Sequence[int]) -> set[tuple[int, int]]:
    """Distinct non-loop edges touched by a vertex path."""
    edges = set()
    arr = np.asarray(vertices)
    for a, b in zip(arr[:-1], arr[1:]):
        if a != b:
            edges.add((int(min(a, b)), int(max(a, b))))
    return edges


@dataclass(frozen=True)
class EdgeLoad:
    """Stationary-weighted leg loads.

    values[e] = (1/pi_max) * sum_x pi_x * [leg_x touches e], over real edges; on a
    regular graph this is the count of legs through e. edge_mass/loop_mass carry the
    per-step traversal mass (multiplicity, loops included), whose total is exactly
    k/pi_max for any leg assignment.
    """

    edges: tuple[tuple[int, int], ...]
    values: np.ndarray
    edge_mass: np.ndarray
    loop_mass: np.ndarray

    @property
    def mass_total(self) -> float:
        return float(self.edge_mass.sum() + self.loop_mass.sum())

    def to_csv(self) -> str:
        lines = ["edge,W_e"]
        for (a, b), w in zip(self.edges, self.values):
            lines.append(f"{a}-{b},{w:.12g}")
        return "\n".join(lines) + "\n"


def edge_load(space: PathSpace, legs: Sequence[Sequence[int]]) -> EdgeLoad:
    graph = space.graph
    n = graph.n
    if len(legs) != n:
        raise ValueError(f"need one leg per vertex, got {len(legs)} for n={n}")
    pairs = graph.edge_pairs
    index = {pair: i for i, pair in enumerate(pairs)}
    pi = space.profile.pi
    weight = pi / pi.max()
    values = np.zeros(len(pairs))
    edge_mass = np.zeros(len(pairs))
    loop_mass = np.zeros(n)
    for x, leg in enumerate(legs):
        arr = np.asarray(leg)
        if arr.ndim != 1 or arr.size != space.k + 1 or arr[0] != x:
            raise ValueError(f"leg {x} is not a k-step walk starting at {x}")
        touched = set()
        for a, b in zip(arr[:-1], arr[1:]):
            a, b = int(a), int(b)
            if a == b:
                if graph.loop_capacity(a) <= 0:
                    raise ValueError(f"leg {x} pauses at {a} but the graph has no loop there")
                loop_mass[a] += weight[x]
                continue
            key = (a, b) if a < b else (b, a)
            if key not in index:
                raise ValueError(f"leg {x} uses ({a},{b}) which is not an edge")
            edge_mass[index[key]] += weight[x]
            touched.add(key)
        for key in touched:
            values[index[key]] += weight[x]
    return EdgeLoad(pairs, values, edge_mass, loop_mass)


def tail_threshold(n: int, k: int, d_max: float, r: float) -> float:
    """Edge-load tail cutoff 9(2+r) ln n + (18k/d_max) * k."""
    return 9.0 * (2.0 + r) * math.log(n) + (18.0 * k / d_max) * k


@dataclass(frozen=True)
class LoadStatistics:
    """Monte Carlo edge-load summary over fresh sample spaces and leg assignments."""

    edges: tuple[tuple[int, int], ...]
    mean_first: np.ndarray
    mean_second: np.ndarray | None
    mass_total_mean: float
    expected_mass_total: float
    load_min: float
    load_max: float
    load_ratio: float
    range_low: float
    range_high: float
    thresholds: dict[float, float]
    tail_counts: dict[float, int]
    trials: int
    k: int
    d_max: float
    resamples: int

    def to_json(self) -> dict:
        return {
            "edges": [list(e) for e in self.edges],
            "mean_first_leg": self.mean_first.tolist(),
            "mean_second_leg": None if self.mean_second is None else self.mean_second.tolist(),
            "mass_total_mean": self.mass_total_mean,
            "expected_mass_total": self.expected_mass_total,
            "load_min": self.load_min,
            "load_max": self.load_max,
            "load_ratio": self.load_ratio,
            "range": [self.range_low, self.range_high],
            "thresholds": {str(r): t for r, t in self.thresholds.items()},
            "tail_counts": {str(r): c for r, c in self.tail_counts.items()},
            "trials": self.trials,
            "k": self.k,
            "d_max": self.d_max,
            "resamples": self.resamples,
        }

    def to_csv(self) -> str:
        """Mean first-leg load per edge as (edge, W_e) rows."""
        lines = ["edge,W_e"]
        for (a, b), w in zip(self.edges, self.mean_first):
            lines.append(f"{a}-{b},{w:.12g}")
        return "\n".join(lines) + "\n"


def load_statistics(
    graph: Graph,
    trials: int,
    seed: int,
    second_legs: bool = True,
    tail_r: tuple[float, ...] = (1.0, 2.0),
) -> LoadStatistics:
    """Estimate E[W_e] per edge over `trials` fresh spaces and leg assignments.

    First-leg indicator means drive the ratio and range fields; the per-step
    traversal mass (loop steps included) drives mass_total_mean, which equals
    k/pi_max identically. d_max and the tail thresholds use the input graph's
    degrees, not the lazified ones.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    d_max = float(graph.degree_array.max())
    routed, profile = routing_profile(graph)
    n = graph.n
    k = int(profile.k)
    thresholds = {r: tail_threshold(n, k, d_max, r) for r in tail_r}
    tail_counts = {r: 0 for r in tail_r}

    first_sum = None
    second_sum = None
    mass_sum = 0.0
    resamples = 0
    for t in range(trials):
        child_seed = int(substream(seed, "space-seed", t).integers(0, 2**63))
        space = build_sample_space(routed, profile, child_seed)
        rng = substream(seed, "legs", t)
        legs, vias, rs = draw_leg_assignment(space, rng)
        resamples += rs
        load = edge_load(space, legs)
        first_sum = load.values if first_sum is None else first_sum + load.values
        mass_sum += load.mass_total
        for r in tail_r:
            if (load.values > thresholds[r]).any():
                tail_counts[r] += 1
        if second_legs:
            rng2 = substream(seed, "second-legs", t)
            sigma = rng2.permutation(n)
            pi = profile.pi
            weight = pi / pi.max()
            vals = np.zeros(len(graph.edge_pairs))
            index = {pair: i for i, pair in enumerate(graph.edge_pairs)}
            for x in range(n):
                leg, extra = _select_leg(space, int(vias[x]), int(sigma[x]), rng2)
                resamples += extra
                for key in path_real_edges(leg):
                    vals[index[key]] += weight[x]
            second_sum = vals if second_sum is None else second_sum + vals

    mean_first = first_sum / trials
    mean_second = None if second_sum is None else second_sum / trials
    load_min = float(mean_first.min())
    load_max = float(mean_first.max())
    return LoadStatistics(
        edges=graph.edge_pairs,
        mean_first=mean_first,
        mean_second=mean_second,
        mass_total_mean=mass_sum / trials,
        expected_mass_total=k / profile.pi_max,
        load_min=load_min,
        load_max=load_max,
        load_ratio=math.inf if load_min == 0 else load_max / load_min,
        range_low=(2.0 / 3.0) * k / d_max,
        range_high=6.0 * k / d_max,
        thresholds=thresholds,
        tail_counts=tail_counts,
        trials=trials,
        k=k,
        d_max=d_max,
        resamples=resamples,
    )
