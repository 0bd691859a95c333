"""Synchronous store-and-forward packet simulation over sampled two-leg paths.

One packet per vertex follows its assigned vertex path, one step per round. A real
edge carries at most one packet per round (optionally one per direction); pause
steps on lazy loops spend the round without occupying any edge. Contention resolves
deterministically in favor of the packet with the smallest source id.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SimulationError
from .graph import Graph
from .sampler import PathSpace, build_sample_space, select_path
from .spectral import routing_profile
from .util import substream
from .validation import check_permutation


def _check_path(graph: Graph, path: Sequence[int], who: int) -> list[int]:
    verts = [int(v) for v in path]
    if not verts:
        raise SimulationError(f"packet {who} has an empty path")
    for v in verts:
        if not 0 <= v < graph.n:
            raise SimulationError(f"packet {who} leaves the vertex range at {v}")
    for a, b in zip(verts[:-1], verts[1:]):
        if a == b:
            if graph.loop_capacity(a) <= 0:
                raise SimulationError(f"packet {who} pauses at {a} but there is no loop")
        elif graph.pair_capacity.get((min(a, b), max(a, b))) is None:
            raise SimulationError(f"packet {who} uses missing edge ({a},{b})")
    return verts


def _resource_key(a: int, b: int, per_direction: bool) -> tuple[int, int]:
    return (a, b) if per_direction else (min(a, b), max(a, b))


def _resource_label(resource: tuple[int, int], per_direction: bool) -> str:
    a, b = resource
    return f"{a}->{b}" if per_direction else f"{a}-{b}"


@dataclass(frozen=True)
class SimulationResult:
    """Arrival rounds per packet plus contention diagnostics.

    peak_queue maps each contended edge resource to the largest number of packets
    that wanted to cross it in a single round.
    """

    rounds: int
    arrivals: np.ndarray
    waits: np.ndarray
    peak_queue: dict[tuple[int, int], int]
    per_direction: bool
    trace: tuple[tuple[tuple[int, int, int], ...], ...] | None = None

    @property
    def delay(self) -> int:
        return int(self.arrivals.max()) if self.arrivals.size else 0

    def to_json(self) -> dict:
        return {
            "delay": self.delay,
            "arrivals": self.arrivals.tolist(),
            "peak_queue": {
                _resource_label(res, self.per_direction): peak
                for res, peak in sorted(self.peak_queue.items())
            },
            "rounds": self.rounds,
            "waits": self.waits.tolist(),
            "per_direction": self.per_direction,
        }

    def trace_rows(self) -> list[list[int]]:
        """Flat (round, packet, u, v) rows for CSV export."""
        if self.trace is None:
            raise ValueError("simulation was run without record_trace=True")
        rows = []
        for rnd, moves in enumerate(self.trace, start=1):
            for packet, a, b in moves:
                rows.append([rnd, packet, a, b])
        return rows


def simulate(
    graph: Graph,
    paths: Sequence[Sequence[int]],
    per_direction: bool = False,
    record_trace: bool = False,
) -> SimulationResult:
    """Run the synchronous forwarding protocol until every packet arrives.

    paths[i] is packet i's vertex path; a length-1 path is a fixed point that is
    delivered at round 0 and never enters the network. Priority among packets
    contending for one edge is the smallest (source, index) pair.
    """
    verts = [_check_path(graph, p, i) for i, p in enumerate(paths)]
    npackets = len(verts)
    pos = [0] * npackets
    goal = [len(v) - 1 for v in verts]
    arrivals = np.zeros(npackets, dtype=int)
    waits = np.zeros(npackets, dtype=int)
    order = sorted(range(npackets), key=lambda i: (verts[i][0], i))
    max_len = max(goal) if npackets else 0
    max_rounds = max(1, 2 * max_len * max(npackets, 1) + max_len)

    peaks: dict[tuple[int, int], int] = {}
    trace: list[tuple[tuple[int, int, int], ...]] = []
    rounds = 0
    while any(pos[i] < goal[i] for i in range(npackets)):
        if rounds >= max_rounds:
            raise SimulationError(f"no delivery after {max_rounds} rounds")
        rounds += 1
        wanting = Counter(
            _resource_key(verts[i][pos[i]], verts[i][pos[i] + 1], per_direction)
            for i in range(npackets)
            if pos[i] < goal[i] and verts[i][pos[i]] != verts[i][pos[i] + 1]
        )
        for resource, count in wanting.items():
            if count > peaks.get(resource, 0):
                peaks[resource] = count
        busy: set[tuple[int, int]] = set()
        moves: list[tuple[int, int, int]] = []
        for i in order:
            if pos[i] >= goal[i]:
                continue
            a, b = verts[i][pos[i]], verts[i][pos[i] + 1]
            if a == b:
                pos[i] += 1
            else:
                resource = _resource_key(a, b, per_direction)
                if resource in busy:
                    waits[i] += 1
                    continue
                busy.add(resource)
                pos[i] += 1
            moves.append((i, a, b))
            if pos[i] == goal[i]:
                arrivals[i] = rounds
        if record_trace:
            trace.append(tuple(moves))
    return SimulationResult(
        rounds=rounds,
        arrivals=arrivals,
        waits=waits,
        peak_queue=peaks,
        per_direction=per_direction,
        trace=tuple(trace) if record_trace else None,
    )


def capacity_invariant_ok(result: SimulationResult) -> bool:
    """Recheck from the trace that no edge resource was crossed twice in one round."""
    if result.trace is None:
        raise ValueError("simulation was run without record_trace=True")
    for moves in result.trace:
        seen: set[tuple[int, int]] = set()
        for _, a, b in moves:
            if a == b:
                continue
            resource = _resource_key(a, b, result.per_direction)
            if resource in seen:
                return False
            seen.add(resource)
    return True


def coincidence_count(graph: Graph, paths: Sequence[Sequence[int]], per_direction: bool = False) -> int:
    """Max over edge resources of the total number of traversals across all paths."""
    counts: Counter = Counter()
    for p in paths:
        arr = [int(v) for v in p]
        for a, b in zip(arr[:-1], arr[1:]):
            if a != b:
                counts[_resource_key(a, b, per_direction)] += 1
    return max(counts.values()) if counts else 0


@dataclass(frozen=True)
class PermutationRun:
    """One permutation routed over a sampled path space and simulated."""

    sigma: np.ndarray
    paths: tuple[tuple[int, ...], ...]
    result: SimulationResult
    k: int
    coincidence: int
    resamples: int

    @property
    def delay_bound(self) -> int:
        # deterministic: every wait round consumes a distinct crossing of a
        # congested edge on the waiting packet's own path
        return 2 * self.k * max(self.coincidence, 1)

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma.tolist(),
            "paths": [list(p) for p in self.paths],
            "k": self.k,
            "coincidence": self.coincidence,
            "delay_bound": self.delay_bound,
            "resamples": self.resamples,
            "simulation": self.result.to_json(),
        }


def route_permutation(
    graph: Graph,
    sigma: Sequence[int],
    seed: int,
    per_direction: bool = False,
    space: PathSpace | None = None,
    record_trace: bool = False,
) -> PermutationRun:
    """Route the permutation demand x -> sigma(x) along sampled two-leg paths."""
    sig = check_permutation(sigma, graph.n)
    if space is None:
        routed, profile = routing_profile(graph)
        space = build_sample_space(routed, profile, seed)
    paths: list[tuple[int, ...]] = []
    resamples = 0
    for x in range(graph.n):
        if sig[x] == x:
            paths.append((x,))
            continue
        chosen = select_path(space, x, int(sig[x]), seed)
        resamples += chosen.resamples
        paths.append(tuple(int(v) for v in chosen.vertices))
    result = simulate(space.graph, paths, per_direction=per_direction, record_trace=record_trace)
    coincidence = coincidence_count(space.graph, paths, per_direction=per_direction)
    return PermutationRun(
        sigma=sig,
        paths=tuple(paths),
        result=result,
        k=space.k,
        coincidence=coincidence,
        resamples=resamples,
    )


@dataclass(frozen=True)
class DelayStatistics:
    """Delay summary over random permutations, with the regular-graph normalization.

    normalized divides each delay by 2k ln n + (2k)^2/d; it is None when the graph
    is not regular (the reference form assumes a single degree).
    """

    delays: np.ndarray
    bounds: np.ndarray
    coincidences: np.ndarray
    k: int
    violations: int
    runs: int
    denominator: float | None

    @property
    def max_delay(self) -> int:
        return int(self.delays.max())

    @property
    def mean_delay(self) -> float:
        return float(self.delays.mean())

    @property
    def normalized(self) -> np.ndarray | None:
        if self.denominator is None:
            return None
        return self.delays / self.denominator

    def to_json(self) -> dict:
        normalized = self.normalized
        return {
            "runs": self.runs,
            "k": self.k,
            "delays": self.delays.tolist(),
            "bounds": self.bounds.tolist(),
            "coincidences": self.coincidences.tolist(),
            "max_delay": self.max_delay,
            "mean_delay": self.mean_delay,
            "violations": self.violations,
            "denominator": self.denominator,
            "normalized": None if normalized is None else normalized.tolist(),
        }


def delay_statistics(graph: Graph, runs: int, seed: int, per_direction: bool = False) -> DelayStatistics:
    """Delays of random permutations over fresh spaces, against the 2k * coincidence bound."""
    if runs < 1:
        raise ValueError("need at least one run")
    routed, profile = routing_profile(graph)
    k = int(profile.k)
    degrees = graph.degree_array
    denominator: float | None = None
    if float(degrees.max()) == float(degrees.min()):
        d = float(degrees.max())
        denominator = 2 * k * math.log(graph.n) + (2 * k) ** 2 / d
    delays = np.zeros(runs, dtype=int)
    bounds = np.zeros(runs, dtype=int)
    coincidences = np.zeros(runs, dtype=int)
    violations = 0
    for t in range(runs):
        sigma = substream(seed, "perm", t).permutation(graph.n)
        child_seed = int(substream(seed, "space-seed", t).integers(0, 2**63))
        space = build_sample_space(routed, profile, child_seed)
        run = route_permutation(graph, sigma, child_seed, per_direction=per_direction, space=space)
        delays[t] = run.result.delay
        bounds[t] = run.delay_bound
        coincidences[t] = run.coincidence
        if run.result.delay > run.delay_bound:
            violations += 1
    return DelayStatistics(
        delays=delays,
        bounds=bounds,
        coincidences=coincidences,
        k=k,
        violations=violations,
        runs=runs,
        denominator=denominator,
    )
