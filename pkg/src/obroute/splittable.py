"""Deterministic splittable oblivious routing.

A unit of demand from i to j is shipped by spreading mass from i with k walk
steps, then regathering it onto j with k step-reversing stochastic operators.
The per-pair flow is the antisymmetrized sum of per-step traffic matrices; it
depends only on the graph, never on the demand matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import DemandError, GraphInputError
from .evaluation import CongestionReport, make_congestion_report
from .graph import Graph
from .spectral import SpectralProfile, routing_profile
from .util import parallel_map
from .validation import check_connected, check_demands, check_nonnegative_vector


def pointwise_mul(v, M) -> np.ndarray:
    """Row scaling (v * M)_xy = v_x M_xy."""
    vec = np.asarray(v, dtype=float)
    mat = np.asarray(M, dtype=float)
    if vec.ndim != 1 or mat.shape != (vec.size, vec.size):
        raise ValueError("pointwise_mul expects v of length n and an n x n matrix")
    return vec[:, None] * mat


def _fallback_rows(graph: Graph) -> np.ndarray:
    """Row x: 1/d_x on the support of x's incident edges (and loop, if present)."""
    support = graph.capacity_matrix > 0
    return support / graph.degree_array[:, None]


def row_norm(M, graph: Graph) -> np.ndarray:
    """Normalize rows to sum 1; a zero row x falls back to (1/d_x) * edge indicator."""
    mat = np.asarray(M, dtype=float)
    if mat.shape != (graph.n, graph.n):
        raise ValueError(f"matrix shape {mat.shape} does not match graph with n={graph.n}")
    if (mat < 0).any():
        raise ValueError("row_norm expects a nonnegative matrix")
    sums = mat.sum(axis=1)
    zero = sums == 0
    safe = np.where(zero, 1.0, sums)
    out = mat / safe[:, None]
    if zero.any():
        out[zero] = _fallback_rows(graph)[zero]
    return out


def reverse_operator(v, A, graph: Graph) -> np.ndarray:
    """Stochastic step operator M with (vA) M = v; rows respect the edge support.

    M_yx is proportional to the share of mass at y that arrived from x when the
    previous distribution was v, i.e. M = row_norm((v * A)^T).
    """
    vec = check_nonnegative_vector(v, graph.n, name="distribution")
    return row_norm(pointwise_mul(vec, A).T, graph)


@dataclass(frozen=True)
class SequentialTrace:
    """Per-pair trajectory: vectors[s] = v^(s) for s = 0..2k, operators[s] drives step s+1."""

    source: int
    target: int
    vectors: np.ndarray
    operators: tuple[np.ndarray, ...]

    @property
    def steps(self) -> int:
        return len(self.operators)


def compute_policy(
    graph: Graph,
    profile: SpectralProfile,
    store_traces: bool = False,
    threads: int | None = None,
) -> tuple[dict[tuple[int, int], np.ndarray], dict[tuple[int, int], SequentialTrace] | None]:
    """Flow matrices r_ij for every ordered pair of a (possibly lazified) graph.

    Forward steps share the walk matrix; the k regathering operators depend only on
    the target j, so work is grouped per target. Returns (policy, traces) where
    traces is None unless requested.
    """
    check_connected(graph)
    if profile.k is None:
        raise GraphInputError("profile must carry a walk length k; use routing_profile()")
    k = profile.k
    n = graph.n
    A = graph.transition_matrix

    powers = [np.eye(n)]
    for _ in range(k):
        powers.append(powers[-1] @ A)
    forward_prefix = sum(powers[:k])  # row i: sum_{s<k} e_i A^s

    def per_target(j: int):
        reverse_ops = [reverse_operator(powers[k - s][j], A, graph) for s in range(1, k + 1)]
        backward = np.empty((k + 1, n, n))
        backward[0] = powers[k]  # rows i: v^(k) for every source
        for s in range(1, k + 1):
            backward[s] = backward[s - 1] @ reverse_ops[s - 1]
        flows = {}
        traces = {}
        for i in range(n):
            if i == j:
                continue
            traffic = forward_prefix[i][:, None] * A
            for s in range(1, k + 1):
                traffic = traffic + backward[s - 1][i][:, None] * reverse_ops[s - 1]
            flows[(i, j)] = traffic - traffic.T
            if store_traces:
                vectors = np.vstack([p[i] for p in powers] + [backward[s][i] for s in range(1, k + 1)])
                traces[(i, j)] = SequentialTrace(i, j, vectors, tuple([A] * k + reverse_ops))
        return flows, traces

    policy: dict[tuple[int, int], np.ndarray] = {}
    all_traces: dict[tuple[int, int], SequentialTrace] = {}
    for flows, traces in parallel_map(per_target, range(n), threads):
        policy.update(flows)
        all_traces.update(traces)
    return policy, (all_traces if store_traces else None)


def _offdiag_capacity(graph: Graph) -> np.ndarray:
    C = graph.capacity_matrix.copy()
    np.fill_diagonal(C, 0.0)
    return C


def congestion(graph: Graph, demands, policy: Mapping[tuple[int, int], np.ndarray]) -> CongestionReport:
    """Per-edge congestion of the policy under a demand matrix.

    Edge load is sum_ij D_ij |r_ij(e)| divided by the edge capacity; self-loops
    carry no congestion (antisymmetry already zeroes the diagonal).
    """
    D = check_demands(demands, graph.n)
    load = np.zeros((graph.n, graph.n))
    for (i, j), flow in policy.items():
        w = D[i, j]
        if w:
            load += w * np.abs(flow)
    per_edge = np.array([load[u, v] / float(graph.pair_capacity[(u, v)]) for u, v in graph.edge_pairs])
    return make_congestion_report(graph, per_edge)


def sequential_congestion(graph: Graph, demands, traces: Mapping[tuple[int, int], SequentialTrace]) -> np.ndarray:
    """Directed per-step congestion matrices, shape (2k, n, n); diagonal is zero."""
    D = check_demands(demands, graph.n)
    if not traces:
        raise ValueError("no traces supplied")
    steps = next(iter(traces.values())).steps
    caps = _offdiag_capacity(graph)
    out = np.zeros((steps, graph.n, graph.n))
    for (i, j), trace in traces.items():
        if trace.vectors.shape[1] != graph.n:
            raise ValueError("trace does not match graph size")
        if trace.steps != steps:
            raise ValueError("traces disagree on step count")
        w = D[i, j]
        if not w:
            continue
        for s in range(steps):
            out[s] += w * (trace.vectors[s][:, None] * trace.operators[s])
    np.divide(out, caps[None, :, :], out=out, where=caps[None, :, :] > 0)
    out[:, caps == 0] = 0.0
    for s in range(steps):
        np.fill_diagonal(out[s], 0.0)
    return out


def rw_congestion(v, graph: Graph, steps: int) -> np.ndarray:
    """Congestion of a bare k-step walk started from mass profile v, shape (steps, n, n).

    Step s on directed edge (x, y) carries (v A^{s-1})_x A_xy; the max over all steps
    and edges is attained at step 1 and equals max_x v_x / d_x.
    """
    vec = check_nonnegative_vector(v, graph.n, name="mass profile")
    if steps < 1:
        raise ValueError("need at least one step")
    A = graph.transition_matrix
    caps = _offdiag_capacity(graph)
    out = np.zeros((steps, graph.n, graph.n))
    current = vec
    for s in range(steps):
        traffic = current[:, None] * A
        np.divide(traffic, caps, out=out[s], where=caps > 0)
        np.fill_diagonal(out[s], 0.0)
        current = current @ A
    return out


def _positive_path(f: np.ndarray, source: int, target: int, tol: float) -> list[tuple[int, int]] | None:
    n = f.shape[0]
    prev = [-1] * n
    prev[source] = source
    stack = [source]
    while stack and prev[target] == -1:
        x = stack.pop()
        for y in range(n):
            if prev[y] == -1 and f[x, y] > tol:
                prev[y] = x
                stack.append(y)
    if prev[target] == -1:
        return None
    hops = []
    y = target
    while y != source:
        hops.append((prev[y], y))
        y = prev[y]
    return hops[::-1]


def cycle_mass(r: np.ndarray, source: int, target: int, tol: float = 1e-12) -> float:
    """Directed flow mass left after peeling every source-to-target path.

    The policy flows are reported as constructed, cycles included; this measures
    the circulation part without cancelling it.
    """
    f = np.maximum(np.asarray(r, dtype=float), 0.0)
    while True:
        hops = _positive_path(f, source, target, tol)
        if hops is None:
            break
        bottleneck = min(f[a, b] for a, b in hops)
        for a, b in hops:
            f[a, b] -= bottleneck
    return float(f[f > tol].sum())


class SplittableRouter(BaseEstimator):
    """Estimator for the splittable oblivious routing policy.

    fit() consumes only the graph (lazifying it when that shrinks the walk
    spectrum) and precomputes one flow matrix per ordered vertex pair; demands
    appear only in predict()/congestion(), which keeps the policy oblivious.

    Parameters
    ----------
    store_traces : keep per-pair step vectors and operators for diagnostics.
    threads : worker cap for the per-target policy loop (None = all cores).
    """

    def __init__(self, store_traces: bool = False, threads: int | None = None):
        self.store_traces = store_traces
        self.threads = threads

    def fit(self, graph: Graph, y=None) -> "SplittableRouter":
        if not isinstance(graph, Graph):
            raise TypeError("fit expects a Graph")
        check_connected(graph)
        self.input_graph_ = graph
        self.graph_, self.profile_ = routing_profile(graph)
        self.policy_, self.traces_ = compute_policy(
            self.graph_, self.profile_, store_traces=self.store_traces, threads=self.threads
        )
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "policy_"):
            raise NotFittedError("this SplittableRouter is not fitted; call fit(graph) first")

    def predict(self, demands) -> np.ndarray:
        """Per-edge utilization vector, aligned with graph_.edge_pairs."""
        return self.congestion(demands).utilization

    def congestion(self, demands) -> CongestionReport:
        self._check_fitted()
        return congestion(self.graph_, demands, self.policy_)

    def flow(self, source: int, target: int) -> np.ndarray:
        self._check_fitted()
        if source == target:
            raise DemandError("no flow is defined from a vertex to itself")
        return self.policy_[(source, target)]
