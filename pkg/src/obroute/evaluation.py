"""Exact min-congestion oracle (LP), demand generators, and statistical check helpers."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import BudgetExceededError, DemandError
from .graph import Graph
from .spectral import stationary_distribution
from .validation import check_connected, check_demands, check_permutation

DEFAULT_NODE_BUDGET = 24
DEFAULT_EDGE_BUDGET = 80
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class CongestionReport:
    """Per-edge utilization of a routing outcome, optionally compared to OPT."""

    edges: tuple[tuple[int, int], ...]
    utilization: np.ndarray
    max_congestion: float
    argmax_edge: tuple[int, int] | None
    opt: float | None = None
    opt_method: str | None = None
    ratio: float | None = None

    def with_opt(self, opt: float, method: str) -> "CongestionReport":
        ratio = 0.0 if self.max_congestion == 0 else (math.inf if opt == 0 else self.max_congestion / opt)
        return replace(self, opt=opt, opt_method=method, ratio=ratio)

    def to_json(self) -> dict:
        return {
            "per_edge": [
                {"u": u, "v": v, "utilization": val}
                for (u, v), val in zip(self.edges, self.utilization.tolist())
            ],
            "max_congestion": self.max_congestion,
            "argmax_edge": list(self.argmax_edge) if self.argmax_edge else None,
            "opt": self.opt,
            "opt_method": self.opt_method,
            "ratio": self.ratio,
        }


def make_congestion_report(graph: Graph, per_edge: np.ndarray) -> CongestionReport:
    pairs = graph.edge_pairs
    util = np.asarray(per_edge, dtype=float)
    if util.shape != (len(pairs),):
        raise ValueError("per-edge utilization length must match the graph's edge pairs")
    if util.size == 0 or util.max() == 0:
        return CongestionReport(pairs, util, 0.0, None)
    idx = int(util.argmax())
    return CongestionReport(pairs, util, float(util[idx]), pairs[idx])


# -- exact oracle ---------------------------------------------------------------


@dataclass(frozen=True)
class OptResult:
    """Optimal congestion value with a per-source flow certificate.

    flows[i] is an antisymmetric n x n matrix of net flow shipped from source i
    (aggregated over its destinations); method is 'lp-exact' or 'degree-lower-bound'.
    """

    value: float
    flows: dict[int, np.ndarray]
    method: str
    tol: float


def opt_congestion(
    graph: Graph,
    demands,
    tol: float = DEFAULT_TOL,
    node_budget: int = DEFAULT_NODE_BUDGET,
    edge_budget: int = DEFAULT_EDGE_BUDGET,
) -> OptResult:
    """Minimum achievable max edge congestion for a demand matrix (splittable flow).

    Solves min theta s.t. per-source flow conservation and
    sum_i |f_i(e)| <= theta * c(e), with two nonnegative direction variables per
    undirected edge per source. Commodities are aggregated by source; a path
    decomposition of each aggregate recovers per-destination flows with the same
    edge usage, so the optimum matches the per-commodity formulation.
    """
    check_connected(graph)
    D = check_demands(demands, graph.n)
    n = graph.n
    pairs = graph.edge_pairs
    m = len(pairs)
    if n > node_budget or m > edge_budget:
        raise BudgetExceededError(
            f"instance (n={n}, edges={m}) exceeds LP budget (n<={node_budget}, edges<={edge_budget})"
        )
    sources = [i for i in range(n) if D[i].sum() > 0]
    if not sources:
        return OptResult(0.0, {}, "lp-exact", tol)

    caps = np.array([float(graph.pair_capacity[p]) for p in pairs])
    num_vars = 1 + len(sources) * 2 * m  # theta first, then per-source direction pairs

    def var(s_idx: int, e_idx: int, backward: bool) -> int:
        return 1 + s_idx * 2 * m + 2 * e_idx + (1 if backward else 0)

    eq_rows, eq_cols, eq_vals = [], [], []
    b_eq = np.zeros(len(sources) * n)
    for s_idx, i in enumerate(sources):
        for e_idx, (u, v) in enumerate(pairs):
            fwd, bwd = var(s_idx, e_idx, False), var(s_idx, e_idx, True)
            row_u, row_v = s_idx * n + u, s_idx * n + v
            # f(u->v) leaves u and enters v; f(v->u) the reverse
            eq_rows += [row_u, row_v, row_v, row_u]
            eq_cols += [fwd, fwd, bwd, bwd]
            eq_vals += [1.0, -1.0, 1.0, -1.0]
        b_eq[s_idx * n + i] = D[i].sum()
        for j in range(n):
            if j != i:
                b_eq[s_idx * n + j] -= D[i, j]
    A_eq = sp.coo_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(sources) * n, num_vars))

    ub_rows, ub_cols, ub_vals = [], [], []
    for e_idx in range(m):
        ub_rows.append(e_idx)
        ub_cols.append(0)
        ub_vals.append(-caps[e_idx])
        for s_idx in range(len(sources)):
            for backward in (False, True):
                ub_rows.append(e_idx)
                ub_cols.append(var(s_idx, e_idx, backward))
                ub_vals.append(1.0)
    A_ub = sp.coo_matrix((ub_vals, (ub_rows, ub_cols)), shape=(m, num_vars))

    c = np.zeros(num_vars)
    c[0] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"congestion LP failed: {res.message}")

    flows: dict[int, np.ndarray] = {}
    for s_idx, i in enumerate(sources):
        F = np.zeros((n, n))
        for e_idx, (u, v) in enumerate(pairs):
            net = res.x[var(s_idx, e_idx, False)] - res.x[var(s_idx, e_idx, True)]
            F[u, v] = net
            F[v, u] = -net
        flows[i] = F
    return OptResult(float(res.x[0]), flows, "lp-exact", tol)


def opt_lower_bound_degree(graph: Graph, demands) -> float:
    """max_x of (total demand out of x)/d_x and (total demand into x)/d_x."""
    D = check_demands(demands, graph.n)
    d = graph.degree_array
    return float(max((D.sum(axis=1) / d).max(), (D.sum(axis=0) / d).max()))


def opt_or_bound(
    graph: Graph,
    demands,
    tol: float = DEFAULT_TOL,
    node_budget: int = DEFAULT_NODE_BUDGET,
    edge_budget: int = DEFAULT_EDGE_BUDGET,
) -> OptResult:
    """Exact LP optimum when within budget, otherwise the degree lower bound."""
    try:
        return opt_congestion(graph, demands, tol, node_budget, edge_budget)
    except BudgetExceededError:
        return OptResult(opt_lower_bound_degree(graph, demands), {}, "degree-lower-bound", tol)


# -- demand generators ------------------------------------------------------------


def permutation_demand(sigma, n: int | None = None) -> np.ndarray:
    arr = np.asarray(sigma, dtype=int)
    n = arr.size if n is None else n
    sigma = check_permutation(arr, n)
    D = np.zeros((n, n))
    for x, y in enumerate(sigma):
        if x != y:
            D[x, y] = 1.0
    return D


def adjacency_demand(graph: Graph) -> np.ndarray:
    """One unit from every vertex to each of its neighbors (both directions)."""
    D = np.zeros((graph.n, graph.n))
    for u, v in graph.edge_pairs:
        D[u, v] = D[v, u] = 1.0
    return D


def uniform_demand(n: int, volume: float = 1.0) -> np.ndarray:
    if volume < 0:
        raise DemandError("demand volume must be nonnegative")
    D = np.full((n, n), float(volume))
    np.fill_diagonal(D, 0.0)
    return D


def canonical_demand(graph: Graph, sigma) -> np.ndarray:
    """Row x ships pi_x / pi_max to sigma(x); the walk-proportional packet sizing."""
    pi = stationary_distribution(graph)
    sigma = check_permutation(sigma, graph.n)
    D = np.zeros((graph.n, graph.n))
    for x, y in enumerate(sigma):
        if x != y:
            D[x, y] = pi[x] / pi.max()
    return D


def random_demand(n: int, seed: int, density: float = 0.3, high: float = 1.0) -> np.ndarray:
    """Seeded sparse random demands: each off-diagonal entry is U(0, high] w.p. density."""
    from .util import substream

    if not (0 < density <= 1):
        raise DemandError("density must lie in (0, 1]")
    rng = substream(seed, "demand", n)
    mask = rng.random((n, n)) < density
    values = rng.random((n, n)) * high
    D = np.where(mask, values, 0.0)
    np.fill_diagonal(D, 0.0)
    return D


# -- performance ratio and tail checks ---------------------------------------------


@dataclass(frozen=True)
class PerformanceReport:
    """Worst observed CONG/OPT over a demand suite; a lower estimate of true performance."""

    ratios: tuple[float, ...]
    max_ratio: float
    witness_index: int | None
    opt_values: tuple[float, ...]
    congestion_values: tuple[float, ...]
    estimate_kind: str = "suite-lower-bound"


def performance_ratio(
    graph: Graph,
    congestion_fn: Callable[[np.ndarray], CongestionReport],
    demand_suite: Sequence[np.ndarray],
    tol: float = DEFAULT_TOL,
) -> PerformanceReport:
    ratios, opts, congs = [], [], []
    for D in demand_suite:
        opt = opt_congestion(graph, D, tol=tol)
        report = congestion_fn(D)
        congs.append(report.max_congestion)
        opts.append(opt.value)
        if report.max_congestion == 0:
            ratios.append(0.0)
        elif opt.value <= 0:
            raise DemandError("nonzero congestion with zero OPT; demand/oracle mismatch")
        else:
            ratios.append(report.max_congestion / opt.value)
    if not ratios:
        return PerformanceReport((), 0.0, None, (), ())
    worst = int(np.argmax(ratios))
    return PerformanceReport(tuple(ratios), float(ratios[worst]), worst, tuple(opts), tuple(congs))


@dataclass(frozen=True)
class ExceedanceReport:
    exceed_count: int
    trials: int
    frequency: float
    threshold: float
    prob_bound: float
    slack: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def chernoff_check(samples, threshold: float, prob_bound: float, slack: float = 3.0) -> ExceedanceReport:
    """Compare the empirical exceedance rate of per-trial statistics to slack * prob_bound."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("chernoff_check needs at least one sample")
    count = int((arr > threshold).sum())
    freq = count / arr.size
    return ExceedanceReport(
        exceed_count=count,
        trials=int(arr.size),
        frequency=freq,
        threshold=float(threshold),
        prob_bound=float(prob_bound),
        slack=float(slack),
        passed=bool(freq <= slack * prob_bound),
    )
