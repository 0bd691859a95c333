"""Single-path (unsplittable) oblivious routing over sampled two-leg paths.

Each ordered pair gets exactly one sampled path, chosen before any demand is seen.
The demand-side machinery here (row normalization, rank ordering, the per-edge
decomposition into rank waves) is diagnostic only; it never influences path choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import DemandError, GraphInputError
from .evaluation import CongestionReport, make_congestion_report, opt_or_bound, random_demand
from .graph import Graph
from .sampler import PathSpace, TwoLegPath, build_sample_space, path_real_edges, select_path, tail_threshold
from .spectral import routing_profile
from .util import parallel_map, substream
from .validation import check_demands


@dataclass(frozen=True, eq=False)
class UnsplittablePolicy:
    """One TwoLegPath per ordered vertex pair, fixed by (graph, seed)."""

    space: PathSpace
    seed: int
    paths: dict[tuple[int, int], TwoLegPath]

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def resamples(self) -> int:
        return sum(p.resamples for p in self.paths.values())

    def path(self, x: int, y: int) -> TwoLegPath:
        return self.paths[(x, y)]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "k": self.k,
            "resamples": self.resamples,
            "paths": {f"{x}->{y}": p.vertices.tolist() for (x, y), p in sorted(self.paths.items())},
        }


def build_policy(graph: Graph, seed: int, threads: int | None = None) -> UnsplittablePolicy:
    """Select one two-leg path for every ordered pair; deterministic per seed."""
    routed, profile = routing_profile(graph)
    space = build_sample_space(routed, profile, seed)
    pairs = [(x, y) for x in range(graph.n) for y in range(graph.n) if x != y]
    chosen = parallel_map(lambda p: select_path(space, p[0], p[1], seed), pairs, threads)
    return UnsplittablePolicy(space=space, seed=int(seed), paths=dict(zip(pairs, chosen)))


def _edge_index(graph: Graph) -> dict[tuple[int, int], int]:
    return {pair: i for i, pair in enumerate(graph.edge_pairs)}


def unsplittable_load(graph: Graph, demands: np.ndarray, policy: UnsplittablePolicy) -> np.ndarray:
    """Raw per-edge load sum_{x,y} D_xy * [e on gamma_xy], aligned with graph.edge_pairs."""
    D = check_demands(demands, graph.n)
    index = _edge_index(graph)
    load = np.zeros(len(graph.edge_pairs))
    for (x, y), path in policy.paths.items():
        vol = D[x, y]
        if vol <= 0:
            continue
        for key in path_real_edges(path.vertices):
            load[index[key]] += vol
    return load


def unsplittable_congestion(graph: Graph, demands: np.ndarray, policy: UnsplittablePolicy) -> CongestionReport:
    load = unsplittable_load(graph, demands, policy)
    caps = np.array([float(graph.pair_capacity[pair]) for pair in graph.edge_pairs])
    return make_congestion_report(graph, load / caps)


@dataclass(frozen=True)
class NormalizedDemandProfile:
    """Demand rescaled so every source's row is measured in units of its degree share."""

    scaled: np.ndarray
    max_entry: float
    spread: float
    d_max: float

    @property
    def opt_floor(self) -> float:
        # equals max_i sum_j D_ij / d_i, a congestion lower bound for any routing
        return self.max_entry * self.spread / self.d_max

    def to_json(self) -> dict:
        return {
            "max_entry": self.max_entry,
            "spread": self.spread,
            "d_max": self.d_max,
            "opt_floor": self.opt_floor,
        }


def normalized_profile(graph: Graph, demands: np.ndarray) -> NormalizedDemandProfile:
    """Scale row i by d_max/d_i; report the max entry M and spread s = maxrow/M in [1, n]."""
    D = check_demands(demands, graph.n)
    degrees = graph.degree_array
    if not (degrees > 0).all():
        raise GraphInputError("normalization needs strictly positive degrees")
    d_max = float(degrees.max())
    scaled = (d_max / degrees)[:, None] * D
    max_entry = float(scaled.max())
    if max_entry == 0.0:
        spread = 1.0  # zero demand: degenerate, pinned
    else:
        spread = min(max(float(scaled.sum(axis=1).max()) / max_entry, 1.0), float(graph.n))
    return NormalizedDemandProfile(scaled=scaled, max_entry=max_entry, spread=spread, d_max=d_max)


@dataclass(frozen=True)
class OrderedDemandView:
    """Per-source demands sorted descending, ties broken by destination id."""

    values: np.ndarray
    destinations: np.ndarray
    max_entry: float
    spread: float

    @property
    def ranks(self) -> int:
        return self.values.shape[1]

    def rank_cap(self, t: int) -> float:
        """Upper bound min(M, Ms/t) on any rank-t entry (t is 1-based)."""
        return min(self.max_entry, self.max_entry * self.spread / t)

    def to_json(self) -> dict:
        return {
            "values": self.values.tolist(),
            "destinations": self.destinations.tolist(),
            "max_entry": self.max_entry,
            "spread": self.spread,
        }


def ordered_view(scaled: np.ndarray) -> OrderedDemandView:
    """Sort each row of a normalized demand matrix, dropping the zero diagonal."""
    S = np.asarray(scaled, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DemandError("ordered view needs a square matrix")
    if (S < 0).any():
        raise DemandError("ordered view needs nonnegative entries")
    n = S.shape[0]
    values = np.empty((n, n - 1))
    destinations = np.empty((n, n - 1), dtype=int)
    cols = np.arange(n)
    for i in range(n):
        keep = cols[cols != i]
        row = S[i, keep]
        order = np.lexsort((keep, -row))
        values[i] = row[order]
        destinations[i] = keep[order]
    max_entry = float(S.max())
    if max_entry == 0.0:
        spread = 1.0
    else:
        spread = min(max(float(S.sum(axis=1).max()) / max_entry, 1.0), float(n))
    view = OrderedDemandView(values, destinations, max_entry, spread)
    for t in range(1, n):
        if t > spread and (values[:, t - 1] > view.rank_cap(t) + 1e-9).any():
            raise RuntimeError(f"rank-{t} entries exceed the Ms/t cap; sorting is broken")
    return view


def rank_wave_loads(
    graph: Graph,
    policy: UnsplittablePolicy,
    view: OrderedDemandView,
    first_leg_only: bool = False,
) -> np.ndarray:
    """Stationary-weighted path-membership loads W_e^(t), one row per rank t.

    W[t-1, e] = (1/pi_max) * sum_x pi_x * [gamma for (x, rank-t destination) touches e].
    """
    index = _edge_index(graph)
    pi = policy.space.profile.pi
    weight = pi / pi.max()
    W = np.zeros((view.ranks, len(graph.edge_pairs)))
    for t in range(view.ranks):
        for x in range(graph.n):
            path = policy.paths[(x, int(view.destinations[x, t]))]
            verts = path.first_leg if first_leg_only else path.vertices
            for key in path_real_edges(verts):
                W[t, index[key]] += weight[x]
    return W


@dataclass(frozen=True)
class RatioAudit:
    """Congestion-vs-OPT audit with the rank-wave decomposition certificate."""

    congestion: float
    opt: float
    ratio: float
    bound: float
    constant: float
    flagged: bool
    decomposition_ok: bool
    decomposition_margin: float
    load: np.ndarray
    wave_bound: np.ndarray
    spread: float
    max_entry: float
    opt_floor: float
    degree_bound: float

    def to_json(self) -> dict:
        return {
            "cong": self.congestion,
            "opt": self.opt,
            "ratio": self.ratio,
            "bound": self.bound,
            "flagged": self.flagged,
            "constant": self.constant,
            "constant_is_empirical": True,
            "decomposition_ok": self.decomposition_ok,
            "decomposition_margin": self.decomposition_margin,
            "spread": self.spread,
            "max_entry": self.max_entry,
            "opt_floor": self.opt_floor,
            "degree_bound": self.degree_bound,
        }


def ratio_audit(
    graph: Graph,
    demands: np.ndarray,
    policy: UnsplittablePolicy,
    opt: float,
    constant: float = 40.0,
) -> RatioAudit:
    """Audit one routed demand: ratio to OPT plus the per-edge rank decomposition.

    The decomposition upper-bounds the raw load on every edge by
    M * (sum_{t<=s} W_e^(t) + s * sum_{t>s} W_e^(t)/t); it must hold in every run.
    The ratio flag compares against constant * (d_max ln^2 n + k ln n), an empirical
    ceiling rather than a derived one.
    """
    D = check_demands(demands, graph.n)
    load = unsplittable_load(graph, D, policy)
    report = make_congestion_report(graph, load)
    cong = report.max_congestion
    if opt <= 0:
        if cong > 0:
            raise DemandError("cannot audit nonzero congestion against opt = 0")
        ratio = 0.0
    else:
        ratio = cong / opt

    prof = normalized_profile(graph, D)
    view = ordered_view(prof.scaled)
    W = rank_wave_loads(graph, policy, view)
    M, s = prof.max_entry, prof.spread
    ts = np.arange(1, view.ranks + 1)
    head = W[ts <= s].sum(axis=0)
    tail = (W[ts > s] / ts[ts > s, None]).sum(axis=0)
    wave_bound = M * (head + s * tail)
    margin = float((wave_bound - load).min()) if load.size else 0.0
    decomposition_ok = bool((load <= wave_bound + 1e-9).all())

    n = graph.n
    k = policy.k
    d_max = float(graph.degree_array.max())
    bound = constant * (d_max * math.log(n) ** 2 + k * math.log(n))
    row_out = (D.sum(axis=1) / graph.degree_array).max()
    row_in = (D.sum(axis=0) / graph.degree_array).max()
    return RatioAudit(
        congestion=cong,
        opt=float(opt),
        ratio=ratio,
        bound=bound,
        constant=constant,
        flagged=bool(ratio > bound),
        decomposition_ok=decomposition_ok,
        decomposition_margin=margin,
        load=load,
        wave_bound=wave_bound,
        spread=s,
        max_entry=M,
        opt_floor=prof.opt_floor,
        degree_bound=float(max(row_out, row_in)),
    )


@dataclass(frozen=True)
class RankTailReport:
    """Union-event frequency for rank-wave loads exceeding a tail threshold."""

    runs: int
    threshold: float
    exceedances: int
    r: float

    @property
    def frequency(self) -> float:
        return self.exceedances / self.runs

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "r": self.r,
            "threshold": self.threshold,
            "exceedances": self.exceedances,
            "frequency": self.frequency,
        }


def rank_tail_statistics(
    graph: Graph,
    runs: int,
    seed: int,
    r: float = 2.0,
    density: float = 0.3,
) -> RankTailReport:
    """Count runs where any rank wave puts more than the threshold on some edge.

    Each run draws a fresh policy and a fresh random demand; the event is
    exists t, exists e with W_e^(t) > 9(2+r) ln n + (18/d_max) k^2, using the
    input graph's d_max.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    n = graph.n
    d_max = float(graph.degree_array.max())
    exceedances = 0
    threshold = None
    for t in range(runs):
        child = int(substream(seed, "rank-tail", t).integers(0, 2**63))
        policy = build_policy(graph, child)
        if threshold is None:
            threshold = tail_threshold(n, policy.k, d_max, r)
        demand_seed = int(substream(seed, "rank-demand", t).integers(0, 2**63))
        D = random_demand(n, demand_seed, density=density)
        view = ordered_view(normalized_profile(graph, D).scaled)
        W = rank_wave_loads(graph, policy, view)
        if (W > threshold).any():
            exceedances += 1
    return RankTailReport(runs=runs, threshold=float(threshold), exceedances=exceedances, r=r)


class UnsplittableRouter(BaseEstimator):
    """Estimator wrapper: fit samples the path policy, predict scores demands.

    Parameters
    ----------
    random_state : seed for the path space and per-pair selections.
    threads : worker threads for policy construction (None = one per CPU).
    """

    def __init__(self, random_state: int = 0, threads: int | None = None):
        self.random_state = random_state
        self.threads = threads

    def fit(self, graph: Graph, demands=None) -> "UnsplittableRouter":
        self.input_graph_ = graph
        self.policy_ = build_policy(graph, self.random_state, self.threads)
        self.graph_ = self.policy_.space.graph
        self.profile_ = self.policy_.space.profile
        self.k_ = self.policy_.k
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "policy_"):
            raise NotFittedError("call fit(graph) before using the router")

    def path(self, x: int, y: int) -> TwoLegPath:
        self._check_fitted()
        return self.policy_.path(x, y)

    def predict(self, demands: np.ndarray) -> np.ndarray:
        """Per-edge utilization for a demand matrix, aligned with graph.edge_pairs."""
        self._check_fitted()
        return self.congestion(demands).utilization

    def congestion(self, demands: np.ndarray) -> CongestionReport:
        self._check_fitted()
        return unsplittable_congestion(self.input_graph_, demands, self.policy_)

    def audit(self, demands: np.ndarray, opt: float | None = None, constant: float = 40.0) -> RatioAudit:
        self._check_fitted()
        if opt is None:
            opt = opt_or_bound(self.input_graph_, demands).value
        return ratio_audit(self.input_graph_, demands, self.policy_, opt, constant)
