"""Invariant check runners shared by the CLI verify command and the test gate.

Each runner computes its measurements honestly and returns a CheckResult; nothing
here adjusts a threshold to make a check pass. Trial counts are parameters so the
CLI can run a quick pass while the test gate runs the full sample sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evaluation import (
    adjacency_demand,
    opt_congestion,
    opt_lower_bound_degree,
    permutation_demand,
    random_demand,
)
from .graph import Graph, build_graph, complete, cycle, hypercube, random_regular
from .packetsim import capacity_invariant_ok, route_permutation
from .sampler import build_sample_space, load_statistics, select_path
from .spectral import routing_profile, spectral
from .splittable import SplittableRouter, compute_policy, reverse_operator, rw_congestion
from .unsplittable import build_policy, rank_tail_statistics, ratio_audit
from .util import dumps_json, json_ready, substream


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        tail = f" [{self.detail}]" if self.detail else ""
        return f"{status} {self.name} ({shown}){tail}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": json_ready(self.measured),
            "detail": self.detail,
        }


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def standard_graphs() -> dict[str, Graph]:
    """The small fixed suite used by the walk-policy structure checks."""
    return {
        "complete:4": complete(4),
        "cycle:5": cycle(5),
        "hypercube:3": hypercube(3),
        "random_regular:10:3": random_regular(10, 3, seed=0),
    }


def random_capacitated_graph(seed: int, index: int, n_max: int = 32) -> Graph:
    """Seeded connected graph with capacities drawn from {1, 2, 3}."""
    rng = substream(seed, "verify-graph", index)
    n = int(rng.integers(4, n_max + 1))
    p = min(1.0, 2.2 * math.log(n) / n)
    for _ in range(500):
        mask = rng.random((n, n)) < p
        edges = [
            (i, j, int(rng.integers(1, 4)))
            for i in range(n)
            for j in range(i + 1, n)
            if mask[i, j]
        ]
        if len(edges) < n - 1:
            continue
        g = build_graph(edges, n)
        if g.is_connected:
            return g
        p = min(1.0, p * 1.3)  # densify until connected
    raise RuntimeError("could not draw a connected graph")


# -- walk-policy structure checks ---------------------------------------------------


def run_inversion(seed: int = 0, graphs_count: int = 100, n_max: int = 32, tol: float = 1e-9) -> CheckResult:
    """vA * reverse_operator(v, A) returns v; rows stochastic; support inside E."""
    worst_identity = 0.0
    worst_rows = 0.0
    support_ok = True
    for t in range(graphs_count):
        g = random_capacitated_graph(seed, t, n_max)
        v = substream(seed, "verify-v", t).random(g.n) + 1e-3
        A = g.transition_matrix
        M = reverse_operator(v, A, g)
        worst_identity = max(worst_identity, float(np.abs((v @ A) @ M - v).max()))
        worst_rows = max(worst_rows, float(np.abs(M.sum(axis=1) - 1.0).max()))
        if (M[g.capacity_matrix == 0] != 0).any():
            support_ok = False
    passed = worst_identity <= tol and worst_rows <= tol and support_ok
    return CheckResult(
        "inversion-identity",
        passed,
        {"graphs": graphs_count, "max_identity_err": worst_identity, "max_row_err": worst_rows, "support_ok": support_ok},
    )


def run_unit_flow(tol: float = 1e-9, threads: int | None = None) -> CheckResult:
    """Every pair's flow has divergence e_j - e_i, is antisymmetric, ends at e_j."""
    worst_div = 0.0
    worst_anti = 0.0
    worst_terminal = 0.0
    support_ok = True
    for name, g in standard_graphs().items():
        routed, profile = routing_profile(g)
        policy, traces = compute_policy(routed, profile, store_traces=True, threads=threads)
        caps = routed.capacity_matrix
        n = g.n
        for (i, j), r in policy.items():
            expect = np.zeros(n)
            expect[j] = 1.0
            expect[i] = -1.0
            worst_div = max(worst_div, float(np.abs(r.sum(axis=0) - expect).max()))
            worst_anti = max(worst_anti, float(np.abs(r + r.T).max()))
            off = (caps == 0) & ~np.eye(n, dtype=bool)
            if (r[off] != 0).any():
                support_ok = False
            terminal = traces[(i, j)].vectors[-1]
            e_j = np.zeros(n)
            e_j[j] = 1.0
            worst_terminal = max(worst_terminal, float(np.abs(terminal - e_j).max()))
    passed = worst_div <= tol and worst_anti <= tol and worst_terminal <= tol and support_ok
    return CheckResult(
        "unit-flow-terminal",
        passed,
        {"max_divergence_err": worst_div, "max_antisymmetry_err": worst_anti, "max_terminal_err": worst_terminal, "support_ok": support_ok},
    )


def run_domination(tol: float = 1e-9, threads: int | None = None) -> CheckResult:
    """Backward-phase vectors never exceed 3 e_j A^(k-s) entrywise."""
    worst = -math.inf
    for name, g in standard_graphs().items():
        routed, profile = routing_profile(g)
        _, traces = compute_policy(routed, profile, store_traces=True, threads=threads)
        k = profile.k
        A = routed.transition_matrix
        powers = [np.eye(g.n)]
        for _ in range(k):
            powers.append(powers[-1] @ A)
        for (i, j), trace in traces.items():
            for s in range(1, k + 1):
                v = trace.vectors[k + s]
                cap = 3.0 * powers[k - s][j]
                worst = max(worst, float((v - cap).max()))
    return CheckResult("domination", worst <= tol, {"max_excess": worst})


def run_backward_anchor(tol: float = 1e-9, threads: int | None = None) -> CheckResult:
    """e_j A^(k-s+1) applied to the step-(k+s) reverse operator returns e_j A^(k-s)."""
    worst = 0.0
    for name, g in standard_graphs().items():
        routed, profile = routing_profile(g)
        _, traces = compute_policy(routed, profile, store_traces=True, threads=threads)
        k = profile.k
        A = routed.transition_matrix
        powers = [np.eye(g.n)]
        for _ in range(k + 1):
            powers.append(powers[-1] @ A)
        for (i, j), trace in traces.items():
            for s in range(1, k + 1):
                M = trace.operators[k + s - 1]  # step k+s operator
                lhs = powers[k - s + 1][j] @ M
                worst = max(worst, float(np.abs(lhs - powers[k - s][j]).max()))
    return CheckResult("backward-anchor", worst <= tol, {"max_err": worst})


def run_max_principle(seed: int = 0, instances: int = 100, steps: int = 8, tol: float = 1e-9) -> CheckResult:
    """Per-step walk congestion peaks at step 1 with value max_x v_x/d_x."""
    worst = 0.0
    argmax_ok = True
    for t in range(instances):
        g = random_capacitated_graph(seed, 10_000 + t, 24)
        v = substream(seed, "maxp-v", t).random(g.n)
        cong = rw_congestion(v, g, steps)
        per_step = cong.reshape(steps, -1).max(axis=1)
        target = float((v / g.degree_array).max())
        worst = max(worst, abs(float(per_step[0]) - target), float(per_step.max()) - target)
        if per_step[0] + tol < per_step.max():
            argmax_ok = False
    return CheckResult(
        "max-principle",
        worst <= tol and argmax_ok,
        {"instances": instances, "max_err": worst, "argmax_at_step1": argmax_ok},
    )


# -- performance checks -------------------------------------------------------------


def _demand_suite(g: Graph, seed: int, randoms: int) -> list[np.ndarray]:
    n = g.n
    suite = [adjacency_demand(g)]
    sigma = substream(seed, "perf-perm", n).permutation(n)
    suite.append(permutation_demand(sigma))
    for t in range(randoms):
        child = int(substream(seed, "perf-demand", n, t).integers(0, 2**63))
        suite.append(random_demand(n, child))
    return suite


def run_performance(seed: int = 0, randoms: int = 20, tol: float = 1e-6) -> CheckResult:
    """Splittable congestion stays within 12k * OPT on every tested demand."""
    worst_ratio = 0.0
    worst_margin = math.inf
    cases = 0
    for g in (complete(4), random_regular(10, 3, seed=0)):
        router = SplittableRouter().fit(g)
        k = router.profile_.k
        for D in _demand_suite(g, seed, randoms):
            cong = router.congestion(D).max_congestion
            opt = opt_congestion(g, D).value
            bound = 12.0 * k * opt
            cases += 1
            worst_margin = min(worst_margin, bound + tol - cong)
            if opt > 0:
                worst_ratio = max(worst_ratio, cong / (12.0 * k * opt))
    return CheckResult(
        "splittable-performance",
        worst_margin >= 0.0,
        {"cases": cases, "worst_fraction_of_bound": worst_ratio, "min_margin": worst_margin},
    )


def run_tightness() -> CheckResult:
    """Adjacency demand on a random regular graph witnesses ratio >= k/d."""
    g = random_regular(16, 4, seed=0)
    router = SplittableRouter().fit(g)
    k = router.profile_.k
    D = adjacency_demand(g)
    cong = router.congestion(D).max_congestion
    opt = opt_congestion(g, D).value
    ratio = cong / opt
    floor = k / 4.0
    return CheckResult(
        "splittable-tightness",
        ratio >= floor,
        {"k": k, "ratio": ratio, "floor": floor, "cong": cong, "opt": opt},
    )


def run_opt_oracle(tol: float = 1e-6, seed: int = 0) -> CheckResult:
    """Known optima: adjacency demand costs 2 on unit-capacity graphs; C4 cross pair 0.5."""
    worst = 0.0
    for g in (complete(4), cycle(5), random_regular(10, 3, seed=0)):
        value = opt_congestion(g, adjacency_demand(g)).value
        worst = max(worst, abs(value - 2.0))
    c4 = cycle(4)
    D = np.zeros((4, 4))
    D[0, 2] = 1.0
    worst_c4 = abs(opt_congestion(c4, D).value - 0.5)

    sandwich_ok = True
    g = complete(4)
    router = SplittableRouter().fit(g)
    for t in range(3):
        D = random_demand(4, int(substream(seed, "sandwich", t).integers(0, 2**63)))
        lo = opt_lower_bound_degree(g, D)
        mid = opt_congestion(g, D).value
        hi = router.congestion(D).max_congestion
        if not (lo <= mid + tol and mid <= hi + tol):
            sandwich_ok = False
    passed = worst <= tol and worst_c4 <= tol and sandwich_ok
    return CheckResult(
        "opt-oracle",
        passed,
        {"max_adjacency_err": worst, "c4_err": worst_c4, "sandwich_ok": sandwich_ok},
    )


# -- sampled-path statistical checks ------------------------------------------------


def run_bucket_health(seed: int = 0, builds: int = 50, limit: float = 0.1) -> CheckResult:
    """Fraction of space builds with any empty endpoint bucket, plus path validity."""
    g = random_regular(16, 4, seed=0)
    routed, profile = routing_profile(g)
    caps = routed.capacity_matrix
    empties = 0
    paths_ok = True
    for b in range(builds):
        child = int(substream(seed, "bucket", b).integers(0, 2**63))
        space = build_sample_space(routed, profile, child)
        if space.empty_bucket_fraction() > 0:
            empties += 1
        if space.walks.shape[1] != space.k + 1:
            paths_ok = False
        if not (caps[space.walks[:, :-1], space.walks[:, 1:]] > 0).all():
            paths_ok = False
        if not (space.walks[:, 0] == space.origins).all():
            paths_ok = False
    fraction = empties / builds
    return CheckResult(
        "bucket-health",
        fraction <= limit and paths_ok,
        {"builds": builds, "empty_fraction": fraction, "limit": limit, "paths_ok": paths_ok},
    )


def run_load_stats(g: Graph, trials: int, seed: int, name: str) -> CheckResult:
    """Mass identity, max/min ratio and absolute range of mean edge loads."""
    stats = load_statistics(g, trials, seed, second_legs=False)
    sum_ok = abs(stats.mass_total_mean - stats.expected_mass_total) <= 0.05 * stats.expected_mass_total
    ratio_ok = stats.load_ratio <= 3.5
    range_ok = stats.load_min >= stats.range_low * 0.9 and stats.load_max <= stats.range_high * 1.1
    return CheckResult(
        name,
        sum_ok and ratio_ok and range_ok,
        {
            "trials": trials,
            "mass_mean": stats.mass_total_mean,
            "mass_expected": stats.expected_mass_total,
            "ratio": stats.load_ratio,
            "min": stats.load_min,
            "range_low_slack": stats.range_low * 0.9,
            "max": stats.load_max,
            "range_high_slack": stats.range_high * 1.1,
        },
    )


def run_tail_bounds(g: Graph, runs: int, seed: int, r: float = 1.0) -> CheckResult:
    """Frequency of any edge load exceeding the level-r threshold, vs 3/n."""
    stats = load_statistics(g, runs, seed, second_legs=False, tail_r=(r,))
    freq = stats.tail_counts[r] / runs
    bound = 3.0 / g.n
    return CheckResult(
        f"tail-bounds-r{r:g}",
        freq <= bound,
        {"runs": runs, "threshold": stats.thresholds[r], "frequency": freq, "bound": bound},
    )


def run_rank_tails(g: Graph, runs: int, seed: int, r: float = 2.0) -> CheckResult:
    """Union event over ranks and edges for the level-r threshold, vs 3/n."""
    report = rank_tail_statistics(g, runs, seed, r=r)
    bound = 3.0 / g.n
    return CheckResult(
        f"rank-tails-r{r:g}",
        report.frequency <= bound,
        {"runs": runs, "threshold": report.threshold, "frequency": report.frequency, "bound": bound},
    )


# -- packet simulation checks -------------------------------------------------------


def run_valiant(g: Graph, runs: int, seed: int, name: str) -> CheckResult:
    """Capacity invariant every round; delay within 2k(1 + coincidence); identity is free."""
    routed, profile = routing_profile(g)
    n = g.n
    identity_run = route_permutation(g, np.arange(n), seed)
    identity_ok = identity_run.result.delay == 0
    invariant_ok = True
    bound_ok = True
    max_delay = 0
    min_slack = math.inf
    for t in range(runs):
        sigma = substream(seed, "valiant-sigma", t).permutation(n)
        child = int(substream(seed, "valiant-space", t).integers(0, 2**63))
        space = build_sample_space(routed, profile, child)
        run = route_permutation(g, sigma, child, space=space, record_trace=True)
        if not capacity_invariant_ok(run.result):
            invariant_ok = False
        bound = 2 * run.k * (1 + run.coincidence)
        slack = bound - run.result.delay
        min_slack = min(min_slack, slack)
        if slack < 0:
            bound_ok = False
        max_delay = max(max_delay, run.result.delay)
    return CheckResult(
        name,
        identity_ok and invariant_ok and bound_ok,
        {"runs": runs, "identity_delay_zero": identity_ok, "capacity_invariant": invariant_ok, "max_delay": max_delay, "min_bound_slack": min_slack},
    )


# -- unsplittable checks ------------------------------------------------------------


def run_unsplittable_audit(runs: int = 20, seed: int = 0, constant: float = 40.0) -> CheckResult:
    """Decomposition inequality per edge and the lower-bound chain on every run."""
    g = random_regular(12, 3, seed=0)
    decomposition_ok = True
    chain_ok = True
    flagged = 0
    min_margin = math.inf
    for t in range(runs):
        child = int(substream(seed, "audit-policy", t).integers(0, 2**63))
        policy = build_policy(g, child)
        D = random_demand(g.n, int(substream(seed, "audit-demand", t).integers(0, 2**63)))
        opt = opt_congestion(g, D).value
        audit = ratio_audit(g, D, policy, opt, constant=constant)
        if not audit.decomposition_ok:
            decomposition_ok = False
        min_margin = min(min_margin, audit.decomposition_margin)
        if not (audit.opt_floor <= audit.degree_bound + 1e-9 and audit.degree_bound <= opt + 1e-6):
            chain_ok = False
        if audit.flagged:
            flagged += 1
    return CheckResult(
        "unsplittable-audit",
        decomposition_ok and chain_ok and flagged == 0,
        {"runs": runs, "decomposition_ok": decomposition_ok, "min_margin": min_margin, "chain_ok": chain_ok, "flagged": flagged},
    )


# -- determinism --------------------------------------------------------------------


def _pipeline_report(seed: int) -> bytes:
    g = hypercube(3)
    routed, profile = routing_profile(g)
    space = build_sample_space(routed, profile, seed)
    path = select_path(space, 0, 5, seed)
    sigma = substream(seed, "determinism-sigma").permutation(g.n)
    run = route_permutation(g, sigma, seed, space=space)
    stats = load_statistics(g, 3, seed, second_legs=True)
    report = {
        "spectra": spectral(g).to_json(),
        "space": {"m": space.m, "k": space.k, "total": space.total_walks},
        "path": path.vertices.tolist(),
        "valiant": run.to_json(),
        "load": stats.to_json(),
    }
    return dumps_json(json_ready(report)).encode()


def run_determinism(seed: int = 0) -> CheckResult:
    """The same seed reproduces the whole randomized pipeline byte for byte."""
    a = _pipeline_report(seed)
    b = _pipeline_report(seed)
    return CheckResult("determinism", a == b, {"bytes": len(a), "identical": a == b})


# -- the CLI suite ------------------------------------------------------------------


def lemma_suite(seed: int, trials: int | None = None, threads: int | None = None) -> list[CheckResult]:
    """Every invariant check at CLI scale; pass trials to override the sample sizes."""
    h3 = hypercube(3)
    h4 = hypercube(4)
    rr16 = random_regular(16, 4, seed=0)

    def n_or(default: int) -> int:
        return trials if trials is not None else default

    return [
        run_inversion(seed, graphs_count=n_or(30)),
        run_unit_flow(threads=threads),
        run_backward_anchor(threads=threads),
        run_domination(threads=threads),
        run_max_principle(seed, instances=n_or(30)),
        run_performance(seed, randoms=min(n_or(5), 20)),
        run_tightness(),
        run_opt_oracle(seed=seed),
        run_bucket_health(seed, builds=n_or(20)),
        run_load_stats(h3, n_or(200), seed, "load-stats-hypercube3"),
        run_load_stats(rr16, n_or(200), seed, "load-stats-rr16"),
        run_tail_bounds(rr16, n_or(50), seed, r=1.0),
        run_rank_tails(rr16, n_or(20), seed, r=2.0),
        run_valiant(h4, n_or(10), seed, "valiant-hypercube4"),
        run_valiant(rr16, n_or(10), seed, "valiant-rr16"),
        run_unsplittable_audit(runs=n_or(10), seed=seed),
        run_determinism(seed),
    ]


SUITES = {"lemmas": lemma_suite}
