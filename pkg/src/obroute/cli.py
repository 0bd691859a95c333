"""Command-line front end for reproducible routing experiments with file IO.

All randomness flows from --seed via labeled substreams; any command rerun with the
same inputs produces byte-identical output. Exit codes: 0 success, 1 verification
failure, 2 usage or input error.
"""

from __future__ import annotations

import functools
import json
import logging
import os
from pathlib import Path

import click
import numpy as np

from .errors import DemandError, DisconnectedGraphError, GraphInputError, SimulationError
from .evaluation import opt_or_bound
from .graph import generate, load_graph
from .packetsim import route_permutation
from .spectral import routing_profile, spectral
from .splittable import SplittableRouter, cycle_mass
from .unsplittable import UnsplittableRouter, ratio_audit
from .util import dumps_csv, dumps_json, json_ready, write_output, substream
from .validation import check_demands
from .verification import SUITES

log = logging.getLogger("obroute")

_INPUT_ERRORS = (GraphInputError, DisconnectedGraphError, DemandError, SimulationError)


def _setup_logging() -> None:
    level_name = os.environ.get("OBROUTE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _wrap_input_errors(fn):
    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _INPUT_ERRORS as exc:
            raise click.UsageError(str(exc)) from exc

    return wrapped


def _graph_options(fn):
    fn = click.option("--graph", "graph_file", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="Edge-list or JSON graph file.")(fn)
    fn = click.option("--generate", "generate_spec", default=None, metavar="KIND:ARGS",
                      help="Built-in generator, e.g. hypercube:3 or random_regular:16:4:0.")(fn)
    return fn


def _output_options(fn):
    fn = click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
                      help="Output path (default stdout).")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")(fn)
    return fn


def _resolve_graph(graph_file: str | None, generate_spec: str | None):
    if (graph_file is None) == (generate_spec is None):
        raise click.UsageError("provide exactly one of --graph or --generate")
    try:
        if graph_file is not None:
            g = load_graph(graph_file)
            source = str(graph_file)
        else:
            g = generate(generate_spec)
            source = generate_spec
    except _INPUT_ERRORS + (OSError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc
    log.info("graph loaded: n=%d, edges=%d", g.n, len(g.edge_pairs))
    return g, source


def _load_demands(path: str, n: int) -> np.ndarray:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        obj = json.loads(text)
        if isinstance(obj, dict):
            if "demands" not in obj:
                raise DemandError("JSON demand file needs a 'demands' key or a bare matrix")
            obj = obj["demands"]
        D = np.asarray(obj, dtype=float)
    else:
        rows: list[list[float]] = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.replace("\t", ",").split(",") if c.strip()]
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if rows:
                    raise DemandError(f"bad demand row: {line!r}")
                continue  # header row
        D = np.asarray(rows, dtype=float)
    return check_demands(D, n)


def _csv_cell(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _edge_csv(graph, utilization) -> str:
    header = ["u", "v", "capacity", "utilization"]
    rows = [
        [u, v, _csv_cell(float(graph.pair_capacity[(u, v)])), _csv_cell(float(load))]
        for (u, v), load in zip(graph.edge_pairs, utilization)
    ]
    return dumps_csv(header, rows)


def _emit(report: dict, csv_text: str | None, fmt: str, out: str | None) -> None:
    if fmt == "json":
        write_output(dumps_json(json_ready(report)), out)
    else:
        if csv_text is None:
            raise click.UsageError("this command has no CSV form")
        write_output(csv_text, out)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main() -> None:
    """Oblivious routing toolkit: spectral profiles, routing policies, simulations."""
    _setup_logging()


@main.command()
@_graph_options
@_output_options
@_wrap_input_errors
def spectra(graph_file, generate_spec, out, fmt) -> None:
    """Walk eigenvalues, stationary distribution, lazification and walk length."""
    g, source = _resolve_graph(graph_file, generate_spec)
    _, profile = routing_profile(g)
    data = profile.to_json()
    report = {"config": {"command": "spectra", "graph": source}, "spectra": data}
    csv_text = dumps_csv(["quantity", "value"], [[k, _csv_cell(v)] for k, v in data.items()])
    _emit(report, csv_text, fmt, out)


@main.command("route-split")
@_graph_options
@click.option("--demands", "demands_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--threads", type=int, default=None)
@click.option("--opt/--no-opt", "do_opt", default=True, help="Score congestion against the LP optimum.")
@click.option("--export-policy", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the per-pair edge flows as JSON.")
@_output_options
@_wrap_input_errors
def route_split(graph_file, generate_spec, demands_file, threads, do_opt, export_policy, out, fmt) -> None:
    """Route a demand matrix splittably and report per-edge congestion."""
    g, source = _resolve_graph(graph_file, generate_spec)
    D = _load_demands(demands_file, g.n)
    router = SplittableRouter(threads=threads).fit(g)
    report_cong = router.congestion(D)
    opt_block = None
    if do_opt:
        o = opt_or_bound(g, D)
        report_cong = report_cong.with_opt(o.value, o.method)
        opt_block = {"value": o.value, "method": o.method, "tol": o.tol}
    max_cycle = max(cycle_mass(r, i, j) for (i, j), r in router.policy_.items())
    profile = router.profile_
    report = {
        "config": {"command": "route-split", "graph": source, "demands": str(demands_file), "threads": threads},
        "k": profile.k,
        "lambda_bar": profile.lambda_bar,
        "lazified": profile.lazified,
        "congestion": report_cong.to_json(),
        "opt": opt_block,
        "max_cycle_mass": max_cycle,
    }
    if export_policy:
        flows = {}
        for (i, j), r in sorted(router.policy_.items()):
            entries = []
            for (u, v) in g.edge_pairs:
                if r[u, v] != 0.0:
                    entries.append([u, v, float(r[u, v])])
            flows[f"{i}->{j}"] = entries
        Path(export_policy).write_text(dumps_json(json_ready(flows)))
    _emit(report, _edge_csv(g, report_cong.utilization), fmt, out)


@main.command("route-unsplit")
@_graph_options
@click.option("--demands", "demands_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=click.IntRange(min=0), required=True)
@click.option("--threads", type=int, default=None)
@click.option("--constant", type=float, default=40.0, help="Empirical audit ceiling constant.")
@click.option("--export-paths", type=click.Path(dir_okay=False, writable=True), default=None)
@click.option("--export-space", type=click.Path(dir_okay=False, writable=True), default=None)
@_output_options
@_wrap_input_errors
def route_unsplit(graph_file, generate_spec, demands_file, seed, threads, constant,
                  export_paths, export_space, out, fmt) -> None:
    """Route each demand pair along one sampled two-leg path and audit the result."""
    g, source = _resolve_graph(graph_file, generate_spec)
    D = _load_demands(demands_file, g.n)
    router = UnsplittableRouter(random_state=seed, threads=threads).fit(g)
    o = opt_or_bound(g, D)
    audit = ratio_audit(g, D, router.policy_, o.value, constant=constant)
    report_cong = router.congestion(D).with_opt(o.value, o.method)
    report = {
        "config": {
            "command": "route-unsplit", "graph": source, "demands": str(demands_file),
            "seed": seed, "threads": threads, "constant": constant,
        },
        "k": router.k_,
        "resamples": router.policy_.resamples,
        "congestion": report_cong.to_json(),
        "opt": {"value": o.value, "method": o.method, "tol": o.tol},
        "audit": audit.to_json(),
    }
    if export_paths:
        Path(export_paths).write_text(dumps_json(json_ready(router.policy_.to_json()["paths"])))
    if export_space:
        Path(export_space).write_text(dumps_json(json_ready(router.policy_.space.to_json())))
    _emit(report, _edge_csv(g, report_cong.utilization), fmt, out)


def _load_permutation(path: str) -> list[int]:
    text = Path(path).read_text()
    cells = [c for c in text.replace(",", " ").split() if c]
    try:
        return [int(c) for c in cells]
    except ValueError as exc:
        raise SimulationError(f"permutation file must contain integers: {exc}")


@main.command()
@_graph_options
@click.option("--permutation", "perm_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File with sigma as whitespace- or comma-separated integers.")
@click.option("--random", "random_sigma", is_flag=True, default=False,
              help="Draw sigma uniformly from the seed.")
@click.option("--seed", type=click.IntRange(min=0), required=True)
@click.option("--per-direction", is_flag=True, default=False,
              help="Give each edge direction its own unit capacity per round.")
@click.option("--export-trace", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the per-round movement log as CSV (round,packet,u,v).")
@_output_options
@_wrap_input_errors
def valiant(graph_file, generate_spec, perm_file, random_sigma, seed, per_direction,
            export_trace, out, fmt) -> None:
    """Simulate permutation packet routing over sampled two-leg paths."""
    g, source = _resolve_graph(graph_file, generate_spec)
    if (perm_file is None) == (not random_sigma):
        raise click.UsageError("provide exactly one of --permutation or --random")
    if random_sigma:
        sigma = substream(seed, "cli-sigma").permutation(g.n).tolist()
    else:
        sigma = _load_permutation(perm_file)
    run = route_permutation(g, sigma, seed, per_direction=per_direction,
                            record_trace=export_trace is not None)
    report = {
        "config": {
            "command": "valiant", "graph": source, "seed": seed,
            "permutation": str(perm_file) if perm_file else "random",
            "per_direction": per_direction,
        },
        **run.to_json(),
    }
    if export_trace:
        Path(export_trace).write_text(
            dumps_csv(["round", "packet", "u", "v"], run.result.trace_rows()))
    rows = [
        [i, int(run.sigma[i]), int(run.result.arrivals[i]), int(run.result.waits[i])]
        for i in range(g.n)
    ]
    csv_text = dumps_csv(["packet", "target", "delay", "waits"], rows)
    _emit(report, csv_text, fmt, out)


@main.command()
@click.argument("suite", default="lemmas")
@click.option("--seed", type=click.IntRange(min=0), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=None,
              help="Override every statistical check's sample count.")
@click.option("--threads", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Also write the results as JSON.")
@click.pass_context
def verify(ctx, suite, seed, trials, threads, out) -> None:
    """Run an invariant check suite; exit 1 if any check fails."""
    if suite not in SUITES:
        raise click.UsageError(f"unknown suite {suite!r}; available: {', '.join(sorted(SUITES))}")
    if trials is not None and trials < 30:
        click.echo(f"warning: {trials} trials is insufficient for the statistical bounds; "
                   "results are indicative only", err=True)
    try:
        results = SUITES[suite](seed, trials=trials, threads=threads)
    except _INPUT_ERRORS as exc:
        raise click.UsageError(str(exc)) from exc
    for r in results:
        click.echo(r.line())
    failed = sum(1 for r in results if not r.passed)
    if out:
        report = {
            "config": {"command": "verify", "suite": suite, "seed": seed, "trials": trials},
            "checks": [r.to_json() for r in results],
            "passed": failed == 0,
        }
        Path(out).write_text(dumps_json(json_ready(report)))
    if failed:
        click.echo(f"{failed}/{len(results)} checks failed")
        ctx.exit(1)
    click.echo(f"all {len(results)} checks passed")


if __name__ == "__main__":
    main()
