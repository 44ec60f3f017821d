# src/cli.py
"""Command-line entry point.

Subcommands:
  simulate     reinforced-walk Monte Carlo: hitting estimates plus plot data
  bound        the bound chain for (r, a, c, ell) as JSON and a one-row CSV
  phi          the box potential as an edge CSV (edge_id, D, phi)
  density      JSON in, JSON out: edge weights -> log densities
  variational  gamma-grid CSV from samples of the interpolated measure
  mcmc         sampler runs and moment estimates, optional quadrature oracle
  verify       the acceptance suite; table + verify_report.md/.pdf

Exit codes: 0 ok, 1 invalid input, 2 diagnostic failure, 3 acceptance failure.
On 1 and 2 a single JSON object {"error", "message", "details"} goes to stderr.

Usage:
  python src/cli.py bound --r 130 --a 0.001953125 --c 0.998 --ell 10r
  python src/cli.py simulate --r 4 --a 0.5 --boundary-level 3 --walks 100000 --seed 7
  python src/cli.py verify --threads 4
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

import acceptance  # type: ignore
import artifacts  # type: ignore
import graph_core  # type: ignore
import magic_measure  # type: ignore
import potential  # type: ignore
import reporting  # type: ignore
import sampler_oracle  # type: ignore
import variational  # type: ignore
import walker  # type: ignore
from config_loader import Config, load_config  # type: ignore
from errors import DiagnosticError  # type: ignore

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIAGNOSTIC = 2
EXIT_ACCEPTANCE = 3

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config", "config.yml")

BOUND_COLUMNS = [
    "r",
    "a",
    "c",
    "ell",
    "level",
    "i",
    "alpha",
    "xi",
    "l0",
    "s_phi",
    "s_phi_route",
    "s_phi_bound",
    "s_phi_target",
    "moment_bound",
    "log_moment_bound",
    "hitting_bound",
    "log_hitting_bound",
    "boundary_bound",
    "log_boundary_bound",
    "in_proven_regime",
    "failed_link",
    "warnings",
]
MCMC_COLUMNS = ["chain", "target", "quantity", "value", "std_error", "ess", "acceptance_rate", "diagnostics"]

# Arguments that change where or how results are written, never what they are.
_NOT_IN_HEADER = {"config", "out_dir", "threads", "format", "run_log", "handler", "command"}


class RunContext:
    """Resolved settings and output plumbing shared by every subcommand."""

    def __init__(self, args: argparse.Namespace, cfg: Config) -> None:
        self.cfg = cfg
        self.subcommand: str = args.command
        self.seed = cfg.defaults.resolve_seed(args.seed)
        self.threads = int(args.threads or cfg.defaults.threads)
        if self.threads < 1:
            raise ValueError(f"--threads must be >= 1 (got {self.threads})")
        self.fmt = args.format or cfg.defaults.output_format
        self.out_dir = args.out_dir or cfg.defaults.out_dir
        self.limits = magic_measure.EnumerationLimits.from_settings(cfg.magic_measure)
        arguments = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_HEADER and k != "seed"}
        self.header = artifacts.build_header(
            cfg.project_version,
            self.subcommand,
            {"arguments": arguments, "settings": cfg.resolved()},
            self.seed,
        )
        self.run_key = artifacts.compute_run_key(self.header)
        self.logger = artifacts.JsonlLogger(args.run_log or cfg.logging.run_log)
        self.outputs: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def log(self, event: str, **rec: Any) -> None:
        self.logger.write({"event": event, "subcommand": self.subcommand, "run_key": self.run_key, **rec})

    def write_table(self, stem: str, columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> str:
        """<stem>.csv or <stem>.json depending on --format."""
        if self.fmt == "json":
            out = self.path(f"{stem}.json")
            artifacts.write_json(out, {"columns": list(columns), "rows": [{k: r.get(k) for k in columns} for r in rows]}, self.header)
        else:
            out = self.path(f"{stem}.csv")
            artifacts.write_csv(out, columns, rows, self.header)
        self.outputs.append(out)
        return out

    def write_json(self, name: str, payload: Mapping[str, Any]) -> str:
        out = self.path(name)
        artifacts.write_json(out, payload, self.header)
        self.outputs.append(out)
        return out


def _warn(codes: Sequence[str], what: str) -> None:
    for code in codes:
        print(f"WARNING: {what}: {code}", flush=True)


def _load_instance(args: argparse.Namespace) -> graph_core.GraphInstance:
    if getattr(args, "graph_file", None):
        return graph_core.load_graph_file(args.graph_file)
    return graph_core.parse_builtin(args.builtin, a=args.a)


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ValueError(f"cannot parse '{text}' as a comma-separated list of numbers") from exc


# ------------------------------
# Subcommands
# ------------------------------


def cmd_simulate(args: argparse.Namespace, ctx: RunContext) -> int:
    w = ctx.cfg.walker
    if args.walks < 1:
        raise ValueError(f"--walks must be >= 1 (got {args.walks})")
    if args.boundary_level is None and not args.ell:
        raise ValueError("simulate needs --boundary-level or at least one --ell")
    max_steps = args.max_steps or w.max_steps
    common: Dict[str, Any] = {
        "max_steps": max_steps,
        "block_size": w.block_size,
        "max_crossing_cells": w.max_crossing_cells,
        "threads": ctx.threads,
        "censor_threshold": w.censor_threshold,
        "ci_z": w.ci_z,
    }
    estimates: List[walker.HittingEstimate] = []
    norms: List[int] = []
    levels: List[int] = []
    if args.boundary_level is not None:
        levels = list(range(1, args.boundary_level + 1))
        estimates += walker.boundary_hitting_curve(args.r, args.a, levels, args.walks, ctx.seed, **common)
        norms += [args.r * lev for lev in levels]
    for text in args.ell or []:
        ell = potential.parse_ell(text, args.r)
        estimates.append(walker.lattice_point_hitting(args.r, args.a, ell, args.walks, ctx.seed, **common))
        norms.append(graph_core.sup_norm(ell))
    ctx.write_table("hitting", walker.HITTING_COLUMNS, [e.to_row() for e in estimates])
    for e in estimates:
        print(f"{e.target}: {e.estimate:.6g} +/- {e.ci_halfwidth:.2g} ({e.n_censored} censored)", flush=True)
        ctx.log("estimate", target=e.target, estimate=e.estimate, ci_halfwidth=e.ci_halfwidth, n_censored=e.n_censored)

    overlays: Dict[str, Any] = {}
    try:
        xi, _ = potential.xi_and_l0(args.r, args.a, args.c, force=args.force)
    except ValueError as exc:
        print(f"WARNING: no bound overlay: {exc}", flush=True)
    else:
        point_norms = [n for e, n in zip(estimates, norms) if not e.target.startswith("level:")]
        if point_norms:
            overlays["hitting_bound"] = reporting.hitting_bound_overlay(args.r, xi, point_norms)
        if levels:
            overlays["boundary_bound"] = reporting.boundary_bound_overlay(args.r, xi, levels)
    plot = reporting.emit_plot_data(reporting.points_from_estimates(estimates, norms), overlays, ctx.out_dir, ctx.header)
    ctx.outputs += list(plot.values())

    if args.trajectory_steps:
        g = graph_core.build_window_graph(args.r, args.r * max(levels or [1]))
        rows, _ = walker.simulate_trajectory(g, graph_core.InitialWeights.constant(g, args.a), g.index((0, 0)), args.trajectory_steps, ctx.seed)
        out = ctx.path("trajectory.csv")
        walker.export_trajectory_csv(rows, out, ctx.header)
        ctx.outputs.append(out)
    return EXIT_OK


def bound_row(rep: potential.BoundReport) -> Dict[str, Any]:
    rec = rep.to_record()
    return {k: rec[k] for k in BOUND_COLUMNS}


def cmd_bound(args: argparse.Namespace, ctx: RunContext) -> int:
    ell = potential.parse_ell(args.ell, args.r) if args.ell else None
    rep = potential.bound_chain(
        args.r,
        args.a,
        args.c,
        ell,
        args.i,
        force=args.force,
        box_vertex_cap=ctx.cfg.potential.box_vertex_cap,
    )
    _warn(rep.warnings, f"bound r={rep.r} ell={rep.ell}")
    ctx.write_json("bound_report.json", rep.to_record())
    out = ctx.path("bound_report.csv")
    artifacts.write_csv(out, BOUND_COLUMNS, [bound_row(rep)], ctx.header)
    ctx.outputs.append(out)
    print(f"xi = {rep.xi:.10g}, l0 = {rep.l0}, S_phi = {rep.s_phi:.6g} ({rep.s_phi_route}), failed link: {rep.failed_link or 'none'}", flush=True)
    ctx.log("bound", xi=rep.xi, l0=rep.l0, s_phi=rep.s_phi, warnings=rep.warnings, failed_link=rep.failed_link)
    return EXIT_OK


def cmd_phi(args: argparse.Namespace, ctx: RunContext) -> int:
    ell = potential.parse_ell(args.ell, args.r)
    i = args.i if args.i is not None else graph_core.i0(ell, args.r)
    spec = graph_core.PeriodicBoxSpec(r=args.r, i=i)
    if i * i * (2 * args.r - 1) > ctx.cfg.potential.box_vertex_cap and not args.force:
        raise ValueError(f"box r={args.r} i={i} exceeds potential.box_vertex_cap; pass --force to build it anyway")
    g = graph_core.build_periodic_box(spec)
    phi = potential.build_phi(ell, spec, g)
    rows = [{"edge_id": e, "D": float(phi.D[e]), "phi": float(phi.values[e])} for e in range(g.n_edges)]
    ctx.write_table("phi", ["edge_id", "D", "phi"], rows)
    if args.export_graph:
        edges_out, vertices_out = ctx.path("edges.csv"), ctx.path("vertices.csv")
        graph_core.export_graph_csv(g, edges_out, vertices_out, ctx.header)
        ctx.outputs += [edges_out, vertices_out]
    s_phi = potential.dirichlet_form(g, graph_core.InitialWeights.constant(g, args.a), phi)
    print(f"box r={args.r} i={i}: {g.n_vertices} vertices, {g.n_edges} edges, S_phi = {s_phi:.10g}", flush=True)
    ctx.log("phi", i=i, n_edges=g.n_edges, s_phi=s_phi)
    return EXIT_OK


def density_record(raw: Mapping[str, Any]) -> Dict[str, Any]:
    """Evaluate the log densities for one JSON request.

    Keys: graph (builtin spec) or graph_file, a (default 1), weights or
    log_weights, optional v0, v1 (vertex indices) and e0.
    """
    if raw.get("graph_file"):
        inst = graph_core.load_graph_file(str(raw["graph_file"]))
    elif raw.get("graph"):
        inst = graph_core.parse_builtin(str(raw["graph"]), a=float(raw.get("a", 1.0)))
    else:
        raise ValueError("density input needs 'graph' or 'graph_file'")
    g = inst.graph
    e0 = int(raw.get("e0", inst.e0))
    if "log_weights" in raw:
        env = magic_measure.Environment(np.asarray(raw["log_weights"], dtype=float), e0)
    elif "weights" in raw:
        env = magic_measure.Environment.from_weights(raw["weights"], e0)
    else:
        raise ValueError("density input needs 'weights' or 'log_weights'")
    if env.log_x.size != g.n_edges:
        raise ValueError(f"density input has {env.log_x.size} weights for a graph with {g.n_edges} edges")
    v0 = int(raw.get("v0", inst.v0))
    v1 = raw.get("v1", inst.v1)
    x = env.normalized()
    rec: Dict[str, Any] = {
        "graph": inst.name,
        "graph_hash": graph_core.graph_hash(g),
        "v0": v0,
        "e0": e0,
        "log_phi": magic_measure.log_phi(g, inst.a, v0, env),
        "log_tree_polynomial": magic_measure.spanning_tree_log_polynomial(g, env),
        "log_density_Q": magic_measure.log_density_Q(g, inst.a, v0, e0, x),
    }
    if v1 is not None:
        rec["v1"] = int(v1)
        rec["log_density_P"] = magic_measure.log_density_P_interp(g, inst.a, v0, int(v1), e0, x)
    return rec


def cmd_density(args: argparse.Namespace, ctx: RunContext) -> int:
    with open(args.input, "r", encoding="utf-8") as f:
        raw = json.load(f)
    requests = raw if isinstance(raw, list) else [raw]
    results = [density_record(r) for r in requests]
    ctx.write_json("density.json", {"results": results})
    for rec in results:
        print(f"{rec['graph']}: log_phi = {rec['log_phi']:.17g}", flush=True)
    ctx.log("density", n_requests=len(results))
    return EXIT_OK


def cmd_variational(args: argparse.Namespace, ctx: RunContext) -> int:
    inst = _load_instance(args)
    dctx = variational.DeformationContext.from_instance(inst, strict=not args.force, limits=ctx.limits)
    gammas = _parse_floats(args.gammas)
    if not gammas:
        raise ValueError("--gammas must name at least one value")
    chain = sampler_oracle.ChainConfig.from_settings(ctx.cfg.mcmc, ctx.seed, "P", args.samples, ctx.limits)
    samples = sampler_oracle.mcmc_sample(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, chain)
    _warn(samples.diagnostics, "P chain")
    rows = variational.gamma_grid(dctx, samples.log_x, gammas)
    ctx.write_table("variational_grid", variational.GRID_COLUMNS, [r.to_row() for r in rows])
    s_phi = dctx.s_phi
    print(
        f"S_phi = {s_phi:.10g}; optimal gamma = {variational.optimal_gamma(s_phi):.6g}; "
        f"moment bound = {variational.moment_bound(s_phi):.10g}",
        flush=True,
    )
    ctx.log("variational", s_phi=s_phi, n_gammas=len(rows), acceptance_rate=samples.acceptance_rate, diagnostics=samples.diagnostics)
    return EXIT_OK


def _mcmc_rows(samples: sampler_oracle.SampleSet, inst: graph_core.GraphInstance, min_ess: int) -> List[Dict[str, Any]]:
    base = {"chain": samples.chain, "target": samples.target, "acceptance_rate": samples.acceptance_rate}
    rows: List[Dict[str, Any]] = []

    def add(quantity: str, est: sampler_oracle.MomentEstimate) -> None:
        codes = list(samples.diagnostics) + [c for c in est.diagnostics if c not in samples.diagnostics]
        rows.append({**base, "quantity": quantity, "value": est.value, "std_error": est.std_error, "ess": est.ess, "diagnostics": codes})

    v0, v1 = inst.v0, inst.v1
    if samples.target == "Q":
        add("quarter_moment", sampler_oracle.quarter_moment(samples, v0, v1, min_ess=min_ess))
        add(
            "EH_reweighted_P",
            sampler_oracle.reweight_to_interpolated(samples, v0, v1, lambda lx: variational.H_batch(inst.graph, lx, v0, v1), min_ess=min_ess),
        )
    else:
        guard = None
        if inst.automorphism is not None:
            guard = graph_core.check_assumption(inst.graph, inst.a, v0, v1, inst.e0, inst.automorphism)
        sym = sampler_oracle.symmetry_check(samples, v0, v1, guard)
        rows.append({**base, "quantity": "log_ratio_mean", "value": sym.mean, "std_error": sym.std_error, "ess": sym.ess, "diagnostics": list(samples.diagnostics)})
        rows.append({**base, "quantity": "log_ratio_skew", "value": sym.skew, "std_error": sym.skew_se, "ess": sym.ess, "diagnostics": list(samples.diagnostics)})
    return rows


def cmd_mcmc(args: argparse.Namespace, ctx: RunContext) -> int:
    inst = _load_instance(args)
    if inst.v1 is None:
        raise ValueError(f"instance '{inst.name}' has no v1")
    chain = sampler_oracle.ChainConfig.from_settings(ctx.cfg.mcmc, ctx.seed, args.target, args.samples, ctx.limits)
    chains = sampler_oracle.run_chains(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, chain, args.chains, threads=ctx.threads)
    rows: List[Dict[str, Any]] = []
    for s in chains:
        _warn(s.diagnostics, f"chain {s.chain}")
        rows += _mcmc_rows(s, inst, ctx.cfg.mcmc.min_ess)
        if args.dump:
            out = ctx.path(f"samples_chain{s.chain}.csv")
            sampler_oracle.write_sample_dump(s, out, ctx.header)
            ctx.outputs.append(out)
    if inst.phi is not None:
        s_phi = potential.dirichlet_form(inst.graph, inst.a, inst.phi)
        rows.append({"chain": "", "target": "", "quantity": "moment_bound", "value": variational.moment_bound(s_phi)})
    if args.oracle:
        val, err = sampler_oracle.quarter_moment_oracle(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, ctx.cfg.quadrature, threads=ctx.threads)
        rows.append({"chain": "quadrature", "target": "Q", "quantity": "quarter_moment", "value": val, "std_error": err})
    ctx.write_table("mcmc_summary", MCMC_COLUMNS, rows)
    for r in rows:
        print(f"{r['chain']!s:>10} {r['quantity']}: {r['value']:.6g}", flush=True)
    ctx.log("mcmc", n_chains=args.chains, target=args.target, acceptance=[s.acceptance_rate for s in chains])
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, ctx: RunContext) -> int:
    only = [int(t) for t in args.only.split(",")] if args.only else None
    result = acceptance.run_acceptance(ctx.cfg, ctx.seed, threads=ctx.threads, only=only, logger=ctx.logger)
    ctx.write_table("verify", acceptance.VERIFY_COLUMNS, [c.to_row() for c in result.criteria])
    paths = reporting.write_verify_report(result, ctx.out_dir, ctx.header, ctx.run_key)
    ctx.outputs += list(paths.values())
    print("", flush=True)
    for c in result.criteria:
        print(f"  {c.number:>2}  {c.name:<28} {'PASS' if c.passed else 'FAIL'}", flush=True)
    ctx.log("verify", passed=result.passed, failures=[c.number for c in result.failures])
    if not result.passed:
        print(f"{len(result.failures)} acceptance criteria FAILED", flush=True)
        return EXIT_ACCEPTANCE
    print("All acceptance criteria passed.", flush=True)
    return EXIT_OK


# ------------------------------
# Parser
# ------------------------------


def _graph_args(p: argparse.ArgumentParser, default: str = "cycle:4") -> None:
    p.add_argument("--builtin", default=default, help="triangle, cycle:N, path:N, diluted-cycle:N,R, box:R,I, window:R,EXTENT")
    p.add_argument("--graph-file", default=None, help="JSON graph file (overrides --builtin)")
    p.add_argument("--a", type=float, default=1.0, help="constant initial weight for builtins")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, help="Path to config/config.yml")
    common.add_argument("--out-dir", default=None, help="Output directory (default: defaults.out_dir)")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None, help="Overrides the configured seed and its env var")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--force", action="store_true", help="Evaluate outside the proven parameter regime")
    common.add_argument("--run-log", default=None, help="JSONL run log (default: logging.run_log)")

    parser = argparse.ArgumentParser(description="Edge-reinforced random walk: simulation, densities and recurrence bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Hitting probabilities by Monte Carlo")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--c", type=float, default=None, help="c for the bound overlay (default: admissible midpoint)")
    p.add_argument("--boundary-level", type=int, default=None, help="estimate shells 1..L")
    p.add_argument("--ell", action="append", default=None, help="target lattice point, 'Nr' or 'x,y'; repeatable")
    p.add_argument("--walks", type=int, default=10000)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--trajectory-steps", type=int, default=0, help="also export one trajectory of this length")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("bound", parents=[common], help="Bound chain report")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--ell", default=None, help="'Nr' or 'x,y' (default: the l0 threshold)")
    p.add_argument("--i", type=int, default=None, help="box size (default: i0)")
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("phi", parents=[common], help="Export the box potential")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--ell", required=True, help="'Nr' or 'x,y'")
    p.add_argument("--i", type=int, default=None)
    p.add_argument("--export-graph", action="store_true", help="also write edges.csv and vertices.csv")
    p.set_defaults(handler=cmd_phi)

    p = sub.add_parser("density", parents=[common], help="Evaluate log densities from a JSON request")
    p.add_argument("--input", required=True, help="JSON object (or list of objects)")
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("variational", parents=[common], help="Gamma grid from interpolated-measure samples")
    _graph_args(p)
    p.add_argument("--gammas", default="-2,-1,-0.5,-0.25,0,0.25,0.5,1,2")
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(handler=cmd_variational)

    p = sub.add_parser("mcmc", parents=[common], help="Sampler runs and moment estimates")
    _graph_args(p)
    p.add_argument("--target", choices=["Q", "P"], default="Q")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--dump", action="store_true", help="write every retained sample")
    p.add_argument("--oracle", action="store_true", help="add the quadrature quarter moment (tiny graphs only)")
    p.set_defaults(handler=cmd_mcmc)

    p = sub.add_parser("verify", parents=[common], help="Run the acceptance suite")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.set_defaults(handler=cmd_verify)
    return parser


def _emit_error(rec: Dict[str, Any]) -> None:
    print(json.dumps(artifacts.to_jsonable(rec), sort_keys=True), file=sys.stderr, flush=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace, RunContext], int] = args.handler
    ctx: Optional[RunContext] = None
    try:
        cfg = load_config(args.config)
        ctx = RunContext(args, cfg)
        ctx.log("start", seed=ctx.seed, threads=ctx.threads)
        code = handler(args, ctx)
    except DiagnosticError as exc:
        _emit_error(exc.to_record())
        if ctx is not None:
            ctx.log("error", **exc.to_record())
        return EXIT_DIAGNOSTIC
    except (ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        rec = {"error": type(exc).__name__, "message": str(message), "details": {"subcommand": args.command}}
        _emit_error(rec)
        if ctx is not None:
            ctx.log("error", **rec)
        return EXIT_INVALID
    for out in ctx.outputs:
        print(f"Wrote {out}", flush=True)
    ctx.log("done", exit=code, outputs=ctx.outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
