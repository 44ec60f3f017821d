"""Acceptance suite behind `verify`.

Each criterion returns a CriterionResult; numerical or statistical failures
inside a criterion are caught and reported as a failed row so the suite always
produces a full table. The suite passes iff every criterion passes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

import artifacts  # type: ignore
import graph_core  # type: ignore
import magic_measure  # type: ignore
import potential  # type: ignore
import sampler_oracle  # type: ignore
import variational  # type: ignore
import walker  # type: ignore
from config_loader import Config  # type: ignore
from errors import DiagnosticError  # type: ignore

# Stream keys for the random test inputs of each criterion; MCMC chains use
# their own (seed, chain) streams.
_INPUT_STREAM = 1000

LINEARITY_GAMMAS = (-1.0, -0.25, 0.0, 0.5)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def to_row(self) -> Dict[str, Any]:
        return {
            "criterion": self.number,
            "name": self.name,
            "status": "PASS" if self.passed else "FAIL",
            "detail": self.detail,
        }


@dataclass
class VerifyResult:
    criteria: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    @property
    def failures(self) -> List[CriterionResult]:
        return [c for c in self.criteria if not c.passed]


VERIFY_COLUMNS = ["criterion", "name", "status", "detail"]


def _inputs_rng(seed: int, number: int) -> np.random.Generator:
    return walker.make_rng(seed, _INPUT_STREAM, number)


def _limits(cfg: Config) -> magic_measure.EnumerationLimits:
    return magic_measure.EnumerationLimits.from_settings(cfg.magic_measure)


def small_connected_graphs(max_vertices: int = 6) -> List[graph_core.FiniteGraph]:
    """Every connected graph on 2..max_vertices vertices, one per isomorphism class."""
    if max_vertices > 7:
        raise ValueError("the graph atlas only covers graphs up to 7 vertices")
    out = []
    for g in nx.graph_atlas_g():
        n = g.number_of_nodes()
        if 2 <= n <= max_vertices and nx.is_connected(g):
            out.append(graph_core.FiniteGraph(labels=tuple(range(n)), edges=tuple(sorted(g.edges()))))
    return out


# ------------------------------
# Criteria
# ------------------------------


def check_matrix_tree(cfg: Config, seed: int) -> CriterionResult:
    rng = _inputs_rng(seed, 1)
    worst = 0.0
    lim = _limits(cfg)
    graphs = small_connected_graphs(6)
    for g in graphs:
        log_x = rng.uniform(-2.0, 2.0, size=(cfg.verify.tree_weight_vectors, g.n_edges))
        det = magic_measure.matrix_tree_log_sum(g, log_x)
        enum = magic_measure.enumerated_log_sum(g, log_x, max_vertices=lim.max_vertices, max_subsets=lim.max_subsets)
        worst = max(worst, float(np.max(np.abs(np.expm1(det - enum)))))
    ok = worst <= 1e-10
    return CriterionResult(1, "matrix_tree_vs_enumeration", ok, f"{len(graphs)} graphs, max rel diff {worst:.2e}", {"max_rel_diff": worst, "n_graphs": len(graphs)})


def check_scaling(cfg: Config, seed: int) -> CriterionResult:
    rng = _inputs_rng(seed, 2)
    worst = 0.0
    graphs = [g for g in small_connected_graphs(6) if g.n_vertices >= 3]
    for g in graphs:
        a = graph_core.InitialWeights(rng.uniform(0.5, 2.0, size=g.n_edges))
        ev = magic_measure.PhiEvaluator(g, a, tree_route="matrix")
        log_x = rng.uniform(-3.0, 3.0, size=(cfg.verify.scaling_environments, g.n_edges))
        base = ev.log_phi(log_x, 0)
        for lam in (1e-3, 1.0, 1e3):
            worst = max(worst, float(np.max(np.abs(ev.log_phi(log_x + math.log(lam), 0) - base))))
    ok = worst <= 1e-9
    return CriterionResult(2, "scaling_invariance", ok, f"{len(graphs)} graphs, max |diff| {worst:.2e}", {"max_abs_diff": worst})


def check_mixture(cfg: Config, seed: int) -> CriterionResult:
    worst = 0.0
    n_paths = 0
    for g in (graph_core.build_cycle(3), graph_core.build_path(4)):
        a = graph_core.InitialWeights.constant(g, 1.0)
        paths = [p for L in range(cfg.verify.mixture_max_length + 1) for p in sampler_oracle.admissible_paths(g, 0, L)]
        res = sampler_oracle.mixture_check_paths(g, a, 0, 0, paths, cfg.quadrature)
        n_paths += len(res)
        worst = max(worst, max(r.diff for r in res))
    ok = worst <= cfg.tolerances.mixture_abs_tol
    return CriterionResult(3, "mixture_identity", ok, f"{n_paths} paths, max |diff| {worst:.2e}", {"max_abs_diff": worst})


def lemma_instances() -> List[graph_core.GraphInstance]:
    return [
        graph_core.cycle_instance(4, 1.0, name="cycle:4"),
        graph_core.cycle_instance(6, 1.0, name="cycle:6"),
        graph_core.parse_builtin("diluted-cycle:4,2", 1.0),
    ]


def check_main_lemma(cfg: Config, seed: int, threads: int = 1) -> CriterionResult:
    sigma = cfg.tolerances.mc_sigma
    notes, metrics, ok = [], {}, True
    for k, inst in enumerate(lemma_instances()):
        g = inst.graph
        s_phi = potential.dirichlet_form(g, inst.a, inst.phi)
        bound = variational.moment_bound(s_phi)
        chain = sampler_oracle.ChainConfig.from_settings(cfg.mcmc, seed, "Q", cfg.verify.lemma_samples, _limits(cfg))
        samples = sampler_oracle.mcmc_sample(g, inst.a, inst.v0, inst.v1, inst.e0, chain, chain=k)
        est = sampler_oracle.quarter_moment(samples, inst.v0, inst.v1, min_ess=cfg.mcmc.min_ess)
        inst_ok = est.value <= bound + sigma * est.std_error
        rec = {"s_phi": s_phi, "bound": bound, "mcmc": est.value, "mcmc_se": est.std_error}
        if g.n_edges - 1 <= cfg.quadrature.max_dimension:
            quad, quad_err = sampler_oracle.quarter_moment_oracle(g, inst.a, inst.v0, inst.v1, inst.e0, cfg.quadrature, threads=threads)
            rec.update({"quadrature": quad, "quadrature_error": quad_err})
            inst_ok = inst_ok and quad <= bound and abs(est.value - quad) <= sigma * est.std_error + quad_err
        ok = ok and inst_ok
        metrics[inst.name] = rec
        notes.append(f"{inst.name}: {est.value:.5f}+/-{est.std_error:.5f} <= {bound:.5f}" + ("" if inst_ok else " FAILED"))
    return CriterionResult(4, "main_lemma", ok, "; ".join(notes), metrics)


def _p_samples(cfg: Config, seed: int) -> Tuple[variational.DeformationContext, np.ndarray]:
    inst = graph_core.cycle_instance(4, 1.0)
    ctx = variational.DeformationContext.from_instance(inst, limits=_limits(cfg))
    chain = sampler_oracle.ChainConfig.from_settings(cfg.mcmc, seed, "P", cfg.verify.gamma_samples, _limits(cfg))
    samples = sampler_oracle.mcmc_sample(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, chain, chain=10)
    return ctx, samples.log_x


def check_linearity(cfg: Config, seed: int, p_samples: Optional[Tuple[Any, np.ndarray]] = None) -> CriterionResult:
    ctx, log_x = p_samples or _p_samples(cfg, seed)
    sigma = cfg.tolerances.mc_sigma
    rows = variational.gamma_grid(ctx, log_x, LINEARITY_GAMMAS)
    bad = [r.gamma for r in rows if abs(r.EH - r.gamma / 4.0) > sigma * r.EH_se]
    detail = ", ".join(f"gamma={r.gamma:+.2f}: {r.EH:+.4f}+/-{r.EH_se:.4f}" for r in rows)
    return CriterionResult(5, "linearity_of_H", not bad, detail, {"failed_gammas": bad})


def check_entropy_sandwich(cfg: Config, seed: int, p_samples: Optional[Tuple[Any, np.ndarray]] = None) -> CriterionResult:
    ctx, log_x = p_samples or _p_samples(cfg, seed)
    sigma = cfg.tolerances.mc_sigma
    gammas = np.linspace(-2.0, 2.0, 11)
    rows = variational.gamma_grid(ctx, log_x, gammas)
    s_phi = ctx.s_phi
    bad = []
    for r in rows:
        if r.g_hat < -sigma * r.g_se or r.g_hat > r.g_bound + sigma * r.g_se or r.second_deriv_max > s_phi:
            bad.append(r.gamma)
    zero = [r for r in rows if r.gamma == 0.0]
    exact_zero = bool(zero) and zero[0].g_hat == 0.0
    ok = not bad and exact_zero
    return CriterionResult(
        6,
        "entropy_sandwich",
        ok,
        f"{len(rows)} gammas, violations at {bad or 'none'}, g_hat(0) == 0: {exact_zero}",
        {"failed_gammas": bad, "g_hat_zero_exact": exact_zero},
    )


def random_derivative_case(rng: np.random.Generator, graphs: Sequence[graph_core.FiniteGraph]) -> Tuple[variational.DeformationContext, magic_measure.Environment]:
    g = graphs[int(rng.integers(len(graphs)))]
    v0, v1 = (int(v) for v in rng.choice(g.n_vertices, size=2, replace=False))
    e0 = g.adjacency[v0][0]
    phi = rng.uniform(0.0, 1.0, size=g.n_edges)
    phi[e0] = 0.0
    a = graph_core.InitialWeights(rng.uniform(0.5, 2.0, size=g.n_edges))
    log_x = rng.uniform(-1.0, 1.0, size=g.n_edges)
    log_x -= log_x[e0]
    ctx = variational.DeformationContext(g, a, v0, v1, e0, potential.EdgePotential(phi), float(rng.uniform(-1.0, 1.0)))
    return ctx, magic_measure.Environment(log_x, e0)


def finite_difference_errors(ctx: variational.DeformationContext, x: magic_measure.Environment, h: float) -> Tuple[float, float, float, float]:
    """(first, fd first, second, fd second); the second derivative is differenced from the first."""
    up, down = ctx.with_gamma(ctx.gamma + h), ctx.with_gamma(ctx.gamma - h)
    d1, d2 = variational.f_gamma_derivatives(ctx, x)
    fd1 = (variational.log_f_gamma_batch(up, x.log_x)[0] - variational.log_f_gamma_batch(down, x.log_x)[0]) / (2 * h)
    fd2 = (variational.f_gamma_derivatives(up, x)[0] - variational.f_gamma_derivatives(down, x)[0]) / (2 * h)
    return d1, float(fd1), d2, float(fd2)


def check_derivatives(cfg: Config, seed: int) -> CriterionResult:
    rng = _inputs_rng(seed, 7)
    tol = cfg.tolerances
    graphs = [g for g in small_connected_graphs(6) if g.n_vertices >= 3]
    mismatches, bound_violations = 0, 0
    worst = 0.0
    for _ in range(cfg.verify.derivative_cases):
        ctx, x = random_derivative_case(rng, graphs)
        d1, fd1, d2, fd2 = finite_difference_errors(ctx, x, tol.fd_step)
        for exact, approx in ((d1, fd1), (d2, fd2)):
            allowed = max(tol.fd_rel_tol * abs(exact), tol.fd_abs_tol)
            worst = max(worst, abs(exact - approx) / allowed)
            if abs(exact - approx) > allowed:
                mismatches += 1
        if d2 > ctx.s_phi:
            bound_violations += 1
    ok = mismatches == 0 and bound_violations == 0
    return CriterionResult(
        7,
        "derivative_correctness",
        ok,
        f"{cfg.verify.derivative_cases} cases, {mismatches} mismatches, {bound_violations} second-derivative bound violations",
        {"mismatches": mismatches, "bound_violations": bound_violations, "worst_over_tolerance": worst},
    )


def check_reversibility(cfg: Config, seed: int) -> CriterionResult:
    rng = _inputs_rng(seed, 8)
    graphs = small_connected_graphs(6)
    worst = 0.0
    for _ in range(cfg.verify.reversibility_cases):
        g = graphs[int(rng.integers(len(graphs)))]
        x = magic_measure.Environment(rng.uniform(-3.0, 3.0, size=g.n_edges), 0)
        path = [0]
        for _ in range(int(rng.integers(1, 13))):
            inc = g.adjacency[path[-1]]
            path.append(g.other_end(inc[int(rng.integers(len(inc)))], path[-1]))
        fwd = walker.markov_path_probability(g, x, path[0], path)
        back = walker.markov_path_probability(g, x, path[-1], path[::-1])
        lxv = x.vertex_log_weights(g)
        expected = math.exp(lxv[path[-1]] - lxv[path[0]]) * back
        worst = max(worst, abs(fwd - expected) / expected)
    ok = worst <= cfg.tolerances.reversibility_rel_tol
    return CriterionResult(8, "reversibility", ok, f"{cfg.verify.reversibility_cases} paths, max rel diff {worst:.2e}", {"max_rel_diff": worst})


def bound_grid() -> List[Tuple[int, float]]:
    grid = []
    for r in (130, 200, 500):
        a_max = (r - 129) / 256.0
        grid.extend((r, a_max * frac) for frac in (0.25, 0.5, 0.75))
    return grid


def check_bound_chain(cfg: Config, seed: int) -> CriterionResult:
    failures = []
    for r, a in bound_grid():
        try:
            rep = potential.bound_chain(r, a, box_vertex_cap=cfg.potential.box_vertex_cap)
        except DiagnosticError as exc:
            failures.append(f"r={r} a={a:.4g}: {exc.code}")
            continue
        if rep.failed_link:
            failures.append(f"r={r} a={a:.4g}: {rep.failed_link}")
    counts_ok = all(
        potential.count_shell_vertices(l) == 8 * l and potential.count_level_r_edges(l) == 4 * (2 * l - 1) for l in range(1, 11)
    )
    ok = not failures and counts_ok
    detail = f"{len(bound_grid())} parameter sets, failures: {failures or 'none'}, level counts ok: {counts_ok}"
    return CriterionResult(9, "bound_chain", ok, detail, {"failures": failures, "counts_ok": counts_ok})


def path_frequency_table(paths: np.ndarray, n_vertices: int) -> Dict[Tuple[int, ...], int]:
    codes = paths @ (n_vertices ** np.arange(paths.shape[1]))
    uniq, counts = np.unique(codes, return_counts=True)
    out = {}
    for code, cnt in zip(uniq.tolist(), counts.tolist()):
        digits = [(code // n_vertices**t) % n_vertices for t in range(paths.shape[1])]
        out[tuple(digits)] = cnt
    return out


def check_walker(cfg: Config, seed: int, threads: int = 1) -> CriterionResult:
    g = graph_core.build_cycle(3)
    a = graph_core.InitialWeights.constant(g, 1.0)
    n = cfg.verify.path_replicas
    L = cfg.verify.path_length
    paths = walker.simulate_errw_batch(g, a, 0, L, n, seed, block_size=cfg.walker.block_size, threads=threads)
    freq = path_frequency_table(paths, g.n_vertices)
    worst = 0.0
    for p in sampler_oracle.admissible_paths(g, 0, L):
        prob = walker.errw_path_probability(g, a, 0, p)
        sd = math.sqrt(prob * (1 - prob) / n)
        worst = max(worst, abs(freq.get(p, 0) / n - prob) / sd)
    _, state = walker.simulate_trajectory(g, a, 0, 1000, seed)
    bookkeeping = int(state.crossings.sum()) == state.t and bool(np.all(state.weights(a) - a.values == state.crossings))
    ok = worst <= cfg.tolerances.path_sigma and bookkeeping
    return CriterionResult(
        10,
        "walker_statistics",
        ok,
        f"{n} replicas, worst |z| {worst:.2f}, bookkeeping exact: {bookkeeping}",
        {"worst_z": worst, "bookkeeping": bookkeeping},
    )


# ------------------------------
# Runner
# ------------------------------


def run_acceptance(
    cfg: Config,
    seed: int,
    *,
    threads: int = 1,
    only: Optional[Sequence[int]] = None,
    logger: Optional[artifacts.JsonlLogger] = None,
) -> VerifyResult:
    """Run the selected criteria (all by default) in order and collect their results."""
    shared: Dict[str, Any] = {}

    def p_samples() -> Tuple[Any, np.ndarray]:
        if "p" not in shared:
            shared["p"] = _p_samples(cfg, seed)
        return shared["p"]

    suite: List[Tuple[int, str, Callable[[], CriterionResult]]] = [
        (1, "matrix_tree_vs_enumeration", lambda: check_matrix_tree(cfg, seed)),
        (2, "scaling_invariance", lambda: check_scaling(cfg, seed)),
        (3, "mixture_identity", lambda: check_mixture(cfg, seed)),
        (4, "main_lemma", lambda: check_main_lemma(cfg, seed, threads)),
        (5, "linearity_of_H", lambda: check_linearity(cfg, seed, p_samples())),
        (6, "entropy_sandwich", lambda: check_entropy_sandwich(cfg, seed, p_samples())),
        (7, "derivative_correctness", lambda: check_derivatives(cfg, seed)),
        (8, "reversibility", lambda: check_reversibility(cfg, seed)),
        (9, "bound_chain", lambda: check_bound_chain(cfg, seed)),
        (10, "walker_statistics", lambda: check_walker(cfg, seed, threads)),
    ]
    selected = set(only) if only else {n for n, _, _ in suite}
    results = []
    for number, name, fn in suite:
        if number not in selected:
            continue
        print(f"[{number}] {name} ...", flush=True)
        t0 = time.perf_counter()
        try:
            res = fn()
        except (DiagnosticError, ValueError, np.linalg.LinAlgError) as exc:
            code = getattr(exc, "code", type(exc).__name__)
            res = CriterionResult(number, name, False, f"{code}: {exc}")
        res.seconds = time.perf_counter() - t0
        print(f"[{number}] {name}: {'PASS' if res.passed else 'FAIL'} ({res.seconds:.1f}s) {res.detail}", flush=True)
        if logger is not None:
            logger.write({"event": "criterion", "number": number, "name": name, "passed": res.passed, "detail": res.detail, "seconds": round(res.seconds, 3)})
        results.append(res)
    return VerifyResult(results)
