"""Deformation of environments and the variational bound on the quarter moment.

The deformation multiplies every edge weight by exp(gamma * phi(e)). Pushing
the interpolated measure through it gives the comparison measure whose
relative entropy to the interpolated measure is g(gamma) = E_P[f_gamma].
The analytic derivatives of f_gamma come from spanning-tree and per-vertex
edge moments; they bound the second derivative by S_phi pointwise.

Usage:
  python src/variational.py --builtin cycle:4 --gammas -1,-0.25,0,0.5
"""

from __future__ import annotations

import argparse
import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

import graph_core  # type: ignore
import magic_measure  # type: ignore
import potential  # type: ignore
import sampler_oracle  # type: ignore
from errors import DiagnosticError  # type: ignore

GRID_COLUMNS = ["gamma", "EH", "g_hat", "g_bound", "second_deriv_max"]


@dataclass(frozen=True, eq=False)
class DeformationContext:
    graph: graph_core.FiniteGraph
    a: graph_core.InitialWeights
    v0: int
    v1: int
    e0: int
    phi: potential.EdgePotential
    gamma: float = 0.0
    limits: magic_measure.EnumerationLimits = magic_measure.DEFAULT_LIMITS

    def __post_init__(self) -> None:
        self.a.check(self.graph)
        if not isinstance(self.phi, potential.EdgePotential):
            object.__setattr__(self, "phi", potential.EdgePotential(np.asarray(self.phi, dtype=float)))
        if self.phi.values.shape != (self.graph.n_edges,):
            raise ValueError("DeformationContext: phi must have one value per edge")
        if not 0 <= self.e0 < self.graph.n_edges:
            raise ValueError(f"DeformationContext: e0={self.e0} is not an edge index")
        if self.phi.values[self.e0] != 0.0:
            raise ValueError("DeformationContext: phi must vanish on the reference edge")
        if not math.isfinite(self.gamma):
            raise ValueError("DeformationContext: gamma must be finite")

    @classmethod
    def from_instance(
        cls,
        inst: graph_core.GraphInstance,
        gamma: float = 0.0,
        *,
        strict: bool = True,
        limits: Optional[magic_measure.EnumerationLimits] = None,
    ) -> "DeformationContext":
        """Context for a graph instance; strict mode requires the full symmetric setup."""
        if inst.v1 is None or inst.phi is None:
            raise ValueError(f"instance '{inst.name}' has no v1 or no phi")
        if strict:
            rep = graph_core.check_assumption(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, inst.automorphism, inst.phi)
            if not rep.passed:
                raise ValueError(f"instance '{inst.name}' fails the symmetry assumption: {', '.join(rep.violations)}")
        return cls(
            inst.graph,
            inst.a,
            inst.v0,
            inst.v1,
            inst.e0,
            potential.EdgePotential(inst.phi),
            float(gamma),
            limits or magic_measure.DEFAULT_LIMITS,
        )

    def with_gamma(self, gamma: float) -> "DeformationContext":
        return dataclasses.replace(self, gamma=float(gamma))

    @property
    def s_phi(self) -> float:
        return potential.dirichlet_form(self.graph, self.a, self.phi)


@dataclass(frozen=True)
class TreeStatistics:
    mean: float  # E_nu[Delta]
    var: float  # Var_nu(Delta)
    route: str


# ------------------------------
# H, deformation, f_gamma
# ------------------------------


def H(graph: graph_core.FiniteGraph, x: magic_measure.Environment, v0: int, v1: int) -> float:
    """(1/4) log(x_v1 / x_v0)."""
    lxv = x.vertex_log_weights(graph)
    return 0.25 * float(lxv[v1] - lxv[v0])


def H_batch(graph: graph_core.FiniteGraph, log_x: np.ndarray, v0: int, v1: int) -> np.ndarray:
    lxv = magic_measure.vertex_log_weights(graph, np.atleast_2d(log_x))
    return 0.25 * (lxv[:, v1] - lxv[:, v0])


def _require_reference(ctx: DeformationContext, x: magic_measure.Environment) -> None:
    if x.e0 != ctx.e0 or not x.is_normalized:
        raise ValueError(f"environment is not normalized at reference edge {ctx.e0}")


def deform(ctx: DeformationContext, x: magic_measure.Environment) -> magic_measure.Environment:
    """x_e -> exp(gamma * phi(e)) x_e; stays normalized because phi(e0) = 0."""
    _require_reference(ctx, x)
    if ctx.gamma == 0.0:
        return x
    return magic_measure.Environment(x.log_x + ctx.gamma * ctx.phi.values, x.e0)


def deformed_vertex_weight(ctx: DeformationContext, x: magic_measure.Environment, v: int) -> float:
    """sum over e at v of exp(gamma * phi(e)) x_e."""
    inc = list(ctx.graph.adjacency[v])
    return float(np.exp(logsumexp(x.log_x[inc] + ctx.gamma * ctx.phi.values[inc])))


def _linear_coefficient(ctx: DeformationContext, a_v: np.ndarray) -> float:
    return a_v[ctx.v1] / 2.0 + 0.25 - float(ctx.phi.values @ ctx.a.values)


def _interior_coefficients(ctx: DeformationContext, a_v: np.ndarray) -> np.ndarray:
    c = (a_v + 1.0) / 2.0
    c[[ctx.v0, ctx.v1]] = 0.0
    return c


def log_f_gamma(ctx: DeformationContext, x: magic_measure.Environment) -> float:
    """f_gamma(x), the log Radon-Nikodym derivative of the deformed measure against P.

    gamma (a_v1/2 + 1/4) - gamma sum_e phi(e) a_e
    + sum_{v not in {v0, v1}} ((a_v+1)/2) log(x_v^(gamma phi) / x_v)
    - (1/2) log(tree sum at deformed weights / tree sum at x).
    """
    _require_reference(ctx, x)
    if ctx.gamma == 0.0:
        return 0.0
    g = ctx.graph
    a_v = ctx.a.vertex_weights(g)
    c = _interior_coefficients(ctx, a_v)
    lxv = x.vertex_log_weights(g)
    lxv_def = np.array([math.log(deformed_vertex_weight(ctx, x, v)) for v in range(g.n_vertices)])
    tree_ratio = magic_measure.spanning_tree_log_polynomial(g, deform(ctx, x)) - magic_measure.spanning_tree_log_polynomial(g, x)
    return ctx.gamma * _linear_coefficient(ctx, a_v) + float(c @ (lxv_def - lxv)) - 0.5 * tree_ratio


def log_f_gamma_batch(ctx: DeformationContext, log_x: np.ndarray, evaluator: Optional[magic_measure.PhiEvaluator] = None) -> np.ndarray:
    """f_gamma for a batch (N, |E|) of log-environments normalized at e0."""
    log_x = np.atleast_2d(np.asarray(log_x, dtype=float))
    if ctx.gamma == 0.0:
        return np.zeros(log_x.shape[0])
    g = ctx.graph
    ev = evaluator or magic_measure.PhiEvaluator(g, ctx.a, limits=ctx.limits)
    a_v = ctx.a.vertex_weights(g)
    c = _interior_coefficients(ctx, a_v)
    shifted = log_x + ctx.gamma * ctx.phi.values
    d_vertex = magic_measure.vertex_log_weights(g, shifted) - magic_measure.vertex_log_weights(g, log_x)
    d_tree = ev.log_tree(shifted) - ev.log_tree(log_x)
    return ctx.gamma * _linear_coefficient(ctx, a_v) + d_vertex @ c - 0.5 * d_tree


# ------------------------------
# Moments behind the derivatives
# ------------------------------


def _vertex_edge_moments(graph: graph_core.FiniteGraph, log_w: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per vertex, mean and variance of phi under mu_v(e) proportional to w_e, e at v."""
    eids, _ = graph.padded_incidence
    valid = eids >= 0
    Ec = np.maximum(eids, 0)
    lw = np.where(valid[None], log_w[:, Ec], -np.inf)
    p = np.exp(lw - logsumexp(lw, axis=-1, keepdims=True))
    f = np.where(valid, phi[Ec], 0.0)
    mean = np.sum(p * f, axis=-1)
    var = np.maximum(np.sum(p * f**2, axis=-1) - mean**2, 0.0)
    return mean, var


def _tree_moments_enumerated(
    graph: graph_core.FiniteGraph, log_w: np.ndarray, phi: np.ndarray, limits: magic_measure.EnumerationLimits
) -> Tuple[np.ndarray, np.ndarray]:
    trees = magic_measure.enumerate_spanning_trees(graph, limits.max_vertices, limits.max_subsets).astype(float)
    scores = log_w @ trees.T
    p = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
    delta = trees @ phi
    mean = p @ delta
    var = np.maximum(p @ delta**2 - mean**2, 0.0)
    return mean, var


def _tree_moments_trace(graph: graph_core.FiniteGraph, log_w: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """gamma-derivatives of the log tree sum: with M = B^T L^-1 B on the reduced
    signed incidence B, mean = sum phi_e w_e M_ee and
    var = sum phi_e^2 w_e M_ee - sum_{e,f} phi_e phi_f w_e w_f M_ef^2."""
    b = magic_measure._reduced_signed_incidence(graph)
    w = np.exp(log_w - log_w.max(axis=1, keepdims=True))
    lap = np.einsum("ie,ne,je->nij", b, w, b)
    sol = np.linalg.solve(lap, np.broadcast_to(b, (w.shape[0],) + b.shape))
    M = np.einsum("ie,nif->nef", b, sol)
    diag = np.einsum("nee->ne", M)
    pw = phi[None, :] * w
    mean = np.sum(pw * diag, axis=1)
    second = np.sum(phi[None, :] * pw * diag, axis=1)
    cross = np.einsum("ne,nef,nf->n", pw, M**2, pw)
    return mean, np.maximum(second - cross, 0.0)


def _tree_moments(
    graph: graph_core.FiniteGraph,
    log_w: np.ndarray,
    phi: np.ndarray,
    route: str = "auto",
    limits: magic_measure.EnumerationLimits = magic_measure.DEFAULT_LIMITS,
) -> Tuple[np.ndarray, np.ndarray, str]:
    if route == "auto":
        route = "enumerate" if graph.n_vertices <= limits.max_vertices else "trace"
        if route == "enumerate":
            try:
                magic_measure.enumerate_spanning_trees(graph, limits.max_vertices, limits.max_subsets)
            except DiagnosticError:
                route = "trace"
    if route == "enumerate":
        mean, var = _tree_moments_enumerated(graph, log_w, phi, limits)
    elif route == "trace":
        mean, var = _tree_moments_trace(graph, log_w, phi)
    else:
        raise ValueError(f"tree_statistics: unknown route '{route}'")
    return mean, var, route


def tree_statistics(
    graph: graph_core.FiniteGraph,
    x: magic_measure.Environment,
    phi: Any,
    gamma: float,
    *,
    route: str = "auto",
    limits: Optional[magic_measure.EnumerationLimits] = None,
    max_vertices: Optional[int] = None,
) -> TreeStatistics:
    """Mean and variance of Delta(T) = sum_{e in T} phi(e) under nu(T) proportional to
    prod_{e in T} exp(gamma phi(e)) x_e.

    route="enumerate" lists the trees (raises TREE_ENUMERATION_LIMIT past the
    cutoff); route="trace" uses the reduced Laplacian; "auto" enumerates within
    `limits`. `max_vertices` overrides the vertex cutoff of `limits`.
    """
    vals = np.asarray(getattr(phi, "values", phi), dtype=float)
    if vals.shape != (graph.n_edges,):
        raise ValueError("tree_statistics: phi must have one value per edge")
    log_w = (x.log_x + gamma * vals)[None, :]
    lim = limits or magic_measure.DEFAULT_LIMITS
    if max_vertices is not None:
        lim = dataclasses.replace(lim, max_vertices=max_vertices)
    mean, var, used = _tree_moments(graph, log_w, vals, route, lim)
    return TreeStatistics(mean=float(mean[0]), var=float(var[0]), route=used)


def f_gamma_derivatives_batch(ctx: DeformationContext, log_x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    log_x = np.atleast_2d(np.asarray(log_x, dtype=float))
    g = ctx.graph
    phi = ctx.phi.values
    a_v = ctx.a.vertex_weights(g)
    c = _interior_coefficients(ctx, a_v)
    log_w = log_x + ctx.gamma * phi
    mu_mean, mu_var = _vertex_edge_moments(g, log_w, phi)
    nu_mean, nu_var, _ = _tree_moments(g, log_w, phi, limits=ctx.limits)
    first = _linear_coefficient(ctx, a_v) + mu_mean @ c - 0.5 * nu_mean
    second = mu_var @ c - 0.5 * nu_var
    return first, second


def f_gamma_derivatives(ctx: DeformationContext, x: magic_measure.Environment) -> Tuple[float, float]:
    """(d f_gamma / d gamma, d^2 f_gamma / d gamma^2) at x."""
    first, second = f_gamma_derivatives_batch(ctx, x.log_x)
    return float(first[0]), float(second[0])


# ------------------------------
# Optimal gamma and bounds
# ------------------------------


def _require_positive(s_phi: float) -> None:
    if not s_phi > 0 or not math.isfinite(s_phi):
        raise ValueError(f"S_phi must be finite and > 0 (got {s_phi})")


def optimal_gamma(s_phi: float) -> float:
    """Minimizer of gamma/4 + S_phi gamma^2 / 2."""
    _require_positive(s_phi)
    return -1.0 / (4.0 * s_phi)


def moment_bound(s_phi: float) -> float:
    """exp(-1/(32 S_phi)), the quadratic majorant evaluated at the optimal gamma."""
    _require_positive(s_phi)
    return math.exp(-1.0 / (32.0 * s_phi))


def quadratic_majorant(s_phi: float, gamma: float) -> float:
    """Upper bound on log E_Q[(x_v1/x_v0)^(1/4)] valid for every gamma."""
    return gamma / 4.0 + s_phi * gamma**2 / 2.0


def entropy_bound(s_phi: float, gamma: float) -> float:
    return s_phi * gamma**2 / 2.0


def s_phi_pointwise_check(ctx: DeformationContext, log_x: np.ndarray) -> Dict[str, Any]:
    """Largest second derivative over the given environments against S_phi."""
    _, second = f_gamma_derivatives_batch(ctx, log_x)
    s_phi = ctx.s_phi
    worst = float(np.max(second))
    return {"second_deriv_max": worst, "s_phi": s_phi, "holds": bool(worst <= s_phi * (1.0 + 1e-12))}


@dataclass
class GammaRow:
    gamma: float
    EH: float
    EH_se: float
    g_hat: float
    g_se: float
    g_bound: float
    second_deriv_max: float

    def to_row(self) -> Dict[str, Any]:
        return {k: getattr(self, k) for k in GRID_COLUMNS}


def gamma_grid(ctx: DeformationContext, log_x: np.ndarray, gammas: Sequence[float]) -> List[GammaRow]:
    """For each gamma: mean of H over deformed P-samples, g_hat = mean of f_gamma over
    P-samples, the entropy bound S_phi gamma^2/2 and the largest second derivative.
    Standard errors use the autocorrelation-corrected sample size."""
    log_x = np.atleast_2d(np.asarray(log_x, dtype=float))
    ev = magic_measure.PhiEvaluator(ctx.graph, ctx.a, limits=ctx.limits)
    s_phi = ctx.s_phi
    h0 = H_batch(ctx.graph, log_x, ctx.v0, ctx.v1)
    rows = []
    for gam in gammas:
        c = ctx.with_gamma(gam)
        h = H_batch(c.graph, log_x + c.gamma * c.phi.values, c.v0, c.v1) if gam != 0.0 else h0
        f = log_f_gamma_batch(c, log_x, ev)
        _, second = f_gamma_derivatives_batch(c, log_x)
        rows.append(
            GammaRow(
                gamma=float(gam),
                EH=float(np.mean(h)),
                EH_se=sampler_oracle.standard_error(h),
                g_hat=float(np.mean(f)),
                g_se=sampler_oracle.standard_error(f) if gam != 0.0 else 0.0,
                g_bound=entropy_bound(s_phi, gam),
                second_deriv_max=float(np.max(second)),
            )
        )
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description="f_gamma derivatives and bounds at the uniform environment.")
    p.add_argument("--builtin", default="cycle:4")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--gammas", default="-1,-0.25,0,0.5")
    args = p.parse_args()
    inst = graph_core.parse_builtin(args.builtin, args.a)
    ctx = DeformationContext.from_instance(inst)
    x = magic_measure.Environment.uniform(inst.graph, inst.e0)
    print(f"S_phi = {ctx.s_phi:.6g}; optimal gamma = {optimal_gamma(ctx.s_phi):.6g}; bound = {moment_bound(ctx.s_phi):.6g}")
    for gam in (float(s) for s in args.gammas.split(",")):
        c = ctx.with_gamma(gam)
        d1, d2 = f_gamma_derivatives(c, x)
        print(f"gamma={gam:+.4f}  f={log_f_gamma(c, x):.10f}  f'={d1:.10f}  f''={d2:.10f}")


if __name__ == "__main__":
    main()
