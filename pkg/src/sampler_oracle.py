"""MCMC samplers for the mixing measure and a quadrature oracle for tiny graphs.

- mcmc_sample: componentwise Gaussian random walk in the log-coordinates of
  the free edges (every edge but the reference edge, whose weight stays 1).
  Proposal scales adapt during burn-in and are frozen afterwards.
- quadrature_integrate: tensor Gauss-Legendre rule on [-M, M]^d over the same
  log-coordinates, with node doubling for the error estimate and a tail bound
  read off the integrand on the faces of the cube.
- Fixtures: quadrature values archived as JSON {graph_hash, quantity, value, error}.

Usage:
  python src/sampler_oracle.py --builtin cycle:4 --samples 20000 --seed 1
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import artifacts  # type: ignore
import graph_core  # type: ignore
import magic_measure  # type: ignore
import walker  # type: ignore
from config_loader import MCMCSettings, QuadratureSettings  # type: ignore
from errors import DiagnosticError  # type: ignore

Integrand = Callable[[np.ndarray], np.ndarray]

# Order in which non-fatal diagnostics are listed on results.
_DIAGNOSTIC_ORDER = ["ACCEPTANCE_OUT_OF_RANGE", "LOW_ESS"]

_ACCEPTANCE_RANGE = (0.25, 0.5)


def _ordered(codes: set) -> List[str]:
    return [c for c in _DIAGNOSTIC_ORDER if c in codes]


@dataclass(frozen=True)
class ChainConfig:
    n_samples: int
    burn_in: int = 4000
    thinning: int = 1
    proposal_scale: float = 1.0
    seed: int = 0
    target: str = "Q"  # Q (started at v0) | P (interpolated between v0 and v1)
    target_acceptance: float = 0.35
    adapt_interval: int = 100
    min_ess: int = 100
    limits: magic_measure.EnumerationLimits = magic_measure.DEFAULT_LIMITS

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("ChainConfig: n_samples must be > 0")
        if self.thinning < 1:
            raise ValueError("ChainConfig: thinning must be >= 1")
        if self.burn_in < 0:
            raise ValueError("ChainConfig: burn_in must be >= 0")
        if not self.proposal_scale > 0:
            raise ValueError("ChainConfig: proposal scale must be positive")
        if self.target not in ("Q", "P"):
            raise ValueError(f"ChainConfig: target must be 'Q' or 'P' (got {self.target!r})")
        if self.seed < 0:
            raise ValueError("ChainConfig: seed must be non-negative")

    @classmethod
    def from_settings(
        cls,
        s: MCMCSettings,
        seed: int,
        target: str = "Q",
        n_samples: Optional[int] = None,
        limits: Optional[magic_measure.EnumerationLimits] = None,
    ) -> "ChainConfig":
        return cls(
            n_samples=n_samples or s.n_samples,
            burn_in=s.burn_in,
            thinning=s.thinning,
            proposal_scale=s.proposal_scale,
            seed=seed,
            target=target,
            target_acceptance=s.target_acceptance,
            adapt_interval=s.adapt_interval,
            min_ess=s.min_ess,
            limits=limits or magic_measure.DEFAULT_LIMITS,
        )


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    std_error: float
    ess: float
    n: int
    diagnostics: Tuple[str, ...] = ()

    def to_record(self) -> Dict[str, Any]:
        return {"value": self.value, "std_error": self.std_error, "ess": self.ess, "n": self.n, "diagnostics": list(self.diagnostics)}


@dataclass(eq=False)
class SampleSet:
    """Retained chain states as log-weights, shape (n_samples, |E|); column e0 is 0."""

    graph: graph_core.FiniteGraph
    log_x: np.ndarray
    e0: int
    v0: int
    v1: Optional[int]
    target: str
    seed: int
    chain: int
    acceptance_rate: float
    coordinate_acceptance: np.ndarray
    scales: np.ndarray
    diagnostics: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.log_x.shape[0]

    def __iter__(self) -> Iterator[magic_measure.Environment]:
        for row in self.log_x:
            yield magic_measure.Environment(row, self.e0)

    def vertex_log_weights(self) -> np.ndarray:
        return magic_measure.vertex_log_weights(self.graph, self.log_x)

    def log_ratio(self, v0: int, v1: int) -> np.ndarray:
        """log(x_v1 / x_v0) per sample."""
        lxv = self.vertex_log_weights()
        return lxv[:, v1] - lxv[:, v0]


# ------------------------------
# Diagnostics
# ------------------------------


def autocorrelation(series: Sequence[float]) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    n = x.size
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, n=size)
    acov = np.fft.irfft(f * np.conj(f), n=size)[:n] / n
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def effective_sample_size(series: Sequence[float]) -> float:
    """n / tau, tau summed over the initial positive sequence of paired autocorrelations."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4 or np.all(x == x[0]):
        return float(n)
    rho = autocorrelation(x)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(min(max(n / tau, 1.0), n))


def standard_error(series: Sequence[float]) -> float:
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        return 0.0
    return float(math.sqrt(np.var(x, ddof=1) / effective_sample_size(x)))


def _estimate(series: np.ndarray, min_ess: int) -> MomentEstimate:
    ess = effective_sample_size(series)
    codes = set()
    if ess < min_ess:
        codes.add("LOW_ESS")
        print(f"WARNING: effective sample size {ess:.1f} is below {min_ess}", flush=True)
    se = math.sqrt(np.var(series, ddof=1) / ess) if series.size > 1 else 0.0
    return MomentEstimate(value=float(np.mean(series)), std_error=float(se), ess=ess, n=int(series.size), diagnostics=tuple(_ordered(codes)))


# ------------------------------
# MCMC
# ------------------------------


def _log_target(
    ev: magic_measure.PhiEvaluator, target: str, v0: int, v1: Optional[int]
) -> Callable[[np.ndarray], np.ndarray]:
    if target == "Q":
        return lambda lx: ev.log_phi(lx, v0)
    if v1 is None:
        raise ValueError("the interpolated target needs v1")
    return lambda lx: ev.log_interp(lx, v0, v1)


def mcmc_sample(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    v1: Optional[int],
    e0: int,
    cfg: ChainConfig,
    *,
    chain: int = 0,
    evaluator: Optional[magic_measure.PhiEvaluator] = None,
) -> SampleSet:
    """Sample Q (started at v0) or the interpolated measure on environments normalized at e0."""
    a.check(graph)
    m = graph.n_edges
    if not 0 <= e0 < m or v0 not in graph.edges[e0]:
        raise ValueError(f"mcmc_sample: reference edge {e0} must be an edge at v0={v0}")
    if m < 2:
        raise ValueError("mcmc_sample: need at least one free edge")
    ev = evaluator or magic_measure.PhiEvaluator(graph, a, limits=cfg.limits)
    logp = _log_target(ev, cfg.target, v0, v1)
    rng = walker.make_rng(cfg.seed, chain)
    free = np.asarray([e for e in range(m) if e != e0], dtype=np.int64)
    y = np.zeros(m)
    cur = float(logp(y[None, :])[0])
    if not math.isfinite(cur):
        raise DiagnosticError("NONFINITE_DENSITY", "log density is not finite at the uniform environment", {"value": repr(cur)})
    scales = np.full(free.size, cfg.proposal_scale)
    window = np.zeros(free.size)
    accepted = np.zeros(free.size)
    out = np.empty((cfg.n_samples, m))
    kept = 0
    n_sweeps = cfg.burn_in + cfg.n_samples * cfg.thinning
    for sweep in range(n_sweeps):
        z = rng.standard_normal(free.size)
        log_u = np.log1p(-rng.random(free.size))
        for j, e in enumerate(free):
            prop = y.copy()
            prop[e] += scales[j] * z[j]
            lp = float(logp(prop[None, :])[0])
            if math.isfinite(lp) and log_u[j] < lp - cur:
                y, cur = prop, lp
                if sweep < cfg.burn_in:
                    window[j] += 1
                else:
                    accepted[j] += 1
        if sweep < cfg.burn_in:
            if (sweep + 1) % cfg.adapt_interval == 0:
                scales *= np.exp(window / cfg.adapt_interval - cfg.target_acceptance)
                window[:] = 0.0
        elif (sweep - cfg.burn_in + 1) % cfg.thinning == 0:
            out[kept] = y
            kept += 1
    coord_acc = accepted / max(n_sweeps - cfg.burn_in, 1)
    rate = float(coord_acc.mean())
    codes = set()
    lo, hi = _ACCEPTANCE_RANGE
    if not lo <= rate <= hi:
        codes.add("ACCEPTANCE_OUT_OF_RANGE")
        print(f"WARNING: chain {chain} acceptance rate {rate:.3f} outside [{lo}, {hi}]", flush=True)
    return SampleSet(
        graph=graph,
        log_x=out,
        e0=e0,
        v0=v0,
        v1=v1,
        target=cfg.target,
        seed=cfg.seed,
        chain=chain,
        acceptance_rate=rate,
        coordinate_acceptance=coord_acc,
        scales=scales,
        diagnostics=_ordered(codes),
    )


def run_chains(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    v1: Optional[int],
    e0: int,
    cfg: ChainConfig,
    n_chains: int,
    *,
    threads: int = 1,
) -> List[SampleSet]:
    """Independent chains on streams (seed, 0..n_chains-1), returned in chain order."""
    if n_chains < 1:
        raise ValueError("run_chains: need at least one chain")
    ev = magic_measure.PhiEvaluator(graph, a, limits=cfg.limits)
    if threads <= 1 or n_chains == 1:
        return [mcmc_sample(graph, a, v0, v1, e0, cfg, chain=k, evaluator=ev) for k in range(n_chains)]
    results_by_index: Dict[int, SampleSet] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
        futs = {ex.submit(mcmc_sample, graph, a, v0, v1, e0, cfg, chain=k, evaluator=ev): k for k in range(n_chains)}
        for fut in concurrent.futures.as_completed(futs):
            results_by_index[futs[fut]] = fut.result()
    return [results_by_index[k] for k in range(n_chains)]


# ------------------------------
# Estimators on samples
# ------------------------------


def quarter_moment(samples: SampleSet, v0: int, v1: int, *, min_ess: int = 100) -> MomentEstimate:
    """E_Q[(x_v1/x_v0)^(1/4)] with an autocorrelation-corrected standard error."""
    if samples.target != "Q":
        raise ValueError("quarter_moment: samples must come from the Q chain")
    n = len(samples)
    if v0 == v1:
        return MomentEstimate(value=1.0, std_error=0.0, ess=float(n), n=n)
    return _estimate(np.exp(0.25 * samples.log_ratio(v0, v1)), min_ess)


def log_ratio_mean(samples: SampleSet, e_num: int, e_den: int, *, min_ess: int = 100) -> MomentEstimate:
    """Sample mean of log(x_e_num / x_e_den)."""
    return _estimate(samples.log_x[:, e_num] - samples.log_x[:, e_den], min_ess)


def reweight_to_interpolated(
    q_samples: SampleSet, v0: int, v1: int, fn: Callable[[np.ndarray], np.ndarray], *, min_ess: int = 100
) -> MomentEstimate:
    """E_P[fn] from Q samples, self-normalized with weights (x_v1/x_v0)^(1/4)."""
    if q_samples.target != "Q":
        raise ValueError("reweight_to_interpolated: samples must come from the Q chain")
    lw = 0.25 * q_samples.log_ratio(v0, v1)
    w = np.exp(lw - lw.max())
    f = np.asarray(fn(q_samples.log_x), dtype=float)
    mu = float(np.sum(w * f) / np.sum(w))
    resid = w * (f - mu) / np.mean(w)
    ess = effective_sample_size(resid)
    codes = set()
    if ess < min_ess:
        codes.add("LOW_ESS")
        print(f"WARNING: reweighted effective sample size {ess:.1f} is below {min_ess}", flush=True)
    se = math.sqrt(np.var(resid, ddof=1) / ess)
    return MomentEstimate(value=mu, std_error=se, ess=ess, n=len(q_samples), diagnostics=tuple(_ordered(codes)))


@dataclass(frozen=True)
class SymmetryStatistic:
    mean: float
    std_error: float
    z: float
    skew: float
    skew_se: float
    z_skew: float
    ess: float

    def passed(self, sigma: float = 3.0) -> bool:
        return abs(self.z) <= sigma and abs(self.z_skew) <= sigma


def symmetry_check(
    samples: SampleSet, v0: int, v1: int, guard: Optional[graph_core.AssumptionReport] = None
) -> SymmetryStatistic:
    """Compare the law of log(x_v1/x_v0) under P with its negation through mean and skew.

    Both vanish when v0 and v1 are swapped by a weight-preserving automorphism.
    A failed `guard` report is rejected before any statistic is computed.
    """
    if guard is not None and not guard.passed:
        raise ValueError(f"symmetry_check: symmetry preconditions fail: {', '.join(guard.violations)}")
    n = len(samples)
    if v0 == v1:
        return SymmetryStatistic(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, float(n))
    d = samples.log_ratio(v0, v1)
    ess = effective_sample_size(d)
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    se = sd / math.sqrt(ess)
    skew = float(np.mean((d - mean) ** 3) / sd**3) if sd > 0 else 0.0
    skew_se = math.sqrt(6.0 / ess)
    return SymmetryStatistic(
        mean=mean,
        std_error=se,
        z=mean / se if se > 0 else 0.0,
        skew=skew,
        skew_se=skew_se,
        z_skew=skew / skew_se,
        ess=ess,
    )


# ------------------------------
# Quadrature oracle
# ------------------------------


@dataclass
class QuadratureResult:
    values: np.ndarray  # one entry per integrand column
    errors: np.ndarray
    truncation_bounds: np.ndarray
    nodes_per_axis: int
    n_points: int
    converged: bool

    @property
    def value(self) -> float:
        return float(self.values[0])

    @property
    def error(self) -> float:
        return float(self.errors[0])

    @property
    def truncation_bound(self) -> float:
        return float(self.truncation_bounds[0])


def _as_columns(h: Any, n: int) -> np.ndarray:
    arr = np.asarray(h, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != n:
        raise ValueError("integrand must return one row per evaluation point")
    return arr


class _TensorRule:
    """Gauss-Legendre tensor product on [-M, M]^d over the free log-coordinates."""

    def __init__(
        self,
        logp: Callable[[np.ndarray], np.ndarray],
        integrand: Optional[Integrand],
        free: np.ndarray,
        m: int,
        settings: QuadratureSettings,
        threads: int,
    ) -> None:
        self.logp = logp
        self.integrand = integrand
        self.free = free
        self.m = m
        self.d = free.size
        self.s = settings
        self.threads = max(1, threads)

    def _embed(self, y: np.ndarray) -> np.ndarray:
        lx = np.zeros((y.shape[0], self.m))
        lx[:, self.free] = y
        return lx

    def _eval(self, lx: np.ndarray, log_w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(log of weighted density, integrand columns with |h| columns appended)."""
        l = self.logp(lx) + log_w
        h = np.ones((lx.shape[0], 1)) if self.integrand is None else _as_columns(self.integrand(lx), lx.shape[0])
        return l, np.concatenate([h, np.abs(h)], axis=1)

    def integrate(self, n: int) -> Tuple[float, np.ndarray]:
        """(log scale, column sums) so that the integral is sums * exp(log scale)."""
        x, w = np.polynomial.legendre.leggauss(n)
        nodes, log_wts = self.s.truncation * x, np.log(self.s.truncation * w)
        total = n**self.d
        starts = list(range(0, total, self.s.chunk_size))

        def chunk(start: int) -> Tuple[float, np.ndarray]:
            idx = np.unravel_index(np.arange(start, min(start + self.s.chunk_size, total)), (n,) * self.d)
            y = np.stack([nodes[i] for i in idx], axis=1)
            log_w = np.sum([log_wts[i] for i in idx], axis=0)
            l, h = self._eval(self._embed(y), log_w)
            mx = float(np.max(l))
            return mx, np.exp(l - mx) @ h

        if self.threads > 1 and len(starts) > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.threads) as ex:
                parts = list(ex.map(chunk, starts))
        else:
            parts = [chunk(s) for s in starts]
        scale = max(p[0] for p in parts)
        sums = np.sum([p[1] * math.exp(p[0] - scale) for p in parts], axis=0)
        return scale, sums

    def tail(self, n_face: int, scale: float) -> np.ndarray:
        """Mass outside the cube, from the integrand on each face and its outward decay rate."""
        x, w = np.polynomial.legendre.leggauss(n_face)
        nodes, log_wts = self.s.truncation * x, np.log(self.s.truncation * w)
        M = self.s.truncation
        bound = None
        for j in range(self.d):
            others = [k for k in range(self.d) if k != j]
            grid = list(itertools.product(range(n_face), repeat=len(others)))
            idx = np.asarray(grid, dtype=np.int64).reshape(len(grid), len(others))
            log_w = log_wts[idx].sum(axis=1) if others else np.zeros(1)
            for side in (-1.0, 1.0):
                y_edge = np.zeros((idx.shape[0], self.d))
                if others:
                    y_edge[:, others] = nodes[idx]
                y_in = y_edge.copy()
                y_edge[:, j] = side * M
                y_in[:, j] = side * (M - 1.0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    l_edge, h_edge = self._eval(self._embed(y_edge), log_w)
                    l_in, h_in = self._eval(self._embed(y_in), log_w)
                    half = h_edge.shape[1] // 2
                    a_edge = l_edge[:, None] + np.log(h_edge[:, half:])
                    a_in = l_in[:, None] + np.log(h_in[:, half:])
                    slope = a_in - a_edge
                    mass = np.exp(a_edge - scale)
                    per_point = np.where(mass > 0, np.where(slope > 0, mass / slope, np.inf), 0.0)
                face = per_point.sum(axis=0)
                bound = face if bound is None else bound + face
        return bound


def _free_edges(graph: graph_core.FiniteGraph, e0: int) -> np.ndarray:
    return np.asarray([e for e in range(graph.n_edges) if e != e0], dtype=np.int64)


def quadrature_integrate(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    integrand: Optional[Integrand],
    e0: int,
    settings: Optional[QuadratureSettings] = None,
    *,
    v0: int,
    v1: Optional[int] = None,
    target: str = "Q",
    threads: int = 1,
    evaluator: Optional[magic_measure.PhiEvaluator] = None,
) -> QuadratureResult:
    """Integral of (target density) * integrand over environments normalized at e0.

    The integrand receives a batch (N, |E|) of log-weights and returns (N,) or
    (N, k); None means the constant 1. Nodes per axis double while the
    difference to the half-node rule exceeds the relative target and the point
    budget allows. Raises TRUNCATION_ABOVE_TOLERANCE when the tail bound does.
    """
    s = settings or QuadratureSettings()
    a.check(graph)
    if not 0 <= e0 < graph.n_edges:
        raise ValueError(f"quadrature_integrate: e0={e0} is not an edge index")
    free = _free_edges(graph, e0)
    d = free.size
    if d > s.max_dimension:
        raise ValueError(f"quadrature_integrate: dimension {d} exceeds the cap {s.max_dimension}")
    ev = evaluator or magic_measure.PhiEvaluator(graph, a)
    rule = _TensorRule(_log_target(ev, target, v0, v1), integrand, free, graph.n_edges, s, threads)

    n = s.nodes_per_axis
    prev_scale, prev = rule.integrate(max(n // 2, 2))
    scale, cur = rule.integrate(n)

    def rel_err() -> np.ndarray:
        k = cur.size // 2
        diff = np.abs(cur[:k] - prev[:k] * math.exp(prev_scale - scale))
        return diff / np.maximum(cur[k:], 1e-300)

    err = rel_err()
    while np.max(err) > s.rel_tol and (2 * n) ** d <= s.max_points:
        prev_scale, prev = scale, cur
        n *= 2
        scale, cur = rule.integrate(n)
        err = rel_err()
    k = cur.size // 2
    tail = rule.tail(max(n // 4, 8), scale)
    trunc = tail / np.maximum(cur[k:], 1e-300)
    if np.any(trunc > s.rel_tol):
        raise DiagnosticError(
            "TRUNCATION_ABOVE_TOLERANCE",
            f"tail mass outside [-{s.truncation}, {s.truncation}]^{d} is {float(np.max(trunc)):.3g} relative",
            {"truncation": s.truncation, "relative_tail": float(np.max(trunc)), "tolerance": s.rel_tol},
        )
    factor = math.exp(scale)
    return QuadratureResult(
        values=cur[:k] * factor,
        errors=err * cur[k:] * factor,
        truncation_bounds=tail * factor,
        nodes_per_axis=n,
        n_points=n**d,
        converged=bool(np.max(err) <= s.rel_tol),
    )


def quadrature_normalizer(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    e0: int,
    settings: Optional[QuadratureSettings] = None,
    *,
    v1: Optional[int] = None,
    target: str = "Q",
    threads: int = 1,
) -> QuadratureResult:
    """Normalizing constant of Q (started at v0) or of the interpolated measure, w.r.t. reference edge e0."""
    return quadrature_integrate(graph, a, None, e0, settings, v0=v0, v1=v1, target=target, threads=threads)


def quadrature_expectation(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    e0: int,
    integrand: Integrand,
    settings: Optional[QuadratureSettings] = None,
    *,
    v1: Optional[int] = None,
    target: str = "Q",
    threads: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """(E[h], error) per integrand column, with the normalizer computed in the same pass."""

    def stacked(lx: np.ndarray) -> np.ndarray:
        return np.concatenate([np.ones((lx.shape[0], 1)), _as_columns(integrand(lx), lx.shape[0])], axis=1)

    res = quadrature_integrate(graph, a, stacked, e0, settings, v0=v0, v1=v1, target=target, threads=threads)
    z = res.values[0]
    vals = res.values[1:] / z
    errs = np.abs(vals) * res.errors[0] / z + res.errors[1:] / z
    return vals, errs


def quarter_moment_oracle(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    v1: int,
    e0: int,
    settings: Optional[QuadratureSettings] = None,
    *,
    threads: int = 1,
) -> Tuple[float, float]:
    """E_Q[(x_v1/x_v0)^(1/4)] by quadrature."""

    def h(lx: np.ndarray) -> np.ndarray:
        lxv = magic_measure.vertex_log_weights(graph, lx)
        return np.exp(0.25 * (lxv[:, v1] - lxv[:, v0]))

    vals, errs = quadrature_expectation(graph, a, v0, e0, h, settings, threads=threads)
    return float(vals[0]), float(errs[0])


def interpolated_normalizer_ratio(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    v1: int,
    e0: int,
    settings: Optional[QuadratureSettings] = None,
    *,
    threads: int = 1,
) -> Tuple[float, float]:
    """z_P / z_Q; equals the quarter moment E_Q[(x_v1/x_v0)^(1/4)]."""
    zp = quadrature_normalizer(graph, a, v0, e0, settings, v1=v1, target="P", threads=threads)
    zq = quadrature_normalizer(graph, a, v0, e0, settings, threads=threads)
    ratio = zp.value / zq.value
    return ratio, ratio * (zp.error / zp.value + zq.error / zq.value)


def ratio_law_moments(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    e_ref: int,
    pairs: Sequence[Tuple[int, int]],
    settings: Optional[QuadratureSettings] = None,
) -> Dict[Tuple[int, int], Tuple[float, float]]:
    """First two moments of log(x_e / x_f) under Q normalized at e_ref.

    The law of weight ratios does not depend on the reference edge.
    """
    pairs = [(int(e), int(f)) for e, f in pairs]

    def h(lx: np.ndarray) -> np.ndarray:
        cols = [lx[:, e] - lx[:, f] for e, f in pairs]
        return np.stack(cols + [c**2 for c in cols], axis=1)

    vals, _ = quadrature_expectation(graph, a, v0, e_ref, h, settings)
    k = len(pairs)
    return {p: (float(vals[j]), float(vals[k + j])) for j, p in enumerate(pairs)}


# ------------------------------
# Mixture identity
# ------------------------------


@dataclass(frozen=True)
class MixtureResult:
    path: Tuple[int, ...]
    lhs: float
    rhs: float
    diff: float
    error: float


def admissible_paths(graph: graph_core.FiniteGraph, v0: int, length: int) -> List[Tuple[int, ...]]:
    """All nearest-neighbor paths of exactly `length` steps from v0, in lexicographic edge order."""
    paths: List[Tuple[int, ...]] = [(v0,)]
    for _ in range(length):
        paths = [p + (graph.other_end(e, p[-1]),) for p in paths for e in graph.adjacency[p[-1]]]
    return paths


def _markov_path_columns(graph: graph_core.FiniteGraph, paths: Sequence[Tuple[int, ...]]) -> Integrand:
    steps = [walker.path_edge_matrix(graph, p) if len(p) > 1 else (np.zeros(0, np.int64), np.zeros(0, np.int64)) for p in paths]

    def h(lx: np.ndarray) -> np.ndarray:
        lxv = magic_measure.vertex_log_weights(graph, lx)
        cols = [np.exp(lx[:, e].sum(axis=1) - lxv[:, u].sum(axis=1)) for e, u in steps]
        return np.stack(cols, axis=1)

    return h


def mixture_check_paths(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    e0: int,
    paths: Sequence[Tuple[int, ...]],
    settings: Optional[QuadratureSettings] = None,
) -> List[MixtureResult]:
    """Reinforced path probabilities against Q-averages of fixed-environment ones, in one quadrature pass."""
    for p in paths:
        if not p or p[0] != v0:
            raise ValueError(f"mixture_check: path {p} does not start at v0={v0}")
        for u, v in zip(p[:-1], p[1:]):
            if graph.edge_between(u, v) is None:
                raise ValueError(f"mixture_check: path {p} is not admissible")
    rhs, errs = quadrature_expectation(graph, a, v0, e0, _markov_path_columns(graph, paths), settings)
    out = []
    for p, r, err in zip(paths, rhs, errs):
        lhs = walker.errw_path_probability(graph, a, v0, p)
        out.append(MixtureResult(path=tuple(p), lhs=lhs, rhs=float(r), diff=abs(lhs - float(r)), error=float(err)))
    return out


def mixture_check(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    e0: int,
    path: Sequence[int],
    settings: Optional[QuadratureSettings] = None,
) -> Tuple[float, float, float]:
    """(P[path], integral of Q_{v0,x}[path] dQ(x), absolute difference)."""
    res = mixture_check_paths(graph, a, v0, e0, [tuple(path)], settings)[0]
    return res.lhs, res.rhs, res.diff


# ------------------------------
# Dumps and fixtures
# ------------------------------


def write_sample_dump(samples: SampleSet, path: str, header: Optional[Dict[str, Any]] = None) -> None:
    """One row per retained sample with the log-weight of every edge."""
    cols = ["sample"] + [f"logx_{e}" for e in range(samples.graph.n_edges)]
    rows = ({"sample": k, **{f"logx_{e}": row[e] for e in range(row.size)}} for k, row in enumerate(samples.log_x))
    artifacts.write_csv(path, cols, rows, header)


def write_fixture(path: str, graph_hash: str, quantity: str, value: float, error: float) -> None:
    artifacts.write_json(path, {"graph_hash": graph_hash, "quantity": quantity, "value": float(value), "error": float(error)})


def read_fixture(path: str, graph_hash: Optional[str] = None) -> Dict[str, Any]:
    """Load a fixture; with `graph_hash`, reject one archived for another graph."""
    with open(path, "r", encoding="utf-8") as f:
        rec = json.load(f)
    for key in ("graph_hash", "quantity", "value", "error"):
        if key not in rec:
            raise ValueError(f"fixture {path}: missing key '{key}'")
    if graph_hash is not None and rec["graph_hash"] != graph_hash:
        raise ValueError(f"fixture {path} belongs to graph {rec['graph_hash']}, not {graph_hash}")
    return rec


def main() -> None:
    p = argparse.ArgumentParser(description="Quarter moment by MCMC, with a quadrature check on tiny graphs.")
    p.add_argument("--builtin", default="cycle:4")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--burn-in", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    inst = graph_core.parse_builtin(args.builtin, args.a)
    if inst.v1 is None:
        raise SystemExit("instance has no v1; use an even cycle")
    cfg = ChainConfig(n_samples=args.samples, burn_in=args.burn_in, seed=args.seed)
    samples = mcmc_sample(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, cfg)
    est = quarter_moment(samples, inst.v0, inst.v1)
    print(f"MCMC quarter moment = {est.value:.6f} +/- {est.std_error:.6f} (ESS {est.ess:.0f}, acceptance {samples.acceptance_rate:.3f})")
    if inst.graph.n_edges - 1 <= QuadratureSettings().max_dimension:
        val, err = quarter_moment_oracle(inst.graph, inst.a, inst.v0, inst.v1, inst.e0)
        print(f"quadrature quarter moment = {val:.10f} (error {err:.2g})")


if __name__ == "__main__":
    main()
