"""Approximate Green's function, edge potential, Dirichlet form and the bound chain.

The approximate Green's function D interpolates log(level) linearly along each
r-edge. The potential phi = (D / D(ell)) ^ 1 is 0 at the origin, 1 at ell and
beyond, and 1 on periodically closing edges. bound_chain evaluates the whole
chain of inequalities in mpmath, in the log domain, because the admissible
levels are astronomically large.

Usage:
  python src/potential.py --r 130 --a 0.001953125 --c 0.998 --ell 1300,0
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import mpmath as mp
import numpy as np

import graph_core  # type: ignore
from errors import DiagnosticError  # type: ignore
from graph_core import LatticeVertex  # type: ignore

# Shell sums are added term by term up to this level; beyond it the tail uses
# harmonic numbers and Hurwitz zeta values.
_DIRECT_SHELL_TERMS = 4096

# Order of the checks in a BoundReport.
_CHECK_ORDER = [
    "R_AT_LEAST_130",
    "A_IN_RANGE",
    "C_IN_RANGE",
    "ELL_AT_LEAST_L0",
    "I_AT_LEAST_I0",
    "S_EXACT_LE_BOUND",
    "BOUND_LE_TARGET",
    "S_EXACT_LE_TARGET",
    "MOMENT_LE_HITTING",
]
_PRECONDITIONS = set(_CHECK_ORDER[:5])


@dataclass(frozen=True, eq=False)
class EdgePotential:
    """Per-edge values in [0, 1]; `D` keeps the unclipped Green's function when known."""

    values: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("EdgePotential: expected a 1-d array")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ValueError("EdgePotential: values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass
class BoundReport:
    r: int
    a: float
    c: float
    ell: LatticeVertex
    level: int
    i: Optional[int]
    alpha: float
    xi: float
    l0: Optional[int]
    s_phi: float
    s_phi_route: str
    s_phi_bound: float
    s_phi_target: float
    moment_bound: float
    log_moment_bound: float
    hitting_bound: float
    log_hitting_bound: float
    boundary_bound: float
    log_boundary_bound: float
    in_proven_regime: bool
    checks: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def failed_link(self) -> str:
        for chk in self.checks:
            if not chk["holds"]:
                return chk["name"]
        return ""

    def to_record(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "a": self.a,
            "c": self.c,
            "ell": list(self.ell),
            "level": self.level,
            "i": self.i,
            "alpha": self.alpha,
            "xi": self.xi,
            "l0": self.l0,
            "s_phi": self.s_phi,
            "s_phi_route": self.s_phi_route,
            "s_phi_bound": self.s_phi_bound,
            "s_phi_target": self.s_phi_target,
            "moment_bound": self.moment_bound,
            "log_moment_bound": self.log_moment_bound,
            "hitting_bound": self.hitting_bound,
            "log_hitting_bound": self.log_hitting_bound,
            "boundary_bound": self.boundary_bound,
            "log_boundary_bound": self.log_boundary_bound,
            "in_proven_regime": self.in_proven_regime,
            "failed_link": self.failed_link,
            "checks": self.checks,
            "warnings": self.warnings,
        }


# ------------------------------
# Green's function and potential
# ------------------------------


def _log_level(v: LatticeVertex, r: int) -> float:
    return math.log(max(graph_core.level(v, r), 1))


def approx_green_D(e: Tuple[LatticeVertex, LatticeVertex], r: int) -> float:
    """D(e) = (j_u/(r-1)) log(level(u') v 1) + (j_v/(r-1)) log(level(v') v 1)."""
    up, vp, ju, jv = graph_core.r_edge_of(e, r)
    return float(Fraction(ju, r - 1)) * _log_level(up, r) + float(Fraction(jv, r - 1)) * _log_level(vp, r)


def underline_D(v: LatticeVertex, r: int) -> float:
    """Smallest D over the lattice edges at v."""
    v = tuple(v)
    if not graph_core.is_lattice_vertex(v, r):
        raise ValueError(f"underline_D: {v} is not a vertex of G_{r}")
    return min(approx_green_D((v, w), r) for w in graph_core.lattice_neighbors(v, r))


def build_phi(
    ell: LatticeVertex,
    box: graph_core.PeriodicBoxSpec,
    graph: Optional[graph_core.FiniteGraph] = None,
) -> EdgePotential:
    """phi(e) = (D(e) / D(ell)) ^ 1 on the box, and 1 on periodically closing edges."""
    r = box.r
    ell = tuple(ell)
    if not graph_core.in_crossings(ell, r):
        raise ValueError(f"build_phi: {ell} is not a four-way crossing of G_{r}")
    lev = graph_core.level(ell, r)
    if lev < 2:
        raise ValueError(f"build_phi: level({ell}) = {lev} < 2, so D(ell) = 0")
    need = graph_core.i0(ell, r)
    if box.i < need:
        raise ValueError(f"build_phi: box i={box.i} is smaller than i0({ell}) = {need}")
    if graph is None:
        graph = graph_core.build_periodic_box(box)
    elif graph.box != box:
        raise ValueError("build_phi: graph was not built from this box spec")
    d_ell = underline_D(ell, r)
    D = np.empty(graph.n_edges)
    phi = np.empty(graph.n_edges)
    for e in range(graph.n_edges):
        D[e] = approx_green_D(graph_core.edge_lattice_endpoints(graph, e), r)
        phi[e] = 1.0 if graph.is_closing(e) else min(D[e] / d_ell, 1.0)
    return EdgePotential(values=phi, D=D)


def dirichlet_form(graph: graph_core.FiniteGraph, a: graph_core.InitialWeights, phi: EdgePotential) -> float:
    """S_phi = sum_v ((a_v+1)/2) * max over edge pairs at v of (phi(e) - phi(e'))^2."""
    vals = np.asarray(getattr(phi, "values", phi), dtype=float)
    if vals.shape != (graph.n_edges,):
        raise ValueError("dirichlet_form: phi must have one value per edge")
    a_v = a.vertex_weights(graph)
    eids, _ = graph.padded_incidence
    valid = eids >= 0
    gathered = vals[np.maximum(eids, 0)]
    spread = np.where(valid, gathered, -np.inf).max(axis=1) - np.where(valid, gathered, np.inf).min(axis=1)
    return float(np.sum((a_v + 1.0) / 2.0 * spread**2))


def r_edge_interior_energy(u_corner: LatticeVertex, v_corner: LatticeVertex, r: int) -> float:
    """Unclipped sum over the r-1 interior vertices of an r-edge of (D(e) - D(e'))^2."""
    u_corner, v_corner = tuple(u_corner), tuple(v_corner)
    step = ((v_corner[0] - u_corner[0]) // r, (v_corner[1] - u_corner[1]) // r)
    if abs(step[0]) + abs(step[1]) != 1 or not graph_core.in_crossings(u_corner, r):
        raise ValueError(f"r_edge_interior_energy: {u_corner}-{v_corner} is not an r-edge")
    pts = [(u_corner[0] + k * step[0], u_corner[1] + k * step[1]) for k in range(r + 1)]
    d = [approx_green_D((pts[k], pts[k + 1]), r) for k in range(r)]
    return float(sum((d[k] - d[k + 1]) ** 2 for k in range(r - 1)))


# ------------------------------
# Level counts
# ------------------------------


def count_shell_vertices(l: int, r: int = 1) -> int:
    """Crossings of L_r with |v|_inf = r*l, by enumeration."""
    pts = [(r * x, r * y) for x in range(-l, l + 1) for y in range(-l, l + 1)]
    return sum(1 for p in pts if graph_core.sup_norm(p) == r * l)


def count_level_r_edges(l: int) -> int:
    """r-edges joining a crossing at level l-1 to one at level l, by enumeration."""
    count = 0
    for x in range(-l, l + 1):
        for y in range(-l, l + 1):
            for nx_, ny_ in ((x + 1, y), (x, y + 1)):
                levels = sorted((max(abs(x), abs(y)), max(abs(nx_), abs(ny_))))
                if levels == [l - 1, l]:
                    count += 1
    return count


# ------------------------------
# Parameters: alpha, c, xi, l0
# ------------------------------


def alpha_of(a: float) -> float:
    return (2.0 * a + 1.0) / 2.0


def default_c(r: int, a: float) -> float:
    """Midpoint of the admissible interval (256 alpha / (r - 1), 1)."""
    return (1.0 + 256.0 * alpha_of(a) / (r - 1)) / 2.0


def _admissibility(r: int, a: float, c: float) -> Dict[str, bool]:
    alpha = alpha_of(a)
    return {
        "R_AT_LEAST_130": r >= 130,
        "A_IN_RANGE": 0.0 < a < (r - 129) / 256.0,
        "C_IN_RANGE": 256.0 * alpha / (r - 1) < c < 1.0,
    }


def _threshold_dps(t: Any) -> int:
    return max(50, int(float(t) / math.log(10)) + 40)


def level_threshold(c: float) -> int:
    """Smallest level L >= 2 with (log L + 2) / log L <= 1/c, i.e. log L >= 2c/(1-c)."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"level_threshold: c must lie in (0, 1) (got {c})")
    t_float = 2.0 * c / (1.0 - c)
    with mp.workdps(_threshold_dps(t_float)):
        t = 2 * mp.mpf(c) / (1 - mp.mpf(c))
        big = int(mp.ceil(mp.exp(t)))
        big = max(big, 2)
        while big > 2 and mp.log(big - 1) >= t:
            big -= 1
        while mp.log(big) < t:
            big += 1
    return big


def xi_and_l0(r: int, a: float, c: Optional[float] = None, *, force: bool = False) -> Tuple[float, Optional[int]]:
    """xi = c(r-1)/(256 alpha) - 1 and the |ell|_inf threshold l0 = r * L0."""
    if a <= 0:
        raise ValueError(f"xi_and_l0: a must be > 0 (got {a})")
    c = default_c(r, a) if c is None else float(c)
    flags = _admissibility(r, a, c)
    if not force:
        if not flags["R_AT_LEAST_130"]:
            raise ValueError(f"xi_and_l0: r={r} < 130")
        if not flags["A_IN_RANGE"]:
            raise ValueError(f"xi_and_l0: a={a} outside (0, (r-129)/256) = (0, {(r - 129) / 256.0})")
        if not flags["C_IN_RANGE"]:
            raise ValueError(f"xi_and_l0: c={c} outside ({256.0 * alpha_of(a) / (r - 1)}, 1)")
    xi = c * (r - 1) / (256.0 * alpha_of(a)) - 1.0
    l0 = r * level_threshold(c) if 0.0 < c < 1.0 else None
    return xi, l0


def shell_sum(L: int) -> Any:
    """sum_{l=2}^{L} (2l - 1) log(l/(l-1))^2 as an mpmath number."""
    if L < 2:
        return mp.mpf(0)
    n = min(L, _DIRECT_SHELL_TERMS)
    total = mp.fsum((2 * k - 1) * mp.log(mp.mpf(k) / (k - 1)) ** 2 for k in range(2, n + 1))
    if L > n:
        # (2l-1) log(l/(l-1))^2 = 2/l + 1/l^2 + 5/(6 l^3) + 3/(4 l^4) + O(l^-5)
        lo, hi = n + 1, mp.mpf(L) + 1
        total += 2 * (mp.harmonic(L) - mp.harmonic(n))
        total += mp.zeta(2, lo) - mp.zeta(2, hi)
        total += mp.mpf(5) / 6 * (mp.zeta(3, lo) - mp.zeta(3, hi))
        total += mp.mpf(3) / 4 * (mp.zeta(4, lo) - mp.zeta(4, hi))
    return total


def shell_sum_S_phi(r: int, a: float, L: int) -> Any:
    """Exact S_phi of the box potential at level(ell) = L, without building the box."""
    if L < 2:
        raise ValueError(f"shell_sum_S_phi: level must be >= 2 (got {L})")
    alpha = mp.mpf(2 * a + 1) / 2
    log_l = mp.log(L)
    return 4 * alpha / ((r - 1) * log_l**2) * shell_sum(L)


def _as_float(x: Any) -> float:
    try:
        return float(x)
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def bound_chain(
    r: int,
    a: float,
    c: Optional[float] = None,
    ell: Optional[LatticeVertex] = None,
    i: Optional[int] = None,
    *,
    force: bool = False,
    box_vertex_cap: int = 300_000,
) -> BoundReport:
    """Evaluate S_phi and every bound of the chain for (r, a, c, ell).

    ell defaults to (l0, 0). Parameter violations raise ValueError unless
    `force`; then the chain is evaluated anyway and flagged as outside the
    proven regime. Inside the proven regime a failing inequality raises
    DiagnosticError naming the failed link.
    """
    if a <= 0:
        raise ValueError(f"bound_chain: a must be > 0 (got {a})")
    if r < 2:
        raise ValueError(f"bound_chain: r must be >= 2 (got {r})")
    c = default_c(r, a) if c is None else float(c)
    xi, l0 = xi_and_l0(r, a, c, force=force)
    if ell is None:
        if l0 is None:
            raise ValueError("bound_chain: no l0 for this c; pass ell explicitly")
        ell = (l0, 0)
    ell = (int(ell[0]), int(ell[1]))
    if not graph_core.in_crossings(ell, r):
        raise ValueError(f"bound_chain: {ell} is not a four-way crossing of G_{r}")
    L = graph_core.sup_norm(ell) // r
    if L < 2:
        raise ValueError(f"bound_chain: level({ell}) = {L} < 2")
    need_i = 2 * (L + 1)

    flags = _admissibility(r, a, c)
    flags["ELL_AT_LEAST_L0"] = l0 is not None and graph_core.sup_norm(ell) >= l0
    flags["I_AT_LEAST_I0"] = i is None or i >= need_i
    warnings: List[str] = []
    if not flags["ELL_AT_LEAST_L0"]:
        warnings.append("ELL_BELOW_L0")
    if not flags["I_AT_LEAST_I0"]:
        if not force:
            raise ValueError(f"bound_chain: i={i} < i0 = {need_i}")
        warnings.append("I_BELOW_I0")
    if not all(flags[k] for k in ("R_AT_LEAST_130", "A_IN_RANGE", "C_IN_RANGE")):
        warnings.append("OUTSIDE_PROVEN_REGIME")
    in_regime = all(flags.values())

    box_i = need_i if i is None else i
    route = "shell_sum"
    s_exact_float: Optional[float] = None
    if box_i >= need_i and box_i * box_i * (2 * r - 1) <= box_vertex_cap:
        spec = graph_core.PeriodicBoxSpec(r=r, i=box_i)
        g = graph_core.build_periodic_box(spec)
        phi = build_phi(ell, spec, g)
        s_exact_float = dirichlet_form(g, graph_core.InitialWeights.constant(g, a), phi)
        route = "box"

    with mp.workdps(_threshold_dps(math.log(max(L, 2)) + 10)):
        alpha = mp.mpf(2 * a + 1) / 2
        log_l = mp.log(L)
        s_exact = mp.mpf(s_exact_float) if s_exact_float is not None else shell_sum_S_phi(r, a, L)
        xi_mp = mp.mpf(c) * (r - 1) / (256 * alpha) - 1
        s_bound = 8 * alpha * (log_l + 2) / ((r - 1) * log_l**2)
        s_target = 1 / (32 * (1 + xi_mp) * log_l) if xi_mp > -1 else mp.inf
        log_moment = -1 / (32 * s_exact) if s_exact > 0 else -mp.inf
        log_hitting = -(1 + xi_mp) * log_l
        log_boundary = mp.log(8) - xi_mp * log_l
        chain = {
            "S_EXACT_LE_BOUND": (s_exact, s_bound, s_exact <= s_bound),
            "BOUND_LE_TARGET": (s_bound, s_target, s_bound <= s_target),
            "S_EXACT_LE_TARGET": (s_exact, s_target, s_exact <= s_target),
            "MOMENT_LE_HITTING": (log_moment, log_hitting, log_moment <= log_hitting),
        }
        checks: List[Dict[str, Any]] = []
        for name in _CHECK_ORDER:
            if name in _PRECONDITIONS:
                checks.append({"name": name, "kind": "precondition", "holds": bool(flags[name])})
            else:
                lhs, rhs, ok = chain[name]
                checks.append(
                    {"name": name, "kind": "inequality", "lhs": _as_float(lhs), "rhs": _as_float(rhs), "holds": bool(ok)}
                )
        report = BoundReport(
            r=r,
            a=float(a),
            c=c,
            ell=ell,
            level=L,
            i=box_i if route == "box" else i,
            alpha=float(alpha),
            xi=xi,
            l0=l0,
            s_phi=_as_float(s_exact),
            s_phi_route=route,
            s_phi_bound=_as_float(s_bound),
            s_phi_target=_as_float(s_target),
            moment_bound=_as_float(mp.exp(log_moment)),
            log_moment_bound=_as_float(log_moment),
            hitting_bound=_as_float(mp.exp(log_hitting)),
            log_hitting_bound=_as_float(log_hitting),
            boundary_bound=_as_float(mp.exp(log_boundary)),
            log_boundary_bound=_as_float(log_boundary),
            in_proven_regime=in_regime,
            checks=checks,
            warnings=warnings,
        )

    if in_regime and report.failed_link:
        raise DiagnosticError(
            "BOUND_CHAIN_VIOLATED",
            f"bound chain fails at {report.failed_link}",
            {"report": report.to_record()},
        )
    return report


def boundary_bound(l: int, xi: float) -> float:
    """8 l^(-xi): bound on hitting the level-l shell before returning."""
    if l < 1:
        raise ValueError(f"boundary_bound: level must be >= 1 (got {l})")
    return 8.0 * float(l) ** (-xi)


def hitting_bound(r: int, ell_norm: int, xi: float) -> float:
    """(r / |ell|_inf)^(1 + xi)."""
    return (r / float(ell_norm)) ** (1.0 + xi)


def parse_ell(text: str, r: int) -> LatticeVertex:
    """'10r' -> (10r, 0); 'x,y' -> (x, y)."""
    t = text.strip().replace(" ", "")
    if t.endswith("r") and "," not in t:
        mult = t[:-1] or "1"
        return (int(mult) * r, 0)
    parts = t.split(",")
    if len(parts) != 2:
        raise ValueError(f"cannot parse ell '{text}' (use 'Nr' or 'x,y')")
    return (int(parts[0]), int(parts[1]))


def main() -> None:
    p = argparse.ArgumentParser(description="Evaluate the bound chain for one parameter set.")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--ell", default=None, help="'Nr' or 'x,y' (default: the l0 threshold)")
    p.add_argument("--force", action="store_true")
    args = p.parse_args()
    ell = parse_ell(args.ell, args.r) if args.ell else None
    rep = bound_chain(args.r, args.a, args.c, ell, force=args.force)
    print(json.dumps(rep.to_record(), indent=2, default=str))


if __name__ == "__main__":
    main()
