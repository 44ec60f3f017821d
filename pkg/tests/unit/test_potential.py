import math
import pathlib
import sys

import numpy as np
import pytest

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import graph_core as gc  # type: ignore
import potential  # type: ignore
from errors import DiagnosticError  # type: ignore

LOG2 = math.log(2.0)


def test_approx_green_D_examples():
    r = 3
    assert potential.approx_green_D(((4, 0), (5, 0)), r) == pytest.approx(0.5 * LOG2, rel=1e-14)
    assert potential.approx_green_D(((5, 0), (6, 0)), r) == pytest.approx(LOG2, rel=1e-14)
    assert potential.approx_green_D(((6, 0), (5, 0)), r) == pytest.approx(LOG2, rel=1e-14)
    assert potential.approx_green_D(((0, 0), (1, 0)), r) == 0.0
    assert potential.approx_green_D(((0, 0), (0, -1)), r) == 0.0


def test_underline_D():
    r = 3
    assert potential.underline_D((0, 0), r) == 0.0
    assert potential.underline_D((2 * r, 0), r) == pytest.approx(LOG2, rel=1e-14)
    assert potential.underline_D((r, 0), r) == 0.0
    with pytest.raises(ValueError):
        potential.underline_D((1, 1), r)


def test_build_phi_values():
    r, ell = 3, (6, 0)
    spec = gc.PeriodicBoxSpec(r=r, i=gc.i0(ell, r))
    g = gc.build_periodic_box(spec)
    phi = potential.build_phi(ell, spec, g)
    origin, at_ell = g.index((0, 0)), g.index(ell)
    assert all(phi.values[e] == 0.0 for e in g.adjacency[origin])
    assert all(phi.values[e] == pytest.approx(1.0, rel=1e-14) for e in g.adjacency[at_ell])
    far = g.index((9, 0))
    assert all(phi.values[e] == 1.0 for e in g.adjacency[far])
    closing = [e for e in range(g.n_edges) if g.is_closing(e)]
    assert closing and all(phi.values[e] == 1.0 for e in closing)
    assert np.all((phi.values >= 0.0) & (phi.values <= 1.0))


def test_build_phi_rejects_bad_ell():
    spec = gc.PeriodicBoxSpec(r=3, i=6)
    with pytest.raises(ValueError, match="crossing"):
        potential.build_phi((4, 0), spec)
    with pytest.raises(ValueError, match="< 2"):
        potential.build_phi((3, 0), spec)
    with pytest.raises(ValueError, match="i0"):
        potential.build_phi((6, 0), gc.PeriodicBoxSpec(r=3, i=4))


def test_dirichlet_form():
    inst = gc.cycle_instance(4, 1.0)
    g = inst.graph
    assert potential.dirichlet_form(g, inst.a, np.ones(g.n_edges)) == 0.0
    for a in (0.5, 1.0, 2.0):
        weights = gc.InitialWeights.constant(g, a)
        assert potential.dirichlet_form(g, weights, inst.phi) == pytest.approx(2 * a + 1)
    with pytest.raises(ValueError):
        potential.dirichlet_form(g, inst.a, np.ones(3))


def test_r_edge_interior_energy():
    r = 4
    # radial r-edge from level 1 to level 2: D rises by log 2 / (r - 1) per step
    assert potential.r_edge_interior_energy((r, 0), (2 * r, 0), r) == pytest.approx(LOG2**2 / (r - 1), rel=1e-12)
    # tangential r-edge on the level-2 shell: D is constant
    assert potential.r_edge_interior_energy((2 * r, 0), (2 * r, r), r) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        potential.r_edge_interior_energy((0, 0), (2 * r, 0), r)


def test_level_counts():
    for l in range(1, 11):
        assert potential.count_shell_vertices(l) == 8 * l
        assert potential.count_level_r_edges(l) == 4 * (2 * l - 1)
    assert potential.count_shell_vertices(3, r=5) == 24


def test_xi_example():
    xi, l0 = potential.xi_and_l0(130, 0.001953125, 0.998)
    assert xi == pytest.approx(0.0018833, abs=1e-5)
    assert l0 is not None and l0 % 130 == 0


def test_xi_rejects_out_of_range_parameters():
    with pytest.raises(ValueError, match="a="):
        potential.xi_and_l0(130, 0.01)
    with pytest.raises(ValueError, match="r="):
        potential.xi_and_l0(100, 0.001)
    with pytest.raises(ValueError, match="c="):
        potential.xi_and_l0(130, 0.001953125, 0.5)
    xi, _ = potential.xi_and_l0(130, 0.01, 0.9, force=True)
    assert xi < 0


@pytest.mark.parametrize("c,expected", [(0.5, 8), (0.75, 404)])
def test_level_threshold(c, expected):
    L = potential.level_threshold(c)
    assert L == expected
    assert (math.log(L) + 2) / math.log(L) <= 1 / c
    assert (math.log(L - 1) + 2) / math.log(L - 1) > 1 / c


def test_shell_sum_matches_box_route():
    r, a, ell = 5, 0.5, (15, 0)
    rep = potential.bound_chain(r, a, ell=ell, force=True)
    assert rep.s_phi_route == "box"
    assert not rep.in_proven_regime
    assert "OUTSIDE_PROVEN_REGIME" in rep.warnings
    assert rep.s_phi == pytest.approx(float(potential.shell_sum_S_phi(r, a, 3)), rel=1e-12)


def test_shell_sum_tail_is_continuous():
    # the asymptotic tail must agree with direct summation just past the switch
    n = 4096 + 50
    direct = sum((2 * k - 1) * math.log1p(1.0 / (k - 1)) ** 2 for k in range(2, n + 1))
    assert float(potential.shell_sum(n)) == pytest.approx(direct, rel=1e-12)
    assert float(potential.shell_sum(1)) == 0.0


def test_bound_chain_holds_in_proven_regime():
    rep = potential.bound_chain(130, 0.5 / 256.0)
    assert rep.in_proven_regime
    assert rep.failed_link == ""
    assert rep.s_phi_route == "shell_sum"
    assert rep.s_phi <= rep.s_phi_bound <= rep.s_phi_target
    assert rep.log_moment_bound <= rep.log_hitting_bound
    assert [c["name"] for c in rep.checks][0] == "R_AT_LEAST_130"


def test_bound_chain_below_l0_warns_without_raising():
    r = 130
    rep = potential.bound_chain(r, 0.001953125, 0.998, potential.parse_ell("10r", r))
    assert rep.s_phi_route == "box"
    assert rep.i == 22
    assert "ELL_BELOW_L0" in rep.warnings
    assert not rep.in_proven_regime
    record = rep.to_record()
    assert record["ell"] == [1300, 0]
    assert record["xi"] == pytest.approx(0.0018833, abs=1e-5)


def test_bound_chain_parameter_errors():
    with pytest.raises(ValueError):
        potential.bound_chain(130, 0.0)
    with pytest.raises(ValueError):
        potential.bound_chain(100, 0.5)
    with pytest.raises(ValueError, match="i0"):
        potential.bound_chain(130, 0.001953125, 0.998, (1300, 0), i=10)


def test_bound_chain_violation_is_diagnostic(monkeypatch):
    monkeypatch.setattr(potential, "shell_sum_S_phi", lambda r, a, L: potential.mp.mpf(1))
    with pytest.raises(DiagnosticError) as exc:
        potential.bound_chain(130, 0.5 / 256.0)
    assert exc.value.code == "BOUND_CHAIN_VIOLATED"


def test_bounds_and_parse_ell():
    assert potential.boundary_bound(1, 0.3) == 8.0
    assert potential.boundary_bound(16, 0.5) == pytest.approx(2.0)
    assert potential.hitting_bound(130, 1300, 0.0) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        potential.boundary_bound(0, 0.1)
    assert potential.parse_ell("10r", 130) == (1300, 0)
    assert potential.parse_ell("r", 130) == (130, 0)
    assert potential.parse_ell("3, -4", 130) == (3, -4)
    with pytest.raises(ValueError):
        potential.parse_ell("1,2,3", 130)


@pytest.mark.parametrize("r,ell", [(3, (6, 0)), (4, (8, 4))])
def test_potential_is_constant_around_each_crossing(r, ell):
    spec = gc.PeriodicBoxSpec(r=r, i=gc.i0(ell, r))
    g = gc.build_periodic_box(spec)
    phi = potential.build_phi(ell, spec, g)
    crossings = [v for v in range(g.n_vertices) if g.degree(v) == 4]
    assert len(crossings) == spec.i * spec.i
    for v in crossings:
        label = g.labels[v]
        assert gc.in_crossings(label, r)
        around = [potential.approx_green_D((label, w), r) for w in gc.lattice_neighbors(label, r)]
        assert len(around) == 4
        assert max(around) == pytest.approx(min(around), abs=1e-14)
        inc = g.adjacency[v]
        for e in inc:
            if not g.is_closing(e):
                assert phi.D[e] == pytest.approx(around[0], abs=1e-14)
        assert max(phi.values[e] for e in inc) == pytest.approx(min(phi.values[e] for e in inc), abs=1e-14)
