import math
import pathlib
import sys

import numpy as np
import pytest

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import artifacts  # type: ignore
import graph_core as gc  # type: ignore
import sampler_oracle as so  # type: ignore
import variational  # type: ignore

SIGMA = 4.0


def chain_config(cfg, seed, target="Q", n_samples=20_000):
    return so.ChainConfig.from_settings(cfg.mcmc, seed, target, n_samples)


def triangle(a=1.0):
    g = gc.build_cycle(3)
    return g, gc.InitialWeights.constant(g, a)


def test_effective_sample_size():
    rng = np.random.default_rng(0)
    iid = rng.normal(size=20_000)
    assert so.effective_sample_size(iid) == pytest.approx(20_000, rel=0.15)
    rho = 0.9
    ar = np.empty(20_000)
    ar[0] = 0.0
    for t in range(1, ar.size):
        ar[t] = rho * ar[t - 1] + rng.normal()
    expected = ar.size * (1 - rho) / (1 + rho)
    assert so.effective_sample_size(ar) == pytest.approx(expected, rel=0.3)
    assert so.effective_sample_size(np.ones(50)) == 50.0
    assert so.autocorrelation(iid)[0] == pytest.approx(1.0)


def test_chain_config_validation(cfg):
    with pytest.raises(ValueError):
        so.ChainConfig(n_samples=0)
    with pytest.raises(ValueError):
        so.ChainConfig(n_samples=10, target="R")
    c = chain_config(cfg, 3, "P", 500)
    assert c.n_samples == 500 and c.burn_in == cfg.mcmc.burn_in and c.target == "P"


def test_quarter_moment_trivial_pair(cfg):
    inst = gc.cycle_instance(4, 1.0)
    s = so.mcmc_sample(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, so.ChainConfig(n_samples=200, burn_in=100, seed=1))
    est = so.quarter_moment(s, 0, 0)
    assert est.value == 1.0 and est.std_error == 0.0
    assert s.log_x.shape == (200, 4)
    assert np.all(s.log_x[:, inst.e0] == 0.0)


def test_mcmc_rejects_bad_reference_edge():
    inst = gc.cycle_instance(4, 1.0)
    with pytest.raises(ValueError, match="reference edge"):
        so.mcmc_sample(inst.graph, inst.a, 0, 2, 1, so.ChainConfig(n_samples=10))


def test_four_cycle_quarter_moment_matches_quadrature(cfg, quadrature_fixtures):
    inst = gc.cycle_instance(4, 1.0)
    g = inst.graph
    fx = so.read_fixture(quadrature_fixtures["cycle4_quarter_moment"], gc.graph_hash(g))
    assert fx["quantity"] == "quarter_moment"
    samples = so.mcmc_sample(g, inst.a, inst.v0, inst.v1, inst.e0, chain_config(cfg, 17))
    assert 0.2 <= samples.acceptance_rate <= 0.55
    est = so.quarter_moment(samples, inst.v0, inst.v1)
    assert abs(est.value - fx["value"]) <= SIGMA * est.std_error + fx["error"]
    # the variational bound at S_phi = 3
    assert fx["value"] <= variational.moment_bound(3.0)


def test_triangle_log_ratio_matches_quadrature(cfg, quadrature_fixtures):
    g, a = triangle()
    fx = so.read_fixture(quadrature_fixtures["triangle_log_ratio"], gc.graph_hash(g))
    samples = so.mcmc_sample(g, a, 0, None, 0, chain_config(cfg, 23))
    est = so.log_ratio_mean(samples, 1, 2)
    assert abs(est.value - fx["value"]) <= SIGMA * est.std_error + fx["error"]


def test_reweighting_matches_interpolated_chain(cfg):
    inst = gc.cycle_instance(4, 1.0)
    g = inst.graph
    q = so.mcmc_sample(g, inst.a, inst.v0, inst.v1, inst.e0, chain_config(cfg, 5))
    p = so.mcmc_sample(g, inst.a, inst.v0, inst.v1, inst.e0, chain_config(cfg, 6, "P"))
    fn = lambda lx: lx[:, 1]  # noqa: E731
    rw = so.reweight_to_interpolated(q, inst.v0, inst.v1, fn)
    direct = so.log_ratio_mean(p, 1, inst.e0)
    assert abs(rw.value - direct.value) <= SIGMA * math.hypot(rw.std_error, direct.std_error)


def test_run_chains_is_independent_of_threads():
    inst = gc.cycle_instance(4, 1.0)
    c = so.ChainConfig(n_samples=300, burn_in=100, seed=9)
    one = so.run_chains(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, c, 3, threads=1)
    two = so.run_chains(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, c, 3, threads=2)
    assert [s.chain for s in two] == [0, 1, 2]
    for x, y in zip(one, two):
        assert np.array_equal(x.log_x, y.log_x)
    assert not np.array_equal(one[0].log_x, one[1].log_x)


def test_symmetry_check(cfg):
    inst = gc.cycle_instance(4, 1.0)
    g = inst.graph
    guard = gc.check_assumption(g, inst.a, inst.v0, inst.v1, inst.e0, inst.automorphism, inst.phi)
    p = so.mcmc_sample(g, inst.a, inst.v0, inst.v1, inst.e0, chain_config(cfg, 31, "P"))
    stat = so.symmetry_check(p, inst.v0, inst.v1, guard)
    assert stat.passed(SIGMA)
    assert so.symmetry_check(p, 1, 1).z == 0.0
    bad = gc.AssumptionReport(passed=False, violations=["B_NOT_SWAPPED"], first_failure="B")
    with pytest.raises(ValueError, match="B_NOT_SWAPPED"):
        so.symmetry_check(p, inst.v0, inst.v1, bad)


def test_normalizer_does_not_depend_on_reference_edge(cfg):
    g, a = triangle()
    z0 = so.quadrature_normalizer(g, a, 0, 0, cfg.quadrature)
    z2 = so.quadrature_normalizer(g, a, 0, 2, cfg.quadrature)
    assert z0.value == pytest.approx(z2.value, rel=1e-7)
    assert z0.converged


def test_normalizer_symmetric_start_vertices(cfg):
    inst = gc.cycle_instance(4, 1.0)
    g = inst.graph
    z0 = so.quadrature_normalizer(g, inst.a, 0, 0, cfg.quadrature)
    z2 = so.quadrature_normalizer(g, inst.a, 2, 1, cfg.quadrature)
    assert z0.value == pytest.approx(z2.value, rel=1e-7)


def test_expectation_of_one(cfg):
    g, a = triangle()
    vals, errs = so.quadrature_expectation(g, a, 0, 0, lambda lx: np.ones(lx.shape[0]), cfg.quadrature)
    assert vals[0] == pytest.approx(1.0, rel=1e-12)
    assert errs[0] < 1e-6


def test_interpolated_normalizer_ratio_is_the_quarter_moment(cfg):
    g, a = triangle()
    ratio, _ = so.interpolated_normalizer_ratio(g, a, 0, 1, 0, cfg.quadrature)
    qm, _ = so.quarter_moment_oracle(g, a, 0, 1, 0, cfg.quadrature)
    assert ratio == pytest.approx(qm, rel=1e-6)
    assert 0.0 < qm < 1.0


def test_ratio_law_does_not_depend_on_reference_edge(cfg):
    g, a = triangle()
    m0 = so.ratio_law_moments(g, a, 0, 0, [(1, 2)], cfg.quadrature)[(1, 2)]
    m2 = so.ratio_law_moments(g, a, 0, 2, [(1, 2)], cfg.quadrature)[(1, 2)]
    assert m0[0] == pytest.approx(m2[0], abs=1e-7)
    assert m0[1] == pytest.approx(m2[1], rel=1e-6)
    assert m0[1] >= m0[0] ** 2


def test_mixture_identity(cfg):
    path3 = gc.build_path(3)
    a = gc.InitialWeights.constant(path3, 1.0)
    lhs, rhs, diff = so.mixture_check(path3, a, 0, 0, [0, 1, 2], cfg.quadrature)
    assert lhs == pytest.approx(1 / 3)
    assert diff <= 1e-6

    g, a = triangle()
    lhs, rhs, diff = so.mixture_check(g, a, 0, 0, [0, 1, 2], cfg.quadrature)
    assert lhs == pytest.approx(1 / 6)
    assert diff <= 1e-6

    assert so.mixture_check(g, a, 0, 0, [0], cfg.quadrature)[1] == pytest.approx(1.0, rel=1e-12)
    results = so.mixture_check_paths(g, a, 0, 0, so.admissible_paths(g, 0, 2), cfg.quadrature)
    assert sum(r.rhs for r in results) == pytest.approx(1.0, abs=1e-9)
    assert max(r.diff for r in results) <= 1e-6
    with pytest.raises(ValueError):
        so.mixture_check(g, a, 0, 0, [1, 2], cfg.quadrature)


def test_quadrature_dimension_cap(cfg):
    g = gc.build_cycle(6)
    a = gc.InitialWeights.constant(g, 1.0)
    with pytest.raises(ValueError, match="dimension"):
        so.quadrature_normalizer(g, a, 0, 0, cfg.quadrature)


def test_fixture_round_trip(tmp_path):
    path = tmp_path / "fx.json"
    so.write_fixture(str(path), "g1|abc", "quarter_moment", 0.9, 1e-9)
    rec = so.read_fixture(str(path), "g1|abc")
    assert rec["value"] == 0.9
    with pytest.raises(ValueError, match="belongs to graph"):
        so.read_fixture(str(path), "g1|other")


def test_sample_dump(tmp_path):
    inst = gc.cycle_instance(4, 1.0)
    s = so.mcmc_sample(inst.graph, inst.a, inst.v0, inst.v1, inst.e0, so.ChainConfig(n_samples=50, burn_in=10, seed=2))
    out = tmp_path / "samples.csv"
    so.write_sample_dump(s, str(out))
    rows = artifacts.read_csv(str(out))
    assert len(rows) == 50
    assert list(rows[0]) == ["sample", "logx_0", "logx_1", "logx_2", "logx_3"]
    assert float(rows[7]["logx_2"]) == s.log_x[7, 2]
