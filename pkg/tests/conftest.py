import pathlib
import sys

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import config_loader  # type: ignore  # noqa: E402
import graph_core  # type: ignore  # noqa: E402
import sampler_oracle  # type: ignore  # noqa: E402


@pytest.fixture(scope="session")
def cfg():
    return config_loader.load_config(str(REPO_ROOT / "config" / "config.yml"))


@pytest.fixture(scope="session")
def quadrature_fixtures(tmp_path_factory, cfg):
    """Quadrature oracles computed once per session and archived as JSON fixtures
    before any sampler test reads them."""
    out = tmp_path_factory.mktemp("fixtures")
    inst = graph_core.cycle_instance(4, 1.0)
    g = inst.graph
    h = graph_core.graph_hash(g)
    paths = {}

    val, err = sampler_oracle.quarter_moment_oracle(g, inst.a, inst.v0, inst.v1, inst.e0, cfg.quadrature)
    paths["cycle4_quarter_moment"] = out / "cycle4_quarter_moment.json"
    sampler_oracle.write_fixture(str(paths["cycle4_quarter_moment"]), h, "quarter_moment", val, err)

    tri = graph_core.build_cycle(3)
    a = graph_core.InitialWeights.constant(tri, 1.0)
    moments = sampler_oracle.ratio_law_moments(tri, a, 0, 0, [(1, 2)], cfg.quadrature)
    paths["triangle_log_ratio"] = out / "triangle_log_ratio.json"
    sampler_oracle.write_fixture(str(paths["triangle_log_ratio"]), graph_core.graph_hash(tri), "log_ratio_mean_e1_e2", moments[(1, 2)][0], 1e-8)
    return {k: str(v) for k, v in paths.items()}
