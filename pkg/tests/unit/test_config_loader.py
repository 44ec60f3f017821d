import pathlib
import sys

import pytest
import yaml

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import config_loader  # type: ignore

CONFIG = REPO_ROOT / "config" / "config.yml"


def write_variant(tmp_path, mutate):
    with open(CONFIG, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f)
    mutate(raw)
    p = tmp_path / "config.yml"
    with open(p, "w", encoding="utf-8") as f:
        yaml.safe_dump(raw, f)
    return str(p)


def test_shipped_config_loads():
    cfg = config_loader.load_config(str(CONFIG))
    assert cfg.project_version == "0.1.0"
    assert cfg.defaults.seed_env == "ERRW_SEED"
    assert cfg.walker.censor_threshold == pytest.approx(0.01)
    assert cfg.quadrature.truncation == 40.0
    assert cfg.quadrature.max_dimension == 4
    assert cfg.mcmc.min_ess == 100
    assert cfg.tolerances.mc_sigma == 3.0
    assert isinstance(cfg.walker.max_steps, int)
    assert cfg.resolved()["walker"]["block_size"] == cfg.walker.block_size


def test_missing_key_names_the_key(tmp_path):
    path = write_variant(tmp_path, lambda raw: raw["walker"].pop("ci_z"))
    with pytest.raises(KeyError, match="ci_z"):
        config_loader.load_config(path)


def test_out_of_range_values_rejected(tmp_path):
    path = write_variant(tmp_path, lambda raw: raw["defaults"].update(threads=0))
    with pytest.raises(ValueError, match="threads"):
        config_loader.load_config(path)

    path = write_variant(tmp_path, lambda raw: raw["walker"].update(censor_threshold=1.5))
    with pytest.raises(ValueError, match="censor_threshold"):
        config_loader.load_config(path)

    path = write_variant(tmp_path, lambda raw: raw["defaults"].update(output_format="xml"))
    with pytest.raises(ValueError, match="output_format"):
        config_loader.load_config(path)


def test_seed_resolution_order(monkeypatch):
    cfg = config_loader.load_config(str(CONFIG))
    monkeypatch.delenv("ERRW_SEED", raising=False)
    assert cfg.defaults.resolve_seed() == cfg.defaults.seed
    monkeypatch.setenv("ERRW_SEED", "42")
    assert cfg.defaults.resolve_seed() == 42
    assert cfg.defaults.resolve_seed(7) == 7
    monkeypatch.setenv("ERRW_SEED", "not-a-number")
    with pytest.raises(ValueError, match="ERRW_SEED"):
        cfg.defaults.resolve_seed()


def test_enumeration_cutoffs(tmp_path):
    cfg = config_loader.load_config(str(CONFIG))
    assert cfg.magic_measure.enumeration_route_max_trees == 512
    path = write_variant(tmp_path, lambda raw: raw["magic_measure"].pop("enumeration_route_max_trees"))
    with pytest.raises(KeyError, match="enumeration_route_max_trees"):
        config_loader.load_config(path)
    path = write_variant(tmp_path, lambda raw: raw["magic_measure"].update(enumeration_max_subsets=0))
    with pytest.raises(ValueError, match="enumeration"):
        config_loader.load_config(path)
