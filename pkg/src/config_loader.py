"""YAML configuration loader with environment-based seed resolution.

- Only the NAME of the seed override variable is stored in YAML.
- Enforces range checks on every numeric setting before any computation runs.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

import yaml


@dataclass(frozen=True)
class Defaults:
    seed: int
    seed_env: str
    threads: int
    output_format: str
    out_dir: str

    def resolve_seed(self, override: Optional[int] = None) -> int:
        """Explicit value wins, then the env var, then the configured default."""
        if override is not None:
            return int(override)
        env = os.getenv(self.seed_env) if self.seed_env else None
        if env is not None and env.strip():
            try:
                return int(env.strip())
            except ValueError as exc:
                raise ValueError(f"{self.seed_env}={env!r} is not an integer seed") from exc
        return self.seed


@dataclass(frozen=True)
class WalkerSettings:
    max_steps: int
    censor_threshold: float
    block_size: int
    ci_z: float
    max_crossing_cells: int


@dataclass(frozen=True)
class MCMCSettings:
    n_samples: int
    burn_in: int
    thinning: int
    proposal_scale: float
    target_acceptance: float
    adapt_interval: int
    min_ess: int


@dataclass(frozen=True)
class QuadratureSettings:
    truncation: float = 40.0
    nodes_per_axis: int = 96
    max_dimension: int = 4
    rel_tol: float = 1e-8
    max_points: int = 20_000_000
    chunk_size: int = 200_000


@dataclass(frozen=True)
class MagicMeasureSettings:
    enumeration_max_vertices: int
    enumeration_max_subsets: int
    enumeration_route_max_trees: int


@dataclass(frozen=True)
class PotentialSettings:
    box_vertex_cap: int


@dataclass(frozen=True)
class Tolerances:
    mc_sigma: float
    path_sigma: float
    fd_step: float
    fd_rel_tol: float
    fd_abs_tol: float
    reversibility_rel_tol: float
    mixture_abs_tol: float


@dataclass(frozen=True)
class VerifySettings:
    tree_weight_vectors: int
    scaling_environments: int
    mixture_max_length: int
    lemma_samples: int
    gamma_samples: int
    derivative_cases: int
    reversibility_cases: int
    path_replicas: int
    path_length: int


@dataclass(frozen=True)
class LoggingSettings:
    run_log: str


@dataclass(frozen=True)
class Config:
    project_name: str
    project_version: str
    defaults: Defaults
    walker: WalkerSettings
    mcmc: MCMCSettings
    quadrature: QuadratureSettings
    magic_measure: MagicMeasureSettings
    potential: PotentialSettings
    tolerances: Tolerances
    verify: VerifySettings
    logging: LoggingSettings

    def validate(self) -> None:
        if self.defaults.threads < 1:
            raise ValueError("defaults.threads must be >= 1.")
        if self.defaults.output_format not in ("csv", "json"):
            raise ValueError("defaults.output_format must be 'csv' or 'json'.")
        if self.walker.max_steps < 1:
            raise ValueError("walker.max_steps must be >= 1.")
        if not 0.0 <= self.walker.censor_threshold < 1.0:
            raise ValueError("walker.censor_threshold must lie in [0, 1).")
        if self.walker.block_size < 1:
            raise ValueError("walker.block_size must be >= 1.")
        if self.mcmc.n_samples < 1:
            raise ValueError("mcmc.n_samples must be >= 1.")
        if self.mcmc.thinning < 1:
            raise ValueError("mcmc.thinning must be >= 1.")
        if self.mcmc.burn_in < 0:
            raise ValueError("mcmc.burn_in must be >= 0.")
        if self.mcmc.proposal_scale <= 0:
            raise ValueError("mcmc.proposal_scale must be positive.")
        if not 0.0 < self.mcmc.target_acceptance < 1.0:
            raise ValueError("mcmc.target_acceptance must lie in (0, 1).")
        if self.quadrature.truncation <= 0:
            raise ValueError("quadrature.truncation must be positive.")
        if self.quadrature.nodes_per_axis < 2:
            raise ValueError("quadrature.nodes_per_axis must be >= 2.")
        if self.quadrature.max_dimension < 1:
            raise ValueError("quadrature.max_dimension must be >= 1.")
        if self.magic_measure.enumeration_max_vertices < 2:
            raise ValueError("magic_measure.enumeration_max_vertices must be >= 2.")
        if self.magic_measure.enumeration_max_subsets < 1 or self.magic_measure.enumeration_route_max_trees < 1:
            raise ValueError("magic_measure enumeration cutoffs must be >= 1.")
        if self.potential.box_vertex_cap < 1:
            raise ValueError("potential.box_vertex_cap must be >= 1.")
        if self.tolerances.fd_step <= 0:
            raise ValueError("tolerances.fd_step must be positive.")

    def resolved(self) -> Dict[str, Any]:
        """Plain-dict view used in output headers and run keys."""
        return dataclasses.asdict(self)


def _require_key(d: Dict[str, Any], key: str) -> Any:
    if key not in d:
        raise KeyError(f"Missing required configuration key: {key}")
    return d[key]


def _section(cls: type, raw: Dict[str, Any]) -> Any:
    """Build a frozen settings dataclass, coercing each field to its annotated type."""
    kwargs: Dict[str, Any] = {}
    for f in dataclasses.fields(cls):
        value = _require_key(raw, f.name)
        kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        if kind == "int":
            value = int(value)
        elif kind == "float":
            value = float(value)
        elif kind == "str":
            value = str(value)
        kwargs[f.name] = value
    return cls(**kwargs)


def load_config(path: str) -> Config:
    """Load and validate YAML configuration from `path`.

    The seed environment variable is not read at parse time; Defaults.resolve_seed does that.
    """
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}

    project = raw.get("project", {})
    cfg = Config(
        project_name=_require_key(project, "name"),
        project_version=str(_require_key(project, "version")),
        defaults=_section(Defaults, raw.get("defaults", {})),
        walker=_section(WalkerSettings, raw.get("walker", {})),
        mcmc=_section(MCMCSettings, raw.get("mcmc", {})),
        quadrature=_section(QuadratureSettings, raw.get("quadrature", {})),
        magic_measure=_section(MagicMeasureSettings, raw.get("magic_measure", {})),
        potential=_section(PotentialSettings, raw.get("potential", {})),
        tolerances=_section(Tolerances, raw.get("tolerances", {})),
        verify=_section(VerifySettings, raw.get("verify", {})),
        logging=_section(LoggingSettings, raw.get("logging", {})),
    )

    cfg.validate()
    return cfg
