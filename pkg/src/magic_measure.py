"""Explicit mixing density of the reinforced walk.

All densities are unnormalized and live on a log scale. Environments are stored
as per-edge log-weights; vertex weights and spanning-tree sums are accumulated
with log-sum-exp or a scaled log-determinant so extreme weights neither
overflow nor underflow.

Usage:
  python src/magic_measure.py --builtin cycle:4 --weights 1,1,1,1
"""

from __future__ import annotations

import argparse
import functools
import itertools
import json
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

import graph_core  # type: ignore
from config_loader import MagicMeasureSettings  # type: ignore
from errors import DiagnosticError  # type: ignore

LogDensityValue = float


@dataclass(frozen=True)
class EnumerationLimits:
    """Cutoffs for listing spanning trees; the "auto" routes enumerate only within them."""

    max_vertices: int = 10
    max_subsets: int = 2_000_000
    route_max_trees: int = 512  # tree sums use enumeration up to this many trees

    def __post_init__(self) -> None:
        if self.max_vertices < 2 or self.max_subsets < 1 or self.route_max_trees < 1:
            raise ValueError(f"EnumerationLimits: cutoffs must be positive (got {self})")

    @classmethod
    def from_settings(cls, s: MagicMeasureSettings) -> "EnumerationLimits":
        return cls(
            max_vertices=s.enumeration_max_vertices,
            max_subsets=s.enumeration_max_subsets,
            route_max_trees=s.enumeration_route_max_trees,
        )


DEFAULT_LIMITS = EnumerationLimits()


@dataclass(frozen=True, eq=False)
class Environment:
    """Strictly positive edge weights, kept as log x_e; e0 is the reference edge."""

    log_x: np.ndarray
    e0: int = 0

    def __post_init__(self) -> None:
        lx = np.array(self.log_x, dtype=float)
        if lx.ndim != 1 or lx.size == 0:
            raise ValueError("Environment: expected a non-empty 1-d array of log-weights")
        if not np.all(np.isfinite(lx)):
            raise ValueError("Environment: every weight must be finite and > 0")
        if not 0 <= self.e0 < lx.size:
            raise ValueError(f"Environment: reference edge {self.e0} out of range")
        lx.setflags(write=False)
        object.__setattr__(self, "log_x", lx)

    @classmethod
    def from_weights(cls, x: Sequence[float], e0: int = 0) -> "Environment":
        arr = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("Environment: every weight must be finite and > 0")
        return cls(np.log(arr), e0)

    @classmethod
    def uniform(cls, graph: graph_core.FiniteGraph, e0: int = 0) -> "Environment":
        return cls(np.zeros(graph.n_edges), e0)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.log_x)

    @property
    def is_normalized(self) -> bool:
        return self.log_x[self.e0] == 0.0

    def normalized(self) -> "Environment":
        return renormalize(self, self.e0)

    def vertex_log_weights(self, graph: graph_core.FiniteGraph) -> np.ndarray:
        """log x_v with x_v = sum of x_e over edges at v."""
        return vertex_log_weights(graph, self.log_x[None, :])[0]


def _check_env(graph: graph_core.FiniteGraph, x: Environment) -> None:
    if x.log_x.shape[0] != graph.n_edges:
        raise ValueError(f"Environment has {x.log_x.shape[0]} weights for a graph with {graph.n_edges} edges")


def vertex_log_weights(graph: graph_core.FiniteGraph, log_x: np.ndarray) -> np.ndarray:
    """Batch version: (N, |E|) log-weights -> (N, |V|) log vertex weights."""
    eids, _ = graph.padded_incidence
    gathered = np.where(eids[None, :, :] >= 0, log_x[:, np.maximum(eids, 0)], -np.inf)
    return logsumexp(gathered, axis=-1)


def renormalize(x: Environment, e1: int) -> Environment:
    """Divide every weight by x_{e1}; the result is normalized at e1."""
    if not 0 <= e1 < x.log_x.size:
        raise ValueError(f"renormalize: edge {e1} out of range")
    if e1 == x.e0 and x.is_normalized:
        return x
    return Environment(x.log_x - x.log_x[e1], e1)


# ------------------------------
# Spanning trees
# ------------------------------


def _reduced_signed_incidence(graph: graph_core.FiniteGraph) -> np.ndarray:
    b = np.zeros((graph.n_vertices, graph.n_edges))
    ends = graph.endpoints
    cols = np.arange(graph.n_edges)
    b[ends[:, 0], cols] = 1.0
    b[ends[:, 1], cols] = -1.0
    return b[1:]


def matrix_tree_log_sum(graph: graph_core.FiniteGraph, log_x: np.ndarray) -> np.ndarray:
    """log of the spanning-tree polynomial for a batch (N, |E|) of log-weights.

    Weights are shifted by their row maximum, the reduced Laplacian is
    symmetrically scaled to unit diagonal and its log-determinant comes from a
    pivoted LU. Rows whose determinant is not positive come back as -inf.
    """
    b = _reduced_signed_incidence(graph)
    shift = log_x.max(axis=1)
    w = np.exp(log_x - shift[:, None])
    lap = np.einsum("ie,ne,je->nij", b, w, b)
    d = np.einsum("nii->ni", lap)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sqrt(d)
        scaled = lap / (s[:, :, None] * s[:, None, :])
        sign, logdet = np.linalg.slogdet(scaled)
        out = logdet + np.log(d).sum(axis=1) + (graph.n_vertices - 1) * shift
    bad = (sign <= 0) | ~np.isfinite(out)
    out[bad] = -np.inf
    return out


@functools.lru_cache(maxsize=256)
def _tree_matrix(graph: graph_core.FiniteGraph, max_vertices: int, max_subsets: int) -> np.ndarray:
    n, m = graph.n_vertices, graph.n_edges
    if n > max_vertices:
        raise DiagnosticError(
            "TREE_ENUMERATION_LIMIT",
            f"tree enumeration requested on {n} vertices (cutoff {max_vertices})",
            {"n_vertices": n, "cutoff": max_vertices},
        )
    n_subsets = math.comb(m, n - 1)
    if n_subsets > max_subsets:
        raise DiagnosticError(
            "TREE_ENUMERATION_LIMIT",
            f"tree enumeration would test {n_subsets} edge subsets (cutoff {max_subsets})",
            {"n_subsets": n_subsets, "cutoff": max_subsets},
        )
    trees = []
    for subset in itertools.combinations(range(m), n - 1):
        parent = list(range(n))

        def find(k: int) -> int:
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        acyclic = True
        for e in subset:
            ru, rv = find(graph.edges[e][0]), find(graph.edges[e][1])
            if ru == rv:
                acyclic = False
                break
            parent[ru] = rv
        if acyclic:
            row = np.zeros(m, dtype=bool)
            row[list(subset)] = True
            trees.append(row)
    mat = np.asarray(trees, dtype=bool).reshape(-1, m)
    mat.setflags(write=False)
    return mat


def enumerate_spanning_trees(
    graph: graph_core.FiniteGraph,
    max_vertices: int = DEFAULT_LIMITS.max_vertices,
    max_subsets: int = DEFAULT_LIMITS.max_subsets,
) -> np.ndarray:
    """Boolean (n_trees, |E|) membership matrix by edge-subset filtering with union-find."""
    return _tree_matrix(graph, max_vertices, max_subsets)


def enumerated_log_sum(graph: graph_core.FiniteGraph, log_x: np.ndarray, **limits: int) -> np.ndarray:
    """Brute-force log tree sum for a batch (N, |E|) of log-weights."""
    trees = enumerate_spanning_trees(graph, **limits).astype(float)
    return logsumexp(log_x @ trees.T, axis=1)


def spanning_tree_log_polynomial(graph: graph_core.FiniteGraph, x: Environment) -> float:
    """log sum over spanning trees T of prod_{e in T} x_e (weighted matrix-tree theorem)."""
    _check_env(graph, x)
    val = float(matrix_tree_log_sum(graph, x.log_x[None, :])[0])
    if not math.isfinite(val):
        raise ValueError("spanning_tree_log_polynomial: reduced Laplacian is singular (graph not connected?)")
    return val


# ------------------------------
# Density of the mixing measure
# ------------------------------


class PhiEvaluator:
    """Batch evaluator of log Phi_{v,a} for a fixed graph and initial weights.

    Holds the per-start-vertex coefficient vectors, so evaluating at v0 and v1
    together shares the vertex weights and the tree sum.
    """

    def __init__(
        self,
        graph: graph_core.FiniteGraph,
        a: graph_core.InitialWeights,
        tree_route: str = "auto",
        limits: Optional[EnumerationLimits] = None,
    ) -> None:
        a.check(graph)
        self.limits = limits or DEFAULT_LIMITS
        self.graph = graph
        self.a_e = np.asarray(a.values, dtype=float)
        self.a_v = a.vertex_weights(graph)
        self._coeffs: Dict[int, np.ndarray] = {}
        if tree_route == "auto":
            tree_route = "matrix"
            if graph.n_vertices <= self.limits.max_vertices:
                try:
                    if self._trees().shape[0] <= self.limits.route_max_trees:
                        tree_route = "enumerate"
                except DiagnosticError:
                    pass
        if tree_route not in ("matrix", "enumerate"):
            raise ValueError(f"PhiEvaluator: unknown tree route '{tree_route}'")
        self.tree_route = tree_route

    def _trees(self) -> np.ndarray:
        return enumerate_spanning_trees(self.graph, self.limits.max_vertices, self.limits.max_subsets)

    def vertex_coefficients(self, v0: int) -> np.ndarray:
        if v0 not in self._coeffs:
            c = -(self.a_v + 1.0) / 2.0
            c[v0] = -self.a_v[v0] / 2.0
            self._coeffs[v0] = c
        return self._coeffs[v0]

    def log_tree(self, log_x: np.ndarray) -> np.ndarray:
        if self.tree_route == "enumerate":
            return enumerated_log_sum(self.graph, log_x, max_vertices=self.limits.max_vertices, max_subsets=self.limits.max_subsets)
        return matrix_tree_log_sum(self.graph, log_x)

    def parts(self, log_x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sum a_e log x_e, log x_v, log tree sum) for a batch."""
        log_x = np.atleast_2d(np.asarray(log_x, dtype=float))
        return log_x @ self.a_e, vertex_log_weights(self.graph, log_x), self.log_tree(log_x)

    def log_phi(self, log_x: np.ndarray, v0: int) -> np.ndarray:
        edge_term, lxv, lt = self.parts(log_x)
        return edge_term + lxv @ self.vertex_coefficients(v0) + 0.5 * lt

    def log_interp(self, log_x: np.ndarray, v0: int, v1: int) -> np.ndarray:
        edge_term, lxv, lt = self.parts(log_x)
        c = 0.5 * (self.vertex_coefficients(v0) + self.vertex_coefficients(v1))
        return edge_term + lxv @ c + 0.5 * lt


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise DiagnosticError("NONFINITE_DENSITY", f"{what} is not finite", {"value": repr(value)})
    return value


def log_phi(graph: graph_core.FiniteGraph, a: graph_core.InitialWeights, v0: int, x: Environment) -> LogDensityValue:
    """log Phi_{v0,a}(x).

    sum_e a_e log x_e - (a_v0/2) log x_v0 - sum_{v != v0} ((a_v+1)/2) log x_v
    + (1/2) log(spanning-tree polynomial). Invariant under x -> lambda x.
    """
    _check_env(graph, x)
    ev = PhiEvaluator(graph, a, tree_route="matrix")
    return _finite(float(ev.log_phi(x.log_x, v0)[0]), "log_phi")


def _require_normalized(x: Environment, e0: int) -> None:
    if x.e0 != e0 or not x.is_normalized:
        raise ValueError(f"environment is not normalized at reference edge {e0}")


def log_density_Q(
    graph: graph_core.FiniteGraph, a: graph_core.InitialWeights, v0: int, e0: int, x: Environment
) -> LogDensityValue:
    """Unnormalized log density of the mixing measure started at v0, on Omega_{e0}."""
    _require_normalized(x, e0)
    return log_phi(graph, a, v0, x)


def log_density_P_interp(
    graph: graph_core.FiniteGraph, a: graph_core.InitialWeights, v0: int, v1: int, e0: int, x: Environment
) -> LogDensityValue:
    """Unnormalized log density of the interpolated measure: mean of log Phi at v0 and v1."""
    _require_normalized(x, e0)
    _check_env(graph, x)
    ev = PhiEvaluator(graph, a, tree_route="matrix")
    return _finite(float(ev.log_interp(x.log_x, v0, v1)[0]), "log_density_P_interp")


def main() -> None:
    p = argparse.ArgumentParser(description="Evaluate log Phi for one environment.")
    p.add_argument("--builtin", required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--weights", required=True, help="comma-separated positive edge weights")
    p.add_argument("--v0", type=int, default=None)
    args = p.parse_args()
    inst = graph_core.parse_builtin(args.builtin, a=args.a)
    env = Environment.from_weights([float(t) for t in args.weights.split(",")])
    v0 = inst.v0 if args.v0 is None else args.v0
    out: Dict[str, Optional[float]] = {
        "log_phi": log_phi(inst.graph, inst.a, v0, env),
        "log_tree_polynomial": spanning_tree_log_polynomial(inst.graph, env),
    }
    print(json.dumps(out))


if __name__ == "__main__":
    main()
