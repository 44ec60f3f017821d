"""Edge-reinforced and fixed-environment random walks.

- Single-step APIs (errw_step / markov_step) and exact path probabilities.
- Vectorized replica simulation: crossing counts stay integers, weights are
  formed as a_e + count on demand.
- Hitting Monte Carlo: each block of replicas owns a Philox stream keyed by
  (seed, ..., block), blocks run in a thread pool and are merged in block
  order, so results never depend on the thread count. Shell targets use
  (seed, level, block) with level >= 1; lattice points use
  (seed, 0, zigzag(x), zigzag(y), block).

Usage:
  python src/walker.py --r 4 --a 0.5 --boundary-level 3 --walks 100000 --seed 7 --out data/out/hitting.csv
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
from dataclasses import dataclass
from typing import Any, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import artifacts  # type: ignore
import graph_core  # type: ignore
import magic_measure  # type: ignore
from errors import DiagnosticError  # type: ignore

RNG_NAME = f"numpy.random.Philox (numpy {np.__version__})"


@dataclass(frozen=True, eq=False)
class WalkState:
    position: int
    t: int
    crossings: np.ndarray

    @classmethod
    def start(cls, graph: graph_core.FiniteGraph, v0: int) -> "WalkState":
        if not 0 <= v0 < graph.n_vertices:
            raise ValueError(f"WalkState: start vertex {v0} out of range")
        return cls(position=v0, t=0, crossings=np.zeros(graph.n_edges, dtype=np.int64))

    def weights(self, a: graph_core.InitialWeights) -> np.ndarray:
        """w_t(e) = a_e + number of crossings of e so far."""
        return a.values + self.crossings


@dataclass
class HittingEstimate:
    target: str
    n_walks: int
    n_hits: int
    n_returned: int
    n_censored: int
    estimate: float
    std_error: float
    ci_halfwidth: float
    seed: int

    @property
    def censored_frac(self) -> float:
        return self.n_censored / self.n_walks if self.n_walks else 0.0

    def to_row(self) -> Dict[str, Any]:
        return {
            "target": self.target,
            "estimate": self.estimate,
            "ci_halfwidth": self.ci_halfwidth,
            "n_walks": self.n_walks,
            "censored_frac": self.censored_frac,
            "seed": self.seed,
        }


HITTING_COLUMNS = ["target", "estimate", "ci_halfwidth", "n_walks", "censored_frac", "seed"]


def zigzag(k: int) -> int:
    """Non-negative stream word for a signed coordinate: 0, -1, 1, -2, ... -> 0, 1, 2, 3, ..."""
    return 2 * k if k >= 0 else -2 * k - 1


def lattice_point_stream(ell: Tuple[int, int]) -> Tuple[int, int, int]:
    return (0, zigzag(int(ell[0])), zigzag(int(ell[1])))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for one (seed, stream...) key."""
    if seed < 0 or any(s < 0 for s in stream):
        raise ValueError("make_rng: seed and stream keys must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


# ------------------------------
# Single steps and path probabilities
# ------------------------------


def _pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    u = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, u, side="right")), len(weights) - 1)


def errw_step(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    state: WalkState,
    rng: np.random.Generator,
) -> WalkState:
    """Cross an edge at the current vertex with probability proportional to its current weight."""
    inc = graph.adjacency[state.position]
    j = _pick(a.values[list(inc)] + state.crossings[list(inc)], rng)
    e = inc[j]
    crossings = state.crossings.copy()
    crossings[e] += 1
    return WalkState(position=graph.other_end(e, state.position), t=state.t + 1, crossings=crossings)


def markov_step(
    graph: graph_core.FiniteGraph,
    x: magic_measure.Environment,
    state: WalkState,
    rng: np.random.Generator,
) -> WalkState:
    """Fixed environment: jump along e with probability x_e / x_v; weights never change."""
    inc = list(graph.adjacency[state.position])
    lx = x.log_x[inc]
    j = _pick(np.exp(lx - lx.max()), rng)
    e = inc[j]
    crossings = state.crossings.copy()
    crossings[e] += 1
    return WalkState(position=graph.other_end(e, state.position), t=state.t + 1, crossings=crossings)


def markov_transition_row(graph: graph_core.FiniteGraph, x: magic_measure.Environment, v: int) -> Dict[int, float]:
    inc = list(graph.adjacency[v])
    lx = x.log_x[inc]
    w = np.exp(lx - lx.max())
    w /= w.sum()
    return {graph.other_end(e, v): float(p) for e, p in zip(inc, w)}


def _check_path(graph: graph_core.FiniteGraph, v0: int, path: Sequence[int]) -> None:
    if len(path) == 0 or path[0] != v0:
        raise ValueError(f"path must start at v0={v0}")


def errw_path_probability(
    graph: graph_core.FiniteGraph, a: graph_core.InitialWeights, v0: int, path: Sequence[int]
) -> float:
    """Probability that the reinforced walk from v0 follows `path`; 0 if any step is not an edge."""
    _check_path(graph, v0, path)
    a.check(graph)
    crossings = np.zeros(graph.n_edges, dtype=np.int64)
    prob = 1.0
    for u, v in zip(path[:-1], path[1:]):
        e = graph.edge_between(u, v)
        if e is None or u == v:
            return 0.0
        inc = list(graph.adjacency[u])
        total = float(np.sum(a.values[inc] + crossings[inc]))
        prob *= (a.values[e] + crossings[e]) / total
        crossings[e] += 1
    return prob


def markov_path_probability(
    graph: graph_core.FiniteGraph, x: magic_measure.Environment, v0: int, path: Sequence[int]
) -> float:
    """Product of x_e / x_u along `path`; 0 for inadmissible paths."""
    _check_path(graph, v0, path)
    lxv = x.vertex_log_weights(graph)
    log_p = 0.0
    for u, v in zip(path[:-1], path[1:]):
        e = graph.edge_between(u, v)
        if e is None or u == v:
            return 0.0
        log_p += x.log_x[e] - lxv[u]
    return math.exp(log_p)


def path_edge_matrix(graph: graph_core.FiniteGraph, path: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """(edge ids, departure vertex ids) of a path, for batched Markov path probabilities."""
    edges, starts = [], []
    for u, v in zip(path[:-1], path[1:]):
        e = graph.edge_between(u, v)
        if e is None:
            raise ValueError(f"path step {u}->{v} is not an edge")
        edges.append(e)
        starts.append(u)
    return np.asarray(edges, dtype=np.int64), np.asarray(starts, dtype=np.int64)


# ------------------------------
# Vectorized replicas
# ------------------------------


class _ReplicaBlock:
    """A block of independent walkers sharing one graph and one RNG stream."""

    def __init__(
        self,
        graph: graph_core.FiniteGraph,
        a_value: Optional[float],
        a_values: np.ndarray,
        log_x: Optional[np.ndarray],
        v0: int,
        size: int,
        rng: np.random.Generator,
    ) -> None:
        self.rng = rng
        self.a_value = a_value
        self.log_x = log_x
        self._install(graph, a_values)
        self.pos = np.full(size, v0, dtype=np.int64)
        self.cross = np.zeros((size, graph.n_edges), dtype=np.int64) if log_x is None else None

    def _install(self, graph: graph_core.FiniteGraph, a_values: np.ndarray) -> None:
        self.graph = graph
        self.a_e = np.asarray(a_values, dtype=float)
        self.eids, self.nbrs = graph.padded_incidence
        if self.log_x is not None:
            self.x_e = np.exp(self.log_x - self.log_x.max())

    def step(self, idx: np.ndarray) -> np.ndarray:
        """Advance the replicas listed in idx by one step; returns crossed edge ids."""
        pos = self.pos[idx]
        E = self.eids[pos]
        valid = E >= 0
        Ec = np.maximum(E, 0)
        if self.cross is None:
            w = np.where(valid, self.x_e[Ec], 0.0)
        else:
            w = np.where(valid, self.a_e[Ec] + self.cross[idx[:, None], Ec], 0.0)
        cum = np.cumsum(w, axis=1)
        u = self.rng.random(idx.size) * cum[:, -1]
        j = np.minimum((cum <= u[:, None]).sum(axis=1), E.shape[1] - 1)
        rows = np.arange(idx.size)
        chosen = Ec[rows, j]
        self.pos[idx] = self.nbrs[pos, j]
        if self.cross is not None:
            self.cross[idx, chosen] += 1
        return chosen

    def grow(self) -> None:
        """Double a window graph's extent and carry positions and crossings over by label."""
        old = self.graph
        if old.extent is None or old.r is None:
            raise ValueError("only window graphs can grow")
        if self.a_value is None:
            raise ValueError("window growth needs constant initial weights")
        new = graph_core.build_window_graph(old.r, 2 * old.extent)
        vmap = np.asarray([new.index(lab) for lab in old.labels], dtype=np.int64)
        emap = np.asarray([new.edge_between(vmap[u], vmap[v]) for u, v in old.edges], dtype=np.int64)
        self.pos = vmap[self.pos]
        if self.cross is not None:
            cross = np.zeros((self.cross.shape[0], new.n_edges), dtype=np.int64)
            cross[:, emap] = self.cross
            self.cross = cross
        self._install(new, np.full(new.n_edges, self.a_value))


def simulate_errw_batch(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    n_steps: int,
    n_walks: int,
    seed: int,
    *,
    block_size: int = 4096,
    threads: int = 1,
) -> np.ndarray:
    """Paths of n_walks independent reinforced walks, shape (n_walks, n_steps + 1)."""
    a.check(graph)
    if n_steps < 0 or n_walks < 1:
        raise ValueError("simulate_errw_batch: need n_steps >= 0 and n_walks >= 1")
    sizes = _block_sizes(n_walks, block_size)

    def run(block: int) -> np.ndarray:
        rb = _ReplicaBlock(graph, a.constant_value, a.values, None, v0, sizes[block], make_rng(seed, block))
        out = np.empty((sizes[block], n_steps + 1), dtype=np.int64)
        out[:, 0] = v0
        idx = np.arange(sizes[block])
        for t in range(1, n_steps + 1):
            rb.step(idx)
            out[:, t] = rb.pos
        return out

    return np.concatenate(_run_blocks(run, len(sizes), threads), axis=0)


def _block_sizes(n: int, block_size: int) -> List[int]:
    block_size = max(1, int(block_size))
    full, rest = divmod(n, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _run_blocks(fn: Any, n_blocks: int, threads: int) -> List[Any]:
    """Run fn(block) for every block; results come back in block order."""
    if threads <= 1 or n_blocks <= 1:
        return [fn(b) for b in range(n_blocks)]
    results_by_index: Dict[int, Any] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
        futs = {ex.submit(fn, b): b for b in range(n_blocks)}
        for fut in concurrent.futures.as_completed(futs):
            results_by_index[futs[fut]] = fut.result()
    return [results_by_index[b] for b in range(n_blocks)]


def hit_before_return(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    targets: Iterable[int],
    max_steps: int,
    n_walks: int,
    seed: int,
    *,
    environment: Optional[magic_measure.Environment] = None,
    grow: bool = False,
    block_size: int = 4096,
    max_crossing_cells: int = 20_000_000,
    threads: int = 1,
    censor_threshold: float = 0.01,
    ci_z: float = 1.96,
    stream: Tuple[int, ...] = (),
    target_name: str = "",
) -> HittingEstimate:
    """Estimate P[walk from v0 enters `targets` before returning to v0].

    With `environment` the walk is the fixed-environment Markov chain instead
    of the reinforced walk. With `grow` a window graph doubles its extent
    whenever an active replica stands on the window boundary.
    """
    target_idx = sorted(set(int(t) for t in targets))
    if not target_idx:
        raise ValueError("hit_before_return: targets must be non-empty")
    if v0 in target_idx:
        raise ValueError("hit_before_return: v0 must not be a target")
    if max_steps < 1 or n_walks < 1:
        raise ValueError("hit_before_return: need max_steps >= 1 and n_walks >= 1")
    a.check(graph)
    if grow and (graph.extent is None or environment is not None):
        raise ValueError("hit_before_return: growth applies to reinforced walks on window graphs")
    target_labels = {graph.labels[t] for t in target_idx}
    start_label = graph.labels[v0]
    per_block = max(1, min(block_size, max_crossing_cells // max(graph.n_edges, 1)))
    sizes = _block_sizes(n_walks, per_block)
    log_x = environment.log_x if environment is not None else None

    def run(block: int) -> Tuple[int, int, int]:
        rb = _ReplicaBlock(graph, a.constant_value, a.values, log_x, v0, sizes[block], make_rng(seed, *stream, block))
        is_target = _label_mask(rb.graph, target_labels)
        home = rb.graph.index(start_label)
        active = np.arange(sizes[block])
        hits = returns = 0
        for _ in range(max_steps):
            if active.size == 0:
                break
            if grow and np.any(_on_window_boundary(rb.graph, rb.pos[active])):
                rb.grow()
                is_target = _label_mask(rb.graph, target_labels)
                home = rb.graph.index(start_label)
            rb.step(active)
            here = rb.pos[active]
            hit = is_target[here]
            back = here == home
            hits += int(hit.sum())
            returns += int(back.sum())
            active = active[~(hit | back)]
        return hits, returns, int(active.size)

    outcomes = _run_blocks(run, len(sizes), threads)
    n_hits = sum(o[0] for o in outcomes)
    n_ret = sum(o[1] for o in outcomes)
    n_cens = sum(o[2] for o in outcomes)
    label = target_name or ("|".join(str(graph.labels[t]) for t in target_idx) if len(target_idx) <= 4 else f"{len(target_idx)} vertices")
    if n_cens == n_walks or n_cens / n_walks > censor_threshold:
        raise DiagnosticError(
            "CENSORING_ABOVE_THRESHOLD",
            f"{n_cens} of {n_walks} replicas hit the {max_steps}-step cap (threshold {censor_threshold:.2%})",
            {"target": label, "n_censored": n_cens, "n_walks": n_walks, "max_steps": max_steps},
        )
    n_eff = n_walks - n_cens
    p = n_hits / n_eff
    se = math.sqrt(p * (1.0 - p) / n_eff)
    return HittingEstimate(
        target=label,
        n_walks=n_walks,
        n_hits=n_hits,
        n_returned=n_ret,
        n_censored=n_cens,
        estimate=p,
        std_error=se,
        ci_halfwidth=ci_z * se,
        seed=seed,
    )


def _label_mask(graph: graph_core.FiniteGraph, labels: set) -> np.ndarray:
    mask = np.zeros(graph.n_vertices, dtype=bool)
    for lab in labels:
        if graph.has_vertex(lab):
            mask[graph.index(lab)] = True
    return mask


def _on_window_boundary(graph: graph_core.FiniteGraph, pos: np.ndarray) -> np.ndarray:
    sup = np.asarray([graph_core.sup_norm(graph.labels[p]) for p in pos])
    return sup >= graph.extent


def boundary_hitting_curve(
    r: int,
    a: float,
    levels: Sequence[int],
    n_walks: int,
    seed: int,
    *,
    max_steps: int = 100_000,
    **kwargs: Any,
) -> List[HittingEstimate]:
    """For each level l, P[hit the shell |v|_inf = r*l before returning to the origin]."""
    out = []
    for lev in levels:
        if lev < 1:
            raise ValueError(f"boundary_hitting_curve: level must be >= 1 (got {lev})")
        g = graph_core.build_window_graph(r, r * lev)
        shell = [k for k, v in enumerate(g.labels) if graph_core.sup_norm(v) == r * lev]
        est = hit_before_return(
            g,
            graph_core.InitialWeights.constant(g, a),
            g.index((0, 0)),
            shell,
            max_steps,
            n_walks,
            seed,
            stream=(int(lev),),
            target_name=f"level:{lev}",
            **kwargs,
        )
        out.append(est)
    return out


def lattice_point_hitting(
    r: int,
    a: float,
    ell: Tuple[int, int],
    n_walks: int,
    seed: int,
    *,
    max_steps: int = 100_000,
    **kwargs: Any,
) -> HittingEstimate:
    """P[hit ell before returning to the origin] on G_r, with the window grown on demand."""
    ell = (int(ell[0]), int(ell[1]))
    if not graph_core.is_lattice_vertex(ell, r) or ell == (0, 0):
        raise ValueError(f"lattice_point_hitting: {ell} is not a non-origin vertex of G_{r}")
    extent = r * (-(-(graph_core.sup_norm(ell) + 1) // r))
    g = graph_core.build_window_graph(r, max(extent, r))
    return hit_before_return(
        g,
        graph_core.InitialWeights.constant(g, a),
        g.index((0, 0)),
        [g.index(ell)],
        max_steps,
        n_walks,
        seed,
        grow=True,
        stream=lattice_point_stream(ell),
        target_name=f"{ell[0]},{ell[1]}",
        **kwargs,
    )


# ------------------------------
# Trajectories
# ------------------------------


def simulate_trajectory(
    graph: graph_core.FiniteGraph,
    a: graph_core.InitialWeights,
    v0: int,
    n_steps: int,
    seed: int,
) -> Tuple[List[Dict[str, Any]], WalkState]:
    """One reinforced trajectory; rows (t, vertex, edge_crossed), t = 0 has no edge."""
    rng = make_rng(seed, 0)
    state = WalkState.start(graph, v0)
    rows: List[Dict[str, Any]] = [{"t": 0, "vertex": v0, "edge_crossed": ""}]
    for _ in range(n_steps):
        before = state.crossings
        state = errw_step(graph, a, state, rng)
        rows.append({"t": state.t, "vertex": state.position, "edge_crossed": int(np.flatnonzero(state.crossings != before)[0])})
    return rows, state


def export_trajectory_csv(rows: Sequence[Dict[str, Any]], path: str, header: Optional[Dict[str, Any]] = None) -> None:
    artifacts.write_csv(path, ["t", "vertex", "edge_crossed"], rows, header)


def main() -> None:
    p = argparse.ArgumentParser(description="Boundary hitting probabilities of the reinforced walk on G_r.")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--boundary-level", type=int, required=True)
    p.add_argument("--walks", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=100000)
    p.add_argument("--out", default="data/out/hitting.csv")
    args = p.parse_args()
    ests = boundary_hitting_curve(args.r, args.a, range(1, args.boundary_level + 1), args.walks, args.seed, max_steps=args.max_steps)
    artifacts.write_csv(args.out, HITTING_COLUMNS, [e.to_row() for e in ests])
    print(f"Wrote {len(ests)} hitting estimates -> {args.out}")


if __name__ == "__main__":
    main()
