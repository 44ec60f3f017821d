"""Finite graphs for reinforced walks: generic graphs, windows of the diluted lattice G_r,
and periodic boxes G_r^(i), plus the symmetry checks the comparison argument needs.

Vertex and edge indices are dense, contiguous and assigned in a deterministic
order, so every derived array is reproducible across platforms.

Usage:
  python src/graph_core.py --builtin box:4,4 --edges-out data/out/edges.csv --vertices-out data/out/vertices.csv
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

import artifacts  # type: ignore

LatticeVertex = Tuple[int, int]

# Order in which assumption violations are reported.
_VIOLATION_ORDER = [
    "A_SAME_VERTEX",
    "A_ADJACENT",
    "B_E0_NOT_INCIDENT",
    "C_NOT_PERMUTATION",
    "C_NOT_AUTOMORPHISM",
    "C_WEIGHTS_NOT_PRESERVED",
    "C_NOT_SWAPPING",
    "D_OUT_OF_RANGE",
    "D_NONZERO_AT_V0",
    "D_NOT_ONE_AT_V1",
]


# ------------------------------
# Types
# ------------------------------


@dataclass(frozen=True)
class PeriodicBoxSpec:
    r: int
    i: int

    def __post_init__(self) -> None:
        if int(self.r) != self.r or self.r < 2:
            raise ValueError(f"PeriodicBoxSpec: r must be an integer >= 2 (got {self.r})")
        if int(self.i) != self.i or self.i <= 1:
            raise ValueError(f"PeriodicBoxSpec: i must be an integer > 1 (got {self.i})")

    @property
    def side(self) -> int:
        return self.r * self.i

    @property
    def hi(self) -> int:
        return self.r * (self.i // 2)

    @property
    def lo(self) -> int:
        """Exclusive lower bound; representatives lie in (lo, hi]."""
        return self.hi - self.side

    def canonical(self, v: LatticeVertex) -> LatticeVertex:
        n = self.side
        return (
            (v[0] - self.lo - 1) % n + self.lo + 1,
            (v[1] - self.lo - 1) % n + self.lo + 1,
        )


@dataclass(frozen=True, eq=False)
class FiniteGraph:
    """Undirected finite connected simple graph.

    `edges` holds (u, v) vertex-index pairs. Lattice graphs additionally carry
    their dilution `r` and either a `box` spec or a window `extent`.
    """

    labels: Tuple[Hashable, ...]
    edges: Tuple[Tuple[int, int], ...]
    periodic_closing: Tuple[bool, ...] = ()
    r: Optional[int] = None
    box: Optional[PeriodicBoxSpec] = None
    extent: Optional[int] = None
    _index: Dict[Hashable, int] = field(init=False, repr=False)
    _edge_lookup: Dict[Tuple[int, int], int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = len(self.labels)
        if n < 2:
            raise ValueError("FiniteGraph: need at least two vertices")
        index: Dict[Hashable, int] = {}
        for k, lab in enumerate(self.labels):
            if lab in index:
                raise ValueError(f"FiniteGraph: duplicate vertex label {lab!r}")
            index[lab] = k
        lookup: Dict[Tuple[int, int], int] = {}
        for eid, (u, v) in enumerate(self.edges):
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"FiniteGraph: edge {eid} has an invalid endpoint ({u}, {v})")
            if u == v:
                raise ValueError(f"FiniteGraph: edge {eid} is a self-loop at {self.labels[u]!r}")
            key = (min(u, v), max(u, v))
            if key in lookup:
                raise ValueError(
                    f"FiniteGraph: parallel edges {lookup[key]} and {eid} between "
                    f"{self.labels[u]!r} and {self.labels[v]!r}"
                )
            lookup[key] = eid
        if self.periodic_closing and len(self.periodic_closing) != len(self.edges):
            raise ValueError("FiniteGraph: periodic_closing must tag every edge")
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_edge_lookup", lookup)
        if not nx.is_connected(self.to_networkx()):
            raise ValueError("FiniteGraph: graph is not connected")

    @classmethod
    def from_edges(cls, labels: Sequence[Hashable], edges: Iterable[Tuple[Hashable, Hashable]]) -> "FiniteGraph":
        """Build from label pairs; edges keep the given order."""
        labs = tuple(labels)
        idx = {lab: k for k, lab in enumerate(labs)}
        pairs = []
        for u, v in edges:
            if u not in idx or v not in idx:
                raise ValueError(f"FiniteGraph: edge ({u!r}, {v!r}) uses an unknown vertex")
            pairs.append((idx[u], idx[v]))
        return cls(labels=labs, edges=tuple(pairs))

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"unknown vertex {label!r}") from None

    def has_vertex(self, label: Hashable) -> bool:
        return label in self._index

    def edge_between(self, u: int, v: int) -> Optional[int]:
        return self._edge_lookup.get((min(u, v), max(u, v)))

    def other_end(self, e: int, v: int) -> int:
        a, b = self.edges[e]
        if v == a:
            return b
        if v == b:
            return a
        raise ValueError(f"vertex {v} is not an endpoint of edge {e}")

    def is_closing(self, e: int) -> bool:
        return bool(self.periodic_closing[e]) if self.periodic_closing else False

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        """Per vertex, incident edge indices in increasing order."""
        inc: List[List[int]] = [[] for _ in range(self.n_vertices)]
        for eid, (u, v) in enumerate(self.edges):
            inc[u].append(eid)
            inc[v].append(eid)
        return tuple(tuple(x) for x in inc)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def endpoints(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def incidence(self) -> np.ndarray:
        """Unsigned |V| x |E| incidence matrix (x_v = incidence @ x_e)."""
        m = np.zeros((self.n_vertices, self.n_edges), dtype=float)
        ends = self.endpoints
        cols = np.arange(self.n_edges)
        m[ends[:, 0], cols] = 1.0
        m[ends[:, 1], cols] = 1.0
        return m

    @cached_property
    def padded_incidence(self) -> Tuple[np.ndarray, np.ndarray]:
        """(edge ids, neighbor ids), each |V| x max-degree, padded with -1."""
        k = max(len(a) for a in self.adjacency)
        eids = np.full((self.n_vertices, k), -1, dtype=np.int64)
        nbrs = np.full((self.n_vertices, k), -1, dtype=np.int64)
        for v, inc in enumerate(self.adjacency):
            for j, e in enumerate(inc):
                eids[v, j] = e
                nbrs[v, j] = self.other_end(e, v)
        return eids, nbrs

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_vertices))
        g.add_edges_from(self.edges)
        return g


@dataclass(frozen=True, eq=False)
class InitialWeights:
    """Per-edge initial weights a_e > 0."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("InitialWeights: expected a 1-d array of edge weights")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError("InitialWeights: every a_e must be finite and > 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, graph: FiniteGraph, a: float) -> "InitialWeights":
        return cls(np.full(graph.n_edges, float(a)))

    def check(self, graph: FiniteGraph) -> None:
        if self.values.shape[0] != graph.n_edges:
            raise ValueError(
                f"InitialWeights: {self.values.shape[0]} weights for a graph with {graph.n_edges} edges"
            )

    def vertex_weights(self, graph: FiniteGraph) -> np.ndarray:
        """a_v = sum of a_e over edges incident to v."""
        self.check(graph)
        return graph.incidence @ self.values

    @property
    def constant_value(self) -> Optional[float]:
        first = float(self.values[0])
        return first if np.all(self.values == first) else None


@dataclass(frozen=True, eq=False)
class GraphInstance:
    """A graph with the data of a symmetric comparison problem attached."""

    graph: FiniteGraph
    a: InitialWeights
    v0: int
    v1: Optional[int] = None
    e0: int = 0
    phi: Optional[np.ndarray] = None
    automorphism: Optional[Tuple[int, ...]] = None
    name: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    passed: bool
    violations: List[str]
    first_failure: str  # clause letter of the first violation, "" when passed


# ------------------------------
# Lattice arithmetic
# ------------------------------


def is_lattice_vertex(v: LatticeVertex, r: int) -> bool:
    return v[0] % r == 0 or v[1] % r == 0


def in_crossings(v: LatticeVertex, r: int) -> bool:
    """True for four-way crossings, i.e. points of L_r = rZ^2."""
    return v[0] % r == 0 and v[1] % r == 0


def sup_norm(v: LatticeVertex) -> int:
    return max(abs(v[0]), abs(v[1]))


def level(v: LatticeVertex, r: int) -> int:
    """Square-shell index ceil(|v|_inf / r) of a G_r vertex."""
    if r < 2:
        raise ValueError(f"level: r must be >= 2 (got {r})")
    if not is_lattice_vertex(v, r):
        raise ValueError(f"level: {v} is not a vertex of G_{r}")
    return -(-sup_norm(v) // r)


def lattice_neighbors(v: LatticeVertex, r: int) -> List[LatticeVertex]:
    out: List[LatticeVertex] = []
    if v[1] % r == 0:
        out += [(v[0] - 1, v[1]), (v[0] + 1, v[1])]
    if v[0] % r == 0:
        out += [(v[0], v[1] - 1), (v[0], v[1] + 1)]
    return out


def r_edge_of(e: Tuple[LatticeVertex, LatticeVertex], r: int) -> Tuple[LatticeVertex, LatticeVertex, int, int]:
    """Locate the r-edge containing the unit edge e = (u, v).

    Returns (u', v', j_u, j_v): u' is the crossing on u's side, and
    u = u' + (r - 1 - j_u) * unit(v' - u'); likewise for v. j_u + j_v = r - 1.
    """
    u, v = tuple(e[0]), tuple(e[1])
    if r < 2:
        raise ValueError(f"r_edge_of: r must be >= 2 (got {r})")
    if abs(u[0] - v[0]) + abs(u[1] - v[1]) != 1:
        raise ValueError(f"r_edge_of: {u} and {v} are not lattice neighbours")
    axis = 0 if u[1] == v[1] else 1
    other = 1 - axis
    if u[other] % r != 0:
        raise ValueError(f"r_edge_of: edge {u}-{v} is not an edge of G_{r}")
    lo = min(u[axis], v[axis])
    k = lo // r
    t = lo - r * k

    def corner(c: int) -> LatticeVertex:
        p = [0, 0]
        p[axis] = c
        p[other] = u[other]
        return (p[0], p[1])

    start, end = corner(r * k), corner(r * (k + 1))
    if u[axis] == lo:
        return start, end, r - 1 - t, t
    return end, start, t, r - 1 - t


def i0(ell: LatticeVertex, r: int) -> int:
    """Smallest box size whose representative set holds ell and its four neighbours."""
    if not in_crossings(ell, r):
        raise ValueError(f"i0: {ell} is not a four-way crossing of G_{r}")
    i = 2 * (sup_norm(ell) // r + 1)
    spec = PeriodicBoxSpec(r=r, i=i)
    for w in lattice_neighbors(ell, r):
        if spec.canonical(w) != w:
            raise ValueError(f"i0: neighbour {w} of {ell} falls outside box i={i}")
    return i


# ------------------------------
# Builders
# ------------------------------


def build_periodic_box(spec: PeriodicBoxSpec) -> FiniteGraph:
    """Torus box G_r^(i) on the representatives (lo, hi]^2, in row-major order."""
    r, lo, hi = spec.r, spec.lo, spec.hi
    coords = range(lo + 1, hi + 1)
    labels: List[LatticeVertex] = [(x1, x2) for x2 in coords for x1 in coords if is_lattice_vertex((x1, x2), r)]
    index = {v: k for k, v in enumerate(labels)}
    edges: List[Tuple[int, int]] = []
    closing: List[bool] = []
    for v in labels:
        steps = []
        if v[1] % r == 0:
            steps.append((1, 0))
        if v[0] % r == 0:
            steps.append((0, 1))
        for d in steps:
            raw = (v[0] + d[0], v[1] + d[1])
            w = spec.canonical(raw)
            edges.append((index[v], index[w]))
            closing.append(w != raw)
    return FiniteGraph(labels=tuple(labels), edges=tuple(edges), periodic_closing=tuple(closing), r=r, box=spec)


def build_window_graph(r: int, extent: int) -> FiniteGraph:
    """Finite window of G_r: vertices with |v|_inf <= extent and the edges between them."""
    if r < 2:
        raise ValueError(f"build_window_graph: r must be >= 2 (got {r})")
    if extent < r:
        raise ValueError(f"build_window_graph: extent {extent} < r {r}")
    coords = range(-extent, extent + 1)
    labels = [(x1, x2) for x2 in coords for x1 in coords if is_lattice_vertex((x1, x2), r)]
    index = {v: k for k, v in enumerate(labels)}
    edges: List[Tuple[int, int]] = []
    for v in labels:
        for w in ((v[0] + 1, v[1]), (v[0], v[1] + 1)):
            if w in index and (v[1] % r == 0 if w[1] == v[1] else v[0] % r == 0):
                edges.append((index[v], index[w]))
    return FiniteGraph(labels=tuple(labels), edges=tuple(edges), periodic_closing=tuple([False] * len(edges)), r=r, extent=extent)


def build_cycle(n: int) -> FiniteGraph:
    if n < 3:
        raise ValueError(f"build_cycle: need n >= 3 (got {n})")
    return FiniteGraph(labels=tuple(range(n)), edges=tuple((k, (k + 1) % n) for k in range(n)))


def build_path(n: int) -> FiniteGraph:
    if n < 2:
        raise ValueError(f"build_path: need n >= 2 (got {n})")
    return FiniteGraph(labels=tuple(range(n)), edges=tuple((k, k + 1) for k in range(n - 1)))


def build_diluted_cycle(n: int, r: int) -> FiniteGraph:
    """n-cycle with every edge replaced by r edges in series."""
    if r < 1:
        raise ValueError(f"build_diluted_cycle: r must be >= 1 (got {r})")
    return build_cycle(n * r)


def cycle_instance(n: int, a: float = 1.0, name: str = "") -> GraphInstance:
    """Symmetric instance on an even cycle: v0 = 0, v1 opposite, phi linear along both arcs."""
    if n < 4 or n % 2:
        raise ValueError(f"cycle_instance: need an even n >= 4 (got {n})")
    g = build_cycle(n)
    half = n // 2
    phi = np.empty(n)
    for k in range(n):
        steps = k if k < half else n - 1 - k
        phi[k] = float(Fraction(steps, half - 1))
    f = tuple((half - v) % n for v in range(n))
    return GraphInstance(
        graph=g,
        a=InitialWeights.constant(g, a),
        v0=0,
        v1=half,
        e0=0,
        phi=phi,
        automorphism=f,
        name=name or f"cycle:{n}",
    )


def reflection_automorphism(ell: LatticeVertex, graph: FiniteGraph) -> Tuple[int, ...]:
    """Vertex permutation v -> ell - v (mod the box)."""
    spec = graph.box
    if spec is None:
        raise ValueError("reflection_automorphism: graph is not a periodic box")
    ell = spec.canonical(tuple(ell))
    if not in_crossings(ell, spec.r) or not graph.has_vertex(ell):
        raise ValueError(f"reflection_automorphism: {ell} is not in L_r^(i)")
    return tuple(graph.index(spec.canonical((ell[0] - v[0], ell[1] - v[1]))) for v in graph.labels)


# ------------------------------
# Assumption check
# ------------------------------


def check_assumption(
    graph: FiniteGraph,
    a: InitialWeights,
    v0: int,
    v1: int,
    e0: int,
    f: Optional[Sequence[int]],
    phi: Any = None,
) -> AssumptionReport:
    """Check the symmetric comparison setup clause by clause.

    (a) v0 != v1, not adjacent; (b) v0 in e0; (c) f is a weight-preserving
    automorphism swapping v0 and v1; (d) phi in [0,1], 0 at v0, 1 at v1.
    Clause (d) is skipped when phi is None.
    """
    a.check(graph)
    found: set[str] = set()
    n = graph.n_vertices

    if v0 == v1:
        found.add("A_SAME_VERTEX")
    elif graph.edge_between(v0, v1) is not None:
        found.add("A_ADJACENT")

    if not 0 <= e0 < graph.n_edges or v0 not in graph.edges[e0]:
        found.add("B_E0_NOT_INCIDENT")

    perm = list(f) if f is not None else []
    if len(perm) != n or sorted(perm) != list(range(n)):
        found.add("C_NOT_PERMUTATION")
    else:
        for eid, (u, v) in enumerate(graph.edges):
            image = graph.edge_between(perm[u], perm[v])
            if image is None:
                found.add("C_NOT_AUTOMORPHISM")
                break
            if not math.isclose(a.values[image], a.values[eid], rel_tol=1e-12, abs_tol=0.0):
                found.add("C_WEIGHTS_NOT_PRESERVED")
        if perm[v0] != v1 or perm[v1] != v0:
            found.add("C_NOT_SWAPPING")

    if phi is not None:
        vals = np.asarray(getattr(phi, "values", phi), dtype=float)
        if vals.shape != (graph.n_edges,) or np.any(vals < 0) or np.any(vals > 1):
            found.add("D_OUT_OF_RANGE")
        else:
            if any(vals[e] != 0.0 for e in graph.adjacency[v0]):
                found.add("D_NONZERO_AT_V0")
            if any(vals[e] != 1.0 for e in graph.adjacency[v1]):
                found.add("D_NOT_ONE_AT_V1")

    violations = [c for c in _VIOLATION_ORDER if c in found]
    return AssumptionReport(
        passed=not violations,
        violations=violations,
        first_failure=violations[0][0] if violations else "",
    )


# ------------------------------
# r-edges and export
# ------------------------------


def edge_lattice_endpoints(graph: FiniteGraph, e: int) -> Tuple[LatticeVertex, LatticeVertex]:
    """Endpoints of a lattice edge with the second one unwrapped for closing edges."""
    u, v = (graph.labels[k] for k in graph.edges[e])
    if not graph.is_closing(e):
        return u, v
    if u[1] == v[1]:
        return u, (u[0] + 1, u[1])
    return u, (u[0], u[1] + 1)


def r_edge_ids(graph: FiniteGraph) -> Tuple[int, ...]:
    """Dense id of the r-edge each unit edge belongs to, in order of first appearance."""
    if graph.r is None:
        raise ValueError("r_edge_ids: graph is not a lattice graph")
    r = graph.r
    ids: Dict[Tuple[LatticeVertex, int], int] = {}
    out: List[int] = []
    for e in range(graph.n_edges):
        u, v = edge_lattice_endpoints(graph, e)
        up, vp, _, _ = r_edge_of((u, v), r)
        axis = 0 if u[1] == v[1] else 1
        start = up if up[axis] < vp[axis] else vp
        if graph.box is not None:
            start = graph.box.canonical(start)
        key = (start, axis)
        if key not in ids:
            ids[key] = len(ids)
        out.append(ids[key])
    return tuple(out)


def graph_hash(graph: FiniteGraph) -> str:
    payload = json.dumps(
        {"labels": [list(x) if isinstance(x, tuple) else x for x in graph.labels], "edges": [list(e) for e in graph.edges]},
        sort_keys=True,
        separators=(",", ":"),
    )
    return "g1|" + hashlib.sha256(payload.encode("utf-8")).hexdigest()


def export_graph_csv(
    graph: FiniteGraph,
    edges_path: str,
    vertices_path: str,
    header: Optional[Dict[str, Any]] = None,
) -> None:
    lattice = graph.r is not None
    rids = r_edge_ids(graph) if lattice else None
    edge_rows = []
    for e, (u, v) in enumerate(graph.edges):
        edge_rows.append(
            {
                "edge_id": e,
                "u": u,
                "v": v,
                "periodic_closing": graph.is_closing(e),
                "r_edge_id": rids[e] if rids is not None else "",
            }
        )
    vertex_rows = []
    for k, lab in enumerate(graph.labels):
        row: Dict[str, Any] = {"vertex_id": k, "x1": "", "x2": "", "level": "", "in_L": ""}
        if lattice:
            row.update(x1=lab[0], x2=lab[1], level=level(lab, graph.r), in_L=in_crossings(lab, graph.r))
        vertex_rows.append(row)
    artifacts.write_csv(edges_path, ["edge_id", "u", "v", "periodic_closing", "r_edge_id"], edge_rows, header)
    artifacts.write_csv(vertices_path, ["vertex_id", "x1", "x2", "level", "in_L"], vertex_rows, header)


# ------------------------------
# Graph files and builtins
# ------------------------------


def _label(x: Any) -> Hashable:
    return tuple(x) if isinstance(x, list) else x


def load_graph_file(path: str) -> GraphInstance:
    """Read a JSON graph file.

    Keys: vertices, edges (label pairs), a (number or per-edge list), v0,
    optional v1, e0 (edge index, default 0), phi (per-edge list) and
    automorphism (image label of each vertex, in vertex order).
    """
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    for key in ("vertices", "edges", "a", "v0"):
        if key not in raw:
            raise ValueError(f"graph file {path}: missing key '{key}'")
    labels = [_label(x) for x in raw["vertices"]]
    graph = FiniteGraph.from_edges(labels, [(_label(u), _label(v)) for u, v in raw["edges"]])
    a_raw = raw["a"]
    a = InitialWeights.constant(graph, float(a_raw)) if isinstance(a_raw, (int, float)) else InitialWeights(np.asarray(a_raw, dtype=float))
    a.check(graph)
    v1 = graph.index(_label(raw["v1"])) if raw.get("v1") is not None else None
    phi = None
    if raw.get("phi") is not None:
        phi = np.asarray(raw["phi"], dtype=float)
        if phi.shape != (graph.n_edges,):
            raise ValueError(f"graph file {path}: phi must have one value per edge")
    auto = None
    if raw.get("automorphism") is not None:
        auto = tuple(graph.index(_label(x)) for x in raw["automorphism"])
    e0 = int(raw.get("e0", 0))
    if not 0 <= e0 < graph.n_edges:
        raise ValueError(f"graph file {path}: e0={e0} is not an edge index")
    return GraphInstance(
        graph=graph,
        a=a,
        v0=graph.index(_label(raw["v0"])),
        v1=v1,
        e0=e0,
        phi=phi,
        automorphism=auto,
        name=str(raw.get("name", path)),
    )


def parse_builtin(spec: str, a: float = 1.0) -> GraphInstance:
    """Builtin graphs: triangle, cycle:N, path:N, diluted-cycle:N,R, box:R,I, window:R,EXTENT."""
    name, _, arg = spec.strip().partition(":")
    nums = [int(x) for x in arg.split(",")] if arg else []
    if name == "triangle":
        g = build_cycle(3)
        return GraphInstance(graph=g, a=InitialWeights.constant(g, a), v0=0, e0=0, name=spec)
    if name == "cycle" and len(nums) == 1:
        if nums[0] >= 4 and nums[0] % 2 == 0:
            return cycle_instance(nums[0], a, name=spec)
        g = build_cycle(nums[0])
        return GraphInstance(graph=g, a=InitialWeights.constant(g, a), v0=0, e0=0, name=spec)
    if name == "diluted-cycle" and len(nums) == 2:
        return cycle_instance(nums[0] * nums[1], a, name=spec)
    if name == "path" and len(nums) == 1:
        g = build_path(nums[0])
        return GraphInstance(graph=g, a=InitialWeights.constant(g, a), v0=0, e0=0, name=spec)
    if name == "box" and len(nums) == 2:
        g = build_periodic_box(PeriodicBoxSpec(r=nums[0], i=nums[1]))
        origin = g.index((0, 0))
        return GraphInstance(graph=g, a=InitialWeights.constant(g, a), v0=origin, e0=g.adjacency[origin][0], name=spec)
    if name == "window" and len(nums) == 2:
        g = build_window_graph(nums[0], nums[1])
        origin = g.index((0, 0))
        return GraphInstance(graph=g, a=InitialWeights.constant(g, a), v0=origin, e0=g.adjacency[origin][0], name=spec)
    raise ValueError(f"unknown builtin graph '{spec}'")


def main() -> None:
    p = argparse.ArgumentParser(description="Build a graph and export its edge and vertex CSVs.")
    p.add_argument("--builtin", required=True, help="e.g. box:4,4 or window:4,8 or cycle:6")
    p.add_argument("--edges-out", default="data/out/edges.csv")
    p.add_argument("--vertices-out", default="data/out/vertices.csv")
    args = p.parse_args()
    inst = parse_builtin(args.builtin)
    export_graph_csv(inst.graph, args.edges_out, args.vertices_out)
    print(f"Wrote {inst.graph.n_vertices} vertices / {inst.graph.n_edges} edges -> {args.edges_out}")


if __name__ == "__main__":
    main()
