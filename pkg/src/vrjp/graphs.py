"""Weighted graphs, lattice boxes, wired restrictions, path enumeration.

Vertices are dense integers 0..n-1. Lattice boxes index their sites in
row-major coordinate order so runs are reproducible byte for byte. A wired
restriction collapses everything outside a retained set to one extra vertex
(delta), which is always the last index; Schur block operations downstream
rely on that placement.

Path enumeration is capped (default 12) and exists to serve as an independent
test oracle for Green-function path sums; production code never enumerates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, EnumerationError, RestrictionError, SizeError

__all__ = [
    "WeightedGraph",
    "WiredGraph",
    "build_lattice_box",
    "wire_restrict",
    "enumerate_paths",
    "path_weight",
    "path_beta_factor",
    "boundary_weights",
    "induced_subgraph",
    "load_graph",
    "save_graph",
    "PATH_CAP_DEFAULT",
]

PATH_CAP_DEFAULT = 12
MAX_VERTICES_DEFAULT = 2_000_000


@dataclass(frozen=True)
class WeightedGraph:
    """Finite undirected graph with positive edge conductances.

    edges hold one entry per unordered pair, stored with i < j. coords is
    populated by the lattice builder (one coordinate tuple per vertex) and is
    None for hand-built graphs.
    """

    n: int
    edges: tuple
    coords: Optional[tuple] = None
    # adjacency: per-vertex tuple of (neighbor, weight), derived in __post_init__
    neighbors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("graph needs at least one vertex")
        seen = set()
        canon = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise DomainError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise DomainError(f"edge ({i},{j}) out of range for n={self.n}")
            if w <= 0:
                raise DomainError(f"edge ({i},{j}) has nonpositive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise DomainError(f"duplicate edge {key}")
            seen.add(key)
            canon.append((key[0], key[1], w))
        adj = [[] for _ in range(self.n)]
        for i, j, w in canon:
            adj[i].append((j, w))
            adj[j].append((i, w))
        object.__setattr__(self, "edges", tuple(canon))
        object.__setattr__(self, "neighbors", tuple(tuple(a) for a in adj))
        if self.coords is not None:
            if len(self.coords) != self.n:
                raise DomainError("coords length must match vertex count")
            object.__setattr__(
                self, "coords", tuple(tuple(int(c) for c in x) for x in self.coords)
            )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def coord_array(self) -> np.ndarray:
        """Vertex coordinates as an (n, dim) integer array."""
        if self.coords is None:
            raise DomainError("graph has no coordinates")
        return np.asarray(self.coords, dtype=np.int64)

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric matrix of conductances (zero diagonal)."""
        w = np.zeros((self.n, self.n))
        for i, j, x in self.edges:
            w[i, j] = x
            w[j, i] = x
        return w

    def weight(self, i: int, j: int) -> float:
        """Conductance of edge {i, j}, or 0.0 if absent."""
        for k, w in self.neighbors[i]:
            if k == j:
                return w
        return 0.0

    def total_weights(self) -> np.ndarray:
        """Per-vertex sum of incident conductances."""
        out = np.zeros(self.n)
        for i, j, w in self.edges:
            out[i] += w
            out[j] += w
        return out

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u, _ in self.neighbors[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.n


@dataclass(frozen=True)
class WiredGraph:
    """A graph restricted to a retained set plus one boundary vertex delta.

    base is the full wired graph (delta is its last vertex). origin_map[k]
    gives, for retained vertex k, its id in the outermost parent graph.
    crossing_counts[k] is the number of parent edges collapsed into the
    (k, delta) edge; zero for interior vertices.
    """

    base: WeightedGraph
    delta: int
    origin_map: tuple
    crossing_counts: tuple

    @property
    def interior(self) -> tuple:
        """Wired-graph ids of the retained vertices (everything but delta)."""
        return tuple(range(self.delta))


def build_lattice_box(
    dim: int,
    radius: int,
    w: float = 1.0,
    center: Optional[Sequence[int]] = None,
    max_vertices: int = MAX_VERTICES_DEFAULT,
) -> WeightedGraph:
    """Nearest-neighbor box {x : |x - center|_inf <= radius} with constant weight.

    Vertices are indexed row-major over coordinates (last axis fastest), which
    keeps vertex ids stable across runs and keeps the adjacency banded.
    """
    if dim not in (1, 2, 3, 4):
        raise DomainError(f"dim must be in 1..4, got {dim}")
    if radius < 0:
        raise DomainError("radius must be nonnegative")
    if w <= 0:
        raise DomainError("edge weight must be positive")
    side = 2 * radius + 1
    n = side**dim
    if n > max_vertices:
        raise SizeError(f"box has {n} vertices, limit is {max_vertices}")
    if center is None:
        center = (0,) * dim
    center = tuple(int(c) for c in center)
    if len(center) != dim:
        raise DomainError("center must have one coordinate per dimension")

    # Row-major: vertex id of offset (o_1..o_d), each o in 0..side-1, is
    # sum o_k * side^(d-k). Strides let us add edges without a coordinate map.
    strides = [side ** (dim - 1 - k) for k in range(dim)]
    coords = []
    for flat in range(n):
        rem = flat
        x = []
        for s in strides:
            q, rem = divmod(rem, s)
            x.append(q - radius)
        coords.append(tuple(xi + ci for xi, ci in zip(x, center)))
    edges = []
    for flat in range(n):
        rem = flat
        offs = []
        for s in strides:
            q, rem = divmod(rem, s)
            offs.append(q)
        for k, s in enumerate(strides):
            if offs[k] + 1 < side:
                edges.append((flat, flat + s, w))
    return WeightedGraph(n=n, edges=tuple(edges), coords=tuple(coords))


def wire_restrict(
    g: Union[WeightedGraph, WiredGraph], subset: Iterable[int]
) -> WiredGraph:
    """Collapse everything outside `subset` to a single boundary vertex delta.

    The (i, delta) weight is the sum of g's weights from i to non-retained
    vertices. Accepts a WiredGraph as input, in which case `subset` is given
    in the ids of the outermost parent graph and restrictions compose.
    """
    if isinstance(g, WiredGraph):
        parent_of = {p: k for k, p in enumerate(g.origin_map)}
        mapped = []
        for p in subset:
            if p not in parent_of:
                raise RestrictionError(
                    f"vertex {p} is not retained in the wired graph being restricted"
                )
            mapped.append(parent_of[p])
        origin_lookup = dict(enumerate(g.origin_map))
        return _wire(g.base, mapped, origin_lookup, forbidden={g.delta})
    return _wire(g, list(subset), None, forbidden=set())


def _wire(base, subset, origin_lookup, forbidden):
    subset = sorted(set(int(v) for v in subset))
    if not subset:
        raise RestrictionError("subset must be nonempty")
    for v in subset:
        if v in forbidden:
            raise RestrictionError("delta cannot be retained")
        if not (0 <= v < base.n):
            raise RestrictionError(f"vertex {v} out of range")
    outside = set(range(base.n)) - set(subset) - forbidden
    if not outside and not forbidden:
        raise RestrictionError("subset equals the full vertex set: no boundary")
    new_id = {v: k for k, v in enumerate(subset)}
    m = len(subset)
    delta = m
    boundary_w = np.zeros(m)
    crossings = np.zeros(m, dtype=int)
    edges = []
    for i, j, w in base.edges:
        ii, jj = new_id.get(i), new_id.get(j)
        if ii is not None and jj is not None:
            edges.append((ii, jj, w))
        elif ii is not None:
            boundary_w[ii] += w
            crossings[ii] += 1
        elif jj is not None:
            boundary_w[jj] += w
            crossings[jj] += 1
    if not boundary_w.any():
        raise RestrictionError("subset has no edges to its complement")
    for k in range(m):
        if boundary_w[k] > 0:
            edges.append((k, delta, float(boundary_w[k])))
    # delta has no lattice coordinate, so wired graphs carry no coords
    wired_base = WeightedGraph(n=m + 1, edges=tuple(edges))
    if not wired_base.is_connected():
        raise RestrictionError("subset plus delta is not connected")
    if origin_lookup is None:
        origin = tuple(subset)
    else:
        origin = tuple(origin_lookup[v] for v in subset)
    return WiredGraph(
        base=wired_base,
        delta=delta,
        origin_map=origin,
        crossing_counts=tuple(int(c) for c in crossings),
    )


def boundary_weights(g: WeightedGraph, subset: Sequence[int]) -> np.ndarray:
    """For each vertex of `subset` (in the given order), total weight to the
    complement of `subset` in g."""
    inside = set(int(v) for v in subset)
    out = np.zeros(len(subset))
    for k, v in enumerate(subset):
        for u, w in g.neighbors[int(v)]:
            if u not in inside:
                out[k] += w
    return out


def induced_subgraph(g: WeightedGraph, subset: Sequence[int]):
    """Subgraph on `subset` (order preserved). Returns (graph, old-to-new map)."""
    subset = [int(v) for v in subset]
    new_id = {v: k for k, v in enumerate(subset)}
    edges = [
        (new_id[i], new_id[j], w)
        for i, j, w in g.edges
        if i in new_id and j in new_id
    ]
    return WeightedGraph(n=len(subset), edges=tuple(edges)), new_id


def enumerate_paths(
    g: WeightedGraph,
    i: int,
    stop_set: Iterable[int] = (),
    max_len: int = 0,
    cap: int = PATH_CAP_DEFAULT,
):
    """All nearest-neighbor paths from i of length <= max_len.

    With an empty stop set, every path is returned, including the trivial
    single-vertex path. With a nonempty stop set, only paths whose final
    vertex is their first visit to the stop set are returned (paths are cut
    at the first hit and never continued past it).
    """
    if max_len > cap:
        raise EnumerationError(f"max_len {max_len} exceeds cap {cap}")
    if not (0 <= i < g.n):
        raise DomainError(f"start vertex {i} out of range")
    stop = set(int(v) for v in stop_set)
    out = []
    start = (int(i),)
    if stop:
        if i in stop:
            return [start]
    else:
        out.append(start)
    frontier = [start]
    for _ in range(max_len):
        nxt = []
        for path in frontier:
            v = path[-1]
            for u, _w in g.neighbors[v]:
                new = path + (u,)
                if stop:
                    if u in stop:
                        out.append(new)
                    else:
                        nxt.append(new)
                else:
                    out.append(new)
                    nxt.append(new)
        frontier = nxt
    return out


def path_weight(g: WeightedGraph, path: Sequence[int]) -> float:
    """Product of edge conductances along the path (1.0 for a trivial path)."""
    out = 1.0
    for a, b in zip(path[:-1], path[1:]):
        w = g.weight(int(a), int(b))
        if w == 0.0:
            raise DomainError(f"({a},{b}) is not an edge")
        out *= w
    return out


def path_beta_factor(
    beta: np.ndarray, path: Sequence[int], include_last: bool = True
) -> float:
    """Product of 2*beta over the path's vertices.

    include_last=False drops the final vertex, the convention used for
    boundary-hitting sums (equals 1.0 for a trivial path).
    """
    verts = path if include_last else path[:-1]
    out = 1.0
    for v in verts:
        out *= 2.0 * float(beta[int(v)])
    return out


def load_graph(path: str) -> WeightedGraph:
    """Read a graph from JSON: {"n": int, "edges": [[i, j, w], ...]}."""
    with open(path) as f:
        data = json.load(f)
    try:
        n = int(data["n"])
        edges = tuple((int(i), int(j), float(w)) for i, j, w in data["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"bad graph file {path}: {exc}") from exc
    return WeightedGraph(n=n, edges=edges)


def save_graph(g: WeightedGraph, path: str) -> None:
    with open(path, "w") as f:
        json.dump({"n": g.n, "edges": [[i, j, w] for i, j, w in g.edges]}, f)
        f.write("\n")
