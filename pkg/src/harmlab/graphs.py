"""Finite weighted graphs with exact rational weights, vertex-set calculus,
and the gallery of counterexample graphs.

Graphs are finite truncations of (possibly infinite) graphs.  A graph
carries a `radius` marking the largest base distance up to which vertex
neighbourhoods are complete; vertices at that distance form the truncation
frontier and downstream solvers must treat them as absorbing or refuse to
use them.  `radius=None` means the graph is complete (no frontier).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import GraphParseError, PreconditionError


def rat_str(x: Fraction) -> str:
    """Canonical "p/q" form, denominator always present."""
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def parse_rat(s: str, where: str = "") -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise GraphParseError(f"malformed rational {s!r}{where}") from exc


class WeightedGraph:
    """Undirected weighted graph, no loops, no multi-edges, one base vertex.

    Optional metadata: `vertex_transitive` asserts the infinite graph the
    truncation came from is vertex transitive (gallery knowledge, never
    detected); `core`/`escape_bounds` let a builder certify, per frontier
    vertex z, an upper bound on the probability that the walk on the full
    infinite graph started at z ever visits the core set again.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        edges: Iterable[Tuple[str, str, Fraction]],
        base: str,
        radius: Optional[int] = None,
        hold: Fraction = Fraction(0),
        vertex_transitive: bool = False,
        marks: Optional[Dict[str, str]] = None,
        core: Optional[Set[str]] = None,
        escape_bounds: Optional[Dict[str, Fraction]] = None,
    ):
        ids = list(vertices)
        if len(set(ids)) != len(ids):
            raise GraphParseError("duplicate vertex id")
        self.ids: Tuple[str, ...] = tuple(ids)
        self.index: Dict[str, int] = {v: i for i, v in enumerate(ids)}
        if base not in self.index:
            raise GraphParseError(f"base vertex {base!r} not among vertices")
        self.base: int = self.index[base]
        self.adj: List[Dict[int, Fraction]] = [dict() for _ in ids]
        for u, v, w in edges:
            if u == v:
                raise GraphParseError(f"loop edge {u!r} {v!r}")
            if u not in self.index or v not in self.index:
                raise GraphParseError(f"edge endpoint {u!r}/{v!r} not a vertex")
            w = Fraction(w)
            if w <= 0:
                raise GraphParseError(f"non-positive weight {w} on edge {u!r} {v!r}")
            iu, iv = self.index[u], self.index[v]
            if iv in self.adj[iu]:
                raise GraphParseError(f"duplicate edge {u!r} {v!r}")
            self.adj[iu][iv] = w
            self.adj[iv][iu] = w
        if not Fraction(0) <= hold < 1:
            raise GraphParseError(f"hold probability {hold} outside [0,1)")
        self.hold = Fraction(hold)
        self.radius = radius
        self.vertex_transitive = vertex_transitive
        self.marks = dict(marks or {})
        self.core = frozenset(core) if core is not None else None
        self.escape_bounds = dict(escape_bounds or {})
        self.dist: Tuple[Optional[int], ...] = tuple(self._bfs(self.base))

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    def degree(self, i: int) -> Fraction:
        return sum(self.adj[i].values(), Fraction(0))

    def neighbors(self, i: int) -> Dict[int, Fraction]:
        return self.adj[i]

    def frontier(self) -> FrozenSet[int]:
        if self.radius is None:
            return frozenset()
        return frozenset(
            i for i, d in enumerate(self.dist) if d is None or d >= self.radius
        )

    def _bfs(self, start: int) -> List[Optional[int]]:
        dist: List[Optional[int]] = [None] * self.n
        dist[start] = 0
        q = deque([start])
        while q:
            u = q.popleft()
            for v in self.adj[u]:
                if dist[v] is None:
                    dist[v] = dist[u] + 1
                    q.append(v)
        return dist

    def is_connected(self) -> bool:
        return all(d is not None for d in self.dist)

    def connected_components(self, within: Optional[Set[int]] = None) -> List[Set[int]]:
        """Components of the subgraph induced on `within` (all vertices if None)."""
        pool = set(range(self.n)) if within is None else set(within)
        comps = []
        while pool:
            s = pool.pop()
            comp = {s}
            q = deque([s])
            while q:
                u = q.popleft()
                for v in self.adj[u]:
                    if v in pool:
                        pool.discard(v)
                        comp.add(v)
                        q.append(v)
            comps.append(comp)
        return comps

    def ball(self, center: int, r: int) -> Set[int]:
        dist = self._bfs(center)
        return {i for i, d in enumerate(dist) if d is not None and d <= r}

    def induced(self, keep: Set[int], radius: Optional[int]) -> "WeightedGraph":
        """Induced subgraph; base must be kept; distances recomputed."""
        if self.base not in keep:
            raise PreconditionError("induced subgraph must keep the base vertex")
        ids = [self.ids[i] for i in sorted(keep)]
        edges = []
        for i in sorted(keep):
            for j, w in self.adj[i].items():
                if j in keep and i < j:
                    edges.append((self.ids[i], self.ids[j], w))
        return WeightedGraph(
            ids,
            edges,
            self.ids[self.base],
            radius=radius,
            hold=self.hold,
            vertex_transitive=self.vertex_transitive,
            marks={k: v for k, v in self.marks.items() if v in set(ids)},
            core={v for v in self.core or set() if v in set(ids)} or None,
            escape_bounds={v: b for v, b in self.escape_bounds.items() if v in set(ids)},
        )

    # -- vertex-set calculus -------------------------------------------------

    def neighbourhood(self, A: Set[int]) -> Set[int]:
        out = set(A)
        for x in A:
            out.update(self.adj[x])
        return out

    def interior(self, A: Set[int]) -> Set[int]:
        return {x for x in A if all(y in A for y in self.adj[x])}

    def inner_boundary(self, A: Set[int]) -> Set[int]:
        return set(A) - self.interior(A)

    def outer_boundary(self, A: Set[int]) -> Set[int]:
        return self.neighbourhood(A) - set(A)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> str:
        verts = sorted(self.ids)
        edges = []
        for i in range(self.n):
            for j, w in self.adj[i].items():
                if i < j:
                    u, v = sorted((self.ids[i], self.ids[j]))
                    edges.append([u, v, rat_str(w)])
        edges.sort()
        doc = {"base": self.ids[self.base], "vertices": verts, "edges": edges}
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphParseError(f"invalid JSON: {exc}") from exc
        for key in ("base", "vertices", "edges"):
            if key not in doc:
                raise GraphParseError(f"missing key {key!r}")
        edges = []
        for k, e in enumerate(doc["edges"]):
            if len(e) != 3:
                raise GraphParseError(f"edge entry {k} malformed: {e!r}")
            u, v, w = e
            wf = parse_rat(w, where=f" in edge entry {k} ({u!r},{v!r})")
            if wf <= 0:
                raise GraphParseError(f"non-positive weight in edge entry {k}: {w!r}")
            edges.append((u, v, wf))
        return cls(doc["vertices"], edges, doc["base"])


# -- gallery -----------------------------------------------------------------


def path_graph(lo: int, hi: int, base: Optional[int] = None) -> WeightedGraph:
    """Unit-weight path on integers lo..hi; convenience for tests and demos."""
    ids = [str(k) for k in range(lo, hi + 1)]
    edges = [(str(k), str(k + 1), Fraction(1)) for k in range(lo, hi)]
    return WeightedGraph(ids, edges, str(base if base is not None else lo))


def cycle_graph(k: int, weights: Optional[Dict[int, Fraction]] = None) -> WeightedGraph:
    """Cycle C_k, or a weighted circulant when `weights` maps step -> weight.

    Circulants are Cayley graphs of Z/k, hence vertex transitive as weighted
    graphs.  Default is the unit-weight cycle (steps +-1).
    """
    if k < 3:
        raise PreconditionError("cycle needs at least 3 vertices")
    steps = weights or {1: Fraction(1)}
    ids = [f"v{i}" for i in range(k)]
    edges = []
    seen = set()
    for s, w in sorted(steps.items()):
        if not 1 <= s <= k // 2:
            raise PreconditionError(f"circulant step {s} out of range for k={k}")
        for i in range(k):
            j = (i + s) % k
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            edges.append((ids[i], ids[j], w))
    return WeightedGraph(ids, edges, "v0", radius=None, vertex_transitive=True)


def trofimov_ladder(n_cells: int) -> WeightedGraph:
    """Truncation of the one-ended cubic graph with only constant harmonic
    functions, built exactly as drawn.

    Cell 1 (the leading gadget, 6 vertices): leftmost vertex w joined to a
    pendant p and to both triangle vertices t1, b1; t1-b1 edge; t1 and b1
    joined to r1; r1 joined to the bridge s1.  Every further cell k hangs a
    diamond off the previous bridge: s_{k-1}-t_k, s_{k-1}-b_k, t_k-b_k,
    t_k-r_k, b_k-r_k, r_k-s_k.  All weights 1.  Away from the pendant and
    the final bridge (the truncation frontier) every vertex has degree 3.

    Adjacency list for audit (cell 1): w: p,t1,b1; p: w; t1: w,b1,r1;
    b1: w,t1,r1; r1: t1,b1,s1; s1: r1,t2,b2.
    """
    if n_cells < 1:
        raise PreconditionError("need at least one cell")
    ids = ["w", "p"]
    edges = [("w", "p", Fraction(1))]
    prev = "w"
    for k in range(1, n_cells + 1):
        t, b, r, s = f"t{k}", f"b{k}", f"r{k}", f"s{k}"
        ids += [t, b, r, s]
        one = Fraction(1)
        edges += [
            (prev, t, one),
            (prev, b, one),
            (t, b, one),
            (t, r, one),
            (b, r, one),
            (r, s, one),
        ]
        prev = s
    # base distance of the last bridge is 3*n_cells; it is the frontier
    return WeightedGraph(ids, edges, "w", radius=3 * n_cells, marks={"pendant": "p"})


def asym_hitting_graph(depth: int) -> WeightedGraph:
    """Truncation of the cubic graph whose walk hits y from x more readily
    than x from y; x sits in a finite gadget, y opens into a binary tree.

    Left gadget as drawn: w joined to pendant p and triangle vertices t, b;
    t-b edge; t and b joined to x; x joined to y.  From y a binary tree
    branches for depth+1 levels (2^k vertices at level k).  Unit weights.
    Vertex count is 2^(depth+2) + 4.

    Frontier leaves carry exact escape bounds: on the infinite tree the
    probability of ever moving one level rootward is the minimal solution
    of rho = 1/3 + (2/3) rho^2, i.e. 1/2, so a leaf at level L re-enters
    the core with probability at most (1/2)^L.
    """
    if depth < 1:
        raise PreconditionError("depth must be >= 1")
    one = Fraction(1)
    ids = ["w", "p", "t", "b", "x", "y"]
    edges = [
        ("w", "p", one),
        ("w", "t", one),
        ("w", "b", one),
        ("t", "b", one),
        ("t", "x", one),
        ("b", "x", one),
        ("x", "y", one),
    ]
    core = set(ids)
    levels = depth + 1
    prev = ["y"]
    for lvl in range(1, levels + 1):
        cur = []
        for parent_idx, parent in enumerate(prev):
            for child in range(2):
                name = f"d{lvl}_{2 * parent_idx + child}"
                ids.append(name)
                edges.append((parent, name, one))
                cur.append(name)
        prev = cur
    escape = {leaf: Fraction(1, 2**levels) for leaf in prev}
    # base w: dist(y)=3, tree level k at 3+k, leaves at 3+levels
    return WeightedGraph(
        ids,
        edges,
        "w",
        radius=3 + levels,
        marks={"x": "x", "y": "y", "pendant": "p"},
        core=core,
        escape_bounds=escape,
    )


# -- graph families ------------------------------------------------------------


class GraphFamily:
    """A graph known up to arbitrary truncation radius.

    ball(m) returns the metric ball B(m) around the base of the infinite
    graph, with radius metadata m, so that neighbourhoods are complete for
    every vertex at distance < m.
    """

    name: str = "family"
    vertex_transitive: bool = False

    def ball(self, m: int) -> WeightedGraph:
        raise NotImplementedError


@dataclass
class FiniteGraphFamily(GraphFamily):
    """Wraps a complete finite graph; every ball is the whole graph."""

    graph: WeightedGraph
    name: str = "finite"

    def __post_init__(self):
        self.vertex_transitive = self.graph.vertex_transitive

    def ball(self, m: int) -> WeightedGraph:
        return self.graph


class TrofimovLadderFamily(GraphFamily):
    name = "trofimov"

    def ball(self, m: int) -> WeightedGraph:
        cells = max(1, m // 3 + 2)
        g = trofimov_ladder(cells)
        keep = {i for i, d in enumerate(g.dist) if d is not None and d <= m}
        return g.induced(keep, radius=m)


class AsymHittingFamily(GraphFamily):
    name = "asym"

    def ball(self, m: int) -> WeightedGraph:
        # leaves of depth d sit at base distance d+4, so depth m-4 makes the
        # natural leaves (which carry escape bounds) the frontier of B(m)
        g = asym_hitting_graph(max(1, m - 4))
        keep = {i for i, d in enumerate(g.dist) if d is not None and d <= m}
        return g.induced(keep, radius=m)
