"""Laplacian and transpose operators, the exact Dirichlet solver, the
harmonic-restriction dimension estimator, and the finite-truncation duality
test between harmonic extension of boundary data and finitely supported
functions harmonic off a finite set.

All solves are exact over the rationals.  The graph Laplacian is
Delta f(x) = f(x) - (1/deg x) sum_{y~x} w_xy f(y); its transpose row at x is
f(x) - sum_{y~x} w_xy f(y) / deg y, so f is transpose harmonic at x exactly
when f/deg is harmonic at x.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from . import linalg
from .errors import InternalInvariantError, PreconditionError, TruncationError
from .graphs import GraphFamily, WeightedGraph
from .linalg import QQ, AffineSubspace

Values = Dict[int, Fraction]


def laplacian_row(graph: WeightedGraph, x: int, transpose: bool = False) -> Values:
    """Coefficients of Delta (or its transpose) at vertex x; rows sum to 0
    exactly in the plain case."""
    row: Values = {x: Fraction(1)}
    if transpose:
        for y, w in graph.neighbors(x).items():
            row[y] = row.get(y, Fraction(0)) - w / graph.degree(y)
    else:
        deg = graph.degree(x)
        for y, w in graph.neighbors(x).items():
            row[y] = row.get(y, Fraction(0)) - w / deg
    return {c: v for c, v in row.items() if v != 0}


def apply_laplacian(
    graph: WeightedGraph,
    f: Values,
    at: Sequence[int],
    transpose: bool = False,
) -> Values:
    """Exact values of Delta f (or Delta' f) on `at`; f must cover at^+."""
    out: Values = {}
    for x in at:
        row = laplacian_row(graph, x, transpose=transpose)
        acc = Fraction(0)
        for y, coef in row.items():
            if y not in f:
                raise PreconditionError(
                    f"function value missing at vertex {graph.ids[y]!r}"
                )
            acc += coef * f[y]
        out[x] = acc
    return out


def group_laplacian_value(model, measure, f, g) -> Fraction:
    """Delta_mu f(g) = f(g) - sum_s mu(s) f(gs), evaluated through the group
    law; an independent route from the graph rows."""
    acc = Fraction(f(g))
    for s, w in measure.support:
        acc -= w * Fraction(f(model.mul(g, s)))
    return acc


# -- Dirichlet problems -----------------------------------------------------------


@dataclass
class BoundaryValueProblem:
    """Finite region A with boundary data on its outer boundary.

    frontier_policy "error" refuses regions whose closure touches the
    truncation frontier; "absorb" extends the boundary data by
    `frontier_value` on frontier vertices that appear in the outer boundary.
    Vertices of A itself may never be frontier vertices, since their rows
    would be incomplete.
    """

    graph: WeightedGraph
    region: Set[int]
    boundary_values: Values
    frontier_policy: str = "error"
    frontier_value: Fraction = Fraction(0)


@dataclass
class DirichletSolution:
    values: Values  # on A^+
    region: Set[int]
    boundary: Values


def dirichlet_solve(problem: BoundaryValueProblem) -> DirichletSolution:
    """Exact harmonic extension of the boundary data into the region.

    The solution is harmonic on A, agrees with the data on the outer
    boundary, and is unique; the solver re-applies the Laplacian after the
    solve and validates the maximum principle exactly, strictly when the
    data on a connected component is non-constant.
    """
    g = problem.graph
    A = set(problem.region)
    if not A:
        raise PreconditionError("region is empty")
    frontier = g.frontier()
    touched = A & frontier
    if touched:
        raise PreconditionError(
            "region contains truncation-frontier vertices: "
            + ", ".join(sorted(g.ids[i] for i in touched))
        )
    boundary = g.outer_boundary(A)
    if not boundary:
        raise PreconditionError("region has empty outer boundary")
    f0 = dict(problem.boundary_values)
    for v in boundary:
        if v in f0:
            continue
        if v in frontier:
            if problem.frontier_policy == "absorb":
                f0[v] = Fraction(problem.frontier_value)
                continue
            raise TruncationError(
                f"outer boundary touches the frontier at {g.ids[v]!r}; "
                "declare it absorbing"
            )
        raise PreconditionError(f"missing boundary value at {g.ids[v]!r}")
    for comp in g.connected_components(within=A):
        if not g.outer_boundary(comp):
            raise PreconditionError("a component of the region has no boundary")

    order = sorted(A)
    col = {v: i for i, v in enumerate(order)}
    rows: List[Dict[int, Fraction]] = []
    rhs: List[Fraction] = []
    for x in order:
        lap = laplacian_row(g, x)
        row: Dict[int, Fraction] = {}
        b = Fraction(0)
        for y, coef in lap.items():
            if y in col:
                row[col[y]] = coef
            else:
                b -= coef * f0[y]
        rows.append(row)
        rhs.append(b)
    sol = linalg.solve(rows, rhs, len(order), require_unique=True)
    if sol is None:
        raise InternalInvariantError("Dirichlet system inconsistent")
    values: Values = {v: sol.get(col[v], Fraction(0)) for v in order}
    for v in boundary:
        values[v] = f0[v]

    residual = apply_laplacian(g, values, order)
    if any(r != 0 for r in residual.values()):
        raise InternalInvariantError("solution is not exactly harmonic")
    _check_maximum_principle(g, A, values, f0)
    return DirichletSolution(values=values, region=A, boundary={v: f0[v] for v in boundary})


def _check_maximum_principle(g: WeightedGraph, A: Set[int], values: Values, f0: Values):
    for comp in g.connected_components(within=A):
        bvals = [f0[v] for v in g.outer_boundary(comp)]
        lo, hi = min(bvals), max(bvals)
        for x in comp:
            v = values[x]
            if not lo <= v <= hi:
                raise InternalInvariantError("maximum principle violated")
            if lo < hi and not lo < v < hi:
                raise InternalInvariantError(
                    "interior attains the boundary extremum on non-constant data"
                )


def check_domination(sol1: DirichletSolution, sol2: DirichletSolution) -> bool:
    """f1 >= f2 on the boundary must give f1 >= f2 everywhere (same region)."""
    if sol1.region != sol2.region:
        raise PreconditionError("domination check needs a common region")
    if any(sol1.boundary[v] < sol2.boundary[v] for v in sol1.boundary):
        raise PreconditionError("boundary data are not ordered")
    return all(sol1.values[v] >= sol2.values[v] for v in sol1.values)


# -- harmonic restriction dimension -------------------------------------------------


@dataclass
class HarmdimReport:
    window: int
    dims: List[Tuple[int, int]]  # (depth m, dim of restriction space)
    stabilized: Optional[int]
    stall: int

    def to_jsonable(self):
        return {
            "window": self.window,
            "dims": [[m, d] for m, d in self.dims],
            "stabilized": self.stabilized,
            "stall": self.stall,
        }


def _harmonic_kernel(graph: WeightedGraph, m: int, transpose: bool = False):
    """Kernel of the constraint "harmonic at every vertex of B(m)" for
    functions on B(m)^+ = B(m+1); returns (basis vectors, column order)."""
    inside = [i for i, d in enumerate(graph.dist) if d is not None and d <= m]
    domain = [i for i, d in enumerate(graph.dist) if d is not None and d <= m + 1]
    col = {v: j for j, v in enumerate(domain)}
    rows = []
    for x in inside:
        lap = laplacian_row(graph, x, transpose=transpose)
        rows.append({col[y]: c for y, c in lap.items()})
    basis = linalg.nullspace(rows, len(domain))
    return basis, domain, col


def harmonic_restriction_dimension(
    family: GraphFamily,
    window: int,
    max_depth: int,
    stall: int = 4,
    transpose: bool = False,
) -> HarmdimReport:
    """dim { f|_B(window) : f on B(m)^+ harmonic on B(m) } for m up to
    max_depth, with stabilization detected after `stall` constant values.

    The sequence is non-increasing in m; eventual stabilization is
    guaranteed but has no effective bound, so a sweep that never settles
    reports stabilized=None rather than guessing.
    """
    if window < 0 or max_depth < window:
        raise PreconditionError("need 0 <= window <= max_depth")
    dims: List[Tuple[int, int]] = []
    run_val: Optional[int] = None
    run_len = 0
    for m in range(window, max_depth + 1):
        graph = family.ball(m + 1)
        basis, domain, col = _harmonic_kernel(graph, m, transpose=transpose)
        window_cols = [col[v] for v in domain if graph.dist[v] <= window]
        projected = []
        for vec in basis:
            pv = {window_cols.index(c): x for c, x in vec.items() if c in window_cols}
            if pv:
                projected.append(pv)
        d = linalg.rank(projected, len(window_cols))
        dims.append((m, d))
        if run_val == d:
            run_len += 1
        else:
            run_val, run_len = d, 1
        if run_len >= stall:
            return HarmdimReport(window, dims, stabilized=d, stall=stall)
    return HarmdimReport(window, dims, stabilized=None, stall=stall)


# -- duality test ---------------------------------------------------------------------


@dataclass
class DualityReport:
    """Finite-truncation record of the two dual statements.

    A witness (a nonzero finitely supported function harmonic off X) is
    conclusive evidence against universal extension; so is a boundary datum
    that fails to extend.  Their absence at depth m is inconclusive, which
    the `conclusive` flag records.  A witness supported in B(m) forces an
    extension failure by depth m+2 through the pairing with deg-weighted
    witnesses, so the two halves are cross-checked at matching depths.
    """

    depth: int
    witness: Optional[Dict[str, Fraction]]
    extension_ok_per_vertex: Dict[str, bool]
    inextensible_datum: Optional[Dict[str, Fraction]]
    conclusive: bool

    @property
    def all_extensions_ok(self) -> bool:
        return all(self.extension_ok_per_vertex.values())

    def to_jsonable(self):
        from .graphs import rat_str

        return {
            "depth": self.depth,
            "witness": None
            if self.witness is None
            else {k: rat_str(v) for k, v in sorted(self.witness.items())},
            "extension_ok_per_vertex": dict(sorted(self.extension_ok_per_vertex.items())),
            "inextensible_datum": None
            if self.inextensible_datum is None
            else {k: rat_str(v) for k, v in sorted(self.inextensible_datum.items())},
            "conclusive": self.conclusive,
            "note": "witness and extension failure are conclusive; absence is"
            " only 'none up to this depth'",
        }


def duality_witness_search(
    family: GraphFamily, X_ids: Sequence[str], depth: int
) -> Optional[Dict[str, Fraction]]:
    """Nonzero function supported in B(depth) and harmonic at every vertex of
    B(depth+1) outside X, as an exact nullspace element; None if none exists
    at this truncation."""
    graph = family.ball(depth + 2)
    X = _locate(graph, X_ids)
    support = [i for i, d in enumerate(graph.dist) if d is not None and d <= depth]
    sup_col = {v: j for j, v in enumerate(support)}
    rows = []
    for z, dz in enumerate(graph.dist):
        if dz is None or dz > depth + 1 or z in X:
            continue
        lap = laplacian_row(graph, z)
        row = {sup_col[y]: c for y, c in lap.items() if y in sup_col}
        if row:
            rows.append(row)
    basis = linalg.nullspace(rows, len(support))
    if not basis:
        return None
    vec = basis[0]
    return {graph.ids[support[c]]: v for c, v in vec.items()}


def duality_extension_check(family: GraphFamily, X_ids: Sequence[str], depth: int):
    """Which boundary data on X extend to functions on B(depth) harmonic on
    B(depth-1)?  Returns (per-vertex flags for delta data, inextensible
    datum or None)."""
    graph = family.ball(depth + 1)
    X = _locate(graph, X_ids)
    for x in X:
        if graph.dist[x] is None or graph.dist[x] > depth - 2:
            raise PreconditionError("X must lie inside B(depth-2)")
    basis, domain, col = _harmonic_kernel(graph, depth - 1)
    x_cols = [col[x] for x in X]
    # image of the restriction map (harmonic functions on B(depth-1)) -> R^X
    proj = []
    for vec in basis:
        pv = {i: vec[c] for i, c in enumerate(x_cols) if c in vec}
        proj.append(pv)
    ech = linalg.eliminate(proj, len(X), ordered=True)
    image_rows = [row for _, row, _ in ech.pivot_seq]
    image = AffineSubspace(QQ, len(X), {}, image_rows)
    flags: Dict[str, bool] = {}
    for i, xid in enumerate(X_ids):
        flags[xid] = image.contains({i: Fraction(1)})
    datum = None
    if image.dim < len(X):
        cand = None
        for i, xid in enumerate(X_ids):
            if not flags[xid]:
                cand = {xid: Fraction(1)}
                break
        if cand is None:
            # vector orthogonal to the image; it cannot lie in the image
            perp = linalg.nullspace(list(image.basis) or [{}], len(X), ordered=True)
            cand = {X_ids[i]: v for i, v in perp[0].items()}
        datum = cand
    return flags, datum


def duality_test(family: GraphFamily, X_ids: Sequence[str], depth: int) -> DualityReport:
    if depth < 3:
        raise PreconditionError("duality test needs depth >= 3")
    witness = duality_witness_search(family, X_ids, depth)
    flags, datum = duality_extension_check(family, X_ids, depth)
    conclusive = witness is not None or datum is not None
    return DualityReport(
        depth=depth,
        witness=witness,
        extension_ok_per_vertex=flags,
        inextensible_datum=datum,
        conclusive=conclusive,
    )


def _locate(graph: WeightedGraph, ids: Sequence[str]) -> List[int]:
    out = []
    for s in ids:
        if s not in graph.index:
            raise PreconditionError(f"vertex {s!r} is outside the truncation")
        out.append(graph.index[s])
    return out
