"""Locally specifiable linear maps over an alphabet V = K^r, on weighted
graphs and on group Cayley structures: transposition, ball slices,
surjectivity and pre-injectivity checks at finite radius, constructive
preimages through stabilizing affine chains, and mean dimension over boxes.

The matrix of such a map in the delta basis has block entry ((x,i),(y,j))
equal to the (i,j) entry of the coefficient matrix linking x to y, zero
unless y is x or a neighbour.  A slice tau_B^A keeps the rows of B and the
columns of A; the transpose map is defined by (tau')_B^A = (tau_A^B)^T.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from . import linalg
from .errors import PreconditionError, TruncationError, UnsupportedFeatureError
from .graphs import GraphFamily, WeightedGraph
from .groups import Element, FreeAbelian, GroupModel, SymmetricMeasure
from .laplace import laplacian_row
from .linalg import QQ, AffineSubspace, affine_from_system

Matrix = Tuple[tuple, ...]  # r x r, entries in the field


def mat_transpose(m: Matrix) -> Matrix:
    r = len(m)
    return tuple(tuple(m[i][j] for i in range(r)) for j in range(len(m[0])))


def mat_zero(field, r: int) -> Matrix:
    return tuple(tuple(field.zero for _ in range(r)) for _ in range(r))


def mat_scalar(field, r: int, v) -> Matrix:
    return tuple(
        tuple(v if i == j else field.zero for j in range(r)) for i in range(r)
    )


class Context:
    """Finite window of vertices/elements with stable indexing."""

    def __init__(self, keys: Sequence, names: Sequence[str], dist: Dict):
        self.keys = list(keys)
        self.names = list(names)
        self.index = {k: i for i, k in enumerate(keys)}
        self.dist = dist

    def within(self, radius: int) -> List:
        return [k for k in self.keys if self.dist[k] <= radius]


class GroupAutomaton:
    """Translation-invariant local linear map over a group: tau(f)(x) =
    sum_s coeffs[s] f(xs), the sum running over the memory set (which may
    include the identity for the self term)."""

    def __init__(self, model: GroupModel, coeffs: Dict[Element, Matrix], r: int, field=QQ):
        self.model = model
        self.r = r
        self.field = field
        self.coeffs = dict(coeffs)

    @classmethod
    def laplacian(cls, model: GroupModel, measure: SymmetricMeasure) -> "GroupAutomaton":
        """Delta_mu as a scalar (r=1) automaton: f(x) - sum mu(s) f(xs)."""
        coeffs: Dict[Element, Matrix] = {}
        e = model.identity()
        coeffs[e] = ((Fraction(1) - measure.hold,),)
        for s, w in measure.moving_support():
            coeffs[s] = ((-w,),)
        return cls(model, coeffs, 1, QQ)

    def memory(self) -> List[Element]:
        return sorted(self.coeffs, key=self.model.key)

    def symmetrized_generators(self) -> List[Element]:
        out: Set[Element] = set()
        e = self.model.identity()
        for s in self.coeffs:
            if s != e:
                out.add(s)
                out.add(self.model.inv(s))
        return sorted(out, key=self.model.key)

    def ball_context(self, n: int) -> Context:
        gens = self.symmetrized_generators()
        e = self.model.identity()
        dist = {e: 0}
        order = [e]
        q = deque([e])
        while q:
            g = q.popleft()
            if dist[g] == n:
                continue
            for s in gens:
                h = self.model.mul(g, s)
                if h not in dist:
                    dist[h] = dist[g] + 1
                    order.append(h)
                    q.append(h)
        order.sort(key=self.model.key)
        return Context(order, [self.model.name(g) for g in order], dist)

    def box_context(self, n: int) -> Context:
        """Folner box [-n, n]^d with distance max(0, |x|_inf - n) recorded,
        so within(0) is the box and within(1) its memory neighbourhood."""
        if not isinstance(self.model, FreeAbelian):
            raise UnsupportedFeatureError("boxes need a free abelian group")
        d = self.model.d


        box = [tuple(p) for p in itertools.product(range(-n, n + 1), repeat=d)]
        elems: Set[Element] = set(box)
        dist = {g: 0 for g in box}
        frontier = set(box)
        gens = self.symmetrized_generators()
        level = 0
        while frontier:
            level += 1
            nxt: Set[Element] = set()
            for g in frontier:
                for s in gens:
                    h = self.model.mul(g, s)
                    if h not in dist:
                        dist[h] = level
                        nxt.add(h)
            elems |= nxt
            frontier = nxt
            if level >= 2:
                break
        order = sorted(elems, key=self.model.key)
        return Context(order, [self.model.name(g) for g in order], dist)

    def row_terms(self, ctx: Context, x: Element):
        for s, mat in self.coeffs.items():
            yield self.model.mul(x, s), mat

    def transpose(self) -> "GroupAutomaton":
        coeffs = {
            self.model.inv(s): mat_transpose(m) for s, m in self.coeffs.items()
        }
        return GroupAutomaton(self.model, coeffs, self.r, self.field)


class GraphAutomaton:
    """Local linear map on a graph family; rule is "laplacian" (scalar rows
    of Delta), or an explicit per-vertex coefficient table for a fixed
    finite graph."""

    def __init__(
        self,
        family: GraphFamily,
        rule: str = "laplacian",
        r: int = 1,
        field=QQ,
        table: Optional[Dict[str, Dict[str, Matrix]]] = None,
        transposed: bool = False,
    ):
        if rule not in ("laplacian", "table"):
            raise UnsupportedFeatureError(f"unknown rule {rule!r}")
        self.family = family
        self.rule = rule
        self.r = r
        self.field = field
        self.table = table
        self.transposed = transposed

    @classmethod
    def from_table(cls, family, table, r, field=QQ) -> "GraphAutomaton":
        return cls(family, rule="table", r=r, field=field, table=table)

    def ball_context(self, n: int) -> Context:
        graph = self.family.ball(n)
        keys = list(range(graph.n))
        ctx = Context(keys, list(graph.ids), {i: graph.dist[i] for i in keys})
        ctx.graph = graph
        return ctx

    def _coeff(self, graph: WeightedGraph, x: int) -> Dict[int, Matrix]:
        if self.rule == "laplacian":
            return {
                y: ((v,),) for y, v in laplacian_row(graph, x).items()
            }
        row = self.table.get(graph.ids[x], {})
        out = {}
        for y in list(graph.neighbors(x)) + [x]:
            m = row.get(graph.ids[y])
            if m is not None:
                out[y] = m
        return out

    def row_terms(self, ctx: Context, x: int):
        graph = ctx.graph
        if not self.transposed:
            yield from self._coeff(graph, x).items()
            return
        for y in list(graph.neighbors(x)) + [x]:
            m = self._coeff(graph, y).get(x)
            if m is not None:
                yield y, mat_transpose(m)

    def transpose(self) -> "GraphAutomaton":
        return GraphAutomaton(
            self.family,
            rule=self.rule,
            r=self.r,
            field=self.field,
            table=self.table,
            transposed=not self.transposed,
        )


def slice_matrix(tau, ctx: Context, row_keys: Sequence, col_keys: Sequence):
    """Rows of tau_B^A over flattened indices; entry ((x,i),(y,j)) is the
    (i,j) coefficient linking x to y, with y outside A truncated to zero."""
    col_pos = {k: p for p, k in enumerate(col_keys)}
    r = tau.r
    fld = tau.field
    rows: List[Dict[int, object]] = []
    for x in row_keys:
        blocks: Dict[int, Matrix] = {}
        for y, mat in tau.row_terms(ctx, x):
            p = col_pos.get(y)
            if p is None:
                continue
            if p in blocks:
                blocks[p] = tuple(
                    tuple(fld.add(a, b) for a, b in zip(ra, rb))
                    for ra, rb in zip(blocks[p], mat)
                )
            else:
                blocks[p] = mat
        for i in range(r):
            row: Dict[int, object] = {}
            for p, mat in blocks.items():
                for j in range(r):
                    v = mat[i][j]
                    if v != fld.zero:
                        row[p * r + j] = v
            rows.append(row)
    return rows


@dataclass
class SurjectivityReport:
    radius: int
    rank: int
    full_rank: int
    surjective_on_ball: bool
    certificate: Optional[Dict[Tuple[str, int], object]]

    def to_jsonable(self):
        from .graphs import rat_str

        cert = None
        if self.certificate is not None:
            cert = {
                f"{name}#{i}": str(v) if not isinstance(v, Fraction) else rat_str(v)
                for (name, i), v in sorted(self.certificate.items())
            }
        return {
            "radius": self.radius,
            "rank": self.rank,
            "full_rank": self.full_rank,
            "surjective_on_ball": self.surjective_on_ball,
            "certificate": cert,
        }


def ball_surjectivity(tau, n: int) -> SurjectivityReport:
    """Exact rank of the slice tau_n : V^B(n) -> V^B(n-1); surjectivity of
    the slice is equivalent to injectivity of its dual, whose kernel vector
    is returned as a certificate when rank is deficient."""
    if n < 2:
        raise PreconditionError("ball surjectivity needs n >= 2")
    ctx = tau.ball_context(n)
    inner = ctx.within(n - 1)
    outer = ctx.within(n)
    rows = slice_matrix(tau, ctx, inner, outer)
    rk = linalg.rank(rows, len(outer) * tau.r, tau.field)
    full = len(inner) * tau.r
    cert = None
    if rk < full:
        # left kernel: transpose the slice and take any nullspace vector
        transposed: List[Dict[int, object]] = [dict() for _ in range(len(outer) * tau.r)]
        for i, row in enumerate(rows):
            for c, v in row.items():
                transposed[c][i] = v
        null = linalg.nullspace(transposed, full, tau.field)
        vec = null[0]
        names = [ctx.names[ctx.index[k]] for k in inner]
        cert = {
            (names[c // tau.r], c % tau.r): v for c, v in vec.items()
        }
    return SurjectivityReport(
        radius=n,
        rank=rk,
        full_rank=full,
        surjective_on_ball=rk == full,
        certificate=cert,
    )


def kernel_witness_search(tau, n: int) -> Optional[Dict[Tuple[str, int], object]]:
    """Nonzero finitely supported kernel element with support in B(n), if
    one exists: the exact nullspace of the slice with rows on B(n+1) (every
    row that touches the support) and columns on B(n)."""
    ctx = tau.ball_context(n + 2)
    support = ctx.within(n)
    rows_keys = ctx.within(n + 1)
    rows = slice_matrix(tau, ctx, rows_keys, support)
    null = linalg.nullspace(rows, len(support) * tau.r, tau.field)
    if not null:
        return None
    vec = null[0]
    names = [ctx.names[ctx.index[k]] for k in support]
    return {(names[c // tau.r], c % tau.r): v for c, v in vec.items()}


@dataclass
class PreimageReport:
    depth: int
    values: Dict[Tuple[str, int], object]  # the preimage w on B(depth)
    chain_dims: Dict[int, List[Tuple[int, int]]]  # n -> [(m, dim K_{n,m})]
    stabilized: Dict[int, bool]


def preimage_construct(tau, target: Dict, depth: int, stall: int = 4) -> PreimageReport:
    """Exact w on B(depth) with tau(w) = target on B(depth-1), selected from
    the projected affine chain so that deeper calls extend shallower ones
    once the chain has stabilized.

    target maps context names (or (name, component)) to field values; it
    must cover B(depth-1).  The affine sets L_n = tau_n^{-1}(target|B(n-1))
    are projected down as K_{n,m} = pi_{n,m}(L_m); the construction walks
    n = 2..depth choosing the canonical representative of each fiber, which
    depends only on the sets themselves, not on their presentation.
    """
    if depth < 2:
        raise PreconditionError("preimage construction needs depth >= 2")
    ctx = tau.ball_context(depth)
    fld = tau.field
    r = tau.r

    def tgt(name: str, i: int):
        if (name, i) in target:
            return target[(name, i)]
        if r == 1 and name in target:
            return target[name]
        return fld.zero

    levels: Dict[int, List] = {m: ctx.within(m) for m in range(0, depth + 1)}

    def L(m: int) -> Optional[AffineSubspace]:
        cols = levels[m]
        rows_keys = levels[m - 1]
        rows = slice_matrix(tau, ctx, rows_keys, cols)
        rhs = []
        for x in rows_keys:
            nm = ctx.names[ctx.index[x]]
            for i in range(r):
                rhs.append(tgt(nm, i))
        return affine_from_system(rows, rhs, len(cols) * r, fld)

    pos_in: Dict[int, Dict] = {
        m: {k: p for p, k in enumerate(levels[m])} for m in range(2, depth + 1)
    }

    def flat_cols(n: int, m: int) -> List[int]:
        cols: List[int] = []
        for k in levels[n]:
            p = pos_in[m][k]
            cols.extend(p * r + i for i in range(r))
        return cols

    chain_dims: Dict[int, List[Tuple[int, int]]] = {n: [] for n in range(2, depth + 1)}
    spaces: Dict[int, AffineSubspace] = {}
    for m in range(2, depth + 1):
        Lm = L(m)
        if Lm is None:
            raise TruncationError(f"no preimage at this truncation (depth {m})")
        spaces[m] = Lm
        for n in range(2, m + 1):
            chain_dims[n].append((m, Lm.project(flat_cols(n, m)).dim))

    stabilized = {
        n: len(vals) >= stall and len({d for _, d in vals[-stall:]}) == 1
        for n, vals in chain_dims.items()
    }

    # J_n = K_{n,depth}: the deepest available projection; projections
    # compose, so pi_{n,n+1}(J_{n+1}) = J_n exactly and every fiber below
    # is nonempty.
    LD = spaces[depth]
    J: Dict[int, AffineSubspace] = {
        n: LD.project(flat_cols(n, depth)) for n in range(2, depth + 1)
    }

    w = J[2].canonical_point()
    for n in range(3, depth + 1):
        fib = J[n].fiber(flat_cols(n - 1, n), w)
        if fib is None:
            raise TruncationError(f"chain selection failed at depth {n}")
        w = fib.canonical_point()

    values: Dict[Tuple[str, int], object] = {}
    for pos, k in enumerate(levels[depth]):
        nm = ctx.names[ctx.index[k]]
        for i in range(r):
            v = w.get(pos * r + i, fld.zero)
            if v != fld.zero:
                values[(nm, i)] = v
    return PreimageReport(
        depth=depth, values=values, chain_dims=chain_dims, stabilized=stabilized
    )


def apply_automaton(tau, ctx: Context, values: Dict, at: Sequence) -> Dict:
    """tau(w) evaluated at the given keys; w is a dict keyed like the
    preimage report, zero off its support."""
    fld = tau.field
    r = tau.r

    def val(nm: str, j: int):
        if (nm, j) in values:
            return values[(nm, j)]
        if r == 1 and nm in values:
            return values[nm]
        return fld.zero

    out = {}
    for x in at:
        acc = [fld.zero] * r
        for y, mat in tau.row_terms(ctx, x):
            pos = ctx.index.get(y)
            if pos is None:
                continue
            nm = ctx.names[pos]
            for j in range(r):
                v = val(nm, j)
                if v == fld.zero:
                    continue
                for i in range(r):
                    acc[i] = fld.add(acc[i], fld.mul(mat[i][j], v))
        nmx = ctx.names[ctx.index[x]]
        for i in range(r):
            out[(nmx, i)] = acc[i]
    return out


@dataclass
class MeanDimensionReport:
    rows: List[Dict[str, object]]

    def to_jsonable(self):
        return {"rows": self.rows}


def mean_dimension_estimate(tau: GroupAutomaton, n_max: int) -> MeanDimensionReport:
    """Exact per-box data for mdim: dim tau(V^G)_{Omega_n} as the rank of
    the slice with rows Omega_n and columns Omega_n^+, the same for the
    transpose, and the one-step gap dim X_{Omega_n^+} - dim X_{Omega_n}
    together with its boundary bound r * |boundary Omega_n|."""
    if not isinstance(tau.model, FreeAbelian):
        raise UnsupportedFeatureError("mean dimension boxes need a free abelian group")
    taut = tau.transpose()
    out = []
    for n in range(1, n_max + 1):
        ctx = tau.box_context(n + 1)  # covers Omega_n, Omega_n^+ and one more layer


        d = tau.model.d
        box = sorted(
            (tuple(p) for p in itertools.product(range(-n, n + 1), repeat=d)),
            key=tau.model.key,
        )
        box_set = set(box)
        gens = tau.symmetrized_generators()

        def closure(ks):
            outp = set(ks)
            for g in ks:
                for s in gens:
                    outp.add(tau.model.mul(g, s))
            return sorted(outp, key=tau.model.key)

        box_plus = closure(box)
        box_plus2 = closure(box_plus)
        data: Dict[str, object] = {"n": n, "box": len(box), "box_plus": len(box_plus)}
        for label, t in (("", tau), ("transpose_", taut)):
            rk = linalg.rank(
                slice_matrix(t, ctx, box, box_plus), len(box_plus) * t.r, t.field
            )
            rk_plus = linalg.rank(
                slice_matrix(t, ctx, box_plus, box_plus2), len(box_plus2) * t.r, t.field
            )
            data[label + "dim"] = rk
            data[label + "ratio"] = Fraction(rk, len(box))
            data[label + "gap"] = rk_plus - rk
        data["boundary"] = len(box_plus) - len(box)
        data["gap_bound"] = tau.r * (len(box_plus) - len(box))
        out.append(data)
    return MeanDimensionReport(rows=out)


@dataclass
class PreinjReport:
    radius: int
    witness: Optional[Dict]
    transpose_witness: Optional[Dict]

    @property
    def agree(self) -> bool:
        return (self.witness is None) == (self.transpose_witness is None)

    @property
    def conclusive(self) -> bool:
        # a finite radius can only certify the presence of witnesses
        return self.witness is not None and self.transpose_witness is not None


def preinj_equivalence_check(tau, n: int) -> PreinjReport:
    """Runs the witness search for tau and its transpose at the same radius;
    disagreement at finite radius is inconclusive, never a refutation."""
    return PreinjReport(
        radius=n,
        witness=kernel_witness_search(tau, n),
        transpose_witness=kernel_witness_search(tau.transpose(), n),
    )
