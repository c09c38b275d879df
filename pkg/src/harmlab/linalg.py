"""Exact sparse linear algebra over the rationals and prime fields.

Rows are dicts mapping column index to a nonzero field element.  Two
elimination strategies are provided: a sparsest-row pivot order (fast, used
for solving, ranks and witness searches) and strict first-column pivoting
followed by full reduction, which yields the classical reduced row echelon
form.  The RREF is unique per row space, so anything derived from it
(particular solutions with free variables set to zero, nullspace bases,
canonical representatives of affine subspaces) is independent of how the
input system was presented.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import InternalInvariantError

Row = Dict[int, object]


class RationalField:
    """Field of exact rationals, elements are fractions.Fraction."""

    name = "QQ"
    zero = Fraction(0)
    one = Fraction(1)

    @staticmethod
    def of(n) -> Fraction:
        return Fraction(n)

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def inv(a):
        return 1 / Fraction(a)

    def __repr__(self):
        return "QQ"


class PrimeField:
    """Prime field GF(p), elements are ints in [0, p)."""

    def __init__(self, p: int):
        if p < 2 or any(p % k == 0 for k in range(2, int(p**0.5) + 1)):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p
        self.name = f"GF({p})"
        self.zero = 0
        self.one = 1 % p

    def of(self, n) -> int:
        return int(n) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero in prime field")
        return pow(a, self.p - 2, self.p)

    def __repr__(self):
        return self.name


QQ = RationalField()
GF2 = PrimeField(2)


def _axpy(field, target: Row, coef, source: Row) -> None:
    """target += coef * source, dropping zeros."""
    for c, v in source.items():
        w = field.add(target.get(c, field.zero), field.mul(coef, v))
        if w == field.zero:
            target.pop(c, None)
        else:
            target[c] = w


@dataclass
class Echelon:
    """Result of an elimination pass.

    pivot_seq lists (pivot column, normalized row, rhs value) in elimination
    order; in forward mode each row may still involve later pivot columns,
    so solutions are read off by back-substitution in reverse order.  In
    ordered mode the rows have been fully reduced and form the RREF.
    """

    field: object
    ncols: int
    pivot_seq: List[Tuple[int, Row, object]]
    has_rhs: bool
    inconsistent: bool

    @property
    def rank(self) -> int:
        return len(self.pivot_seq)

    def pivot_columns(self) -> List[int]:
        return [c for c, _, _ in self.pivot_seq]

    def free_columns(self) -> List[int]:
        piv = set(self.pivot_columns())
        return [c for c in range(self.ncols) if c not in piv]

    def _back_substitute(self, assign: Row, homogeneous: bool) -> Row:
        fld = self.field
        sol = dict(assign)
        for col, row, rv in reversed(self.pivot_seq):
            acc = fld.zero if homogeneous else rv
            for k, v in row.items():
                if k == col:
                    continue
                xv = sol.get(k)
                if xv is not None:
                    acc = fld.sub(acc, fld.mul(v, xv))
            if acc == fld.zero:
                sol.pop(col, None)
            else:
                sol[col] = acc
        return sol

    def particular_solution(self) -> Optional[Row]:
        """Canonical solution with all free variables set to zero."""
        if self.inconsistent:
            return None
        if not self.has_rhs:
            raise InternalInvariantError("no right-hand side was eliminated")
        return self._back_substitute({}, homogeneous=False)

    def nullspace(self) -> List[Row]:
        """Kernel basis, one vector per free column, in column order."""
        return [
            self._back_substitute({f: self.field.one}, homogeneous=True)
            for f in self.free_columns()
        ]


def eliminate(
    rows: Sequence[Row],
    ncols: int,
    field=QQ,
    rhs: Optional[Sequence[object]] = None,
    ordered: bool = False,
    rhs_width: int = 0,
) -> Echelon:
    """Sparse Gaussian elimination.

    ordered=True pivots on the first remaining column and reduces fully
    (unique RREF); ordered=False pivots on the sparsest remaining row to
    limit fill and leaves a triangular pivot sequence.  With rhs_width > 0
    the rhs entries are tuples of that many simultaneous right-hand sides,
    eliminated in one pass.
    """
    if rhs_width:
        zero_b = (field.zero,) * rhs_width

        def bmul(c, bb):
            return tuple(field.mul(c, x) for x in bb)

        def bsub(aa, bb):
            return tuple(field.sub(x, y) for x, y in zip(aa, bb))

        def bzero(bb):
            return all(x == field.zero for x in bb)

    else:
        zero_b = field.zero
        bmul = field.mul
        bsub = field.sub

        def bzero(bb):
            return bb == field.zero

    work: List[Row] = [dict(r) for r in rows]
    b: List[object] = list(rhs) if rhs is not None else [zero_b] * len(work)
    has_rhs = rhs is not None
    col_rows: Dict[int, set] = {}
    for i, r in enumerate(work):
        for c in r:
            col_rows.setdefault(c, set()).add(i)

    active = set(range(len(work)))
    pivot_seq: List[Tuple[int, int]] = []  # (col, row index)

    heap: List[Tuple[int, int]] = []
    if not ordered:
        heap = [(len(r), i) for i, r in enumerate(work) if r]
        heapq.heapify(heap)

    def next_ordered() -> Optional[Tuple[int, int]]:
        live_cols = [c for c, s in col_rows.items() if any(i in active for i in s)]
        if not live_cols:
            return None
        c = min(live_cols)
        i = min(i for i in col_rows[c] if i in active)
        return i, c

    def next_sparse() -> Optional[Tuple[int, int]]:
        while heap:
            size, i = heapq.heappop(heap)
            if i not in active or not work[i] or len(work[i]) != size:
                continue
            best = None
            for c in work[i]:
                cnt = sum(1 for j in col_rows[c] if j in active)
                key = (cnt, c)
                if best is None or key < best:
                    best = key
            return i, best[1]
        return None

    while True:
        picked = next_ordered() if ordered else next_sparse()
        if picked is None:
            break
        i, c = picked
        row = work[i]
        pval = row[c]
        if pval != field.one:
            inv = field.inv(pval)
            work[i] = row = {k: field.mul(inv, v) for k, v in row.items()}
            b[i] = bmul(inv, b[i])
        for j in sorted(col_rows[c]):
            if j == i or j not in active:
                continue
            other = work[j]
            coef = other.get(c)
            if coef is None:
                continue
            for k in row:
                col_rows.setdefault(k, set()).add(j)
            _axpy(field, other, field.neg(coef), row)
            for k in row:
                if k not in other:
                    col_rows[k].discard(j)
            b[j] = bsub(b[j], bmul(coef, b[i]))
            if not ordered and other:
                heapq.heappush(heap, (len(other), j))
        active.discard(i)
        pivot_seq.append((c, i))

    inconsistent = has_rhs and any(
        not work[i] and not bzero(b[i]) for i in active
    )

    if ordered:
        # Jordan post-pass: reduce earlier pivot rows against later ones.
        for idx in range(len(pivot_seq) - 1, -1, -1):
            c, i = pivot_seq[idx]
            row = work[i]
            for jdx in range(idx):
                _, j = pivot_seq[jdx]
                coef = work[j].get(c)
                if coef is not None:
                    _axpy(field, work[j], field.neg(coef), row)
                    b[j] = bsub(b[j], bmul(coef, b[i]))

    seq = [(c, work[i], b[i]) for c, i in pivot_seq]
    return Echelon(
        field=field, ncols=ncols, pivot_seq=seq, has_rhs=has_rhs, inconsistent=inconsistent
    )


def rank(rows: Sequence[Row], ncols: int, field=QQ) -> int:
    return eliminate(rows, ncols, field).rank


def solve(
    rows: Sequence[Row],
    rhs: Sequence[object],
    ncols: int,
    field=QQ,
    require_unique: bool = False,
) -> Optional[Row]:
    """One exact solution of rows * x = rhs, or None if inconsistent.

    With require_unique the system must pin every column; a free column
    raises InternalInvariantError because callers only request uniqueness
    when it is guaranteed by the mathematics.
    """
    ech = eliminate(rows, ncols, field, rhs=rhs)
    if ech.inconsistent:
        return None
    if require_unique and ech.rank < ncols:
        raise InternalInvariantError(
            f"system expected to be nonsingular has {ncols - ech.rank} free columns"
        )
    return ech.particular_solution()


def solve_many(
    rows: Sequence[Row],
    rhs_columns: Sequence[Sequence[object]],
    ncols: int,
    field=QQ,
    require_unique: bool = False,
) -> Optional[List[Row]]:
    """Solutions for several right-hand sides with a single elimination.

    rhs_columns[k] is the k-th right-hand side (length = number of rows);
    returns one solution per column, or None if any system is inconsistent.
    """
    width = len(rhs_columns)
    packed = [tuple(col[i] for col in rhs_columns) for i in range(len(rows))]
    ech = eliminate(rows, ncols, field, rhs=packed, rhs_width=width)
    if ech.inconsistent:
        return None
    if require_unique and ech.rank < ncols:
        raise InternalInvariantError(
            f"system expected to be nonsingular has {ncols - ech.rank} free columns"
        )
    out = []
    for k in range(width):
        view = Echelon(
            field=field,
            ncols=ncols,
            pivot_seq=[(c, row, rv[k]) for c, row, rv in ech.pivot_seq],
            has_rhs=True,
            inconsistent=False,
        )
        out.append(view.particular_solution())
    return out


def nullspace(rows: Sequence[Row], ncols: int, field=QQ, ordered: bool = False) -> List[Row]:
    return eliminate(rows, ncols, field, ordered=ordered).nullspace()


def residual(rows: Sequence[Row], x: Row, rhs: Sequence[object], field=QQ):
    """rows*x - rhs as a list; exact."""
    out = []
    for r, bv in zip(rows, rhs):
        acc = field.neg(bv)
        for c, v in r.items():
            acc = field.add(acc, field.mul(v, x.get(c, field.zero)))
        out.append(acc)
    return out


class AffineSubspace:
    """Affine subspace of field^ncols in canonical form.

    Canonical form: `basis` is the RREF basis (over the fixed column order)
    of the direction space, and `point` has zero coordinates in all pivot
    columns of that basis.  Two AffineSubspace objects describing the same
    set therefore compare equal, whatever presentation they came from.
    """

    def __init__(self, fld, ncols: int, point: Row, basis: Iterable[Row]):
        self.field = fld
        self.ncols = ncols
        ech = eliminate(list(basis), ncols, fld, ordered=True)
        rows = {c: row for c, row, _ in ech.pivot_seq}
        self._pivot_cols = sorted(rows)
        self.basis = [dict(rows[c]) for c in self._pivot_cols]
        pt = dict(point)
        for c, brow in zip(self._pivot_cols, self.basis):
            coef = pt.get(c)
            if coef is not None:
                _axpy(fld, pt, fld.neg(coef), brow)
        self.point = {c: v for c, v in pt.items() if v != fld.zero}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AffineSubspace)
            and self.ncols == other.ncols
            and self.point == other.point
            and self.basis == other.basis
        )

    def canonical_point(self) -> Row:
        return dict(self.point)

    def contains(self, vec: Row) -> bool:
        fld = self.field
        diff = {c: fld.neg(v) for c, v in self.point.items()}
        for c, v in vec.items():
            w = fld.add(diff.get(c, fld.zero), v)
            if w == fld.zero:
                diff.pop(c, None)
            else:
                diff[c] = w
        for c, brow in zip(self._pivot_cols, self.basis):
            coef = diff.get(c)
            if coef is not None:
                _axpy(fld, diff, fld.neg(coef), brow)
        return not diff

    def project(self, cols: Sequence[int]) -> "AffineSubspace":
        """Image under coordinate projection; cols[i] becomes coordinate i."""
        pos = {c: i for i, c in enumerate(cols)}
        new_point = {pos[c]: v for c, v in self.point.items() if c in pos}
        new_basis = []
        for vec in self.basis:
            pv = {pos[c]: v for c, v in vec.items() if c in pos}
            if pv:
                new_basis.append(pv)
        return AffineSubspace(self.field, len(cols), new_point, new_basis)

    def fiber(self, cols: Sequence[int], values: Row) -> Optional["AffineSubspace"]:
        """Subset whose restriction to `cols` equals `values` (keyed by
        position in `cols`), or None if empty."""
        fld = self.field
        nb = len(self.basis)
        rows = []
        rhs = []
        for i, c in enumerate(cols):
            row = {}
            for j, vec in enumerate(self.basis):
                coef = vec.get(c)
                if coef is not None:
                    row[j] = coef
            rows.append(row)
            rhs.append(fld.sub(values.get(i, fld.zero), self.point.get(c, fld.zero)))
        ech = eliminate(rows, nb, fld, rhs=rhs, ordered=True)
        if ech.inconsistent:
            return None
        t0 = ech.particular_solution()
        point = dict(self.point)
        for j, coef in t0.items():
            _axpy(fld, point, coef, self.basis[j])
        new_basis = []
        for tvec in ech.nullspace():
            vec: Row = {}
            for j, coef in tvec.items():
                _axpy(fld, vec, coef, self.basis[j])
            if vec:
                new_basis.append(vec)
        return AffineSubspace(fld, self.ncols, point, new_basis)


def affine_from_system(
    rows: Sequence[Row], rhs: Sequence[object], ncols: int, fld=QQ
) -> Optional[AffineSubspace]:
    """Solution set of rows*x = rhs as an AffineSubspace, None if empty."""
    ech = eliminate(rows, ncols, fld, rhs=rhs, ordered=True)
    if ech.inconsistent:
        return None
    return AffineSubspace(fld, ncols, ech.particular_solution(), ech.nullspace())
