"""Exact random-walk computations: n-step distributions, hitting-time
distributions, absorbing races, taboo probabilities, and the transience
partial-sum bounds.

Two propagation engines: a graph engine (transition w_xy / deg x plus an
optional hold probability for lazy measures) that accounts exactly for mass
escaping a truncation frontier, and a group engine that propagates sparse
dictionaries of normal forms and is always exact because the support grows
with the walk itself.

Quantities of the form P[..., T < infinity] on truncations are reported as
intervals [lower, upper]: the lower bound treats the frontier as killing,
and the upper bound re-admits escaped mass weighted by any exact re-entry
certificates the graph carries (1 when it carries none).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from . import linalg
from .errors import PreconditionError, TruncationError, UnsupportedFeatureError
from .graphs import WeightedGraph
from .groups import (
    CayleyFamily,
    Element,
    FreeAbelian,
    GroupModel,
    SymmetricMeasure,
    Transversal,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise PreconditionError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other: "Interval") -> "Interval":
        vals = [a * b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(vals), max(vals))

    def divide(self, other: "Interval") -> "Interval":
        if other.lo <= 0:
            raise PreconditionError("interval division needs a positive denominator")
        vals = [a / b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(max(ZERO, min(vals)), min(ONE, max(vals)))

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def to_jsonable(self):
        from .graphs import rat_str

        return {"lo": rat_str(self.lo), "hi": rat_str(self.hi)}


def point_interval(x: Fraction) -> Interval:
    return Interval(x, x)


@dataclass
class WalkDistribution:
    """Exact distribution after a number of steps; mass frozen on absorbing
    states is kept per state, escaped mass is pooled."""

    probs: Dict[object, Fraction]
    absorbed: Dict[object, Fraction]
    escaped: Fraction
    steps: int

    def total(self) -> Fraction:
        return (
            sum(self.probs.values(), ZERO)
            + sum(self.absorbed.values(), ZERO)
            + self.escaped
        )


# -- graph engine ---------------------------------------------------------------


def _graph_step(
    graph: WeightedGraph,
    probs: Dict[int, Fraction],
    absorbing: FrozenSet[int],
    frontier: FrozenSet[int],
) -> Tuple[Dict[int, Fraction], Dict[int, Fraction], Fraction]:
    """One exact step; returns (moving mass, newly absorbed, newly escaped)."""
    hold = graph.hold
    nxt: Dict[int, Fraction] = {}
    newly_abs: Dict[int, Fraction] = {}
    escaped = ZERO
    for v, p in probs.items():
        if p == 0:
            continue
        if hold:
            nxt[v] = nxt.get(v, ZERO) + hold * p
        deg = graph.degree(v)
        scale = (ONE - hold) / deg
        for w, wt in graph.neighbors(v).items():
            q = p * wt * scale
            if w in absorbing:
                newly_abs[w] = newly_abs.get(w, ZERO) + q
            elif w in frontier:
                escaped += q
            else:
                nxt[w] = nxt.get(w, ZERO) + q
    return nxt, newly_abs, escaped


def n_step_distribution(
    graph: WeightedGraph,
    start: str,
    n: int,
    absorbing: Iterable[str] = (),
    frontier_policy: str = "absorb",
) -> WalkDistribution:
    """Exact n-step distribution keyed by vertex id; with an absorbing set,
    mass freezes on first entry, so the per-step absorbed increment at y is
    P_start[T_y = k]."""
    if n < 0:
        raise PreconditionError("step count must be >= 0")
    if start not in graph.index:
        raise PreconditionError(f"unknown start vertex {start!r}")
    absorbing_idx = frozenset(graph.index[a] for a in absorbing)
    frontier = frozenset(graph.frontier()) - absorbing_idx
    s = graph.index[start]
    probs = {s: ONE}
    absorbed: Dict[int, Fraction] = {}
    escaped = ZERO
    if s in absorbing_idx:
        return WalkDistribution({}, {graph.ids[s]: ONE}, ZERO, 0)
    if s in frontier:
        raise PreconditionError("start lies on the truncation frontier")
    for step in range(n):
        probs, newly, esc = _graph_step(graph, probs, absorbing_idx, frontier)
        if esc and frontier_policy == "error":
            raise TruncationError(
                f"walk reached the truncation frontier at step {step + 1}"
            )
        for v, q in newly.items():
            absorbed[v] = absorbed.get(v, ZERO) + q
        escaped += esc
    return WalkDistribution(
        probs={graph.ids[v]: p for v, p in probs.items() if p != 0},
        absorbed={graph.ids[v]: p for v, p in absorbed.items()},
        escaped=escaped,
        steps=n,
    )


@dataclass
class HittingReport:
    values: List[Fraction]  # values[k] = P_x[T_y = k], k = 0..n_max
    escaped: Fraction
    exact: bool

    def partial_sum(self) -> Fraction:
        return sum(self.values, ZERO)


def hitting_time_distribution(
    graph: WeightedGraph, x: str, y: str, n_max: int
) -> HittingReport:
    """Exact P_x[T_y = n] for n <= n_max via absorbing propagation; exact is
    False when mass escaped the truncation, in which case the values are
    still exact lower bounds and their defects are bounded by `escaped`."""
    if x == y:
        return HittingReport([ONE] + [ZERO] * n_max, ZERO, True)
    gi = graph.index
    if x not in gi or y not in gi:
        raise PreconditionError("hitting endpoints must be vertices")
    yi = frozenset({gi[y]})
    frontier = frozenset(graph.frontier()) - yi
    probs = {gi[x]: ONE}
    if gi[x] in frontier:
        raise PreconditionError("start lies on the truncation frontier")
    values = [ZERO]
    escaped = ZERO
    for _ in range(n_max):
        probs, newly, esc = _graph_step(graph, probs, yi, frontier)
        values.append(newly.get(gi[y], ZERO))
        escaped += esc
    return HittingReport(values=values, escaped=escaped, exact=escaped == 0)


# -- absorbing solves --------------------------------------------------------------


def _absorption_solve_many(
    graph: WeightedGraph,
    boundaries: Sequence[Dict[int, Fraction]],
    transient: Set[int],
) -> List[Dict[int, Fraction]]:
    """Exact solutions of u = P u on the transient states for several
    absorbing boundary-value assignments, one elimination pass (hold
    cancels in the stationarity equations)."""
    order = sorted(transient)
    col = {v: i for i, v in enumerate(order)}
    rows = []
    rhs_cols: List[List[Fraction]] = [[] for _ in boundaries]
    for v in order:
        deg = graph.degree(v)
        row = {col[v]: ONE}
        bs = [ZERO] * len(boundaries)
        for w, wt in graph.neighbors(v).items():
            coef = wt / deg
            if w in col:
                row[col[w]] = row.get(col[w], ZERO) - coef
            else:
                for k, boundary in enumerate(boundaries):
                    if w not in boundary:
                        raise PreconditionError(
                            f"state {graph.ids[w]!r} is neither transient nor absorbing"
                        )
                    bs[k] += coef * boundary[w]
        rows.append(row)
        for k, b in enumerate(bs):
            rhs_cols[k].append(b)
    sols = linalg.solve_many(rows, rhs_cols, len(order), require_unique=True)
    return [{v: sol.get(col[v], ZERO) for v in order} for sol in sols]


def _absorption_solve(
    graph: WeightedGraph, boundary: Dict[int, Fraction], transient: Set[int]
) -> Dict[int, Fraction]:
    return _absorption_solve_many(graph, [boundary], transient)[0]


def _reachability_check(graph: WeightedGraph, transient: Set[int], targets: Set[int]):
    reached = set(targets)
    frontier_set = set(targets)
    while frontier_set:
        nxt = set()
        for v in frontier_set:
            for w in graph.neighbors(v):
                if w in transient and w not in reached:
                    reached.add(w)
                    nxt.add(w)
        frontier_set = nxt
    missing = transient - reached
    if missing:
        raise PreconditionError(
            "states cannot reach the absorbing sets: "
            + ", ".join(sorted(graph.ids[v] for v in sorted(missing)[:5]))
        )


def race(graph: WeightedGraph, start: str, A: Iterable[str], B: Iterable[str]) -> Fraction:
    """Exact P_start[T_A < T_B] on a finite graph whose frontier (if any) is
    contained in the declared absorbing sets."""
    Ai = {graph.index[a] for a in A}
    Bi = {graph.index[b] for b in B}
    if Ai & Bi:
        raise PreconditionError("absorbing sets must be disjoint")
    s = graph.index[start]
    if s in Ai:
        return ONE
    if s in Bi:
        return ZERO
    stray = graph.frontier() - Ai - Bi
    if stray:
        raise PreconditionError(
            "frontier vertices outside the absorbing sets: "
            + ", ".join(sorted(graph.ids[v] for v in sorted(stray)[:5]))
        )
    transient = set(range(graph.n)) - Ai - Bi
    _reachability_check(graph, transient, Ai | Bi)
    boundary = {v: ONE for v in Ai}
    boundary.update({v: ZERO for v in Bi})
    u = _absorption_solve(graph, boundary, transient)
    return u[s]


def _hit_interval_maps(
    graph: WeightedGraph, targets: Set[int]
) -> Tuple[Dict[int, Fraction], Dict[int, Fraction]]:
    """(lower map, escape-slack map) for P[T_targets < infinity] at every
    transient state, one elimination."""
    frontier = set(graph.frontier()) - targets
    transient = set(range(graph.n)) - targets - frontier
    boundary = {v: ONE for v in targets}
    boundary.update({v: ZERO for v in frontier})
    bounds_ok = graph.core is not None and all(
        graph.ids[t] in graph.core for t in targets
    )
    slack_boundary = {v: ZERO for v in targets}
    for v in frontier:
        b = graph.escape_bounds.get(graph.ids[v], ONE) if bounds_ok else ONE
        slack_boundary[v] = min(ONE, b)
    lower, slack = _absorption_solve_many(graph, [boundary, slack_boundary], transient)
    return lower, slack


def hit_probability_interval(
    graph: WeightedGraph, start: str, targets: Iterable[str]
) -> Interval:
    """Interval for P_start[T_targets < infinity] on a truncation: the lower
    bound kills escaped mass, the upper bound re-admits it weighted by the
    graph's exact per-frontier re-entry certificates (1 without any)."""
    Ti = {graph.index[t] for t in targets}
    s = graph.index[start]
    if s in Ti:
        return point_interval(ONE)
    lower, slack = _hit_interval_maps(graph, Ti)
    if s not in lower:
        raise PreconditionError("start must be a transient state")
    return Interval(lower[s], min(ONE, lower[s] + slack[s]))


# -- group engine -------------------------------------------------------------------


def group_n_step(
    model: GroupModel,
    measure: SymmetricMeasure,
    start: Element,
    n: int,
    absorbing: FrozenSet[Element] = frozenset(),
) -> WalkDistribution:
    """Exact mu-walk propagation over normal forms; never truncated."""
    probs: Dict[Element, Fraction] = {start: ONE}
    absorbed: Dict[Element, Fraction] = {}
    if start in absorbing:
        return WalkDistribution({}, {start: ONE}, ZERO, 0)
    for _ in range(n):
        nxt: Dict[Element, Fraction] = {}
        for g, p in probs.items():
            for s, w in measure.support:
                h = model.mul(g, s)
                q = p * w
                if h in absorbing:
                    absorbed[h] = absorbed.get(h, ZERO) + q
                else:
                    nxt[h] = nxt.get(h, ZERO) + q
        probs = nxt
    return WalkDistribution(probs=probs, absorbed=absorbed, escaped=ZERO, steps=n)


def return_probability_free_abelian(d: int, n: int) -> Fraction:
    """P_e[X_n = e] for the uniform nearest-neighbour walk on Z^d, via the
    exact multinomial count of balanced step patterns."""
    if n % 2 == 1:
        return ZERO
    half = n // 2
    total = 0
    fact = math.factorial

    def patterns(remaining: int, dims: int):
        if dims == 1:
            yield (remaining,)
            return
        for k in range(remaining + 1):
            for rest in patterns(remaining - k, dims - 1):
                yield (k,) + rest

    for ks in patterns(half, d):
        ways = fact(n)
        for k in ks:
            ways //= fact(k) * fact(k)
        total += ways
    return Fraction(total, (2 * d) ** n)


@dataclass
class TransienceReport:
    d: int
    n_max: int
    return_probs: List[Tuple[int, Fraction]]
    partial_sums: List[Tuple[int, Fraction]]
    last_increment: Fraction

    def to_jsonable(self):
        from .graphs import rat_str

        return {
            "d": self.d,
            "n_max": self.n_max,
            "return_probs": [[n, rat_str(p)] for n, p in self.return_probs],
            "partial_sums": [[n, rat_str(p)] for n, p in self.partial_sums],
            "last_increment": rat_str(self.last_increment),
            "note": "partial sums only; no limit claimed",
        }


def transience_partial_sums(d: int, n_max: int) -> TransienceReport:
    """Exact partial sums of the expected visit count E_e[R_e] =
    sum_n P_e[X_n = e] on Z^d, d <= 3."""
    if d > 3:
        raise PreconditionError("return-probability formula kept to d <= 3")
    probs = [(n, return_probability_free_abelian(d, n)) for n in range(0, n_max + 1, 2)]
    partial = []
    acc = ZERO
    for n, p in probs:
        acc += p
        partial.append((n, acc))
    last_inc = probs[-1][1]
    return TransienceReport(d, n_max, probs, partial, last_inc)


def hitting_bound_check(d: int, x: Element, y: Element, n_max: int) -> Dict[str, object]:
    """Exact P_x[T_y <= N] against the even-return-sum bound
    2 * sum_{n >= d(x,y)-1, n even, n <= N} P_e[X_n = e]."""
    model = FreeAbelian(d)
    from .groups import standard_measure

    mu = standard_measure(model)
    dist = sum(abs(a - b) for a, b in zip(x, y))
    wd = group_n_step(model, mu, x, n_max, absorbing=frozenset({y}))
    lhs = sum(wd.absorbed.values(), ZERO)
    rhs = 2 * sum(
        (return_probability_free_abelian(d, n) for n in range(max(0, dist - 1), n_max + 1)),
        ZERO,
    )
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs, "distance": dist}


# -- vertex-transitive checks ---------------------------------------------------------


def check_offdiag(
    model: GroupModel,
    measure: SymmetricMeasure,
    n_max: int,
    pair_radius: int,
) -> Dict[str, object]:
    """Lemma-style off-diagonal dominance on a Cayley structure: for all
    even n <= n_max and all z in B(pair_radius), P_e[X_n = z] <= P_e[X_n = e]
    exactly.  Translation invariance turns the all-pairs statement into a
    single propagation from the identity."""
    e = model.identity()
    probs: Dict[Element, Fraction] = {e: ONE}
    checked = 0
    worst: Optional[Tuple[int, str, Fraction, Fraction]] = None
    ok = True
    from .groups import word_ball_oracle

    ball = word_ball_oracle(model, [s for s, _ in measure.support], pair_radius)
    for n in range(1, n_max + 1):
        nxt: Dict[Element, Fraction] = {}
        for g, p in probs.items():
            for s, w in measure.support:
                h = model.mul(g, s)
                nxt[h] = nxt.get(h, ZERO) + p * w
        probs = nxt
        if n % 2 == 0:
            pe = probs.get(e, ZERO)
            for z in ball:
                pz = probs.get(z, ZERO)
                checked += 1
                if pz > pe:
                    ok = False
                    worst = (n, model.name(z), pz, pe)
    return {"holds": ok, "checked": checked, "violation": worst, "n_max": n_max}


def check_offdiag_graph(graph: WeightedGraph, n_max: int) -> Dict[str, object]:
    """Per-pair version for finite vertex-transitive graphs (cycles and
    other gallery instances)."""
    if not graph.vertex_transitive:
        raise PreconditionError("off-diagonal check needs transitivity metadata")
    if graph.frontier():
        raise PreconditionError("off-diagonal graph check needs a complete graph")
    ok = True
    checked = 0
    for x in range(graph.n):
        probs = {x: ONE}
        for n in range(1, n_max + 1):
            probs, _, _ = _graph_step(graph, probs, frozenset(), frozenset())
            if n % 2 == 0:
                pxx = probs.get(x, ZERO)
                for y in range(graph.n):
                    checked += 1
                    if probs.get(y, ZERO) > pxx:
                        ok = False
    return {"holds": ok, "checked": checked, "n_max": n_max}


def taboo_loop_symmetry(
    graph: WeightedGraph, x: str, y: str, n_max: int
) -> Dict[str, object]:
    """Exact u_r and v_r symmetry: loops at x avoiding y match loops at y
    avoiding x, and the x->y first-passage-without-returns probabilities
    match their reverses, for every r <= n_max."""
    if not graph.vertex_transitive:
        raise PreconditionError("taboo symmetry needs transitivity metadata")
    xi, yi = graph.index[x], graph.index[y]

    def taboo_loops(a: int, avoid: int) -> List[Fraction]:
        # u_r = P_a[X_r = a, X_i != avoid for 0 < i < r]
        out = [ONE]
        probs = {a: ONE}
        frontier = frozenset(graph.frontier())
        for r in range(1, n_max + 1):
            if frontier & set(probs):
                raise TruncationError(f"taboo propagation hit the frontier at step {r}")
            probs, _, _ = _graph_step(graph, probs, frozenset({avoid}), frozenset())
            probs.pop(avoid, None)
            out.append(probs.get(a, ZERO))
        return out

    def first_passage(a: int, b: int) -> List[Fraction]:
        # v_r = P_a[X_r = b, X_i not in {a, b} for 0 < i < r]
        out = [ZERO]
        probs = {a: ONE}
        frontier = frozenset(graph.frontier())
        for r in range(1, n_max + 1):
            if frontier & set(probs):
                raise TruncationError(f"taboo propagation hit the frontier at step {r}")
            probs, _, _ = _graph_step(graph, probs, frozenset(), frozenset())
            out.append(probs.get(b, ZERO))
            probs.pop(a, None)
            probs.pop(b, None)
        return out

    u_x = taboo_loops(xi, yi)
    u_y = taboo_loops(yi, xi)
    v_xy = first_passage(xi, yi)
    v_yx = first_passage(yi, xi)
    return {
        "u_equal": u_x == u_y,
        "v_equal": v_xy == v_yx,
        "u": u_x,
        "v": v_xy,
        "n_max": n_max,
    }


# -- level races on virtually cyclic groups -------------------------------------------


def zeta_band(
    model: GroupModel,
    measure: SymmetricMeasure,
    lo: int,
    hi: int,
    start: Element,
) -> Tuple[WeightedGraph, List[str], List[str]]:
    """Finite truncation of (G, mu) between the zeta levels lo and hi:
    states with lo < zeta < hi are transient, states first reached at
    zeta >= hi (resp. <= lo) are absorbing; returns (graph, HIGH, LOW)."""
    tr = Transversal.standard(model)
    if not lo < tr.zeta(start) < hi:
        raise PreconditionError("start must lie strictly inside the band")
    seen = {start}
    order = [start]
    queue = [start]
    while queue:
        g = queue.pop()
        if not lo < tr.zeta(g) < hi:
            continue
        for s, _w in measure.moving_support():
            h = model.mul(g, s)
            if h not in seen:
                seen.add(h)
                order.append(h)
                queue.append(h)
    order.sort(key=model.key)
    ids = [model.name(g) for g in order]
    index = {g: i for i, g in enumerate(order)}
    edge_weights: Dict[Tuple[int, int], Fraction] = {}
    for g in order:
        if not lo < tr.zeta(g) < hi:
            continue
        for s, w in measure.moving_support():
            h = model.mul(g, s)
            key = (min(index[g], index[h]), max(index[g], index[h]))
            edge_weights[key] = w  # symmetric measure gives the same w from h
    edges = [(ids[i], ids[j], w) for (i, j), w in sorted(edge_weights.items())]
    graph = WeightedGraph(ids, edges, model.name(start), radius=None, hold=measure.hold)
    high = [model.name(g) for g in order if tr.zeta(g) >= hi]
    low = [model.name(g) for g in order if tr.zeta(g) <= lo]
    return graph, high, low


def level_race(
    model: GroupModel,
    measure: SymmetricMeasure,
    m: int,
    R: int,
    start: Element,
) -> Fraction:
    """Exact P_start[T^+_{m+R} < T^-_m]: the zeta coordinate reaches m+R
    before dropping to m."""
    graph, high, low = zeta_band(model, measure, m, m + R, start)
    return race(graph, model.name(start), high, low)


# -- sandwiched hitting relations on transient Cayley balls ----------------------------


def _three_way_maps(graph: WeightedGraph, x: str, y: str):
    """Maps v -> (P_v[T_x < min(T_y, T_F)], P_v[T_y < min(T_x, T_F)]) over
    the transient states, one elimination."""
    xi, yi = graph.index[x], graph.index[y]
    frontier = set(graph.frontier()) - {xi, yi}
    transient = set(range(graph.n)) - {xi, yi} - frontier
    bx = {xi: ONE, yi: ZERO}
    bx.update({v: ZERO for v in frontier})
    by = {xi: ZERO, yi: ONE}
    by.update({v: ZERO for v in frontier})
    return _absorption_solve_many(graph, [bx, by], transient)


def _three_way(graph: WeightedGraph, start: str, x: str, y: str):
    """(P[T_x < min(T_y, T_F)], P[T_y < min(T_x, T_F)], escape) from start."""
    s = graph.index[start]
    if s == graph.index[x]:
        return ONE, ZERO, ZERO
    if s == graph.index[y]:
        return ZERO, ONE, ZERO
    mx, my = _three_way_maps(graph, x, y)
    return mx[s], my[s], ONE - mx[s] - my[s]


def _conditioned_race_interval(ax: Fraction, ay: Fraction, esc: Fraction) -> Interval:
    """P[T_x < T_y | min < infinity] sandwiched by the escape mass."""
    num = Interval(ax, ax + esc)
    den = Interval(ax + ay, ax + ay + esc)
    return num.divide(den)


def hits_first_relation(
    model: GroupModel,
    measure: SymmetricMeasure,
    x: Element,
    y: Element,
    depth: int,
) -> Dict[str, object]:
    """Sandwich test of the first-passage decomposition
    p(y) = f(y) + f(x) p(x,y) (and its mirror) on a transient Cayley ball,
    where f is the conditioned race from the identity, p the conditioned
    eventual-hit probability, and p(x,y) the x-to-y hit probability.  All
    quantities are truncation intervals; the exact complementary identity
    f(x) + f(y) = 1 holds for the race conditioned on absorption."""
    from .groups import cayley_ball

    if x == y:
        raise PreconditionError("the decomposition needs distinct targets")
    graph, _ = cayley_ball(model, measure, depth)
    e = model.name(model.identity())
    xn, yn = model.name(x), model.name(y)
    ei = graph.index[e]
    ax, ay, esc = _three_way(graph, e, xn, yn)
    f_x = _conditioned_race_interval(ax, ay, esc)
    f_y = _conditioned_race_interval(ay, ax, esc)
    den = Interval(ax + ay, ax + ay + esc)

    def hit_iv(maps, at):
        lower, slack = maps
        return Interval(lower[at], min(ONE, lower[at] + slack[at]))

    to_x = _hit_interval_maps(graph, {graph.index[xn]})
    to_y = _hit_interval_maps(graph, {graph.index[yn]})
    p_x = hit_iv(to_x, ei).divide(den)
    p_y = hit_iv(to_y, ei).divide(den)
    p_xy = hit_iv(to_y, graph.index[xn])
    p_yx = hit_iv(to_x, graph.index[yn])
    rhs_y = f_y + f_x * p_xy
    rhs_x = f_x + f_y * p_yx
    return {
        "depth": depth,
        "f_x": f_x,
        "f_y": f_y,
        "p_x": p_x,
        "p_y": p_y,
        "p_xy": p_xy,
        "p_yx": p_yx,
        "identity_y_holds": p_y.overlaps(rhs_y),
        "identity_x_holds": p_x.overlaps(rhs_x),
        "race_complement_exact": _conditioned_race_exact_sum(ax, ay),
        "sandwich_width": max(
            f_x.width, f_y.width, p_x.width, p_y.width, p_xy.width, p_yx.width
        ),
    }


def _conditioned_race_exact_sum(ax: Fraction, ay: Fraction) -> bool:
    if ax + ay == 0:
        return False
    return ax / (ax + ay) + ay / (ax + ay) == 1


def crit_radius_scan(
    model: GroupModel,
    measure: SymmetricMeasure,
    x: Element,
    y: Element,
    radii: Sequence[int],
    probes: Optional[Sequence[Element]] = None,
) -> Dict[str, object]:
    """Conditioned race values P_g[T_x < T_y | min < infinity] at probe
    points far from x and y, across growing truncation radii.

    Each probe carries two readings: a rigorous sandwich interval (vacuous
    when nearly all mass escapes, as it must be for faraway probes on a
    transient graph) and the exact race conditioned on absorption inside
    the truncation, P_g[T_x < T_y | min{T_x,T_y} < T_frontier].  A spread
    of the latter between probe directions that stays bounded away from
    zero at arbitrarily large radii is evidence against the existence of a
    nonzero finitely supported function harmonic off {x, y}; the report
    phrases it exactly this way and never claims a specific threshold
    radius.
    """
    from .groups import cayley_ball

    rows = []
    for R in radii:
        graph, _ = cayley_ball(model, measure, R)
        if probes is None:
            if not isinstance(model, FreeAbelian):
                raise PreconditionError("default probes need a free abelian model")
            k = R - 2
            plus = [0] * model.d
            plus[0] = k
            minus = [0] * model.d
            minus[0] = -k
            probe_list = [tuple(plus), tuple(minus)]
        else:
            probe_list = list(probes)
        mx, my = _three_way_maps(graph, model.name(x), model.name(y))
        sandwiches = []
        conditioned = []
        for g in probe_list:
            gi = graph.index[model.name(g)]
            ax, ay = mx[gi], my[gi]
            if ax + ay == 0:
                sandwiches.append(None)
                conditioned.append(None)
                continue
            sandwiches.append(_conditioned_race_interval(ax, ay, ONE - ax - ay))
            conditioned.append(ax / (ax + ay))
        good = [v for v in conditioned if v is not None]
        spread = max(good) - min(good) if len(good) >= 2 else None
        rows.append(
            {
                "radius": R,
                "probes": [model.name(g) for g in probe_list],
                "sandwich": sandwiches,
                "absorbed_conditioned": conditioned,
                "spread": spread,
            }
        )
    return {
        "rows": rows,
        "note": "persistent spread of the absorbed-conditioned race is"
        " evidence against finitely supported functions harmonic off the"
        " pair; absence of spread at finite radius decides nothing",
    }
