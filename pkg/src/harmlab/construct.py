"""Explicit harmonic-function builders: linear-growth harmonic functions on
virtually abelian groups, and the positive lamplighter function
h_R(g) = P_g[the level coordinate reaches R before -R and every lamp left
at a negative position is off at the crossing].

The exact lamplighter solver exploits that the only state information that
can still affect the crossing test is the walker position p in (-R, R) and
the lamp bits on the window [-R+1, -1]: lamps at or right of 0 never matter
and lamps at or left of -R can never be toggled again.  The per-position
toggle operators are XORs on the window, so the Walsh characters of the
window diagonalize all of them at once, and the absorbing solve splits into
2^(R-1) independent scalar tridiagonal systems of length 2R-1, solved
exactly.  Feasibility is a state budget: 2^(R-1) (2R-1) cells, fine to
R around 12.

Monte Carlo uses splittable counter-based streams (Philox keyed by
(seed, chunk)); chunk results are merged in chunk order, so reports are
byte-identical for a fixed (seed, samples) whatever the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import (
    ConstructionError,
    InsufficientSamplesError,
    PreconditionError,
    UnsupportedFeatureError,
)
from .groups import (
    Element,
    FreeAbelian,
    GroupModel,
    Lamplighter,
    SymmetricMeasure,
    Transversal,
    VirtuallyCyclic,
    cayley_ball,
    is_standard_lamplighter_measure,
    standard_measure,
)
from .laplace import group_laplacian_value

ZERO = Fraction(0)
ONE = Fraction(1)

MC_CHUNK = 1 << 16
Z99 = 2.5758293035489004  # two-sided 99% normal quantile


# -- linear-growth harmonic functions on virtually abelian groups -----------------


@dataclass
class LinearHarmonic:
    """f(g) = zeta_i(g) + phi(tau(g)) with phi constant on the cyclic part."""

    model: GroupModel
    measure: SymmetricMeasure
    coordinate: int
    phi: Dict[Element, Fraction]

    def __call__(self, g: Element) -> Fraction:
        if isinstance(self.model, FreeAbelian):
            return Fraction(g[self.coordinate])
        tr = Transversal.standard(self.model)
        _, z, t = tr.decompose(g)
        return Fraction(z) + self.phi[t]


def build_linear_harmonic(
    model: GroupModel, measure: SymmetricMeasure, coordinate: int = 0
) -> LinearHarmonic:
    """Solves the |T| coset equations for the correction phi and verifies
    exact harmonicity on the ball of radius 6.

    Harmonicity of f(g) = zeta_i(g) + phi(tau(g)) at g depends only on
    t = tau(g): phi(t) - sum_s mu(s) phi(tau(ts)) = sum_s mu(s) zeta_i(ts),
    because zeta(gs) = zeta(g) + zeta(ts) and tau(gs) = tau(ts).
    """
    if isinstance(model, FreeAbelian):
        if not 0 <= coordinate < model.d:
            raise PreconditionError("coordinate out of range")
        drift = sum((w * Fraction(s[coordinate]) for s, w in measure.support), ZERO)
        if drift != 0:
            raise ConstructionError("symmetric measure has nonzero drift")
        harm = LinearHarmonic(model, measure, coordinate, {model.identity(): ZERO})
    elif isinstance(model, VirtuallyCyclic):
        tr = Transversal.standard(model)
        T = list(tr.elements)
        pos = {t: i for i, t in enumerate(T)}
        rows = []
        rhs = []
        for t in T:
            row = {pos[t]: ONE}
            c = ZERO
            for s, w in measure.support:
                _, zts, tts = tr.decompose(model.mul(t, s))
                row[pos[tts]] = row.get(pos[tts], ZERO) - w
                c += w * Fraction(zts)
            rows.append(row)
            rhs.append(c)
        # the system is singular along constants; pin phi(identity) = 0
        rows[0] = {pos[model.identity()]: ONE}
        rhs[0] = ZERO
        sol = linalg.solve(rows, rhs, len(T))
        if sol is None:
            raise ConstructionError("coset harmonicity system is inconsistent")
        phi = {t: sol.get(pos[t], ZERO) for t in T}
        harm = LinearHarmonic(model, measure, 0, phi)
    else:
        raise UnsupportedFeatureError(
            f"linear harmonic builder covers virtually abelian families, not {model.family}"
        )
    _, elems = cayley_ball(model, measure, 6)
    for g in elems:
        if group_laplacian_value(model, measure, harm, g) != 0:
            raise ConstructionError(f"harmonicity failed at {model.name(g)}")
    return harm


# -- exact lamplighter h_R ----------------------------------------------------------


def _require_standard(model: GroupModel, measure: Optional[SymmetricMeasure]):
    if not isinstance(model, Lamplighter):
        raise UnsupportedFeatureError("h_R is defined on the lamplighter model")
    if measure is not None and not is_standard_lamplighter_measure(measure):
        raise UnsupportedFeatureError(
            "exact h_R relies on the standard generators (single lamp window)"
        )


class LamplighterH:
    """Exact h_R tables for the standard lamplighter walk.

    Window bit k (0-based) is the lamp at position -(k+1).  Tables map each
    Walsh character mask to the solved column over positions -R+1..R-1.
    """

    def __init__(self, R: int, state_budget: int = 200_000):
        if R < 1:
            raise PreconditionError("R must be >= 1")
        self.R = R
        self.window = R - 1
        states = (2 ** self.window) * (2 * R - 1)
        if states > state_budget:
            raise PreconditionError(
                f"exact state space {states} exceeds the budget {state_budget};"
                " use the Monte Carlo method"
            )
        self._tables: List[List[Fraction]] = []
        for mask in range(2 ** self.window):
            self._tables.append(self._solve_character(mask))

    def _solve_character(self, mask: int) -> List[Fraction]:
        """Tridiagonal solve of (3 - s_p) u_p = u_{p-1} + u_{p+1} with
        u_{-R} = 0 and u_R = 1; s_p = -1 when the walker toggles a window
        bit selected by the character, +1 otherwise."""
        R = self.R
        size = 2 * R - 1  # positions -R+1 .. R-1

        def diag(p: int) -> Fraction:
            if p < 0 and (mask >> (-p - 1)) & 1:
                return Fraction(4)
            return Fraction(2)

        # Thomas sweep
        cp: List[Fraction] = [ZERO] * size
        dp: List[Fraction] = [ZERO] * size
        for idx in range(size):
            p = idx - (R - 1)
            b = ONE if idx == size - 1 else ZERO
            d = diag(p)
            if idx == 0:
                cp[idx] = -ONE / d
                dp[idx] = b / d
            else:
                denom = d + cp[idx - 1]
                cp[idx] = -ONE / denom
                dp[idx] = (b + dp[idx - 1]) / denom
        out: List[Fraction] = [ZERO] * size
        out[size - 1] = dp[size - 1]
        for idx in range(size - 2, -1, -1):
            out[idx] = dp[idx] - cp[idx] * out[idx + 1]
        return out

    def value(self, g: Element) -> Fraction:
        """h_R(g), exact."""
        pos, lamps = g
        R = self.R
        negative = [p for p in lamps if p < 0]
        if pos <= -R:
            return ZERO
        if pos >= R:
            return ONE if not negative else ZERO
        if any(p <= -R for p in negative):
            return ZERO  # a lamp the walk can never reach stays lit
        bits = 0
        for p in negative:
            bits |= 1 << (-p - 1)
        idx = pos + (R - 1)
        total = ZERO
        for mask in range(2 ** self.window):
            sign = -1 if bin(mask & bits).count("1") % 2 else 1
            total += sign * self._tables[mask][idx]
        return total / (2 ** self.window)


_H_CACHE: Dict[int, LamplighterH] = {}


def lamplighter_h_exact(g: Element, R: int, state_budget: int = 200_000) -> Fraction:
    solver = _H_CACHE.get(R)
    if solver is None:
        solver = LamplighterH(R, state_budget=state_budget)
        _H_CACHE[R] = solver
    return solver.value(g)


def lamplighter_h_bruteforce(g: Element, R: int) -> Fraction:
    """Independent oracle: direct absorbing solve over the explicit states
    (position, window bit pattern); exponential, for small R only."""
    window = R - 1
    masks = range(2 ** window)
    idx = {}
    states = []
    for p in range(-R + 1, R):
        for b in masks:
            idx[(p, b)] = len(states)
            states.append((p, b))
    rows = []
    rhs = []
    for p, b in states:
        row = {idx[(p, b)]: Fraction(3)}
        r = ZERO

        def add(pp, bb):
            nonlocal r
            if pp >= R:
                if bb == 0:
                    r += ONE
            elif pp <= -R:
                pass
            else:
                row[idx[(pp, bb)]] = row.get(idx[(pp, bb)], ZERO) - ONE

        add(p + 1, b)
        add(p - 1, b)
        toggled = b ^ (1 << (-p - 1)) if p < 0 else b
        add(p, toggled)
        rows.append(row)
        rhs.append(r)
    sol = linalg.solve(rows, rhs, len(states), require_unique=True)
    pos, lamps = g
    negative = [p for p in lamps if p < 0]
    if pos <= -R:
        return ZERO
    if pos >= R:
        return ONE if not negative else ZERO
    if any(p <= -R for p in negative):
        return ZERO
    bits = 0
    for p in negative:
        bits |= 1 << (-p - 1)
    return sol.get(idx[(pos, bits)], ZERO)


# -- Monte Carlo --------------------------------------------------------------------


@dataclass
class McEstimate:
    mean: Fraction
    half_width_99: float
    samples: int
    seed: int

    def to_jsonable(self):
        from .graphs import rat_str

        return {
            "mean": rat_str(self.mean),
            "half_width_99": self.half_width_99,
            "samples": self.samples,
            "seed": self.seed,
            "kind": "statistical",
        }


def _chunk_sizes(samples: int) -> List[int]:
    out = []
    left = samples
    while left > 0:
        out.append(min(MC_CHUNK, left))
        left -= MC_CHUNK
    return out


def _rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, chunk]))


def _winner_stats(g: Element, R: int, barrier: int, size: int, rng):
    """Vectorized two-barrier walk; returns (min level, clean-window flag)
    arrays over the walkers absorbed at +R."""
    pos0, lamps = g
    bits0 = np.uint64(0)
    for p in lamps:
        if -64 < p < 0:
            bits0 |= np.uint64(1) << np.uint64(-p - 1)
    doomed = any(p <= -R for p in lamps if p < 0)
    pos = np.full(size, pos0, dtype=np.int64)
    bits = np.full(size, bits0, dtype=np.uint64)
    mins = np.full(size, pos0, dtype=np.int64)
    out_mins: List[np.ndarray] = []
    out_clean: List[np.ndarray] = []
    while pos.size:
        draw = rng.integers(0, 3, size=pos.size, dtype=np.uint8)
        neg = (draw == 2) & (pos < 0)
        if neg.any():
            shifts = (-pos[neg] - 1).astype(np.uint64)
            bits[neg] ^= np.uint64(1) << shifts
        pos = pos + (draw == 0).astype(np.int64) - (draw == 1).astype(np.int64)
        np.minimum(mins, pos, out=mins)
        won = pos >= R
        lost = pos <= barrier
        if won.any():
            out_mins.append(mins[won])
            clean = (bits[won] == 0) if not doomed else np.zeros(int(won.sum()), bool)
            out_clean.append(clean)
        keep = ~(won | lost)
        if not keep.all():
            pos = pos[keep]
            bits = bits[keep]
            mins = mins[keep]
    if out_mins:
        return np.concatenate(out_mins), np.concatenate(out_clean)
    return np.empty(0, dtype=np.int64), np.empty(0, dtype=bool)


def _run_chunks(g: Element, R: int, barrier: int, samples: int, seed: int, threads: int):
    """Chunked simulation merged in chunk order (worker-count independent)."""
    sizes = _chunk_sizes(samples)

    def run(args):
        c, size = args
        return _winner_stats(g, R, barrier, size, _rng(seed, c))

    jobs = list(enumerate(sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    mins = np.concatenate([r[0] for r in results]) if results else np.empty(0)
    clean = np.concatenate([r[1] for r in results]) if results else np.empty(0)
    return mins, clean


def lamplighter_h_mc(
    g: Element, R: int, samples: int, seed: int, threads: int = 1
) -> McEstimate:
    """Unbiased estimate of h_R(g) with a 99% binomial confidence
    half-width; byte-identical for fixed (seed, samples) at any thread
    count."""
    if R >= 64:
        raise PreconditionError("Monte Carlo window kept below 64 lamps")
    pos0 = g[0]
    if pos0 <= -R:
        return McEstimate(ZERO, 0.0, samples, seed)
    if pos0 >= R:
        val = ONE if not [p for p in g[1] if p < 0] else ZERO
        return McEstimate(val, 0.0, samples, seed)
    _, clean = _run_chunks(g, R, -R, samples, seed, threads)
    hits = int(clean.sum())
    p = hits / samples
    hw = Z99 * math.sqrt(max(p * (1 - p), 1e-12) / samples)
    return McEstimate(Fraction(hits, samples), hw, samples, seed)


def lamplighter_h(
    g: Element,
    R: int,
    method: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    state_budget: int = 200_000,
):
    """h_R(g) by the requested method; "exact" falls back with a clear error
    when the state budget is exceeded."""
    if method == "exact":
        return lamplighter_h_exact(g, R, state_budget=state_budget)
    if method == "mc":
        return lamplighter_h_mc(g, R, samples, seed, threads=threads)
    raise PreconditionError(f"unknown method {method!r}")


# -- property sweeps -----------------------------------------------------------------


def _exact_h_and_neighbors(g: Element, R: int) -> Tuple[Fraction, Fraction]:
    """(h_R(g), mean of h_R over the three neighbours gs)."""
    model = Lamplighter()
    mu = standard_measure(model)
    h = lamplighter_h_exact(g, R)
    acc = ZERO
    for s, w in mu.support:
        acc += w * lamplighter_h_exact(model.mul(g, s), R)
    return h, acc


def hr_property_check(
    R_list: Sequence[int],
    harmonicity_states: int = 5,
    state_budget: int = 200_000,
) -> Dict[str, object]:
    """Positivity, exact interior harmonicity, and the three growth-shape
    inequalities of h_R with fitted constants across the sweep.

    The shape checks: with zeta(g) = floor(R/2) and a clean window the
    lower bound R h_R(g) / zeta(g) stays away from 0; the matching upper
    ratio stays bounded; and for the blocked state (lamp at -1) R h_R
    stays bounded.  Constants are reported, not asserted against invented
    thresholds.
    """
    model = Lamplighter()
    rows = []
    for R in R_list:
        g_mid = (max(1, R // 2), ())
        g_blocked = (0, (-1,))
        h_mid = lamplighter_h_exact(g_mid, R, state_budget=state_budget)
        h_blocked = lamplighter_h_exact(g_blocked, R, state_budget=state_budget)
        h_id = lamplighter_h_exact((0, ()), R, state_budget=state_budget)
        rows.append(
            {
                "R": R,
                "h_identity": h_id,
                "h_mid": h_mid,
                "h_blocked": h_blocked,
                "ratio_iv": Fraction(R) * h_mid / Fraction(g_mid[0]),
                "ratio_ii": Fraction(R) * h_mid / Fraction(abs(g_mid[0])),
                "scaled_iii": Fraction(R) * h_blocked,
                "positive": h_mid > 0 and h_id > 0 and h_blocked > 0,
            }
        )
    # exact harmonicity at interior sample states of the smallest R
    R0 = min(R_list)
    states = [(0, ()), (1, ()), (-1, (-1,)), (0, (-1,)), (1, (0, 1))][:harmonicity_states]
    residuals = {}
    for g in states:
        if not -R0 < g[0] < R0:
            continue
        h, avg = _exact_h_and_neighbors(g, R0)
        residuals[str(g)] = h - avg
    return {
        "rows": rows,
        "fitted_lower_iv": min(r["ratio_iv"] for r in rows),
        "fitted_upper_ii": max(r["ratio_ii"] for r in rows),
        "fitted_upper_iii": max(r["scaled_iii"] for r in rows),
        "harmonicity_residuals": residuals,
        "harmonicity_exact": all(v == 0 for v in residuals.values()),
        "all_positive": all(r["positive"] for r in rows),
    }


def pointwise_limit_probe(
    g_list: Sequence[Element],
    R_list: Sequence[int],
    state_budget: int = 200_000,
) -> Dict[str, object]:
    """Table of R h_R(g) across R with successive differences, plus the
    non-factoring witness pair: the identity and its kernel translate with
    one negative lamp share zeta and tau yet separate at every R."""
    model = Lamplighter()
    table = {}
    for g in g_list:
        vals = [
            (R, Fraction(R) * lamplighter_h_exact(g, R, state_budget=state_budget))
            for R in R_list
        ]
        diffs = [(vals[i + 1][0], vals[i + 1][1] - vals[i][1]) for i in range(len(vals) - 1)]
        table[model.name(g)] = {"values": vals, "diffs": diffs}
    pair = ((0, ()), (0, (-1,)))
    separation = []
    for R in R_list:
        a = Fraction(R) * lamplighter_h_exact(pair[0], R, state_budget=state_budget)
        b = Fraction(R) * lamplighter_h_exact(pair[1], R, state_budget=state_budget)
        separation.append((R, a, b, a != b))
    return {
        "table": table,
        "witness_pair": [model.name(pair[0]), model.name(pair[1])],
        "separation": separation,
        "separates_everywhere": all(s[3] for s in separation),
    }


def coset_escape_decay_probe(
    n_list: Sequence[int],
    R: int,
    samples: int,
    seed: int,
    g: Element = (0, ()),
    threads: int = 1,
) -> Dict[str, object]:
    """Monte Carlo estimate of P_g[window clean at the crossing | lowest
    level reached = -n], for each n, with a log-linear fitted decay rate.

    Purely empirical: the fit reports an observed rate, it does not claim
    the true decay constant.  Conditioning events hit fewer than 100 times
    are flagged as insufficient.
    """
    barrier = max(-(max(n_list) + 2), -R)
    mins, cleans = _run_chunks(g, R, barrier, samples, seed, threads)
    counts: Dict[int, int] = {}
    hits: Dict[int, int] = {}
    for n in n_list:
        sel = mins == -n
        counts[n] = int(sel.sum())
        hits[n] = int(cleans[sel].sum())
    rows = []
    pts = []
    for n in n_list:
        if n >= R or counts[n] < 100:
            rows.append(
                {
                    "n": n,
                    "count": counts[n],
                    "estimate": None,
                    "flag": "impossible" if n >= R else "insufficient-samples",
                }
            )
            continue
        est = hits[n] / counts[n]
        rows.append({"n": n, "count": counts[n], "estimate": est, "flag": None})
        if est > 0:
            pts.append((n, math.log(est)))
    slope = None
    if len(pts) >= 2:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        xbar = sum(xs) / len(xs)
        ybar = sum(ys) / len(ys)
        denom = sum((x - xbar) ** 2 for x in xs)
        if denom > 0:
            slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / denom
    return {
        "rows": rows,
        "empirical_alpha": math.exp(slope) if slope is not None else None,
        "samples": samples,
        "seed": seed,
        "note": "empirical decay only; no claim about the true constant",
    }


