import random
from fractions import Fraction as F

import numpy as np
import pytest

from harmlab.errors import InternalInvariantError
from harmlab.linalg import (
    GF2,
    QQ,
    AffineSubspace,
    PrimeField,
    affine_from_system,
    eliminate,
    nullspace,
    rank,
    residual,
    solve,
    solve_many,
)


def dense(rows, ncols):
    A = np.zeros((len(rows), ncols))
    for i, r in enumerate(rows):
        for j, v in r.items():
            A[i, j] = float(v)
    return A


def random_rows(rnd, m, k, density=0.7):
    rows = []
    for _ in range(m):
        row = {j: F(rnd.randint(-3, 3)) for j in range(k) if rnd.random() < density}
        rows.append({j: v for j, v in row.items() if v != 0})
    return rows


def test_solve_unique_tridiagonal():
    n = 12
    rows, rhs = [], []
    for i in range(n):
        r = {i: F(2)}
        if i > 0:
            r[i - 1] = F(-1)
        if i < n - 1:
            r[i + 1] = F(-1)
        rows.append(r)
        rhs.append(F(0))
    rhs[0] = F(1)
    x = solve(rows, rhs, n, require_unique=True)
    assert x[0] == F(n, n + 1)
    assert all(v == 0 for v in residual(rows, x, rhs))


def test_solve_flags_free_columns():
    with pytest.raises(InternalInvariantError):
        solve([{0: F(1), 1: F(1)}], [F(1)], 2, require_unique=True)


def test_inconsistent_returns_none():
    assert solve([{0: F(1)}, {0: F(1)}], [F(1), F(2)], 1) is None


def test_solve_many_matches_individual_solves():
    rnd = random.Random(5)
    rows = random_rows(rnd, 6, 6)
    # make it nonsingular by adding the identity
    for i in range(6):
        rows[i][i] = rows[i].get(i, F(0)) + F(10)
    cols = [[F(rnd.randint(-4, 4)) for _ in range(6)] for _ in range(3)]
    many = solve_many(rows, cols, 6, require_unique=True)
    for k, rhs in enumerate(cols):
        assert many[k] == solve(rows, rhs, 6, require_unique=True)


@pytest.mark.parametrize("ordered", [False, True])
def test_nullspace_against_numpy_rank(ordered):
    rnd = random.Random(7)
    for _ in range(60):
        m, k = rnd.randint(1, 7), rnd.randint(1, 7)
        rows = random_rows(rnd, m, k)
        ns = nullspace(rows, k, ordered=ordered)
        assert len(ns) == k - np.linalg.matrix_rank(dense(rows, k))
        for v in ns:
            for r in rows:
                assert sum(r.get(j, F(0)) * v.get(j, F(0)) for j in r) == 0


def test_rank_gf2_and_gf5():
    rows = [{0: 1, 1: 1}, {0: 1, 1: 1}, {1: 1, 2: 1}]
    assert rank(rows, 3, GF2) == 2
    gf5 = PrimeField(5)
    assert gf5.inv(2) == 3
    assert rank([{0: 2, 1: 4}, {0: 1, 1: 2}], 2, gf5) == 1


def test_prime_field_rejects_composite():
    with pytest.raises(ValueError):
        PrimeField(6)


def test_rref_is_presentation_independent():
    # same affine set presented two ways canonicalizes identically
    A1 = affine_from_system([{0: F(1), 1: F(1), 2: F(1)}], [F(3)], 3)
    A2 = AffineSubspace(
        QQ,
        3,
        {0: F(1), 1: F(1), 2: F(1)},
        [{0: F(1), 1: F(-1)}, {1: F(2), 2: F(-2)}],
    )
    assert A1 == A2
    assert A1.canonical_point() == A2.canonical_point()


def test_affine_projection_and_fiber():
    # plane x+y+z = 1, project to (x, y), fibre over x = 2
    A = affine_from_system([{0: F(1), 1: F(1), 2: F(1)}], [F(1)], 3)
    assert A.dim == 2
    P = A.project([0, 1])
    assert P.dim == 2  # projection of the plane covers the (x, y) plane
    fib = A.fiber([0], {0: F(2)})
    assert fib.dim == 1
    assert fib.contains({0: F(2), 1: F(5), 2: F(-6)})
    assert not fib.contains({0: F(1), 1: F(0), 2: F(0)})


def test_affine_fiber_empty():
    # line x = y = z intersected with x = 0, y = 1 is empty
    A = AffineSubspace(QQ, 3, {}, [{0: F(1), 1: F(1), 2: F(1)}])
    assert A.fiber([0, 1], {0: F(0), 1: F(1)}) is None


def test_projection_composes():
    rnd = random.Random(11)
    for _ in range(20):
        k = 6
        rows = random_rows(rnd, rnd.randint(1, 4), k)
        rhs = [F(rnd.randint(-2, 2)) for _ in rows]
        A = affine_from_system(rows, rhs, k)
        if A is None:
            continue
        direct = A.project([0, 1])
        via = A.project([0, 1, 2]).project([0, 1])
        assert direct == via
