import random

import pytest
from gmpy2 import mpq

from epseig.charpoly import ExactMatrix
from epseig.exactnum import GaussRat
from epseig.poly import ONE_POLY, X_POLY, Poly, poly_divmod
from epseig.rootfind import isolate_roots, refine_box
from epseig.numberfield import (
    AlgebraicNumber,
    FieldElem,
    IncomparableError,
    SplitEvent,
    alg_equal,
    elem_to_ball,
    field_invert,
    invert_at,
    is_zero,
    matrix_minus_x,
    nullspace,
)

Z = X_POLY


def lin(r):
    return Z - Poly([r])


def box_for(P, point):
    return next(b for b in isolate_roots(P) if b.contains(point))


def fe(coeffs, M):
    return FieldElem.of(Poly(coeffs), M)


def _is_null(matrix, vec, M):
    for row in matrix:
        acc = FieldElem(Poly(), M)
        for a, v in zip(row, vec):
            acc = acc + a.reduce_to(M) * v
        if acc.residue:
            return False
    return True


# --- alg_equal ---

def test_alg_equal_same_box():
    P = Poly([-2, 0, 1])
    b = isolate_roots(P)[1]
    assert alg_equal(AlgebraicNumber(P, b), AlgebraicNumber(P, b))


def test_alg_equal_refined_box_is_same_root():
    P = Poly([-2, 0, 1])
    b = isolate_roots(P)[1]
    fine = refine_box(P, b, mpq(1, 1000))
    assert alg_equal(AlgebraicNumber(P, b), AlgebraicNumber(P, fine))


def test_alg_equal_distinct_roots():
    P = Poly([-2, 0, 1])
    b0, b1 = isolate_roots(P)
    assert not alg_equal(AlgebraicNumber(P, b0), AlgebraicNumber(P, b1))


def test_alg_equal_incomparable():
    b = isolate_roots(lin(1))[0]
    with pytest.raises(IncomparableError):
        alg_equal(AlgebraicNumber(lin(1), b), AlgebraicNumber(lin(1) * lin(2), b))


# --- inversion ---

def test_invert_in_quadratic_field():
    M = Poly([1, 0, 1])  # x^2 + 1
    inv = field_invert(fe([1, 1], M))
    assert isinstance(inv, FieldElem)
    assert (inv * fe([1, 1], M)).residue == ONE_POLY
    # (1 + x)^-1 = (1 - x) / 2 when x^2 = -1
    assert inv.residue == Poly([mpq(1, 2), mpq(-1, 2)])


def test_invert_zero_raises():
    with pytest.raises(ZeroDivisionError, match="inversion of zero"):
        field_invert(FieldElem(Poly(), Poly([1, 0, 1])))


def test_invert_zero_divisor_splits():
    M = lin(1) * lin(2)
    e = fe([-1, 1], M)  # x - 1 vanishes at 1, not at 2
    ev = field_invert(e)
    assert isinstance(ev, SplitEvent) and ev.surviving_branch == -1
    assert ev.factors[0] * ev.factors[1] == M
    at2 = invert_at(e, box_for(M, GaussRat(2, 0)))
    assert isinstance(at2, SplitEvent) and at2.survivor == lin(2)
    at1 = invert_at(e, box_for(M, GaussRat(1, 0)))
    assert at1.survivor == lin(1)


def test_random_inverses():
    rng = random.Random(9)
    M = Poly([-3, 1, 0, 1])  # x^3 + x - 3 has no rational Gaussian root
    for _ in range(20):
        e = fe([GaussRat(rng.randint(-5, 5), rng.randint(-5, 5)) for _ in range(3)], M)
        if not e.residue:
            continue
        inv = field_invert(e)
        assert isinstance(inv, FieldElem)
        assert (inv * e).residue == ONE_POLY


# --- zero tests ---

def test_is_zero_examples():
    M = Poly([-2, 0, 1])
    pos = next(b for b in isolate_roots(M) if b.center.re > 0)
    assert is_zero(FieldElem(Poly(), M), pos) is True
    assert is_zero(fe([5], M), pos) is False
    assert is_zero(fe([0, 1], M), pos) is False
    # x^2 - 2 reduces to 0 exactly
    assert is_zero(fe([-2, 0, 1], M), pos) is True


def test_is_zero_splits_on_zero_divisor():
    M = lin(1) * lin(-1)
    e = fe([-1, 1], M)
    at1 = is_zero(e, box_for(M, GaussRat(1, 0)))
    assert isinstance(at1, SplitEvent) and at1.survivor == lin(1)
    at_m1 = is_zero(e, box_for(M, GaussRat(-1, 0)))
    # ball exclusion settles the nonzero case without splitting, or the split keeps x + 1
    assert at_m1 is False or (isinstance(at_m1, SplitEvent) and at_m1.survivor == lin(-1))


# --- enclosures ---

def test_elem_to_ball_sqrt2():
    M = Poly([-2, 0, 1])
    b = next(b for b in isolate_roots(M) if b.center.re > 0)
    ball = elem_to_ball(fe([0, 1], M), b, mpq(1, 10 ** 6))
    assert ball.radius <= mpq(1, 10 ** 6)
    assert abs(ball.center.re - mpq(1414213562, 10 ** 9)) < mpq(2, 10 ** 6)
    # x^2 evaluates to 2 exactly as a residue
    sq = elem_to_ball(fe([0, 1], M) * fe([0, 1], M), b, mpq(1, 10 ** 6))
    assert sq.radius == 0 and sq.center == GaussRat(2, 0)


def test_elem_to_ball_contains_value_at_rational_root():
    M = lin(mpq(1, 3)) * Poly([1, 0, 1])
    b = box_for(M, GaussRat(mpq(1, 3), 0))
    e = fe([1, 2, 3], M)  # 1 + 2x + 3x^2 at 1/3 is 2
    ball = elem_to_ball(e, b, mpq(1, 10 ** 8))
    assert ball.contains(GaussRat(2, 0)) and ball.radius <= mpq(1, 10 ** 8)


# --- nullspace ---

def test_nullspace_identity_minus_one():
    A = ExactMatrix.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    M = lin(1)
    res = nullspace(matrix_minus_x(A, M), AlgebraicNumber(M, box_for(M, GaussRat(1, 0))))
    assert res.rank == 0 and len(res.basis) == 3


def test_nullspace_jordan_block():
    A = ExactMatrix.from_rows([[0, 1], [0, 0]])
    M = Z
    res = nullspace(matrix_minus_x(A, M), AlgebraicNumber(M, isolate_roots(M)[0]))
    assert res.rank == 1 and len(res.basis) == 1
    v = res.basis[0]
    assert not v[0].is_structurally_zero() and v[1].is_structurally_zero()


def test_nullspace_swap_over_split_modulus():
    # [[0,1],[1,0]] has eigenvalues 1 and -1; start from the full char poly
    A = ExactMatrix.from_rows([[0, 1], [1, 0]])
    M = Poly([-1, 0, 1])
    for point in (1, -1):
        root = AlgebraicNumber(M, box_for(M, GaussRat(point, 0)))
        mat = matrix_minus_x(A, M)
        res = nullspace(mat, root)
        Mr = res.root.modulus
        assert poly_divmod(M, Mr)[1] == Poly()
        assert res.rank == 1 and len(res.basis) == 1
        assert _is_null(mat, res.basis[0], Mr)


def test_nullspace_quadratic_field():
    # rotation by 90 degrees: eigenvalues +-i, eigenvectors (1, -+i) up to scale
    A = ExactMatrix.from_rows([[0, -1], [1, 0]])
    M = Poly([1, 0, 1])
    root = AlgebraicNumber(M, box_for(M, GaussRat(0, 1)))
    mat = matrix_minus_x(A, M)
    res = nullspace(mat, root)
    assert res.rank == 1 and _is_null(mat, res.basis[0], res.root.modulus)


def test_rank_plus_nullity_random():
    rng = random.Random(17)
    for _ in range(15):
        n = rng.randint(1, 4)
        # eigenvalue 2 with a chosen geometric multiplicity via a block upper triangular form
        k = rng.randint(1, n)
        rows = [[0] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = 2 if i < k else rng.randint(3, 6)
            for j in range(i + 1, n):
                if j >= k:
                    rows[i][j] = rng.randint(-3, 3)
        A = ExactMatrix.from_rows(rows)
        M = lin(2)
        mat = matrix_minus_x(A, M)
        res = nullspace(mat, AlgebraicNumber(M, box_for(M, GaussRat(2, 0))))
        assert res.rank + len(res.basis) == n
        assert len(res.basis) >= k
        for v in res.basis:
            assert _is_null(mat, v, res.root.modulus)
            assert any(not x.is_structurally_zero() for x in v)
