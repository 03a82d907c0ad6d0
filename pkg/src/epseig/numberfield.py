"""Exact arithmetic in Q(i)[x]/(M) for a squarefree modulus M.

M need not be irreducible.  Whenever a zero test or an inversion meets a
zero divisor, M is split by a gcd into two coprime factors and the factor
that vanishes at the selected root (decided by exact root counting in its
isolating box) becomes the new modulus.  Values at the selected root never
change under such a split, so every answer is exact for that root.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import gcd, lcm, mpq

from .exactnum import ZERO, Ball, _ball, ball_contains_zero
from .poly import (
    ONE_POLY,
    X_POLY,
    Poly,
    poly_divmod,
    poly_eval_ball,
    poly_gcd,
    poly_half_gcdex,
)
from .rootfind import IsolatingBox, count_roots_in_box, refine_box


ONE_Q = mpq(1)


class IncomparableError(ValueError):
    pass


@dataclass(frozen=True)
class FieldElem:
    residue: Poly
    modulus: Poly

    @classmethod
    def of(cls, value, modulus: Poly) -> "FieldElem":
        p = value if isinstance(value, Poly) else Poly([value])
        return cls(p % modulus if p.degree >= modulus.degree else p, modulus)

    def _check(self, other):
        if self.modulus != other.modulus:
            raise IncomparableError("field elements over different moduli")

    def __add__(self, other):
        self._check(other)
        return FieldElem(self.residue + other.residue, self.modulus)

    def __sub__(self, other):
        self._check(other)
        return FieldElem(self.residue - other.residue, self.modulus)

    def __neg__(self):
        return FieldElem(-self.residue, self.modulus)

    def __mul__(self, other):
        if isinstance(other, FieldElem):
            self._check(other)
            if not self.residue or not other.residue:
                return FieldElem(Poly(), self.modulus)
            return FieldElem(_reduce(self.residue * other.residue, self.modulus), self.modulus)
        return FieldElem(self.residue * other, self.modulus)

    def reduce_to(self, modulus: Poly) -> "FieldElem":
        return FieldElem(_reduce(self.residue, modulus), modulus)

    def is_structurally_zero(self) -> bool:
        return not self.residue


def _reduce(p: Poly, m: Poly) -> Poly:
    if p.degree < m.degree:
        return p
    return poly_divmod(p, m)[1]


@dataclass(frozen=True)
class AlgebraicNumber:
    """The root of ``modulus`` isolated by ``box`` (as a field element ``repr``)."""

    modulus: Poly
    box: IsolatingBox
    repr: FieldElem = None

    def __post_init__(self):
        if self.repr is None:
            object.__setattr__(self, "repr", FieldElem.of(X_POLY, self.modulus))


@dataclass(frozen=True)
class SplitEvent:
    old_modulus: Poly
    factors: tuple  # (f1, f2), f1 * f2 == old_modulus
    surviving_branch: int  # index into factors

    @property
    def survivor(self) -> Poly:
        return self.factors[self.surviving_branch]


def _split(modulus: Poly, g: Poly, box: IsolatingBox) -> SplitEvent:
    other = poly_divmod(modulus, g)[0].monic()
    branch = 0 if count_roots_in_box(g, box) == 1 else 1
    return SplitEvent(modulus, (g, other), branch)


def alg_equal(a: AlgebraicNumber, b: AlgebraicNumber) -> bool:
    """Decide whether two roots of the same squarefree polynomial coincide.

    Each box holds exactly one root and no root lies on either boundary, so
    the roots coincide iff the overlap of the boxes holds a root.
    """
    if a.modulus != b.modulus:
        raise IncomparableError("incomparable representation")
    if a.box == b.box:
        return True
    common = a.box.intersection(b.box)
    if common is None:
        return False
    return count_roots_in_box(a.modulus, common) == 1


def field_invert(e: FieldElem):
    """Inverse of e, or a SplitEvent when e is a zero divisor.

    The SplitEvent returned here carries surviving_branch = -1: without an
    isolating box the branch is not known; ``invert_at`` resolves it.
    """
    if not e.residue:
        raise ZeroDivisionError("inversion of zero")
    g, s = poly_half_gcdex(e.residue, e.modulus)
    if g.degree == 0:
        return FieldElem(_reduce(s, e.modulus), e.modulus)
    other = poly_divmod(e.modulus, g)[0].monic()
    return SplitEvent(e.modulus, (g, other), -1)


def invert_at(e: FieldElem, box: IsolatingBox):
    """Inverse of e at the selected root: FieldElem, or SplitEvent with branch."""
    res = field_invert(e)
    if isinstance(res, SplitEvent):
        return _split(res.old_modulus, res.factors[0], box)
    return res


def is_zero(e: FieldElem, root_box: IsolatingBox, bits: int = 64):
    """Exact zero test of e at the selected root: bool, or SplitEvent.

    A cheap ball evaluation settles most nonzero cases; otherwise the gcd
    with the modulus decides (and may split it).
    """
    if not e.residue:
        return True
    if e.residue.degree == 0:
        return False
    try:
        if not ball_contains_zero(elem_to_ball(e, root_box, None, bits=bits)):
            return False
    except ArithmeticError:
        pass
    g = poly_gcd(e.residue, e.modulus)
    if g.degree == 0:
        return False
    if g.degree == e.modulus.degree:
        return True
    return _split(e.modulus, g, root_box)


def elem_to_ball(e: FieldElem, root_box: IsolatingBox, target_radius, bits: int = 96) -> Ball:
    """Ball containing e evaluated at the selected root.

    With target_radius=None the box is used as is; otherwise the box is
    refined until the enclosure radius is at most target_radius.
    """
    if e.residue.degree <= 0:
        c = e.residue.coeffs[0] if e.residue else Poly([0]).lc
        return _ball(c, ZERO)
    box = root_box
    target = None if target_radius is None else mpq(target_radius)
    while True:
        root = _ball(box.center, box.half_diag_upper())
        v = poly_eval_ball(e.residue, root, bits)
        if target is None or v.radius <= target:
            return v
        # radius scales roughly linearly with the box size
        shrink = max(mpq(1, 2**20), target / (4 * v.radius))
        box = refine_box(e.modulus, box, box.half_diag_upper() * shrink)
        bits = max(bits, 2 * (target.denominator.bit_length() - target.numerator.bit_length()) + 32)


# --- elimination ------------------------------------------------------------

@dataclass
class NullspaceResult:
    basis: list  # list of vectors (lists) of FieldElem
    root: AlgebraicNumber  # branch the result is valid in
    rank: int


class _Restart(Exception):
    def __init__(self, event: SplitEvent):
        self.event = event


def _zero(e, box):
    res = is_zero(e, box)
    if isinstance(res, SplitEvent):
        raise _Restart(res)
    return res


def _content(polys):
    # rational gcd of all coefficient parts: gcd of numerators / lcm of denominators
    num, den = 0, 1
    for p in polys:
        for c in p.coeffs:
            for q in (c.re, c.im):
                if q:
                    num = gcd(num, q.numerator)
                    den = lcm(den, q.denominator)
    return mpq(num, den) if num else ONE_Q


def _content_normalize(row):
    # the row spans the same line after scaling, so the solution set is unchanged
    c = _content(e.residue for e in row)
    if c == 1:
        return row
    f = 1 / c
    return [FieldElem(e.residue * f, e.modulus) if e.residue else e for e in row]


def _eliminate(rows, box):
    """Fraction-free row echelon form with exact pivots; returns (rows, pivots)."""
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for col in range(n_cols):
        piv = None
        for i in range(r, n_rows):
            if not _zero(rows[i][col], box):
                piv = i
                break
        if piv is None:
            for i in range(r, n_rows):
                rows[i][col] = FieldElem(Poly(), rows[i][col].modulus)
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][col]
        for i in range(r + 1, n_rows):
            a = rows[i][col]
            if a.is_structurally_zero():
                continue
            new = [p * rows[i][k] - a * rows[r][k] if k > col else rows[i][k]
                   for k in range(n_cols)]
            new[col] = FieldElem(Poly(), p.modulus)
            rows[i] = _content_normalize(new)
        pivots.append(col)
        r += 1
        if r == n_rows:
            break
    return rows, pivots


def nullspace(matrix, root: AlgebraicNumber) -> NullspaceResult:
    """Exact nullspace basis of a square matrix over Q(i)[x]/(M) at ``root``.

    Elimination restarts in the surviving branch after every modulus split.
    Basis vectors come from division-free back substitution, so each is a
    nonzero vector with its free coordinate set to a nonzero scalar.
    """
    while True:
        M = root.modulus
        rows = [[e.reduce_to(M) if e.modulus != M else e for e in row] for row in matrix]
        try:
            rows, pivots = _eliminate(rows, root.box)
        except _Restart as restart:
            new_mod = restart.event.survivor
            root = AlgebraicNumber(new_mod, root.box)
            continue
        break
    n = len(matrix[0]) if matrix else 0
    free = [c for c in range(n) if c not in pivots]
    zero = FieldElem(Poly(), M)
    one = FieldElem(ONE_POLY, M)
    basis = []
    for f in free:
        v = [zero] * n
        v[f] = one
        for r in range(len(pivots) - 1, -1, -1):
            pc = pivots[r]
            s = zero
            for c in range(pc + 1, n):
                if not v[c].is_structurally_zero() and not rows[r][c].is_structurally_zero():
                    s = s + rows[r][c] * v[c]
            if s.is_structurally_zero():
                continue
            p = rows[r][pc]
            # scale what has been solved so far by the pivot, then solve
            v = [p * x if not x.is_structurally_zero() else x for x in v]
            v[pc] = -s
        basis.append(v)
    return NullspaceResult(basis, AlgebraicNumber(M, root.box), len(pivots))


def matrix_minus_x(Ahat, modulus: Poly):
    """The matrix Ahat - x*I over Q(i)[x]/(modulus)."""
    n = Ahat.n
    rows = []
    for j in range(n):
        row = []
        for k in range(n):
            p = Poly([Ahat.entries[j][k]])
            if j == k:
                p = p - X_POLY
            row.append(FieldElem.of(p, modulus))
        rows.append(row)
    return rows
