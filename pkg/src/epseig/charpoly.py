"""Matrix ingestion, grid truncation, characteristic polynomials, norm bounds."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from gmpy2 import mpq

from .exactnum import (
    ONE,
    ZERO,
    ZERO_G,
    Ball,
    GaussRat,
    ParseError,
    Rat,
    _ball,
    _gr,
    floor_rat,
    gauss_str,
    parse_complex,
    sqrt_upper,
)
from .poly import Poly


@dataclass(frozen=True)
class ExactMatrix:
    n: int
    entries: tuple  # n rows, each a tuple of GaussRat

    @classmethod
    def from_rows(cls, rows):
        rows = tuple(tuple(parse_complex(x) if isinstance(x, str) else GaussRat._coerce(x)
                           for x in row) for row in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ParseError("matrix must be square")
        return cls(n, rows)

    def __getitem__(self, jk):
        j, k = jk
        return self.entries[j][k]

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return ExactMatrix(self.n, tuple(
            tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)))

    def matvec(self, v):
        return [sum((a * x for a, x in zip(row, v)), ZERO_G) for row in self.entries]


@dataclass(frozen=True)
class InputMatrix:
    """A user matrix: the literal strings plus their exact values."""

    n: int
    literals: tuple
    exact: ExactMatrix

    @classmethod
    def from_rows(cls, rows):
        lits = tuple(tuple(str(x).strip() for x in row) for row in rows)
        n = len(lits)
        if n == 0:
            raise ParseError("empty matrix")
        if any(len(r) != n for r in lits):
            raise ParseError("matrix must be square")
        return cls(n, lits, ExactMatrix.from_rows(lits))

    @classmethod
    def from_json(cls, data) -> "InputMatrix":
        if not isinstance(data, dict) or "rows" not in data:
            raise ParseError('matrix JSON needs a "rows" field')
        rows = data["rows"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ParseError('"rows" must be a list of lists')
        m = cls.from_rows(rows)
        if "n" in data and data["n"] != m.n:
            raise ParseError(f'"n" is {data["n"]} but {m.n} rows were given')
        return m

    @classmethod
    def load(cls, path) -> "InputMatrix":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_json(data)

    def to_json(self) -> dict:
        return {"n": self.n, "rows": [list(r) for r in self.literals]}

    def digest(self) -> str:
        """Hash of the exact values, independent of literal spelling."""
        h = hashlib.sha256()
        for row in self.exact.entries:
            h.update(("|".join(gauss_str(z) for z in row) + "\n").encode())
        return h.hexdigest()

    def common_denominator(self) -> int:
        d = 1
        for row in self.exact.entries:
            for z in row:
                for q in (z.re, z.im):
                    d = d * q.denominator // _gcd(d, q.denominator)
        return int(d)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _round_to_grid(q: Rat, N: int) -> Rat:
    return mpq(floor_rat(q * N + mpq(1, 2)), N)


def truncate_matrix(A, N: int) -> ExactMatrix:
    """Round real and imaginary parts of every entry to the grid (1/N)Z."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    M = A.exact if isinstance(A, InputMatrix) else A
    return ExactMatrix(M.n, tuple(
        tuple(_gr(_round_to_grid(z.re, N), _round_to_grid(z.im, N)) for z in row)
        for row in M.entries))


def _matmul(A, B, n):
    out = []
    for i in range(n):
        ai = A[i]
        row = []
        for j in range(n):
            acc = ZERO_G
            for k in range(n):
                a = ai[k]
                if a:
                    b = B[k][j]
                    if b:
                        acc = acc + a * b
            row.append(acc)
        out.append(row)
    return out


def char_poly(M: ExactMatrix) -> Poly:
    """det(lambda*I - M) by the Faddeev-LeVerrier recursion (monic, degree n)."""
    n = M.n
    A = [list(r) for r in M.entries]
    coeffs = [ZERO_G] * (n + 1)
    coeffs[n] = _gr(ONE, ZERO)
    # M_k = A M_{k-1} + c_{n-k+1} I and c_{n-k} = -tr(A M_k) / k, M_0 = 0
    AM = [[ZERO_G] * n for _ in range(n)]
    for k in range(1, n + 1):
        c_prev = coeffs[n - k + 1]
        for i in range(n):
            AM[i][i] = AM[i][i] + c_prev
        AM = _matmul(A, AM, n)
        tr = ZERO_G
        for i in range(n):
            tr = tr + AM[i][i]
        coeffs[n - k] = tr * mpq(-1, k)
    return Poly._raw(coeffs)


def char_poly_enclosure(M: ExactMatrix, entry_radius: Rat, bits: int = 200):
    """Balls containing the coefficients of det(lambda*I - B) for every B with
    |b_jk - m_jk| <= entry_radius entrywise (Faddeev-LeVerrier in ball arithmetic)."""
    n = M.n
    A = [[_ball(z, mpq(entry_radius)) for z in row] for row in M.entries]
    zero = _ball(ZERO_G, ZERO)
    coeffs = [zero] * (n + 1)
    coeffs[n] = _ball(_gr(ONE, ZERO), ZERO)

    def mm(X, Y):
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = zero
                for k in range(n):
                    acc = acc + X[i][k] * Y[k][j]
                row.append(acc.rounded(bits))
            out.append(row)
        return out

    AM = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        for i in range(n):
            AM[i][i] = AM[i][i] + coeffs[n - k + 1]
        AM = mm(A, AM)
        tr = zero
        for i in range(n):
            tr = tr + AM[i][i]
        coeffs[n - k] = (tr * Ball(mpq(-1, k))).rounded(bits)
    return coeffs


def frobenius_sq(M: ExactMatrix) -> Rat:
    return sum((z.abs2() for row in M.entries for z in row), ZERO)


def matrix_norm_upper(M: ExactMatrix, bits: int = 64) -> Rat:
    """Upper bound on the operator 2-norm via the Frobenius norm."""
    return sqrt_upper(frobenius_sq(M), bits)


def max_entry_abs2(M: ExactMatrix) -> Rat:
    return max((z.abs2() for row in M.entries for z in row), default=ZERO)
