"""Dense univariate polynomials over Q(i).

Coefficients are stored low degree first, ``coeffs[k]`` multiplying z**k,
with trailing zeros stripped so the zero polynomial has an empty tuple.
"""

from __future__ import annotations

from functools import lru_cache

from gmpy2 import mpq

from .exactnum import (
    ONE,
    ZERO,
    ZERO_G,
    Ball,
    GaussRat,
    Rat,
    _abs_up_fast,
    _ball,
    _gr,
    abs_lower,
    abs_upper,
    gauss,
    sqrt_upper,
)


class Poly:
    __slots__ = ("coeffs", "_hash")

    def __init__(self, coeffs=()):
        cs = [gauss(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)
        self._hash = None

    @classmethod
    def _raw(cls, cs):
        # cs: list of GaussRat, may carry trailing zeros
        while cs and not cs[-1]:
            cs.pop()
        p = object.__new__(cls)
        p.coeffs = tuple(cs)
        p._hash = None
        return p

    @classmethod
    def from_roots(cls, roots, lead=1):
        p = cls([lead])
        for r in roots:
            p = p * cls([-gauss(r), 1])
        return p

    @classmethod
    def monomial(cls, k, c=1):
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lc(self) -> GaussRat:
        return self.coeffs[-1] if self.coeffs else ZERO_G

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.coeffs)
        return self._hash

    def __repr__(self):
        return f"Poly([{', '.join(str(c) for c in self.coeffs)}])"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            cs = str(c)
            if c.re and c.im:
                cs = f"({cs})"
            if k == 0:
                terms.append(cs)
            else:
                mono = "z" if k == 1 else f"z^{k}"
                terms.append(mono if c == 1 else f"-{mono}" if c == -1 else f"{cs}*{mono}")
        return " + ".join(terms).replace("+ -", "- ")

    def __add__(self, other):
        a, b = self.coeffs, _as_poly(other).coeffs
        if len(a) < len(b):
            a, b = b, a
        cs = list(a)
        for k, c in enumerate(b):
            cs[k] = cs[k] + c
        return Poly._raw(cs)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = gauss(other)
            return Poly._raw([x * c for x in self.coeffs])
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return ZERO_POLY
        out = [ZERO_G] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if not x:
                continue
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
        return Poly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = ONE_POLY
        for _ in range(k):
            result = result * self
        return result

    def __divmod__(self, other):
        return poly_divmod(self, other)

    def __floordiv__(self, other):
        return poly_divmod(self, other)[0]

    def __mod__(self, other):
        return poly_divmod(self, other)[1]

    def __call__(self, z):
        return poly_eval(self, z)

    def monic(self) -> "Poly":
        if not self.coeffs:
            raise ZeroDivisionError("zero polynomial has no monic form")
        lc = self.coeffs[-1]
        if lc == 1:
            return self
        inv = lc.inverse()
        return Poly._raw([c * inv for c in self.coeffs])


def _as_poly(x) -> Poly:
    return x if isinstance(x, Poly) else Poly([x])


ZERO_POLY = Poly()
ONE_POLY = Poly([1])
X_POLY = Poly([0, 1])


def poly_eval(P: Poly, z) -> GaussRat:
    """Horner evaluation, exact."""
    z = gauss(z)
    acc = ZERO_G
    for c in reversed(P.coeffs):
        acc = acc * z + c
    return acc


def poly_derivative(P: Poly) -> Poly:
    return Poly._raw([c * k for k, c in enumerate(P.coeffs) if k > 0])


def poly_divmod(A: Poly, B: Poly):
    if not B:
        raise ZeroDivisionError("polynomial division by zero")
    db = B.degree
    if A.degree < db:
        return ZERO_POLY, A
    inv = B.lc.inverse()
    rem = list(A.coeffs)
    q = [ZERO_G] * (A.degree - db + 1)
    bc = B.coeffs
    for k in range(A.degree - db, -1, -1):
        c = rem[k + db]
        if not c:
            continue
        c = c * inv
        q[k] = c
        for j in range(db):
            if bc[j]:
                rem[k + j] = rem[k + j] - c * bc[j]
        rem[k + db] = ZERO_G
    return Poly._raw(q), Poly._raw(rem[:db])


def poly_gcd(P: Poly, Q: Poly) -> Poly:
    """Monic gcd over Q(i) by Euclid with monic remainders."""
    if not P and not Q:
        raise ValueError("gcd undefined for two zero polynomials")
    a = P.monic() if P else P
    b = Q.monic() if Q else Q
    if a.degree < b.degree:
        a, b = b, a
    while b:
        r = poly_divmod(a, b)[1]
        a, b = b, (r.monic() if r else r)
    return a.monic()


def poly_gcdex(P: Poly, Q: Poly):
    """(g, s, t) with g = s*P + t*Q monic."""
    r0, r1 = P, Q
    s0, s1 = ONE_POLY, ZERO_POLY
    t0, t1 = ZERO_POLY, ONE_POLY
    while r1:
        q, r = poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if not r0:
        raise ValueError("gcd undefined for two zero polynomials")
    inv = r0.lc.inverse()
    return r0 * inv, s0 * inv, t0 * inv


def poly_half_gcdex(P: Poly, Q: Poly):
    """(g, s) with g = s*P mod Q monic: the cofactor half of poly_gcdex.

    Remainders are kept monic, which curbs coefficient growth considerably.
    """
    if not P or not Q:
        raise ValueError("half gcdex needs two nonzero polynomials")
    inv = P.lc.inverse()
    r0, s0 = P * inv, Poly([inv])
    r1, s1 = Q.monic(), ZERO_POLY
    while r1:
        q, r = poly_divmod(r0, r1)
        s = s0 - q * s1
        if r:
            c = r.lc.inverse()
            r, s = r * c, s * c
        r0, r1, s0, s1 = r1, r, s1, s
    return r0, s0


def squarefree_decomposition(P: Poly):
    """Yun's algorithm: [(f_i, i)] with P = lc * prod f_i**i, f_i monic squarefree."""
    if not P:
        raise ValueError("squarefree decomposition of the zero polynomial")
    if P.degree == 0:
        return []
    out = []
    f = P.monic()
    fp = poly_derivative(f)
    a = poly_gcd(f, fp)
    b = f // a
    c = fp // a
    d = c - poly_derivative(b)
    i = 1
    while b.degree > 0:
        g = poly_gcd(b, d)
        if g.degree > 0:
            out.append((g, i))
        b = b // g
        c = d // g
        d = c - poly_derivative(b)
        i += 1
    return out


def squarefree_part(P: Poly) -> Poly:
    f = P.monic()
    return f // poly_gcd(f, poly_derivative(f))


def cauchy_root_bound(P: Poly) -> Rat:
    """R = 1 + max_k |a_k| / |a_n|; every root satisfies |z| <= R."""
    if P.degree < 1:
        raise ValueError("root bound needs degree >= 1")
    lead = abs_lower(P.lc, 64)
    top = max((abs_upper(c, 64) for c in P.coeffs[:-1]), default=ZERO)
    return ONE + top / lead


def taylor_shift(P: Poly, a) -> list:
    """Coefficients of P(a + w) as a polynomial in w (list, low degree first)."""
    a = gauss(a)
    cs = list(P.coeffs)
    n = len(cs)
    if not a:
        return cs
    for i in range(n - 1):
        for k in range(n - 2, i - 1, -1):
            cs[k] = cs[k] + a * cs[k + 1]
    return cs


def poly_eval_ball(P: Poly, b: Ball, bits: int = 0) -> Ball:
    """Centered-form enclosure of P over a ball.

    |P(c + w) - P(c)| <= sum_{k>=1} |P^(k)(c)/k!| |w|^k.  With ``bits`` > 0
    the exact center value is rounded (and the error absorbed in the radius).
    """
    if not P:
        return Ball(0, 0)
    if not b.radius:
        v = _ball(poly_eval(P, b.center), ZERO)
        return v.rounded(bits) if bits else v
    shifted = taylor_shift(P, b.center)
    rad = ZERO
    rk = ONE
    for c in shifted[1:]:
        rk = rk * b.radius
        if c:
            rad += _abs_up_fast(c) * rk
    v = _ball(shifted[0], rad)
    return v.rounded(bits) if bits else v


# --- circle parameterization ------------------------------------------------
#
# s in [0, 2] walks the right half of the unit circle from -i to i through
# u(t) = ((1 - t^2) + 2ti) / (1 + t^2), t = s - 1; s in [2, 4] walks the left
# half as -u(s - 3).  Every rational s yields an exact rational point on the
# circle, and the whole loop runs counterclockwise.

def circle_point(s) -> GaussRat:
    s = mpq(s)
    if s <= 2:
        t, sign = s - 1, 1
    else:
        t, sign = s - 3, -1
    d = 1 + t * t
    return _gr(sign * (1 - t * t) / d, sign * 2 * t / d)


def arc_ball(center, radius, arc) -> Ball:
    """Smallest convenient ball (rational data) enclosing an arc of S(center, radius)."""
    s0, s1 = mpq(arc[0]), mpq(arc[1])
    if not (0 <= s0 < s1 <= 4) or (s0 < 2 < s1):
        raise ValueError("arc must lie inside one half of the parameter range")
    center = gauss(center)
    sm = (s0 + s1) / 2
    um = circle_point(sm)
    # for arcs of at most a half circle the farthest arc point from u(sm)
    # is an endpoint
    d2 = max((um - circle_point(s0)).abs2(), (um - circle_point(s1)).abs2())
    return _ball(center + um * radius, radius * sqrt_upper(d2, 40))


def poly_range_on_arc(P: Poly, center, radius, arc, bits: int = 96):
    """(lo, hi) with lo <= |P(z)| <= hi for all z on the arc."""
    radius = mpq(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    b = arc_ball(center, radius, arc)
    v = poly_eval_ball(P, b, bits)
    lo = max(ZERO, abs_lower(v.center, 64) - v.radius)
    hi = abs_upper(v.center, 64) + v.radius
    return lo, hi


@lru_cache(maxsize=4096)
def circle_range(P: Poly, center: GaussRat, radius: Rat, min_pieces: int = 16,
                 max_depth: int = 24, tight: bool = True):
    """Certified (lo, hi) for |P| on the full circle S(center, radius).

    Arcs are bisected until every arc has a positive lower bound (or
    ``max_depth`` halvings were spent on an arc).  With ``tight`` the
    arcs that determine the minimum keep being split while that improves the
    bound noticeably.
    """
    step = mpq(4, min_pieces)
    work = [(step * k, step * (k + 1), 0) for k in range(min_pieces)]
    done = []
    while work:
        s0, s1, depth = work.pop()
        lo, hi = poly_range_on_arc(P, center, radius, (s0, s1))
        if lo <= 0 and depth < max_depth:
            sm = (s0 + s1) / 2
            work.append((sm, s1, depth + 1))
            work.append((s0, sm, depth + 1))
        else:
            done.append((lo, hi, s0, s1, depth))
    lo = min(d[0] for d in done)
    if tight and lo > 0:
        # one more pass on the arcs whose lower bound is within 2x of the
        # minimum; the centered form tightens quadratically
        for _ in range(4):
            best = min(d[0] for d in done)
            bad = [d for d in done if d[0] < 2 * best and d[4] < max_depth]
            if not bad:
                break
            keep = [d for d in done if not (d[0] < 2 * best and d[4] < max_depth)]
            for plo, phi, s0, s1, depth in bad:
                sm = (s0 + s1) / 2
                for a, c in ((s0, sm), (sm, s1)):
                    # a sub-arc inherits its parent's bounds
                    l2, h2 = poly_range_on_arc(P, center, radius, (a, c))
                    keep.append((max(l2, plo), min(h2, phi), a, c, depth + 1))
            new_best = min(d[0] for d in keep)
            done = keep
            if new_best < best * mpq(11, 10):
                break
        lo = min(d[0] for d in done)
    hi = max(d[1] for d in done)
    return lo, hi
