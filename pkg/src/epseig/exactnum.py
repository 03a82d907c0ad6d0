"""Exact rational and Gaussian-rational scalars, plus complex ball arithmetic.

Rationals are ``gmpy2.mpq`` values (always in lowest terms, positive
denominator).  ``GaussRat`` pairs two of them into an exact element of
Q(i).  ``Ball`` is a midpoint-radius enclosure of a complex number whose
operations are outward-conservative: every bound that would need a square
root is replaced by a one-sided rational bound.
"""

from __future__ import annotations

import re
from fractions import Fraction

from gmpy2 import isqrt, mpq, mpz

Rat = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)


class ParseError(ValueError):
    pass


def rat(x) -> Rat:
    """Coerce ints, Fractions, mpq and literal strings to an exact rational."""
    if isinstance(x, Rat):
        return x
    if isinstance(x, (int, type(mpz(0)))):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        # floats are exact binary rationals; never used for certified data
        f = Fraction(x)
        return mpq(f.numerator, f.denominator)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def parse_rational(text: str) -> Rat:
    """Parse ``"p/q"``, ``"-1.25"`` or ``"1e-3"`` exactly (no rounding)."""
    s = text.strip().replace("−", "-")
    if not s:
        raise ParseError("empty rational literal")
    try:
        f = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational literal {text!r}") from exc
    return mpq(f.numerator, f.denominator)


def rat_str(q: Rat) -> str:
    return str(q)


def floor_rat(q: Rat) -> mpz:
    return q.numerator // q.denominator


def ceil_rat(q: Rat) -> mpz:
    return -((-q.numerator) // q.denominator)


# --- one-sided square roots -------------------------------------------------

def _sqrt_scaled(q: Rat, k: int):
    """Return (s, exact, scale) with s = floor(sqrt(q) * scale), scale = b*2^k."""
    a, b = q.numerator, q.denominator
    x = a * b << (2 * k)
    s = isqrt(x)
    return s, s * s == x, b << k


def _sqrt_k(q: Rat, bits: int) -> int:
    # smallest k >= k0 meeting the accuracy contract; k0 is nondecreasing in
    # bits, which makes the upper bound monotone in bits
    k = max(0, bits + 3 - q.denominator.bit_length())
    bound = max(ONE, q) / (mpz(1) << bits)
    while True:
        s, exact, scale = _sqrt_scaled(q, k)
        if exact:
            return k
        u = mpq(s + 1, scale)
        if u * u - q <= bound:
            return k
        k += 1


def sqrt_upper(q: Rat, bits: int = 64) -> Rat:
    """Rational u >= sqrt(q) with u^2 - q <= 2^-bits * max(1, q)."""
    if q < 0:
        raise ValueError("sqrt of a negative rational")
    if q == 0:
        return ZERO
    k = _sqrt_k(q, bits)
    s, exact, scale = _sqrt_scaled(q, k)
    return mpq(s if exact else s + 1, scale)


def sqrt_lower(q: Rat, bits: int = 64) -> Rat:
    """Rational l <= sqrt(q), with the same accuracy scale as ``sqrt_upper``."""
    if q < 0:
        raise ValueError("sqrt of a negative rational")
    if q == 0:
        return ZERO
    k = _sqrt_k(q, bits)
    s, _, scale = _sqrt_scaled(q, k)
    return mpq(s, scale)


# --- Gaussian rationals -----------------------------------------------------

class GaussRat:
    """Exact complex rational ``re + im*i``; immutable."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = rat(re)
        self.im = rat(im)

    @staticmethod
    def _coerce(x) -> "GaussRat":
        if isinstance(x, GaussRat):
            return x
        if isinstance(x, complex):
            return GaussRat(x.real, x.imag)
        return GaussRat(x, 0)

    def __add__(self, other):
        o = GaussRat._coerce(other)
        return _gr(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussRat._coerce(other)
        return _gr(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRat._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, GaussRat):
            a, b, c, d = self.re, self.im, other.re, other.im
            return _gr(a * c - b * d, a * d + b * c)
        o = rat(other)
        return _gr(self.re * o, self.im * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRat._coerce(other)
        if not o:
            raise ZeroDivisionError("division by zero Gaussian rational")
        if not o.im:
            return _gr(self.re / o.re, self.im / o.re)
        return self * o.inverse()

    def __rtruediv__(self, other):
        return GaussRat._coerce(other) / self

    def __neg__(self):
        return _gr(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result, base = ONE_G, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "GaussRat":
        d = self.re * self.re + self.im * self.im
        if d == 0:
            raise ZeroDivisionError("inverse of zero")
        return _gr(self.re / d, -self.im / d)

    def conj(self) -> "GaussRat":
        return _gr(self.re, -self.im)

    def abs2(self) -> Rat:
        return self.re * self.re + self.im * self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rat, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRat({self})"

    def __str__(self):
        return gauss_str(self)


def _gr(re: Rat, im: Rat) -> GaussRat:
    # fast constructor for values that are already mpq
    z = object.__new__(GaussRat)
    z.re = re
    z.im = im
    return z


ZERO_G = _gr(ZERO, ZERO)
ONE_G = _gr(ONE, ZERO)
I_G = _gr(ZERO, ONE)


def gauss(x) -> GaussRat:
    if isinstance(x, GaussRat):
        return x
    if isinstance(x, str):
        return parse_complex(x)
    return GaussRat._coerce(x)


def gauss_str(z: GaussRat) -> str:
    """Canonical exact rendering: ``"3/4"``, ``"-2i"``, ``"1/2-3/4i"``."""
    if not z.im:
        return str(z.re)
    im = "" if z.im == 1 else "-" if z.im == -1 else str(z.im)
    if not z.re:
        return f"{im}i"
    sign = "" if z.im < 0 else "+"
    return f"{z.re}{sign}{im}i"


_SPLIT = re.compile(r"(?<=[^eE])[+-]")


def parse_complex(text: str) -> GaussRat:
    """Parse ``"a"``, ``"bi"``, ``"a+bi"``, ``"a-bi"`` (parts as p/q or decimals)."""
    s = text.strip().replace(" ", "").replace("−", "-")
    if not s:
        raise ParseError("empty complex literal")
    if s[-1] not in "ij":
        return _gr(parse_rational(s), ZERO)
    body = s[:-1]
    cut = None
    for m in _SPLIT.finditer(body):
        if m.start() > 0:
            cut = m.start()
    if cut is None:
        re_part, im_part = "", body
    else:
        re_part, im_part = body[:cut], body[cut:]
    if im_part in ("", "+"):
        im = ONE
    elif im_part == "-":
        im = -ONE
    else:
        im = parse_rational(im_part)
    re_val = parse_rational(re_part) if re_part else ZERO
    return _gr(re_val, im)


def gauss_abs2(z: GaussRat) -> Rat:
    """Exact squared modulus."""
    return z.abs2()


def abs_upper(z: GaussRat, bits: int = 64) -> Rat:
    """Rational u >= |z| with u^2 - |z|^2 <= 2^-bits * max(1, |z|^2)."""
    return sqrt_upper(z.abs2(), bits)


def abs_lower(z: GaussRat, bits: int = 64) -> Rat:
    return sqrt_lower(z.abs2(), bits)


def _abs_up_fast(z: GaussRat) -> Rat:
    # cheap, looser upper bound used for radius propagation
    if not z.im:
        return abs(z.re)
    if not z.re:
        return abs(z.im)
    return sqrt_upper(z.abs2(), 32)


def round_dyadic(q: Rat, k: int) -> Rat:
    """Nearest multiple of 2^-k (ties toward +inf)."""
    d = q.denominator
    if d & (d - 1) == 0 and d.bit_length() - 1 <= k:
        return q
    if k >= 0:
        m = (q.numerator << (k + 1)) // q.denominator
        return mpq((m + 1) >> 1, mpz(1) << k)
    m = q.numerator // (q.denominator << (-k - 1))
    return mpq(((m + 1) >> 1) << (-k), 1)


def round_up_short(q: Rat, sig: int = 32) -> Rat:
    """A dyadic upper bound for q >= 0 with about ``sig`` significant bits."""
    if not q:
        return q
    d = q.denominator
    if d & (d - 1) == 0 and q.numerator.bit_length() <= sig:
        return q
    k = sig - (q.numerator.bit_length() - d.bit_length())
    if k >= 0:
        return mpq(-((-q.numerator << k) // d), mpz(1) << k)
    return mpq(-((-q.numerator) // (d << -k)) << -k, 1)


# --- balls ------------------------------------------------------------------

class Ball:
    """Closed disk {z : |z - center| <= radius} with exact rational data."""

    __slots__ = ("center", "radius")

    def __init__(self, center, radius=0):
        self.center = gauss(center)
        self.radius = rat(radius)
        if self.radius < 0:
            raise ValueError("ball radius must be non-negative")

    @staticmethod
    def _coerce(x) -> "Ball":
        if isinstance(x, Ball):
            return x
        return _ball(gauss(x), ZERO)

    def __add__(self, other):
        o = Ball._coerce(other)
        return _ball(self.center + o.center, self.radius + o.radius)

    __radd__ = __add__

    def __sub__(self, other):
        o = Ball._coerce(other)
        return _ball(self.center - o.center, self.radius + o.radius)

    def __rsub__(self, other):
        return Ball._coerce(other) - self

    def __neg__(self):
        return _ball(-self.center, self.radius)

    def __mul__(self, other):
        o = Ball._coerce(other)
        r1, r2 = self.radius, o.radius
        rad = ZERO
        if r2:
            rad += _abs_up_fast(self.center) * r2
        if r1:
            rad += _abs_up_fast(o.center) * r1 + r1 * r2
        return _ball(self.center * o.center, rad)

    __rmul__ = __mul__

    def inverse(self) -> "Ball":
        """Enclosure of 1/z over the ball; the ball must exclude zero."""
        lo = sqrt_lower(self.center.abs2(), 64) - self.radius
        if lo <= 0:
            raise ZeroDivisionError("ball contains zero")
        c = self.center.inverse()
        # |1/z - 1/c| = |z - c| / (|z||c|) <= r / (lo * |c|_lower)
        return _ball(c, self.radius / (lo * (lo + self.radius)))

    def __truediv__(self, other):
        return self * Ball._coerce(other).inverse()

    def conj(self) -> "Ball":
        return _ball(self.center.conj(), self.radius)

    def abs2(self) -> "Ball":
        """Real ball enclosing |z|^2."""
        return self * self.conj()

    def contains(self, z) -> bool:
        z = gauss(z)
        return (z - self.center).abs2() <= self.radius * self.radius

    def contains_ball(self, other: "Ball") -> bool:
        if other.radius > self.radius:
            return False
        gap = self.radius - other.radius
        return (other.center - self.center).abs2() <= gap * gap

    def rounded(self, bits: int) -> "Ball":
        """Round the center to a dyadic grid about ``bits`` below its magnitude."""
        c = self.center
        mag = max(abs(c.re), abs(c.im))
        if not mag:
            return _ball(c, round_up_short(self.radius))
        e = mag.numerator.bit_length() - mag.denominator.bit_length()
        k = bits - e
        re, im = round_dyadic(c.re, k), round_dyadic(c.im, k)
        err = abs(re - c.re) + abs(im - c.im)
        return _ball(_gr(re, im), round_up_short(self.radius + err))

    def __repr__(self):
        return f"Ball({self.center}, {self.radius})"


def _ball(center: GaussRat, radius: Rat) -> Ball:
    b = object.__new__(Ball)
    b.center = center
    b.radius = radius
    return b


def ball_abs_bounds(b: Ball, bits: int = 64):
    """(lo, hi) with lo <= |z| <= hi for every z in the ball."""
    lo = max(ZERO, abs_lower(b.center, bits) - b.radius)
    hi = abs_upper(b.center, bits) + b.radius
    return lo, hi


def ball_contains_zero(b: Ball) -> bool:
    return b.center.abs2() <= b.radius * b.radius


def ball_upper_norm(balls) -> Rat:
    """Upper bound on the Euclidean norm of a vector enclosed by balls."""
    total = ZERO
    for b in balls:
        hi = abs_upper(b.center, 64) + b.radius
        total += hi * hi
    return sqrt_upper(total, 64)


def ball_lower_norm(balls) -> Rat:
    total = ZERO
    for b in balls:
        lo = max(ZERO, abs_lower(b.center, 64) - b.radius)
        total += lo * lo
    return sqrt_lower(total, 64)


def decimal_str(q: Rat, digits: int = 15) -> str:
    """Round-to-nearest decimal rendering with ``digits`` fractional digits."""
    scale = mpz(10) ** digits
    m = (q.numerator * scale * 2 + q.denominator) // (2 * q.denominator)
    sign = "-" if m < 0 else ""
    m = abs(m)
    whole, frac = divmod(m, scale)
    text = f"{sign}{whole}.{str(frac).rjust(digits, '0')}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def decimal_round_error(q: Rat, digits: int = 15) -> Rat:
    return abs(parse_rational(decimal_str(q, digits)) - q)


def sci_upper(q: Rat, sig: int = 3) -> str:
    """Decimal string ``s`` in scientific notation with value(s) >= q >= 0."""
    if q <= 0:
        return "0"
    e = len(str(q.numerator)) - len(str(q.denominator))
    exp = e - sig
    while True:
        scale = mpq(10) ** exp
        m = ceil_rat(q / scale)
        if m < 10 ** sig:
            break
        exp += 1
    return _sci_text(m, exp)


def sci_lower(q: Rat, sig: int = 3) -> str:
    """Decimal string ``s`` in scientific notation with 0 <= value(s) <= q."""
    if q <= 0:
        return "0"
    e = len(str(q.numerator)) - len(str(q.denominator))
    exp = e - sig
    while True:
        m = floor_rat(q / mpq(10) ** exp)
        if m < 10 ** sig:
            break
        exp += 1
    return _sci_text(m, exp)


def _sci_text(m, exp: int) -> str:
    m = int(m)
    while m and m % 10 == 0:
        m //= 10
        exp += 1
    if m == 0:
        return "0"
    digits = str(m)
    exp += len(digits) - 1
    mant = digits[0] + ("." + digits[1:] if len(digits) > 1 else "")
    return f"{mant}e{exp}" if exp else mant
