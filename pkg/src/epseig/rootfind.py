"""Certified complex root counting, isolation, refinement and clustering.

Root counting uses the winding number of P around the boundary of an
axis-parallel box.  Each edge z(t) = a + h*t, t in [0, 1], turns P into two
real polynomials U(t) = Re P(z(t)) and V(t) = Im P(z(t)) with integer
coefficients (after clearing denominators).  An edge piece on which U or V
provably keeps one strict sign stays inside an open half-plane, so its
quarter-turn count is read off from the quadrants of its endpoints.  Pieces
where neither sign can be certified are bisected.  Sign certificates come
from Descartes' rule on [0, 1], all in integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import gmpy2
from gmpy2 import mpq, mpz

from .exactnum import (
    ONE,
    ZERO,
    GaussRat,
    Rat,
    _gr,
    abs_upper,
    gauss,
)
from .poly import (
    Poly,
    cauchy_root_bound,
    circle_range,
    poly_derivative,
    poly_eval,
    taylor_shift,
)


class BoundaryContact(ArithmeticError):
    """P vanishes on (or cannot be separated from) a box boundary."""


class ClusterSphereError(ArithmeticError):
    """No positive lower bound for |P| on a cluster sphere."""


@dataclass(frozen=True)
class IsolatingBox:
    lo: GaussRat
    hi: GaussRat
    count: int = 1

    def __post_init__(self):
        if not (self.lo.re < self.hi.re and self.lo.im < self.hi.im):
            raise ValueError("degenerate box")

    @property
    def center(self) -> GaussRat:
        return _gr((self.lo.re + self.hi.re) / 2, (self.lo.im + self.hi.im) / 2)

    @property
    def width(self) -> Rat:
        return self.hi.re - self.lo.re

    @property
    def height(self) -> Rat:
        return self.hi.im - self.lo.im

    def half_diag_sq(self) -> Rat:
        return (self.width * self.width + self.height * self.height) / 4

    def half_diag_upper(self) -> Rat:
        return abs_upper(_gr(self.width / 2, self.height / 2), 32)

    def contains(self, z) -> bool:
        """Closed containment."""
        z = gauss(z)
        return self.lo.re <= z.re <= self.hi.re and self.lo.im <= z.im <= self.hi.im

    def contains_box(self, other: "IsolatingBox") -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def intersection(self, other: "IsolatingBox") -> Optional["IsolatingBox"]:
        lo = _gr(max(self.lo.re, other.lo.re), max(self.lo.im, other.lo.im))
        hi = _gr(min(self.hi.re, other.hi.re), min(self.hi.im, other.hi.im))
        if lo.re < hi.re and lo.im < hi.im:
            return IsolatingBox(lo, hi, 0)
        return None

    def with_count(self, count: int) -> "IsolatingBox":
        return IsolatingBox(self.lo, self.hi, count)


def make_box(x0, y0, x1, y1, count: int = 0) -> IsolatingBox:
    return IsolatingBox(_gr(mpq(x0), mpq(y0)), _gr(mpq(x1), mpq(y1)), count)


# --- integer polynomial helpers -------------------------------------------

def _trim(q):
    while q and not q[-1]:
        q.pop()
    return q


def _shift1(q):
    """Coefficients of q(s + 1)."""
    c = list(q)
    n = len(c)
    for i in range(n - 1):
        for k in range(n - 2, i - 1, -1):
            c[k] += c[k + 1]
    return c


def _halve(q):
    """Coefficients of 2^d q(s / 2), d = deg q."""
    d = len(q) - 1
    return [c << (d - j) for j, c in enumerate(q)]


def _sign_fixed_01(q) -> bool:
    """True if q provably has one strict sign on the closed interval [0, 1]."""
    if not q:
        return False
    if len(q) == 1:
        return True
    t = _shift1(q[::-1])
    if t[0] > 0:
        return all(c > 0 for c in t)
    if t[0] < 0:
        return all(c < 0 for c in t)
    return False


def _quadrant(u, v) -> int:
    # half-open quadrants; (0, 0) never reaches here
    if u > 0 and v >= 0:
        return 0
    if u <= 0 and v > 0:
        return 1
    if u < 0 and v <= 0:
        return 2
    return 3


_TURN = {0: 0, 1: 1, 3: -1}


def _sturm_count_01(g) -> int:
    """Number of distinct real roots of the rational polynomial g in [0, 1]."""
    g = [mpq(c) for c in g]
    _trim(g)
    if len(g) <= 1:
        return 0
    seq = [g, _trim([mpq(c * k) for k, c in enumerate(g)][1:])]
    while len(seq[-1]) > 1:
        a, b = seq[-2], seq[-1]
        r = list(a)
        while len(r) >= len(b) and r:
            f = r[-1] / b[-1]
            off = len(r) - len(b)
            for j, c in enumerate(b):
                r[off + j] -= f * c
            r.pop()
            _trim(r)
        if not r:
            break
        seq.append([-c for c in r])

    def variations(x):
        signs = []
        for p in seq:
            v = ZERO
            for c in reversed(p):
                v = v * x + c
            if v:
                signs.append(v > 0)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    # roots in (0, 1] plus a root at 0
    count = variations(ZERO) - variations(ONE)
    if g[0] == 0:
        count += 1
    return count


def _common_root_01(U, V) -> bool:
    a = [mpq(c) for c in U]
    b = [mpq(c) for c in V]
    _trim(a)
    _trim(b)
    if not a:
        a, b = b, a
    if not b:
        return _sturm_count_01(a) > 0
    # rational Euclid
    while b:
        r = list(a)
        while len(r) >= len(b) and r:
            f = r[-1] / b[-1]
            off = len(r) - len(b)
            for j, c in enumerate(b):
                r[off + j] -= f * c
            r.pop()
            _trim(r)
        a, b = b, r
    return len(a) > 1 and _sturm_count_01(a) > 0


# --- root counting --------------------------------------------------------

_CONTACT_CHECK_DEPTH = 24
_MAX_EDGE_DEPTH = 400


class RootCounter:
    """Winding-number root counter for one polynomial, caching edge results."""

    def __init__(self, P: Poly):
        if not P:
            raise ValueError("cannot count roots of the zero polynomial")
        self.P = P
        self._edges = {}

    def _edge_polys(self, a: GaussRat, h: GaussRat):
        b = taylor_shift(self.P, a)
        hk = ONE
        cs = []
        for k, c in enumerate(b):
            if k:
                hk = h * hk if k > 1 else h
                c = c * hk
            cs.append(c)
        den = mpz(1)
        for c in cs:
            den = gmpy2.lcm(den, c.re.denominator)
            den = gmpy2.lcm(den, c.im.denominator)
        U = _trim([c.re.numerator * (den // c.re.denominator) for c in cs])
        V = _trim([c.im.numerator * (den // c.im.denominator) for c in cs])
        return U, V

    def _turns(self, U, V, depth=0, checked=False) -> int:
        if _sign_fixed_01(U) or _sign_fixed_01(V):
            u0 = U[0] if U else 0
            v0 = V[0] if V else 0
            q0 = _quadrant(u0, v0)
            q1 = _quadrant(sum(U), sum(V))
            return _TURN[(q1 - q0) % 4]
        if depth >= _CONTACT_CHECK_DEPTH and not checked:
            if _common_root_01(U, V):
                raise BoundaryContact("polynomial vanishes on a box edge")
            checked = True
        if depth >= _MAX_EDGE_DEPTH:
            raise BoundaryContact("edge subdivision limit reached")
        UL, VL = _halve(U) if U else U, _halve(V) if V else V
        # keep both polynomials at the same nominal degree for halving
        return (self._turns(UL, VL, depth + 1, checked)
                + self._turns(_shift1(UL), _shift1(VL), depth + 1, checked))

    def edge_turns(self, a: GaussRat, b: GaussRat) -> int:
        """Signed quarter turns of P along the segment a -> b (axis-parallel)."""
        key = (a.re, a.im, b.re, b.im)
        hit = self._edges.get(key)
        if hit is None:
            U, V = self._edge_polys(a, b - a)
            hit = self._turns(U, V)
            self._edges[key] = hit
        return hit

    def count(self, box: IsolatingBox) -> int:
        x0, y0, x1, y1 = box.lo.re, box.lo.im, box.hi.re, box.hi.im
        sw, se = _gr(x0, y0), _gr(x1, y0)
        nw, ne = _gr(x0, y1), _gr(x1, y1)
        total = (self.edge_turns(sw, se) + self.edge_turns(se, ne)
                 - self.edge_turns(nw, ne) - self.edge_turns(sw, nw))
        if total % 4:
            raise AssertionError("winding count not a multiple of four")
        return total // 4


@lru_cache(maxsize=256)
def _counter(P: Poly) -> RootCounter:
    return RootCounter(P)


def count_roots_in_box(P: Poly, box) -> int:
    """Number of roots of P (with multiplicity) strictly inside the box.

    Raises BoundaryContact when P has a root on the boundary.
    """
    if not isinstance(box, IsolatingBox):
        (x0, y0), (x1, y1) = box
        box = make_box(x0, y0, x1, y1)
    if P.degree == 0:
        return 0
    return _counter(P).count(box)


# --- isolation ------------------------------------------------------------

# rational nudges tried when a split line meets a root
_JITTER = [mpq(0)] + [mpq(s * k, 53) for k in range(1, 12) for s in (1, -1)]


def _split4(counter: RootCounter, box: IsolatingBox):
    x0, y0, x1, y1 = box.lo.re, box.lo.im, box.hi.re, box.hi.im
    w, h = x1 - x0, y1 - y0
    for j in _JITTER:
        mx = x0 + w * (mpq(1, 2) + j / 4)
        my = y0 + h * (mpq(1, 2) - j / 5)
        kids = [make_box(x0, y0, mx, my), make_box(mx, y0, x1, my),
                make_box(x0, my, mx, y1)]
        try:
            counts = [counter.count(k) for k in kids]
        except BoundaryContact:
            continue
        ne = make_box(mx, my, x1, y1)
        counts.append(box.count - sum(counts))
        kids.append(ne)
        return [k.with_count(c) for k, c in zip(kids, counts)]
    raise BoundaryContact("could not find a root-free split")


def isolate_roots(Pstar: Poly):
    """Disjoint boxes, one per distinct root of the squarefree polynomial Pstar."""
    if Pstar.degree < 1:
        raise ValueError("isolation needs degree >= 1")
    counter = _counter(Pstar)
    R = cauchy_root_bound(Pstar) + mpq(1, 8)
    root = make_box(-R, -R, R, R)
    total = counter.count(root)
    if total != Pstar.degree:
        raise ValueError("polynomial is not squarefree or root bound failed")
    queue = [root.with_count(total)]
    found = []
    while queue:
        box = queue.pop()
        if box.count == 0:
            continue
        if box.count == 1:
            found.append(box)
            continue
        queue.extend(_split4(counter, box))
    return sorted(found, key=lambda b: (b.center.re, b.center.im))


def _halves(box: IsolatingBox, t: Rat):
    x0, y0, x1, y1 = box.lo.re, box.lo.im, box.hi.re, box.hi.im
    if box.width >= box.height:
        m = x0 + (x1 - x0) * t
        return make_box(x0, y0, m, y1), make_box(m, y0, x1, y1)
    m = y0 + (y1 - y0) * t
    return make_box(x0, y0, x1, m), make_box(x0, m, x1, y1)


def refine_box(Pstar: Poly, box: IsolatingBox, target_radius) -> IsolatingBox:
    """Shrink an isolating box until its half-diagonal is <= target_radius."""
    target = mpq(target_radius)
    if target <= 0:
        raise ValueError("target radius must be positive")
    counter = _counter(Pstar)
    t2 = target * target
    step = 0
    while box.half_diag_sq() > t2:
        if step % 4 == 3:
            shortcut = _newton_box(counter, box, target)
            if shortcut is not None:
                return shortcut
        step += 1
        for j in _JITTER:
            first, second = _halves(box, mpq(1, 2) + j / 4)
            try:
                c = counter.count(first)
            except BoundaryContact:
                continue
            box = (first if c == 1 else second).with_count(1)
            break
        else:
            raise BoundaryContact("could not bisect isolating box")
    return box.with_count(1)


def _newton_box(counter: RootCounter, box: IsolatingBox, target: Rat):
    """Try to jump straight to a target-sized box by Newton steps.

    The candidate is accepted only if it lies inside ``box`` and the exact
    counter certifies exactly one root in it, so it isolates the same root.
    """
    P = counter.P
    dP = _derivative(P)
    z = box.center
    small = (target / 8) ** 2
    for _ in range(40):
        d = poly_eval(dP, z)
        if not d:
            return None
        step = poly_eval(P, z) / d
        z = z - step
        z = _gr(_round_bits(z.re, target), _round_bits(z.im, target))
        if not box.contains(z):
            return None
        if step.abs2() <= small:
            break
    else:
        return None
    half = target / 2
    try:
        cand = IsolatingBox(_gr(z.re - half, z.im - half), _gr(z.re + half, z.im + half), 1)
    except ValueError:
        return None
    if not box.contains_box(cand):
        return None
    try:
        if counter.count(cand) == 1:
            return cand
    except BoundaryContact:
        pass
    return None


@lru_cache(maxsize=256)
def _derivative(P: Poly) -> Poly:
    return poly_derivative(P)


def _round_bits(q: Rat, target: Rat) -> Rat:
    # keep Newton iterates on a dyadic grid well below the target scale
    k = max(0, 2 * (target.denominator.bit_length() - target.numerator.bit_length()) + 40)
    return mpq((q.numerator << k) // q.denominator, mpz(1) << k)


# --- clusters -------------------------------------------------------------

@dataclass(frozen=True)
class RootCluster:
    center: GaussRat
    radius: Rat
    members: tuple  # of (IsolatingBox, multiplicity)
    total_multiplicity: int
    s_lower: Rat
    p_upper: Rat
    delta: Rat

    def contains(self, z) -> bool:
        z = gauss(z)
        return (z - self.center).abs2() <= self.radius * self.radius


def multiplicity_of(box: IsolatingBox, sf) -> int:
    for f, m in sf:
        if f.degree > 0 and count_roots_in_box(f, box) == 1:
            return m
    raise ValueError("box does not isolate a root of the decomposition")


def sphere_bounds(P: Poly, center: GaussRat, radius: Rat):
    """(s_lower, p_upper) for the sphere S(center, radius) and monic P."""
    lo, _ = circle_range(P, center, radius)
    if lo <= 0:
        raise ClusterSphereError("cluster sphere too close to a root")
    n = P.degree
    rho = abs_upper(center, 64) + radius
    p = ZERO
    term = ONE
    for _ in range(n):
        p += term
        term *= rho
    return lo, p


def build_clusters(P: Poly, sf, boxes, eps):
    """Group refined root boxes into disjoint disks with Rouche bounds.

    Every distinct root starts as a disk of radius eps around its box center.
    Overlapping disks are merged into the disk centered at the mean of the
    member centers with radius (number of members) * eps; that disk contains
    both parents.  Merging stops when all disks are pairwise disjoint, so the
    radius of a cluster is always a rung k*eps, k <= deg P.
    """
    eps = mpq(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    slack2 = (eps / 8) ** 2
    for b in boxes:
        if b.half_diag_sq() > slack2:
            raise ValueError("boxes must be refined to half-diagonal <= eps/8")
    members = sorted(((b, multiplicity_of(b, sf)) for b in boxes),
                     key=lambda bm: (bm[0].center.re, bm[0].center.im))
    groups = [[bm] for bm in members]

    def disk(g):
        k = len(g)
        cx = sum((b.center.re for b, _ in g), ZERO) / k
        cy = sum((b.center.im for b, _ in g), ZERO) / k
        return _gr(cx, cy), eps * k

    merged = True
    while merged:
        merged = False
        disks = [disk(g) for g in groups]
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                (ci, ri), (cj, rj) = disks[i], disks[j]
                if (ci - cj).abs2() <= (ri + rj) ** 2:
                    groups[i] = sorted(groups[i] + groups[j],
                                       key=lambda bm: (bm[0].center.re, bm[0].center.im))
                    del groups[j]
                    merged = True
                    break
            if merged:
                break

    clusters = []
    for g in groups:
        c, r = disk(g)
        s, p = sphere_bounds(P, c, r)
        clusters.append(RootCluster(c, r, tuple(g), sum(m for _, m in g), s, p, s / p))
    if sum(c.total_multiplicity for c in clusters) != P.degree:
        raise AssertionError("cluster multiplicities do not add up to the degree")
    return sorted(clusters, key=lambda c: (c.center.re, c.center.im))


def compute_delta(P: Poly, clusters) -> Rat:
    """min over clusters of s_lower / p_upper for the monic polynomial P."""
    if not P.is_monic():
        raise ValueError("compute_delta needs a monic polynomial")
    best = None
    for cl in clusters:
        s, p = sphere_bounds(P, cl.center, cl.radius)
        d = s / p
        if best is None or d < best:
            best = d
    return best


def disk_count(P: Poly, center, radius, max_depth: int = 200) -> int:
    """Roots of P (with multiplicity) inside the open disk; for test oracles
    and verification.  Requires no root of P on the circle."""
    from .poly import squarefree_decomposition

    center = gauss(center)
    radius = mpq(radius)
    total = 0
    for f, m in squarefree_decomposition(P):
        for box in isolate_roots(f):
            b = box
            for _ in range(max_depth):
                state = _box_vs_disk(b, center, radius)
                if state is not None:
                    break
                b = refine_box(f, b, b.half_diag_upper() / 2)
            else:
                raise ClusterSphereError("root too close to the circle")
            if state:
                total += m
    return total


def _box_vs_disk(box: IsolatingBox, c: GaussRat, r: Rat):
    corners = [box.lo, box.hi, _gr(box.lo.re, box.hi.im), _gr(box.hi.re, box.lo.im)]
    r2 = r * r
    if all((z - c).abs2() < r2 for z in corners):
        return True
    # nearest point of the box to c
    nx = min(max(c.re, box.lo.re), box.hi.re)
    ny = min(max(c.im, box.lo.im), box.hi.im)
    if (_gr(nx, ny) - c).abs2() > r2:
        return False
    return None
