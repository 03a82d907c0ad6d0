"""Certified eps-eigenpairs of a square complex matrix.

The input A is rounded to a rational grid, giving an exact matrix Ahat.
The eigenvalues of Ahat are the roots of its characteristic polynomial and
are handled exactly as algebraic numbers.  Eigenvectors come from exact
elimination over Q(i)[x]/(M), so Ahat v = lambda v holds with no error at
all, and every residual against A is controlled by the truncation A - Ahat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .charpoly import (
    ExactMatrix,
    InputMatrix,
    char_poly,
    char_poly_enclosure,
    frobenius_sq,
    truncate_matrix,
)
from .exactnum import (
    ONE,
    ZERO,
    Ball,
    Rat,
    _ball,
    _gr,
    abs_upper,
    ball_contains_zero,
    ball_lower_norm,
    ball_upper_norm,
    ceil_rat,
    sqrt_upper,
)
from .numberfield import (
    AlgebraicNumber,
    FieldElem,
    SplitEvent,
    invert_at,
    matrix_minus_x,
    nullspace,
)
from .poly import Poly, poly_eval_ball, poly_gcd, squarefree_decomposition
from .rootfind import (
    IsolatingBox,
    RootCluster,
    build_clusters,
    count_roots_in_box,
    isolate_roots,
    refine_box,
)


class PipelineError(RuntimeError):
    pass


MAX_DOUBLINGS = 60
EXACT_GRID_FACTOR = 1024  # accept N up to this multiple of N0 to keep A exact


@dataclass
class EpsEigenpair:
    lambda_hat: AlgebraicNumber
    lambda_ball: Ball
    vectors: list  # of lists of FieldElem over lambda_hat.modulus
    algebraic_multiplicity: int
    geometric_multiplicity: int
    cluster_id: int
    vector_balls: list = field(default_factory=list)
    norm_bounds: list = field(default_factory=list)  # (lo, hi) of ||v||_2


@dataclass
class Certificate:
    eps: Rat
    N: int
    trunc_norm_bound: Rat
    residual_bound: Rat
    true_eig_residual_bound: Rat
    rayleigh_bound: Rat
    envelope: Rat
    det_abs_upper: Rat = None


@dataclass
class RootStage:
    """Everything computed before the eigenvector solve, for one N."""

    N: int
    Ahat: ExactMatrix
    P: Poly
    sf: list
    boxes: list
    clusters: list
    delta: Rat
    max_entry_error: Rat  # upper bound on max |a_jk - ahat_jk|
    coeff_perturbation: Rat  # upper bound on max_k |coef_k(A) - coef_k(Ahat)|


def residual_envelope(n: int, eps) -> Rat:
    """An upper bound for n*sqrt(n)*eps (the comparison threshold)."""
    return sqrt_upper(mpq(n) ** 3 * mpq(eps) ** 2, 64)


def initial_truncation(n: int, eps: Rat) -> int:
    # N0 = ceil(2 n sqrt(n) / eps), computed with an upper square root
    return int(ceil_rat(2 * sqrt_upper(mpq(n) ** 3, 32) / eps))


def _squarefree_product(sf) -> Poly:
    out = Poly([1])
    for f, _ in sf:
        out = out * f
    return out


def _max_entry_error(A: ExactMatrix, Ahat: ExactMatrix) -> Rat:
    worst = ZERO
    for ra, rb in zip(A.entries, Ahat.entries):
        for a, b in zip(ra, rb):
            d = (a - b).abs2()
            if d > worst:
                worst = d
    return sqrt_upper(worst, 64) if worst else ZERO


def _coeff_perturbation(Ahat: ExactMatrix, P: Poly, radius: Rat) -> Rat:
    if not radius:
        return ZERO
    balls = char_poly_enclosure(Ahat, radius)
    worst = ZERO
    for k, b in enumerate(balls):
        c = P.coeffs[k] if k < len(P.coeffs) else _gr(ZERO, ZERO)
        d = abs_upper(b.center - c, 64) + b.radius
        if d > worst:
            worst = d
    return worst


def root_stage(A: InputMatrix, eps: Rat, N: int) -> RootStage:
    n = A.n
    Ahat = truncate_matrix(A, N)
    P = char_poly(Ahat)
    sf = squarefree_decomposition(P)
    Pstar = _squarefree_product(sf)
    boxes = [refine_box(Pstar, b, eps / 8) for b in isolate_roots(Pstar)]
    clusters = build_clusters(P, sf, boxes, eps)
    delta = min(c.delta for c in clusters)
    err = _max_entry_error(A.exact, Ahat)
    pert = _coeff_perturbation(Ahat, P, err)
    if P.degree != n:
        raise PipelineError("characteristic polynomial has the wrong degree")
    return RootStage(N, Ahat, P, sf, boxes, clusters, delta, err, pert)


def _select_truncation(A: InputMatrix, eps: Rat, max_n=None) -> RootStage:
    eps = mpq(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    N = initial_truncation(A.n, eps)
    D = A.common_denominator()
    if D <= N * EXACT_GRID_FACTOR and (max_n is None or D <= max_n):
        # a multiple of the input denominators reproduces A exactly; that is
        # worth a somewhat finer grid than the minimum
        N = -(-N // D) * D
    for _ in range(MAX_DOUBLINGS + 1):
        if max_n is not None and N > max_n:
            raise PipelineError(f"precision unreachable: N would exceed {max_n}")
        stage = root_stage(A, eps, N)
        if stage.coeff_perturbation < stage.delta:
            return stage
        N *= 2
    raise PipelineError("precision unreachable")


def choose_truncation(A: InputMatrix, eps, max_n=None) -> int:
    """Grid size N for which the truncation keeps every cluster count intact."""
    return _select_truncation(A, mpq(eps), max_n).N


# --- eigenvectors -------------------------------------------------------------

def _apply(Ahat: ExactMatrix, v, M: Poly):
    """Residue vector of (Ahat - x I) v over Q(i)[x]/(M)."""
    rows = matrix_minus_x(Ahat, M)
    out = []
    for row in rows:
        acc = FieldElem(Poly(), M)
        for a, x in zip(row, v):
            if not a.is_structurally_zero() and not x.is_structurally_zero():
                acc = acc + a * x
        out.append(acc)
    return out


def _restrict(vectors, M: Poly):
    return [[e.reduce_to(M) for e in v] for v in vectors]


def _exact_modulus(Ahat, vectors, M: Poly, box) -> Poly:
    """Largest factor of M on which (Ahat - x I) v = 0 for every v.

    Pivots are only known to be nonzero at the selected root; at other roots
    of M they may vanish, so the identity can fail there.  The gcd with the
    residual entries keeps exactly the roots where it holds, the selected
    root among them.
    """
    g = M
    for v in vectors:
        for r in _apply(Ahat, v, g):
            if r.residue:
                g = poly_gcd(g, r.residue)
    if g.degree < 1 or count_roots_in_box(g, box) != 1:
        raise PipelineError("eigenvector identity fails at the selected root")
    return g


def _log2_ceil(q: Rat) -> int:
    if q <= 0:
        return 0
    return int(q.numerator.bit_length() - q.denominator.bit_length() + 1)


def entry_balls(vec, box: IsolatingBox, bits: int = 96):
    root = _ball(box.center, box.half_diag_upper())
    out = []
    for e in vec:
        if e.residue.degree <= 0:
            c = e.residue.coeffs[0] if e.residue else _gr(ZERO, ZERO)
            out.append(_ball(c, ZERO))
        else:
            out.append(poly_eval_ball(e.residue, root, bits))
    return out


def balls_at(vectors, M: Poly, box: IsolatingBox, target: Rat, bits: int = 96):
    """Enclosures of all vector entries with radius <= target; refines the box."""
    for _ in range(40):
        balls = [entry_balls(v, box, bits) for v in vectors]
        worst = max((b.radius for bs in balls for b in bs), default=ZERO)
        if worst <= target:
            return balls, box
        shrink = max(mpq(1, 2 ** 400), target / (4 * worst))
        box = refine_box(M, box, box.half_diag_upper() * shrink)
        # rounding is relative to the size of the entries, so the working
        # precision has to cover their magnitude as well as the target
        big = max((abs_upper(b.center, 8) for bs in balls for b in bs), default=ONE)
        need = _log2_ceil(big) - _log2_ceil(target) + 32
        bits = max(bits, need)
    raise PipelineError("could not enclose eigenvector entries")


def _scale_hint(v, box) -> Rat:
    # a radius that any rough enclosure of v at the box satisfies
    rough = entry_balls(v, box, 32)
    return max((abs_upper(b.center, 8) + b.radius for b in rough), default=ONE) + ONE


def _normalize(vectors, root: AlgebraicNumber, Ahat):
    """Scale every vector so its numerically largest entry is exactly 1."""
    M, box = root.modulus, root.box
    out = []
    i = 0
    vectors = list(vectors)
    while i < len(vectors):
        v = vectors[i]
        # a coarse look first; then ask for 20 bits relative to the largest entry
        (balls,), box = balls_at([v], M, box, _scale_hint(v, box))
        target = max(abs_upper(b.center, 8) for b in balls) / 2 ** 20
        while True:
            (balls,), box = balls_at([v], M, box, target)
            nonzero = [k for k, b in enumerate(balls) if not ball_contains_zero(b)]
            if nonzero:
                break
            target /= 2 ** 20
        j = max(nonzero, key=lambda k: (balls[k].center.abs2(), -k))
        inv = invert_at(v[j], box)
        if isinstance(inv, SplitEvent):
            M = inv.survivor
            vectors = _restrict(vectors, M)
            out = _restrict(out, M)
            continue
        out.append([e * inv if not e.is_structurally_zero() else e for e in v])
        i += 1
    return out, AlgebraicNumber(M, box)


def _eigenvectors(Ahat: ExactMatrix, f: Poly, box: IsolatingBox):
    root = AlgebraicNumber(f, box)
    res = nullspace(matrix_minus_x(Ahat, f), root)
    root = res.root
    M = _exact_modulus(Ahat, res.basis, root.modulus, root.box)
    vectors = _restrict(res.basis, M)
    vectors, root = _normalize(vectors, AlgebraicNumber(M, root.box), Ahat)
    return root, vectors


# --- certificates -----------------------------------------------------------

def truncation_norm_bound(A, Ahat: ExactMatrix) -> Rat:
    """Upper bound on ||A - Ahat||_2 through the Frobenius norm."""
    E = (A.exact if isinstance(A, InputMatrix) else A) - Ahat
    f = frobenius_sq(E)
    return sqrt_upper(f, 64) if f else ZERO


def certify_residual(A, pair: EpsEigenpair, Ahat: ExactMatrix) -> Rat:
    """Bound on ||A v - lambda v|| / ||v|| for every vector of the pair.

    Ahat v = lambda v exactly, so the residual is ||(A - Ahat) v|| / ||v||,
    which the operator norm of A - Ahat bounds.
    """
    return truncation_norm_bound(A, Ahat)


def _center_gap_upper(pair: EpsEigenpair, cluster: RootCluster) -> Rat:
    box = pair.lambda_hat.box
    d = abs_upper(box.center - cluster.center, 64) + box.half_diag_upper()
    return min(d, cluster.radius)


def certify_true_eigenvalue_residual(pair: EpsEigenpair, cluster: RootCluster,
                                     trunc_bound: Rat) -> Rat:
    """Bound on ||A v - lambda v|| / ||v|| for any true eigenvalue of A in the cluster.

    ||A v - lambda v|| <= ||(A - Ahat) v|| + |lambda_hat - lambda| ||v|| and
    |lambda_hat - lambda| <= |lambda_hat - c| + |c - lambda| <= gap + radius.
    """
    return mpq(trunc_bound) + cluster.radius + _center_gap_upper(pair, cluster)


def rayleigh_residual(Ahat: ExactMatrix, balls, bits: int = 256) -> Rat:
    """Upper bound on ||Ahat v - <Ahat v, v> v|| for v / ||v||, from entry balls."""
    n = Ahat.n
    balls = [b.rounded(bits) for b in balls]
    w = []
    for j in range(n):
        acc = _ball(_gr(ZERO, ZERO), ZERO)
        for k in range(n):
            a = Ahat.entries[j][k]
            if a:
                acc = (acc + balls[k] * _ball(a, ZERO)).rounded(bits)
        w.append(acc)
    vv = _ball(_gr(ZERO, ZERO), ZERO)
    wv = _ball(_gr(ZERO, ZERO), ZERO)
    for b, c in zip(balls, w):
        vv = (vv + b * b.conj()).rounded(bits)
        wv = (wv + c * b.conj()).rounded(bits)
    rho = (wv / vv).rounded(bits)
    r = [(c - rho * b).rounded(bits) for c, b in zip(w, balls)]
    lo = ball_lower_norm(balls)
    if lo <= 0:
        raise ArithmeticError("vector enclosure contains zero")
    return ball_upper_norm(r) / lo


def rayleigh_check(pair: EpsEigenpair, Ahat: ExactMatrix, trunc_bound: Rat,
                 precision: Rat) -> Rat:
    """Certified bound on ||A u - <A u, u> u|| for the unit vector u = v/||v||.

    (I - u u*) is a projector, so the quantity is at most
    ||(I - u u*) Ahat u|| + ||A - Ahat||.  The first term vanishes exactly
    (Ahat u = lambda u); it is evaluated in ball arithmetic, tightening the
    enclosures until it drops below ``precision``.  The returned bound is
    trunc_bound + precision.
    """
    precision = mpq(precision)
    scale = ONE + sum((abs_upper(a, 32) for row in Ahat.entries for a in row), ZERO)
    target = precision / (16 * Ahat.n * scale)
    box = pair.lambda_hat.box
    M = pair.lambda_hat.modulus
    bits = 2 * _log2_ceil(1 / target) + 64
    for _ in range(12):
        balls_all, box = balls_at(pair.vectors, M, box, target)
        try:
            worst = max(rayleigh_residual(Ahat, b, bits) for b in balls_all)
        except (ArithmeticError, ZeroDivisionError):
            worst = None
        if worst is not None and worst <= precision:
            return mpq(trunc_bound) + precision
        target /= 2 ** 16
        bits += 32
    raise PipelineError("Rayleigh check did not reach the requested precision")


def det_abs_upper(A: InputMatrix, pair: EpsEigenpair) -> Rat:
    """Upper bound on |det(lambda_hat I - A)| (informational)."""
    PA = char_poly(A.exact)
    box = pair.lambda_hat.box
    v = poly_eval_ball(PA, _ball(box.center, box.half_diag_upper()), 96)
    return abs_upper(v.center, 64) + v.radius


# --- pipeline ---------------------------------------------------------------

@dataclass
class Result:
    stage: RootStage
    pairs: list
    certificates: list
    clusters: list
    eps: Rat
    trunc_norm_bound: Rat
    rayleigh_precision: Rat


def eps_eigenpairs(A: InputMatrix, eps, max_n=None, rayleigh_precision=None) -> Result:
    """Run the whole pipeline; pairs sorted by the real then imaginary part."""
    eps = mpq(eps)
    stage = _select_truncation(A, eps, max_n)
    Ahat, n = stage.Ahat, A.n
    trunc = truncation_norm_bound(A, Ahat)
    envelope = residual_envelope(n, eps)
    precision = mpq(rayleigh_precision) if rayleigh_precision is not None else eps / 2 ** 10
    pairs, certs = [], []
    for box in stage.boxes:
        f, mult = next((f, m) for f, m in stage.sf if count_roots_in_box(f, box) == 1)
        root, vectors = _eigenvectors(Ahat, f, box)
        root = AlgebraicNumber(root.modulus, refine_box(root.modulus, root.box, eps / 2 ** 20))
        cid = next(i for i, c in enumerate(stage.clusters)
                   if any(b == box for b, _ in c.members))
        rb = root.box
        pair = EpsEigenpair(root, _ball(rb.center, rb.half_diag_upper()), vectors,
                            mult, len(vectors), cid)
        pair.vector_balls, _ = balls_at(vectors, root.modulus, rb, mpq(1, 10 ** 20))
        pair.norm_bounds = [(ball_lower_norm(bs), ball_upper_norm(bs)) for bs in pair.vector_balls]
        residual = certify_residual(A, pair, Ahat)
        cert = Certificate(
            eps=eps,
            N=stage.N,
            trunc_norm_bound=trunc,
            residual_bound=residual,
            true_eig_residual_bound=certify_true_eigenvalue_residual(
                pair, stage.clusters[cid], trunc),
            rayleigh_bound=rayleigh_check(pair, Ahat, trunc, precision),
            envelope=envelope,
            det_abs_upper=det_abs_upper(A, pair),
        )
        if cert.residual_bound ** 2 > mpq(n) ** 3 * eps ** 2:
            raise PipelineError("residual bound exceeds the envelope")
        pairs.append(pair)
        certs.append(cert)
    # real parts are compared on a grid far finer than eps so that equal real
    # parts (conjugate pairs, for instance) order by the imaginary part
    grid = eps / 2 ** 10

    def key(k):
        c = pairs[k].lambda_ball.center
        return (ceil_rat(c.re / grid - mpq(1, 2)), c.im)

    order = sorted(range(len(pairs)), key=key)
    return Result(stage, [pairs[k] for k in order], [certs[k] for k in order],
                  stage.clusters, eps, trunc, precision)


def independence_certified(pairs, bits: int = 128) -> bool:
    """True when all output vectors are certified linearly independent.

    Vectors of one pair come out of a single echelon form and are
    independent by construction.  Across pairs the Gram determinant of the
    enclosures is evaluated in ball arithmetic and must exclude zero.
    """
    vecs = [[b.rounded(bits) for b in bs] for p in pairs for bs in p.vector_balls]
    m = len(vecs)
    if m == 0:
        return True
    G = [[_ball(_gr(ZERO, ZERO), ZERO) for _ in range(m)] for _ in range(m)]
    for a in range(m):
        for b in range(m):
            acc = _ball(_gr(ZERO, ZERO), ZERO)
            for x, y in zip(vecs[a], vecs[b]):
                acc = (acc + x.conj() * y).rounded(bits)
            G[a][b] = acc
    # Gaussian elimination in ball arithmetic; each pivot must exclude zero
    for c in range(m):
        piv = G[c][c]
        if ball_contains_zero(piv):
            return False
        inv = piv.inverse().rounded(bits)
        for r in range(c + 1, m):
            f = (G[r][c] * inv).rounded(bits)
            for k in range(c, m):
                G[r][k] = (G[r][k] - f * G[c][k]).rounded(bits)
    return True
