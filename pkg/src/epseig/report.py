"""JSON reports for solved matrices and their independent re-verification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from gmpy2 import mpq

from .charpoly import InputMatrix, char_poly, char_poly_enclosure, truncate_matrix
from .eigen import (
    EpsEigenpair,
    Result,
    balls_at,
    certify_true_eigenvalue_residual,
    independence_certified,
    rayleigh_check,
    truncation_norm_bound,
)
from .exactnum import (
    ZERO,
    ParseError,
    _ball,
    _gr,
    abs_lower,
    abs_upper,
    ball_lower_norm,
    ball_upper_norm,
    decimal_round_error,
    decimal_str,
    gauss_str,
    parse_complex,
    parse_rational,
    sci_lower,
    sci_upper,
    sqrt_upper,
)
from .numberfield import AlgebraicNumber, FieldElem
from .poly import Poly, circle_point, circle_range, poly_derivative, poly_divmod, poly_eval, poly_gcd
from .rootfind import IsolatingBox, RootCluster, count_roots_in_box, disk_count

FORMAT = "epseig-report/1"


# --- serialization helpers --------------------------------------------------

def q_str(q) -> str:
    return str(mpq(q))


def poly_to_json(P: Poly) -> list:
    return [gauss_str(c) for c in P.coeffs]


def poly_from_json(data) -> Poly:
    return Poly([parse_complex(s) for s in data])


def box_to_json(b: IsolatingBox) -> dict:
    return {"lo": gauss_str(b.lo), "hi": gauss_str(b.hi)}


def box_from_json(d) -> IsolatingBox:
    return IsolatingBox(parse_complex(d["lo"]), parse_complex(d["hi"]), 1)


def _digits_for(radius, cap: int = 15) -> int:
    # one digit past the first that the radius leaves uncertain
    d = 0
    while d < cap and radius < mpq(1, 10 ** d):
        d += 1
    return min(cap, d + 1)


def ball_to_json(b, digits: int = None) -> dict:
    """Decimal rendering of a ball; the radius also covers the rounding."""
    if digits is None:
        digits = _digits_for(b.radius)
    re = decimal_str(b.center.re, digits)
    im = decimal_str(b.center.im, digits)
    slack = decimal_round_error(b.center.re, digits) + decimal_round_error(b.center.im, digits)
    return {"re": re, "im": im, "radius": sci_upper(b.radius + slack, 3)}


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# --- building ---------------------------------------------------------------

def build_report(A: InputMatrix, result: Result, eps_text: str, timing=None) -> dict:
    stage = result.stage
    clusters = []
    for k, c in enumerate(result.clusters):
        clusters.append({
            "id": k,
            "center": gauss_str(c.center),
            "radius": q_str(c.radius),
            "multiplicity": c.total_multiplicity,
            "s_lower": q_str(c.s_lower),
            "p_upper": q_str(c.p_upper),
            "delta": sci_lower(c.delta),
        })
    pairs = []
    for p, cert in zip(result.pairs, result.certificates):
        vecs = []
        for v, balls, (lo, hi) in zip(p.vectors, p.vector_balls, p.norm_bounds):
            vecs.append({
                "exact": [poly_to_json(e.residue) for e in v],
                "decimal": [ball_to_json(b) for b in balls],
                "norm2": {"lower": sci_lower(lo), "upper": sci_upper(hi, 6)},
            })
        pairs.append({
            "lambda": {
                "modulus": poly_to_json(p.lambda_hat.modulus),
                "box": box_to_json(p.lambda_hat.box),
                "decimal": ball_to_json(p.lambda_ball),
            },
            "algebraic_multiplicity": p.algebraic_multiplicity,
            "geometric_multiplicity": p.geometric_multiplicity,
            "cluster_id": p.cluster_id,
            "vectors": vecs,
            "certificate": {
                "residual_bound": sci_upper(cert.residual_bound, 6),
                "true_eig_residual_bound": sci_upper(cert.true_eig_residual_bound, 6),
                "rayleigh_bound": sci_upper(cert.rayleigh_bound, 6),
                "envelope": sci_upper(cert.envelope, 6),
                "det_abs_upper": sci_upper(cert.det_abs_upper, 6),
            },
        })
    report = {
        "format": FORMAT,
        "input": {"n": A.n, "sha256": A.digest()},
        "eps": q_str(result.eps),
        "eps_input": eps_text,
        "N": stage.N,
        "truncation": {
            "max_entry_error": sci_upper(stage.max_entry_error, 6),
            "norm_bound": sci_upper(result.trunc_norm_bound, 6),
            "coefficient_perturbation": sci_upper(stage.coeff_perturbation, 6),
            "delta": sci_lower(stage.delta),
        },
        "rayleigh_precision": q_str(result.rayleigh_precision),
        "char_poly": poly_to_json(stage.P),
        "clusters": clusters,
        "pairs": pairs,
    }
    if timing is not None:
        report["timing"] = timing
    return report


# --- verification -----------------------------------------------------------

class ReportError(ValueError):
    pass


class HashMismatch(ValueError):
    pass


@dataclass
class VerifyOutcome:
    failures: list = field(default_factory=list)
    checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, cond: bool, message: str) -> bool:
        self.checks += 1
        if not cond:
            self.failures.append(message)
        return cond


def _q(d, key):
    try:
        return parse_rational(str(d[key]))
    except (KeyError, ParseError) as exc:
        raise ReportError(f"bad or missing field {key!r}") from exc


def verify_report(report: dict, A: InputMatrix, bits: int = 192) -> VerifyOutcome:
    """Re-derive every certificate in ``report`` from A and the exact data.

    Raises HashMismatch when the report belongs to another matrix and
    ReportError when it is malformed; certificate failures are collected.
    """
    if not isinstance(report, dict) or report.get("format") != FORMAT:
        raise ReportError("not an epseig report")
    try:
        inp = report["input"]
        if inp["sha256"] != A.digest() or inp["n"] != A.n:
            raise HashMismatch("report was produced for a different matrix")
        eps = _q(report, "eps")
        N = int(report["N"])
        P_rep = poly_from_json(report["char_poly"])
        cl_data = report["clusters"]
        pair_data = report["pairs"]
        precision = _q(report, "rayleigh_precision")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (HashMismatch, ReportError)):
            raise
        raise ReportError(f"malformed report: {exc}") from exc

    out = VerifyOutcome()
    n = A.n
    env2 = mpq(n) ** 3 * eps ** 2
    if not out.check(eps > 0 and N >= 1, "eps and N must be positive"):
        return out
    Ahat = truncate_matrix(A, N)
    P = char_poly(Ahat)
    if not out.check(P == P_rep, "characteristic polynomial does not match the truncated matrix"):
        return out

    # truncation and the coefficient perturbation it can cause
    trunc = truncation_norm_bound(A, Ahat)
    worst = ZERO
    for ra, rb in zip(A.exact.entries, Ahat.entries):
        for a, b in zip(ra, rb):
            worst = max(worst, (a - b).abs2())
    err = sqrt_upper(worst, 64) if worst else ZERO
    pert = ZERO
    if err:
        for k, b in enumerate(char_poly_enclosure(Ahat, err, bits=bits + 100)):
            pert = max(pert, abs_upper(b.center - P.coeffs[k], 64) + b.radius)

    # clusters: disjoint disks, no root on a sphere, counts, Rouche margin
    clusters = []
    for k, c in enumerate(cl_data):
        center, radius = parse_complex(c["center"]), _q(c, "radius")
        mult = int(c["multiplicity"])
        clusters.append(RootCluster(center, radius, (), mult, _q(c, "s_lower"),
                                    _q(c, "p_upper"), ZERO))
        if not out.check(radius > 0, f"cluster {k}: radius must be positive"):
            continue
        lo, _ = circle_range(P, center, radius, min_pieces=32)
        if not out.check(lo > 0, f"cluster {k}: cannot certify a root-free sphere"):
            continue
        rho = abs_upper(center, 64) + radius
        p = sum((rho ** j for j in range(n)), ZERO)
        out.check(pert < lo / p, f"cluster {k}: truncation perturbation exceeds the Rouche margin")
        out.check(disk_count(P, center, radius) == mult, f"cluster {k}: wrong multiplicity")
        s_rep = clusters[-1].s_lower
        samples = [poly_eval(P, center + circle_point(mpq(j, 8)) * radius) for j in range(32)]
        out.check(all(s_rep * s_rep <= z.abs2() for z in samples),
                  f"cluster {k}: s_lower exceeds |P| on the sphere")
        rho_lo = abs_lower(center, 64) + radius
        out.check(clusters[-1].p_upper >= sum((rho_lo ** j for j in range(n)), ZERO),
                  f"cluster {k}: p_upper too small")
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            a, b = clusters[i], clusters[j]
            out.check((a.center - b.center).abs2() > (a.radius + b.radius) ** 2,
                      f"clusters {i} and {j} overlap")
    out.check(sum(c.total_multiplicity for c in clusters) == n,
              "cluster multiplicities do not add up to n")

    # pairs
    pairs = []
    total_alg = 0
    for k, pd in enumerate(pair_data):
        try:
            M = poly_from_json(pd["lambda"]["modulus"])
            box = box_from_json(pd["lambda"]["box"])
            alg = int(pd["algebraic_multiplicity"])
            geo = int(pd["geometric_multiplicity"])
            cid = int(pd["cluster_id"])
            vectors = [[poly_from_json(e) for e in vd["exact"]] for vd in pd["vectors"]]
            cert = pd["certificate"]
            res_bound = _q(cert, "residual_bound")
            true_bound = _q(cert, "true_eig_residual_bound")
            rayleigh_bound = _q(cert, "rayleigh_bound")
        except (KeyError, TypeError, ValueError) as exc:
            raise ReportError(f"pair {k}: malformed ({exc})") from exc
        total_alg += alg
        tag = f"pair {k}"
        if not out.check(M.degree >= 1 and M.is_monic(), f"{tag}: modulus must be monic"):
            continue
        if not out.check(not poly_divmod(P, M)[1], f"{tag}: modulus does not divide the characteristic polynomial"):
            continue
        out.check(poly_gcd(M, poly_derivative(M)).degree == 0, f"{tag}: modulus not squarefree")
        if not out.check(count_roots_in_box(M, box) == 1, f"{tag}: box does not isolate a root"):
            continue
        out.check(count_roots_in_box(P, box) == alg, f"{tag}: wrong algebraic multiplicity")
        if not out.check(0 <= cid < len(clusters), f"{tag}: unknown cluster"):
            continue
        cl = clusters[cid]
        corners = [box.lo, box.hi, _gr(box.lo.re, box.hi.im), _gr(box.hi.re, box.lo.im)]
        out.check(all((z - cl.center).abs2() < cl.radius ** 2 for z in corners),
                  f"{tag}: eigenvalue box leaves its cluster")
        out.check(geo == len(vectors) and 1 <= geo <= alg, f"{tag}: inconsistent multiplicities")
        elems = []
        good = True
        for v in vectors:
            if not out.check(len(v) == n and all(e.degree < M.degree for e in v),
                             f"{tag}: vector entries must be reduced residues"):
                good = False
                break
            out.check(any(e == Poly([1]) for e in v), f"{tag}: no entry equals 1")
            fv = [FieldElem(e, M) for e in v]
            for j in range(n):
                acc = Poly()
                for c in range(n):
                    a = Ahat.entries[j][c]
                    if a and v[c]:
                        acc = acc + v[c] * a
                acc = acc - v[j] * Poly([0, 1])
                if acc.degree >= M.degree:
                    acc = poly_divmod(acc, M)[1]
                if acc:
                    good = False
            elems.append(fv)
        if not out.check(good, f"{tag}: Ahat v = lambda v fails"):
            continue
        root = AlgebraicNumber(M, box)
        pair = EpsEigenpair(root, _ball(box.center, box.half_diag_upper()), elems, alg, geo, cid)
        pair.vector_balls, _ = balls_at(elems, M, box, mpq(1, 2 ** bits))
        pairs.append(pair)

        out.check(res_bound * res_bound <= env2, f"{tag}: residual bound exceeds n*sqrt(n)*eps")
        resid = _ball_residual(A, Ahat, pair.vector_balls, 2 * bits)
        out.check(min(resid, trunc) <= res_bound, f"{tag}: residual does not re-certify")
        out.check(certify_true_eigenvalue_residual(pair, cl, trunc) <= true_bound,
                  f"{tag}: true-eigenvalue bound does not re-certify")
        out.check(rayleigh_check(pair, Ahat, trunc, precision / 2) <= rayleigh_bound,
                  f"{tag}: Rayleigh bound does not re-certify")
    out.check(total_alg == n, "algebraic multiplicities do not add up to n")
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            out.check(pairs[i].lambda_hat.box.intersection(pairs[j].lambda_hat.box) is None,
                      f"pairs {i} and {j} select overlapping eigenvalue boxes")
    out.check(independence_certified(pairs), "eigenvectors not certified independent")
    return out


def _ball_residual(A: InputMatrix, Ahat, balls_list, bits: int = 256):
    """max over vectors of an upper bound for ||(A - Ahat) v|| / ||v||."""
    E = A.exact - Ahat
    worst = ZERO
    for balls in balls_list:
        balls = [b.rounded(bits) for b in balls]
        w = []
        for row in E.entries:
            acc = _ball(_gr(ZERO, ZERO), ZERO)
            for a, b in zip(row, balls):
                if a:
                    acc = (acc + b * _ball(a, ZERO)).rounded(bits)
            w.append(acc)
        up = ball_upper_norm(w)
        if up:
            worst = max(worst, up / ball_lower_norm(balls))
    return worst
