"""Command line front end: ``epseig solve | verify | roots``.

Exit codes: 0 success, 1 certificate failure, 2 parse error,
3 pipeline error, 4 report/matrix mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .charpoly import InputMatrix
from .eigen import PipelineError, eps_eigenpairs
from .exactnum import ParseError, _ball, gauss_str, parse_complex, parse_rational, sci_lower, sci_upper
from .poly import Poly, squarefree_decomposition
from .report import HashMismatch, ReportError, ball_to_json, build_report, dumps, verify_report
from .rootfind import build_clusters, isolate_roots, refine_box

EXIT_OK = 0
EXIT_CERT = 1
EXIT_PARSE = 2
EXIT_PIPELINE = 3
EXIT_MISMATCH = 4


def _parse_eps(text: str):
    eps = parse_rational(text)
    if eps <= 0:
        raise ParseError("eps must be positive")
    return eps


def _err(msg: str) -> None:
    print(f"epseig: {msg}", file=sys.stderr)


def _summary(report: dict) -> str:
    lines = [f"n = {report['input']['n']}   eps = {report['eps_input']}   N = {report['N']}",
             f"truncation norm bound: {report['truncation']['norm_bound']}"]
    for k, p in enumerate(report["pairs"]):
        d = p["lambda"]["decimal"]
        c = p["certificate"]
        lines.append(
            f"[{k}] lambda = {d['re']} {'+' if not d['im'].startswith('-') else '-'} "
            f"{d['im'].lstrip('-')}i  (+/- {d['radius']})  alg {p['algebraic_multiplicity']}"
            f"  geo {p['geometric_multiplicity']}  cluster {p['cluster_id']}")
        lines.append(f"     residual <= {c['residual_bound']}   true-eigenvalue residual <= "
                     f"{c['true_eig_residual_bound']}   Rayleigh <= {c['rayleigh_bound']}"
                     f"   envelope {c['envelope']}")
        for v in p["vectors"]:
            entries = ", ".join(f"{e['re']}{'+' if not e['im'].startswith('-') else ''}{e['im']}i"
                                for e in v["decimal"])
            lines.append(f"     v = ({entries})")
    for c in report["clusters"]:
        lines.append(f"cluster {c['id']}: center {c['center']}  radius {c['radius']}  "
                     f"multiplicity {c['multiplicity']}  delta >= {c['delta']}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    try:
        A = InputMatrix.load(args.matrix)
        eps = _parse_eps(args.eps)
    except OSError as exc:
        _err(f"cannot read matrix: {exc}")
        return EXIT_PARSE
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    start = time.perf_counter()
    try:
        result = eps_eigenpairs(A, eps, max_n=args.max_n)
    except (PipelineError, ArithmeticError, ValueError) as exc:
        _err(f"pipeline error: {exc}")
        return EXIT_PIPELINE
    timing = {"seconds": round(time.perf_counter() - start, 3)} if args.timing else None
    report = build_report(A, result, args.eps, timing)
    text = dumps(report)
    if args.json == "-":
        sys.stdout.write(text)
    else:
        if args.json:
            with open(args.json, "w") as fh:
                fh.write(text)
        sys.stdout.write(_summary(report))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        A = InputMatrix.load(args.matrix)
    except OSError as exc:
        _err(f"cannot read matrix: {exc}")
        return EXIT_PARSE
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    try:
        with open(args.report) as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _err(f"cannot read report: {exc}")
        return EXIT_PARSE
    try:
        outcome = verify_report(report, A)
    except HashMismatch as exc:
        _err(str(exc))
        return EXIT_MISMATCH
    except (ReportError, ParseError) as exc:
        _err(str(exc))
        return EXIT_PARSE
    except (PipelineError, ArithmeticError) as exc:
        _err(f"verification could not complete: {exc}")
        return EXIT_CERT
    if outcome.ok:
        print(f"ok: {outcome.checks} checks passed")
        return EXIT_OK
    for msg in outcome.failures:
        print(f"FAIL: {msg}")
    return EXIT_CERT


def roots_report(coeffs, eps) -> dict:
    """Isolation and cluster data for the polynomial c_n z^n + ... + c_0."""
    P = Poly(list(reversed(coeffs)))
    if not P:
        raise ParseError("zero polynomial")
    if P.degree == 0:
        raise ParseError("constant polynomial has no roots")
    P = P.monic()
    sf = squarefree_decomposition(P)
    Pstar = Poly([1])
    for f, _ in sf:
        Pstar = Pstar * f
    boxes = [refine_box(Pstar, b, eps / 8) for b in isolate_roots(Pstar)]
    clusters = build_clusters(P, sf, boxes, eps)
    return {
        "monic": [gauss_str(c) for c in P.coeffs],
        "squarefree": [{"factor": [gauss_str(c) for c in f.coeffs], "multiplicity": m}
                       for f, m in sf],
        "boxes": [{"lo": gauss_str(b.lo), "hi": gauss_str(b.hi),
                   "decimal": ball_to_json(_ball(b.center, b.half_diag_upper()))}
                  for b in boxes],
        "clusters": [{"center": gauss_str(c.center), "radius": str(c.radius),
                      "multiplicity": c.total_multiplicity, "s_lower": sci_lower(c.s_lower, 6),
                      "p_upper": sci_upper(c.p_upper, 6), "delta": sci_lower(c.delta, 6)}
                     for c in clusters],
        "delta": sci_lower(min(c.delta for c in clusters), 6),
    }


def cmd_roots(args) -> int:
    try:
        coeffs = [parse_complex(t) for t in args.coeffs.replace(",", " ").split()]
        eps = _parse_eps(args.eps)
        if not coeffs:
            raise ParseError("no coefficients given")
        rep = roots_report(coeffs, eps)
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    except (ArithmeticError, ValueError) as exc:
        _err(f"pipeline error: {exc}")
        return EXIT_PIPELINE
    if args.json:
        sys.stdout.write(dumps(rep))
        return EXIT_OK
    print("monic polynomial (low to high):", " ".join(rep["monic"]))
    for s in rep["squarefree"]:
        print(f"squarefree factor {' '.join(s['factor'])}  multiplicity {s['multiplicity']}")
    for b in rep["boxes"]:
        d = b["decimal"]
        sign = "-" if d["im"].startswith("-") else "+"
        print(f"root {d['re']} {sign} {d['im'].lstrip('-')}i  +/- {d['radius']}")
    for c in rep["clusters"]:
        print(f"cluster center {c['center']} radius {c['radius']} multiplicity {c['multiplicity']}"
              f"  s >= {c['s_lower']}  p <= {c['p_upper']}  delta >= {c['delta']}")
    print(f"delta >= {rep['delta']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="epseig", description="certified eps-eigenpairs")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute certified eps-eigenpairs")
    s.add_argument("--matrix", required=True, help="matrix JSON file")
    s.add_argument("--eps", required=True, help="accuracy, e.g. 1e-3 or 1/1000")
    s.add_argument("--json", metavar="OUT", help="write the JSON report here ('-' for stdout)")
    s.add_argument("--max-n", type=int, default=None, metavar="CAP",
                   help="give up when the truncation grid would exceed CAP")
    s.add_argument("--timing", action="store_true", help="record wall time in the report")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="re-check a report against its matrix")
    v.add_argument("--report", required=True)
    v.add_argument("--matrix", required=True)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("roots", help="isolate and cluster polynomial roots")
    r.add_argument("--coeffs", required=True, help='coefficients "c_n ... c_0"')
    r.add_argument("--eps", required=True)
    r.add_argument("--json", action="store_true", help="print JSON instead of text")
    r.set_defaults(func=cmd_roots)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
