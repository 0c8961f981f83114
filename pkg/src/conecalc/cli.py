"""Command line interface: ``conecalc <command> [flags]``.

Exit codes: 0 ok, 2 not elliptic, 3 schema or usage error, 4 numerical failure.
With ``--format json`` every result and every error is a JSON object on
stdout; with ``--format table`` errors go to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings

import numpy as np

from . import __version__
from .cone import NotEllipticError, check_conormal_ellipticity, check_sigma0_ellipticity, conormal_hierarchy
from .edge import (
    check_edge_ellipticity,
    conormal_inverse_field,
    edge_parametrix_hierarchy,
    edge_samples,
    verify_edge_parametrix,
)
from .frobenius import NotBlockDiagonal, frobenius_oracle, oracle_equivalence
from .io import (
    Cache,
    SchemaError,
    cache_key,
    dumps,
    hierarchy_from_json,
    hierarchy_to_json,
    load_problem,
    loads,
    matrix_to_json,
    num,
    validate,
)
from .mero import ClusteringError, SingularSymbolError
from .parametrix import operator_recursion, parametrix_hierarchy, taylor_decompose, verify_parametrix
from .solver import SingularExpansion, expansion_type, indicial_roots, kernel_probe, solve_asymptotics

OK, NOT_ELLIPTIC, SCHEMA, NUMERICAL = 0, 2, 3, 4
COMMANDS = ("analyze", "parametrix", "asymptotics", "verify", "edge-analyze", "edge-parametrix")
DEFAULT_TOL = 1e-10


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details


class NotElliptic(Exception):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--spec", metavar="FILE", help="problem specification (JSON)")
    common.add_argument("--order", "-N", type=int, metavar="N", help="depth of the hierarchy / expansion")
    common.add_argument("--gamma", type=float, metavar="G", help="weight, overrides the problem file")
    common.add_argument("--tol", type=float, metavar="T", help=f"numerical tolerance (default {DEFAULT_TOL:g})")
    common.add_argument("--format", choices=("json", "table"), default="table")
    common.add_argument("--cache-dir", metavar="DIR", help="cache directory (overrides CONECALC_CACHE)")
    common.add_argument("--seed", type=int, default=0, metavar="S", help="seed for randomized checks")
    p = _Parser(prog="conecalc", description="Conormal symbol calculus for cone and edge operators.")
    p.add_argument("--version", action="version", version=f"conecalc {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "analyze": "ellipticity report and indicial roots",
        "parametrix": "parametrix hierarchy as JSON",
        "asymptotics": "asymptotic expansion of solutions of Au = f",
        "verify": "verification suites, or defect and oracle checks for one spec",
        "edge-analyze": "edge ellipticity and y-dependence of the conormal inverse",
        "edge-parametrix": "edge Mellin-symbol parametrix levels and their residuals",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _problem(args, edge=False):
    if not args.spec:
        raise UsageError(f"{args.command} needs --spec FILE")
    try:
        prob = load_problem(args.spec)
    except OSError as e:
        raise UsageError(f"cannot read {args.spec}: {e}") from e
    if prob.is_edge and not edge:
        raise SchemaError(f"{args.spec} describes an edge operator; use edge-{args.command}")
    if edge and not prob.is_edge:
        raise SchemaError(f"{args.spec} describes a cone operator; use {args.command.removeprefix('edge-')}")
    if args.gamma is not None:
        prob.gamma = args.gamma
    if args.order is not None:
        if args.order < 0:
            raise UsageError("--order must be nonnegative")
        prob.depth = args.order
    return prob


def _tol(args, prob=None, key="defect"):
    if args.tol is not None:
        return args.tol
    if prob is not None and key in prob.tolerances:
        return prob.tolerances[key]
    return DEFAULT_TOL


def _material(prob):
    return {"spec": prob.raw, "gamma": prob.gamma, "theta": None if math.isinf(prob.theta) else prob.theta}


def _hierarchy(prob, N, cache):
    """Parametrix hierarchy through the cache; always rebuilt from JSON."""
    A = prob.operator

    def compute():
        H = conormal_hierarchy(A, prob.mellin, max(N, A.r_order))
        return hierarchy_to_json(parametrix_hierarchy(H, prob.gamma, A.model.n, N, prob.theta))

    if cache is None:
        payload = compute()
    else:
        key = cache_key(_material(prob), "parametrix", N)
        payload, hit = cache.fetch(key, compute)
        print(f"cache {'hit' if hit else 'miss'}: {cache.path(key)}", file=sys.stderr)
    return hierarchy_from_json(loads(dumps(payload))), payload


def _require_conormal(prob):
    A = prob.operator
    H = conormal_hierarchy(A, prob.mellin, 0)
    rep = check_conormal_ellipticity(H, prob.gamma, A.model.n)
    if not rep.elliptic:
        raise NotElliptic(
            f"conormal symbol vanishes on the weight line Re z = {rep.line:g} (distance {rep.min_distance:.3g})",
            rep.to_dict(),
        )
    return rep


def _clean(x, scale, digits=14):
    """Drop imaginary noise below 1e-12 of the scale and round to ``digits``."""
    x = complex(x)
    re, im = x.real, x.imag
    if not (math.isfinite(re) and math.isfinite(im)):
        return x
    if abs(im) <= 1e-12 * scale:
        im = 0.0
    if abs(re) <= 1e-14 * scale:
        re = 0.0
    re, im = (float(f"{v:.{digits}g}") + 0.0 for v in (re, im))
    return complex(re, im)


def _cleaned(u):
    scale = max(u.scale(), 1e-300)
    terms = [(_clean(p, 1.0), k, [_clean(x, scale) for x in c]) for p, k, c in u.terms]
    return SingularExpansion(terms, u.size, u.flat_order)


def _expansion_json(u):
    """Expansion for output: cleaned coefficients and the plain exponent -p."""
    d = _cleaned(u).to_dict()
    for t in d["terms"]:
        t["exponent_re"] = -t["p_re"] + 0.0
        t["exponent_im"] = -t["p_im"] + 0.0
    return d


def _type_json(t):
    d = t.to_dict()
    for q in d["points"]:
        z = _clean(complex(q["p_re"], q["p_im"]), 1.0)
        q["p_re"], q["p_im"] = z.real, z.imag
    return d


def _fmt(z):
    z = complex(z) + 0.0
    return f"{z.real:.10g}" if abs(z.imag) < 1e-14 else f"{z.real:.8g}{z.imag:+.8g}j"


# ---------------------------------------------------------------------------
# commands; each returns (exit code, json object, table text)
# ---------------------------------------------------------------------------

def cmd_analyze(args, cache):
    prob = _problem(args)
    A = prob.operator
    H = conormal_hierarchy(A, prob.mellin, 0)
    con = check_conormal_ellipticity(H, prob.gamma, A.model.n)
    sig = check_sigma0_ellipticity(A)
    roots = indicial_roots(A, prob.mellin)
    line = con.line
    elliptic = con.elliptic and sig.status != "not elliptic"
    out = {
        "elliptic": elliptic,
        "gamma": prob.gamma,
        "n": A.model.n,
        "mu": A.mu,
        "size": A.size,
        "conormal": con.to_dict(),
        "sigma0": sig.to_dict(),
        "indicial_roots": [
            {"re": z.real, "im": z.imag, "multiplicity": m, "side": "left" if z.real < line else "right"}
            for z, m in roots
        ],
    }
    smin = "n/a" if sig.min_modulus is None else f"{sig.min_modulus:.6g}"
    rows = [
        f"operator: mu={A.mu}, basis size {A.size}, n={A.model.n}, gamma={prob.gamma:g}",
        f"weight line: Re z = {line:g}",
        f"sigma_0: {sig.status} ({sig.method}, min |sigma| = {smin})",
        f"conormal: {'elliptic' if con.elliptic else 'NOT elliptic'} (min distance {con.min_distance:.3g})",
        "indicial roots (zero, multiplicity):",
    ]
    rows += [f"   {_fmt(z):<24} {m}" for z, m in roots]
    code = OK if elliptic else NOT_ELLIPTIC
    return code, out, "\n".join(rows)


def cmd_parametrix(args, cache):
    prob = _problem(args)
    _require_conormal(prob)
    P, payload = _hierarchy(prob, prob.depth, cache)
    validate(payload, "hierarchy")
    rows = [f"parametrix hierarchy: mu={P.mu}, gamma={P.gamma:g}, depth {P.depth}"]
    for l, q in enumerate(P.levels):
        poles = getattr(q, "poles", [])
        desc = ", ".join(f"{_fmt(p.location)} (order {p.order})" for p in poles) or "none"
        rows.append(f"   level {l}: poles {desc}")
    return OK, payload, "\n".join(rows)


def cmd_asymptotics(args, cache):
    prob = _problem(args)
    _require_conormal(prob)
    A = prob.operator
    N = prob.depth
    P, _ = _hierarchy(prob, N, cache)
    f = prob.rhs
    notes = []
    if f is None or not f.terms:
        f = SingularExpansion([], A.size)
        S = solve_asymptotics(A, f, prob.gamma, N, prob.mellin, prob.theta, hierarchy=P)
        kern = SingularExpansion([], A.size)
        for _, _, u in kernel_probe(P, depth=N):
            kern = kern + u
        S.kernel = kern
        S.u = S.particular + kern
        S.type = expansion_type(S.u, prob.gamma, A.model.n, prob.theta)
        notes.append("homogeneous problem: kernel terms seeded with unit data per indicial root and basis vector")
    else:
        S = solve_asymptotics(A, f, prob.gamma, N, prob.mellin, prob.theta, hierarchy=P)
    notes += S.notes
    out = {
        "expansion": _expansion_json(S.u),
        "particular": _expansion_json(S.particular),
        "kernel": _expansion_json(S.kernel),
        "type": _type_json(S.type),
        "residual": _expansion_json(S.particular_residual),
        "flat_ok": bool(S.flat_ok),
        "flat_gap": None if math.isinf(S.flat_gap) else S.flat_gap,
        "notes": notes,
    }
    validate(out, "asymptotics")
    rows = ["u ~ sum c r^-p log^k r (plain exponent = -p)", _cleaned(S.u).table() if S.u.terms else "   (no terms)"]
    rows.append("asymptotic type: " + ", ".join(f"{_fmt(_clean(p, 1.0))} (log <= {m})" for p, m in S.type.points))
    gap = "inf" if math.isinf(S.flat_gap) else f"{S.flat_gap:g}"
    rows.append(f"flat residual law: {'ok' if S.flat_ok else 'VIOLATED'} (gap {gap}, required {N - 1})")
    rows += [f"note: {x}" for x in notes]
    if not S.flat_ok:
        raise NumericalFailure("residual is not flat to the requested order", out)
    return OK, out, "\n".join(rows)


def cmd_verify(args, cache):
    if not args.spec:
        from .suites import run_suites

        results = run_suites(args.seed)
        ok = all(r.passed for r in results)
        out = {"seed": args.seed, "passed": ok, "suites": [r.to_dict() for r in results]}
        text = "\n".join(r.line() for r in results)
        return (OK if ok else NUMERICAL), out, text
    prob = _problem(args)
    if prob.is_edge:
        raise SchemaError("use edge-parametrix for edge operators")
    _require_conormal(prob)
    A = prob.operator
    N = prob.depth
    tol = _tol(args, prob)
    P, _ = _hierarchy(prob, N, cache)
    H = conormal_hierarchy(A, prob.mellin, max(N, A.r_order))
    defect = verify_parametrix(H, P, samples=100, seed=args.seed)
    checks = [{"name": "defect identities", "passed": defect.max_residual < tol,
               "metric": defect.max_residual, "threshold": tol, "details": defect.to_dict()}]
    if prob.mellin is None:
        R = operator_recursion(taylor_decompose(A, N=N), P, N, reference=P)
        dev = max(R.deviation, default=0.0)
        checks.append({"name": "operator-form recursion", "passed": dev < 1e-8, "metric": dev, "threshold": 1e-8})
        try:
            orc = frobenius_oracle(A, prob.rhs, prob.gamma, N)
        except NotBlockDiagonal as e:
            checks.append({"name": "Frobenius oracle", "passed": True, "metric": 0.0, "threshold": 0.0,
                           "skipped": str(e)})
        else:
            f = prob.rhs if prob.rhs is not None else SingularExpansion([], A.size)
            S = solve_asymptotics(A, f, prob.gamma, N, None, prob.theta, hierarchy=P)
            eq = oracle_equivalence(S, orc, N)
            checks.append({"name": "Frobenius oracle", "passed": bool(eq.ok), "metric": eq.coefficient_error,
                           "threshold": 1e-6, "structure_match": eq.structure_match,
                           "oracle_residual": eq.oracle_residual})
    ok = all(c["passed"] for c in checks)
    out = {"seed": args.seed, "passed": ok, "checks": checks}
    text = "\n".join(
        f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['metric']:.3g} (limit {c['threshold']:g})"
        + (f" skipped: {c['skipped']}" if "skipped" in c else "")
        for c in checks
    )
    return (OK if ok else NUMERICAL), out, text


def _y_grid(prob):
    grid = prob.raw.get("edge", {}).get("y_grid")
    q = prob.operator.q
    if grid is None:
        g = np.linspace(-1.0, 1.0, 11)
        return np.stack([g] * q, axis=1) if q > 1 else g[:, None]
    g = np.array(grid, float)
    return g[:, None] if g.ndim == 1 else g


def cmd_edge_analyze(args, cache):
    prob = _problem(args, edge=True)
    A = prob.operator
    grid = _y_grid(prob)
    rep = check_edge_ellipticity(A, prob.gamma, grid)
    field = None
    if rep.conormal_ok:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            field = conormal_inverse_field(A, grid, tol=args.tol or 1e-12)
    out = {"gamma": prob.gamma, "q": A.q, "ellipticity": rep.to_dict(),
           "inverse_field": field.to_dict() if field is not None else None}
    rows = [
        f"edge operator: mu={A.mu}, q={A.q}, basis size {A.size}, gamma={prob.gamma:g}",
        f"sigma_0: {rep.sigma0_status} ({rep.sigma0_method})",
        f"conormal per y: {'elliptic' if rep.conormal_ok else 'NOT elliptic'} on {len(grid)} grid points",
    ]
    rows += [f"   zero {_fmt(z)} on the line at y={list(map(float, y))}, mode {lab}" for y, z, lab in rep.offending]
    if field is not None:
        rows.append(f"pole drift over y: {field.drift:.3g} -> {field.verdict}")
        rows += [f"warning: {w}" for w in field.warnings]
    rows.append(f"note: {rep.note}")
    code = NOT_ELLIPTIC if (not rep.conormal_ok or rep.sigma0_status == "not elliptic") else OK
    return code, out, "\n".join(rows)


def cmd_edge_parametrix(args, cache):
    prob = _problem(args, edge=True)
    A = prob.operator
    rep = check_edge_ellipticity(A, prob.gamma, _y_grid(prob))
    if not rep.conormal_ok:
        raise NotElliptic("edge conormal symbol vanishes on the weight line", rep.to_dict())
    tol = _tol(args, prob)
    P = edge_parametrix_hierarchy(A, prob.depth, prob.gamma)
    ver = verify_edge_parametrix(P, samples=50, seed=args.seed)
    pts, _ = edge_samples(P, 1, seed=args.seed)
    r, y, z, eta = pts[0]
    vals = P.levels(r, y, z, eta).values()
    out = {
        "mu": A.mu,
        "q": A.q,
        "gamma": prob.gamma,
        "line": P.line,
        "depth": P.L,
        "metadata": P.metadata,
        "verification": ver.to_dict(),
        "passed": ver.max_residual < tol,
        "sample": {
            "r": r, "y": list(map(float, y)), "z": num(z), "eta": list(map(float, eta)),
            "levels": [matrix_to_json(v) for v in vals],
        },
    }
    rows = [f"edge parametrix: mu={A.mu}, q={A.q}, depth {P.L}, working line Re z = {P.line:g}",
            f"level orders: {P.metadata['orders']}",
            "Leibniz residual per level (max over samples):"]
    rows += [f"   k_{l}: {x:.3g}" for l, x in enumerate(ver.residuals)]
    rows.append(f"note: {P.metadata['k0']}")
    if not out["passed"]:
        raise NumericalFailure(f"edge level residual {ver.max_residual:.3g} exceeds {tol:g}", out)
    return OK, out, "\n".join(rows)


HANDLERS = {
    "analyze": cmd_analyze,
    "parametrix": cmd_parametrix,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
    "edge-analyze": cmd_edge_analyze,
    "edge-parametrix": cmd_edge_parametrix,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _emit_error(fmt, kind, code, message, details=None):
    if fmt == "json":
        obj = {"error": kind, "exit_code": code, "message": message}
        if details is not None:
            obj["details"] = details
        print(dumps(obj, indent=2))
    else:
        print(f"conecalc: {kind.replace('_', ' ')}: {message}", file=sys.stderr)
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    fmt = "json" if "json" in argv and "--format" in argv else "table"
    if "--format=json" in argv:
        fmt = "json"
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        return _emit_error(fmt, "usage", SCHEMA, str(e))
    if args.command is None:
        return _emit_error(fmt, "usage", SCHEMA, f"missing command; one of {', '.join(COMMANDS)}")
    fmt = args.format
    cache = Cache.from_env(args.cache_dir)
    try:
        with np.errstate(all="ignore"):
            code, out, text = HANDLERS[args.command](args, cache)
    except UsageError as e:
        return _emit_error(fmt, "usage", SCHEMA, str(e))
    except SchemaError as e:
        return _emit_error(fmt, "schema", SCHEMA, str(e))
    except NotElliptic as e:
        return _emit_error(fmt, "not_elliptic", NOT_ELLIPTIC, str(e), e.details)
    except NotEllipticError as e:
        return _emit_error(fmt, "not_elliptic", NOT_ELLIPTIC, str(e))
    except NumericalFailure as e:
        return _emit_error(fmt, "numerical", NUMERICAL, str(e), e.details)
    except (SingularSymbolError, ClusteringError, np.linalg.LinAlgError, ArithmeticError) as e:
        return _emit_error(fmt, "numerical", NUMERICAL, f"{type(e).__name__}: {e}")
    except ValueError as e:
        # remaining value errors are incompatible inputs, e.g. f outside the weight strip
        return _emit_error(fmt, "schema", SCHEMA, str(e))
    if fmt == "json":
        print(dumps(out, indent=2))
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
