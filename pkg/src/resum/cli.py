"""Command line: coefficients, evaluation, singularity reports, scans, special sums.

Exit codes: 0 success, 2 usage error, 3 numerical failure (a quadrature error,
or an error estimate above --tol).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import models, reconstruct, sums
from .complexfn import BranchError, Side
from .models import ModelError, ModelKind
from .quadrature import LoopContour, QuadratureError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
CSV_COLUMNS = ("re_z", "im_z", "re_f", "im_f", "err")


class UsageError(Exception):
    pass


class ToleranceError(Exception):
    pass


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def parse_k_range(text: str) -> list:
    """``3``, ``1..5`` or ``1,2,7``; indices start at 1."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            if int(lo) < 1:
                raise UsageError("coefficient indices start at k = 1")
            if not hi:
                raise UsageError("k range needs an upper end, e.g. 1..10")
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad k range {text!r}") from None
    if not ks or min(ks) < 1:
        raise UsageError("coefficient indices start at k = 1")
    return ks


def threads() -> int:
    try:
        n = int(os.environ.get("RESUM_THREADS", "0"))
    except ValueError:
        n = 0
    return max(1, n or min(4, os.cpu_count() or 1))


def _pair(z: complex) -> list:
    return [z.real, z.imag]


def _fmt_c(z: complex) -> str:
    return f"{z.real:.15g}{z.imag:+.15g}i"


def emit(doc: dict, rows: list, fmt: str, out) -> None:
    """Write a result document.

    ``rows`` are dicts with complex fields z and value and a float err; json
    gets the whole document, csv only the rows, human a readable table."""
    if fmt == "json":
        body = dict(doc)
        body["results"] = [
            {k: (_pair(v) if isinstance(v, complex) else v) for k, v in r.items()} for r in rows
        ]
        out.write(json.dumps(body, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            z, v = complex(r.get("z", 0)), complex(r["value"])
            w.writerow([repr(z.real), repr(z.imag), repr(v.real), repr(v.imag), repr(float(r.get("err", 0.0)))])
    else:
        head = " ".join(f"{k}={v}" for k, v in doc.items() if not isinstance(v, (dict, list)))
        if head:
            out.write(head + "\n")
        for r in rows:
            parts = []
            for k, v in r.items():
                parts.append(f"{k}={_fmt_c(v) if isinstance(v, complex) else v}")
            out.write("  ".join(parts) + "\n")


def _check_tol(rows: list, tol: float) -> None:
    bad = [r for r in rows if float(r.get("err", 0.0)) > tol * max(1.0, abs(complex(r["value"])))]
    if bad:
        raise ToleranceError(f"error estimate {bad[0]['err']:.3g} exceeds --tol {tol:g}")


def _contour(args) -> LoopContour | None:
    if args.eps is None and args.tail is None:
        return None
    return LoopContour(epsilon=args.eps if args.eps is not None else 0.5,
                       tail_length=args.tail if args.tail is not None else 60.0)


def _model(args):
    name = args.model_pos or args.model
    if not name:
        raise UsageError("a model file is required (positional or --model)")
    return models.resolve_model(name)


# ---------------------------------------------------------------------------
# subcommands

def cmd_coeffs(args, out):
    m = _model(args)
    ks = parse_k_range(args.k or "1..10")
    rows = []
    for k in ks:
        r = models.coefficient_result(m, k)
        rows.append({"k": k, "value": complex(r.value), "err": float(r.error_estimate)})
    emit({"command": "coeffs", "model": m.name, "kind": m.kind.value}, rows, args.format, out)
    return rows


def _evaluate(m, zs: list, side: Side, tol: float):
    """Values and errors at zs, in input order, spread over RESUM_THREADS."""
    zs = np.asarray(zs, dtype=complex)

    def run(chunk):
        if m.kind is ModelKind.FINITE_RADIUS:
            return reconstruct.finite_radius_result(m, chunk, side)
        if m.kind is ModelKind.ENTIRE:
            return reconstruct.entire_result(m, chunk)
        vals, errs = [], []
        for z in chunk:
            r = reconstruct.borel_result(m, z)
            vals.append(r.value)
            errs.append(r.error_estimate)
        return np.array(vals), np.array(errs)

    n = threads()
    chunks = [c for c in np.array_split(zs, min(n, len(zs))) if len(c)]
    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(run, chunks))
    vals = np.concatenate([p[0] for p in parts])
    errs = np.concatenate([p[1] for p in parts])
    return vals, errs


def cmd_eval(args, out):
    m = _model(args)
    if not args.z:
        raise UsageError("eval needs at least one --z")
    zs = [parse_complex(z) for z in args.z]
    side = Side.parse(args.side) if args.side else Side.OFF
    vals, errs = _evaluate(m, zs, side, args.tol)
    rows = [{"z": complex(z), "value": complex(v), "err": float(e)} for z, v, e in zip(zs, vals, errs)]
    emit({"command": "eval", "model": m.name, "kind": m.kind.value, "side": side.value}, rows, args.format, out)
    _check_tol(rows, args.tol)
    return rows


def cmd_singularity(args, out):
    m = _model(args)
    if m.kind is not ModelKind.FINITE_RADIUS:
        raise UsageError("singularity reports need a FiniteRadius model")
    if not 0 <= args.j < len(m.terms):
        raise UsageError(f"--j must lie in 0..{len(m.terms) - 1}")
    offsets = [float(x) for x in (args.offsets or "0.05,0.2,0.5").split(",")]
    rows = []
    for off in offsets:
        rep = reconstruct.singularity_report(m, args.j, off)
        rows.append({
            "z": rep.probe,
            "value": rep.measured_jump,
            "predicted": rep.predicted_jump,
            "err": rep.error_estimate,
            "consistent": rep.consistent,
        })
    emit({"command": "singularity", "model": m.name, "location": _fmt_c(m.terms[args.j].a)},
         rows, args.format, out)
    return rows


def scan_points(start: complex, end: complex, count: int) -> list:
    if count < 1:
        raise UsageError("scan count must be at least 1")
    if count == 1:
        return [start]
    return [start + (end - start) * i / (count - 1) for i in range(count)]


def cmd_scan(args, out):
    m = _model(args)
    zs = scan_points(parse_complex(args.start), parse_complex(args.end), args.count)
    side = Side.parse(args.side) if args.side else Side.OFF
    vals, errs = _evaluate(m, zs, side, args.tol)
    rows = [{"z": complex(z), "value": complex(v), "err": float(e)} for z, v, e in zip(zs, vals, errs)]
    fmt = args.format if args.format != "human" else "csv"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            emit({"command": "scan", "model": m.name}, rows, fmt, fh)
    else:
        emit({"command": "scan", "model": m.name}, rows, fmt, out)
    _check_tol(rows, args.tol)
    return rows


def cmd_sums(args, out):
    contour = _contour(args)
    if args.which == "limit1":
        r = sums.eval_limit1(args.reading, contour)
        o = sums.limit1_abel()
        doc = {"command": "sums", "which": "limit1", "reading": args.reading}
    else:
        if args.a is None:
            raise UsageError("eqsum needs --a")
        if args.a <= 0.5:
            raise UsageError("eqsum needs a > 1/2")
        r = sums.eval_eqsum(args.a, args.reading, contour)
        o = sums.phase_power_sum(args.a)
        doc = {"command": "sums", "which": "eqsum", "a": args.a, "reading": args.reading}
    rows = [{
        "value": complex(r.value),
        "err": float(r.error_estimate),
        "oracle": complex(o.value),
        "oracle_err": float(o.error),
        "difference": float(abs(r.value - o.value)),
    }]
    emit(doc, rows, args.format, out)
    _check_tol(rows, args.tol)
    return rows


def cmd_borel(args, out):
    m = _model(args)
    if m.kind is not ModelKind.BOREL:
        raise UsageError("borel needs a Borel model")
    if not args.z:
        raise UsageError("borel needs at least one --z")
    rows = []
    for text in args.z:
        z = parse_complex(text)
        r = reconstruct.borel_result(m, z, args.mode, args.strict)
        row = {"z": z, "value": complex(r.value), "err": float(r.error_estimate)}
        if z.imag == 0 and z.real > 0:
            coeff = lambda k: np.array([models.coefficient(m, int(j)).real for j in k])
            t = sums.optimal_truncation_oracle(coeff, z.real, k_max=max(20, int(3 / z.real)))
            row["truncation"] = t.value
            row["floor"] = t.floor
        rows.append(row)
    emit({"command": "borel", "model": m.name, "mode": args.mode}, rows, args.format, out)
    _check_tol(rows, args.tol)
    return rows


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model file, or the name of a bundled model")
    common.add_argument("--format", choices=("human", "json", "csv"), default="human")
    common.add_argument("--tol", type=float, default=1e-8, help="largest acceptable error estimate")
    common.add_argument("--eps", type=float, help="radius of the contour's turning circle")
    common.add_argument("--tail", type=float, help="truncation length of the contour")

    p = argparse.ArgumentParser(prog="resum", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", parents=[common], help="coefficients f_k")
    c.add_argument("model_pos", nargs="?", metavar="MODEL")
    c.add_argument("--k", help="indices: 5, 1..10 or 1,2,7 (default 1..10)")
    c.set_defaults(func=cmd_coeffs)

    e = sub.add_parser("eval", parents=[common], help="evaluate the reconstructed function")
    e.add_argument("model_pos", nargs="?", metavar="MODEL")
    e.add_argument("--z", action="append", help="evaluation point (repeatable), e.g. 2+1i")
    e.add_argument("--side", choices=("upper", "lower"), help="side for points on a cut")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("singularity", parents=[common], help="cut jump versus local term")
    s.add_argument("model_pos", nargs="?", metavar="MODEL")
    s.add_argument("--j", type=int, default=0, help="index of the singular term")
    s.add_argument("--offsets", help="probe points a_j (1 + offset), comma separated")
    s.set_defaults(func=cmd_singularity)

    sc = sub.add_parser("scan", parents=[common], help="values along a segment, as CSV")
    sc.add_argument("model_pos", nargs="?", metavar="MODEL")
    sc.add_argument("--start", required=True)
    sc.add_argument("--end", required=True)
    sc.add_argument("--count", type=int, default=100)
    sc.add_argument("--side", choices=("upper", "lower"))
    sc.add_argument("--out", help="CSV file (default: stdout)")
    sc.set_defaults(func=cmd_scan)

    su = sub.add_parser("sums", parents=[common], help="special sums with oracle comparison")
    su.add_argument("which", choices=("limit1", "eqsum"))
    su.add_argument("--a", type=float, help="power in eqsum (a > 1/2)")
    su.add_argument("--reading", choices=sums.READINGS, default="derived")
    su.set_defaults(func=cmd_sums)

    b = sub.add_parser("borel", parents=[common], help="Borel sum of a divergent model series")
    b.add_argument("model_pos", nargs="?", metavar="MODEL")
    b.add_argument("--z", action="append")
    b.add_argument("--mode", choices=("median", "above", "below"), default="median")
    b.add_argument("--strict", action="store_true", help="fail on singular directions")
    b.set_defaults(func=cmd_borel)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "tol", 1.0) <= 0:
        print("resum: error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args, out)
    except (UsageError, ModelError, BranchError, FileNotFoundError) as exc:
        print(f"resum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ToleranceError, reconstruct.DecayCheckError, sums.OracleError) as exc:
        print(f"resum: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"resum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
