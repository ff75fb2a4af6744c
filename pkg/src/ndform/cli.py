"""Command-line entry point: ``ndform run | infsup | mesh-info``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

from .driver import DEFAULT_LEVELS, METHODS, SOLVERS, ConvergenceTable, RunConfig, run_convergence
from .mesh import MeshError, build_rect_mesh, mesh_stats
from .problems import PROBLEM_IDS, problem
from .stability import stability_sweep

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "level", "n", "h", "ndof",
    "err_lp", "err_w1p", "err_hess", "err_jump", "err_w2ph",
    "rate_lp", "rate_w1p", "rate_hess", "rate_w2ph",
)
INFSUP_COLUMNS = ("level", "n", "h", "ndof_free", "sigma_min")

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

logger = logging.getLogger("ndform")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty level list")
    return vals


def _domain(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed domain {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("domain needs four values x0,x1,y0,y1")
    return vals  # type: ignore[return-value]


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def _finite(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def table_rows(table: ConvergenceTable) -> list[dict]:
    """Flatten a convergence table into CSV_COLUMNS-keyed records."""
    rates = {k: table.rates(k) for k in ("lp", "w1p", "hess", "w2ph")}
    out = []
    for i, row in enumerate(table.rows):
        e = row.errors
        out.append({
            "level": i,
            "n": row.n,
            "h": row.h,
            "ndof": row.ndof,
            "err_lp": None if e is None else e.err_lp,
            "err_w1p": None if e is None else e.err_w1p_semi,
            "err_hess": None if e is None else e.err_hess_broken,
            "err_jump": None if e is None else e.err_jump_term,
            "err_w2ph": None if e is None else e.err_w2ph,
            "rate_lp": _finite(rates["lp"][i]),
            "rate_w1p": _finite(rates["w1p"][i]),
            "rate_hess": _finite(rates["hess"][i]),
            "rate_w2ph": _finite(rates["w2ph"][i]),
        })
    return out


def output_record(table: ConvergenceTable, elapsed: float) -> dict:
    diagnostics = []
    for row in table.rows:
        s = row.solve
        diagnostics.append({
            "n": row.n,
            "method": None if s is None else s.method,
            "residual": None if s is None else s.residual,
            "iterations": None if s is None else s.iterations,
            "seconds": row.seconds,
            "error": row.error,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "config": table.config.as_dict(),
        "rows": table_rows(table),
        "timing": {"total_seconds": elapsed},
        "solver": diagnostics,
    }


def format_csv(rows: list[dict], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_num(r.get(c)) for c in columns])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    """Inverse of format_csv: ints stay ints, blanks become None."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for k, v in rec.items():
            if v == "":
                parsed[k] = None
            elif k in ("level", "n", "ndof", "ndof_free"):
                parsed[k] = int(v)
            else:
                parsed[k] = float(v)
        rows.append(parsed)
    return rows


def format_json(record: dict) -> str:
    return json.dumps(record, indent=2, allow_nan=False) + "\n"


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _format_for(args) -> str:
    if args.format:
        return args.format
    if args.out and args.out.endswith(".json"):
        return "json"
    return "csv"


def cmd_run(args) -> int:
    try:
        config = RunConfig(
            problem=args.test, degree=args.degree, levels=tuple(args.levels),
            p=args.p, quad_cell=args.quad_cell, quad_edge=args.quad_edge,
            solver=args.solver, tol=args.tol, method=args.method,
        )
    except ValueError as exc:
        print(f"ndform run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if config.method == "divform" and problem(config.problem).A.div is None:
        print(f"ndform run: problem {config.problem!r} has no differentiable "
              f"coefficient; divform needs one", file=sys.stderr)
        return EXIT_USAGE

    t0 = time.perf_counter()
    table = run_convergence(config)
    elapsed = time.perf_counter() - t0
    if _format_for(args) == "json":
        _emit(format_json(output_record(table, elapsed)), args.out)
    else:
        _emit(format_csv(table_rows(table)), args.out)
    for row in table.rows:
        if row.error:
            print(f"ndform run: level n={row.n} failed: {row.error}", file=sys.stderr)
    return EXIT_OK if table.ok else EXIT_NUMERICAL


def cmd_infsup(args) -> int:
    if not 1 <= args.degree <= 4:
        print(f"ndform infsup: degree must be in 1..4, got {args.degree}", file=sys.stderr)
        return EXIT_USAGE
    if args.degree < 2:
        print("warning: the stability estimate assumes k >= 2", file=sys.stderr)
    levels = list(args.levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        print("ndform infsup: levels must be strictly increasing", file=sys.stderr)
        return EXIT_USAGE
    spec = problem(args.test)
    try:
        report = stability_sweep(args.test, spec.domain, spec.A, args.degree, levels)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"ndform infsup: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if _format_for(args) == "json":
        record = {"schema_version": SCHEMA_VERSION, **report.as_dict()}
        _emit(format_json(record), args.out)
    else:
        rows = [
            {"level": i, "n": lv.n, "h": lv.h, "ndof_free": lv.ndof_free, "sigma_min": lv.sigma_min}
            for i, lv in enumerate(report.levels)
        ]
        _emit(format_csv(rows, INFSUP_COLUMNS), args.out)
    return EXIT_OK


def cmd_mesh_info(args) -> int:
    try:
        mesh = build_rect_mesh(args.domain, args.n)
    except MeshError as exc:
        print(f"ndform mesh-info: {exc}", file=sys.stderr)
        return EXIT_USAGE
    stats = mesh_stats(mesh)
    print(f"vertices {mesh.n_vertices}")
    print(f"triangles {stats['n_triangles']}")
    print(f"interior_edges {stats['n_interior_edges']}")
    print(f"boundary_edges {stats['n_boundary_edges']}")
    print(f"h_max {stats['h_max']!r}")
    print(f"h_min {stats['h_min']!r}")
    if args.export:
        mesh.export_text(args.export)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndform", description=__doc__)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study")
    run.add_argument("--test", required=True, choices=PROBLEM_IDS)
    run.add_argument("--degree", type=int, default=2)
    run.add_argument("--levels", type=_int_list, default=list(DEFAULT_LEVELS))
    run.add_argument("--p", type=float, default=2.0)
    run.add_argument("--method", choices=METHODS, default="c0dg")
    run.add_argument("--solver", choices=SOLVERS, default="direct")
    run.add_argument("--tol", type=float, default=1e-10)
    run.add_argument("--quad-cell", type=int, default=None)
    run.add_argument("--quad-edge", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--format", choices=("csv", "json"), default=None)
    run.set_defaults(func=cmd_run)

    inf = sub.add_parser("infsup", help="discrete inf-sup constants")
    inf.add_argument("--test", required=True, choices=PROBLEM_IDS)
    inf.add_argument("--degree", type=int, default=2)
    inf.add_argument("--levels", type=_int_list, default=[4, 8, 16])
    inf.add_argument("--out", default=None)
    inf.add_argument("--format", choices=("csv", "json"), default=None)
    inf.set_defaults(func=cmd_infsup)

    mi = sub.add_parser("mesh-info", help="mesh statistics")
    mi.add_argument("--domain", type=_domain, default=(0.0, 1.0, 0.0, 1.0))
    mi.add_argument("--n", type=int, required=True)
    mi.add_argument("--export", default=None, help="write the mesh as plain text")
    mi.set_defaults(func=cmd_mesh_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
