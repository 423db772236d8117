"""Command-line interface.

    twempirical test {manova,covequal,cca,pcev} ... --seed S [--k 100] [--fit mm] [--perm N] [--out r.json]
    twempirical tw {cdf,pdf,quantile} VALUE [--mu M --sigma S]
    twempirical simulate {approx,pvalues} ... --seed S [--out table.csv]

Exit codes: 0 success, 2 parse or configuration error, 3 validation error,
4 degenerate problem.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import DegenerateProblemError, ValidationError
from .estimator import DEFAULT_K, run_estimator
from .fitting import FIT_METHODS
from .linalg import DEFAULT_RANK_TOL, DataMatrix
from .problems import CcaSpec, CovEqualSpec, ManovaSpec, PcevSpec
from .simulation import ScenarioConfig, run_approx_study, run_pvalue_study
from .tracywidom import TWLocationScale

SCHEMA_VERSION = "1.0"
EXIT_PARSE, EXIT_VALIDATION, EXIT_DEGENERATE = 2, 3, 4


class ParseError(ValueError):
    pass


def _read_rows(path, header=True):
    try:
        raw = Path(path).read_bytes()
    except OSError as err:
        raise ParseError(f"{path}: {err.strerror}") from None
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as err:
        raise ParseError(f"{path}: not valid UTF-8 ({err.reason} at byte {err.start})") from None
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1) if r and any(c.strip() for c in r)]
    names = None
    if header:
        if not rows:
            raise ParseError(f"{path}: empty file")
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    return raw, names, rows


def read_matrix(path, header=True) -> tuple[DataMatrix, dict]:
    """Parse a numeric CSV (rows = observations) and fingerprint the file."""
    raw, names, rows = _read_rows(path, header)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(names) if names is not None else len(rows[0][1])
    values = np.empty((len(rows), width))
    for r, (line, fields) in enumerate(rows):
        if len(fields) != width:
            raise ParseError(f"{path}:{line}: expected {width} fields, found {len(fields)}")
        for c, cell in enumerate(fields):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}:{line}:{c + 1}: cannot parse {cell.strip()!r} as a number") from None
            if not np.isfinite(v):
                raise ParseError(f"{path}:{line}:{c + 1}: non-finite value {cell.strip()!r}")
            values[r, c] = v
    if values.shape[0] < 2:
        raise ParseError(f"{path}: need at least 2 data rows")
    data = DataMatrix(values, tuple(names) if names is not None else ())
    return data, _fingerprint(path, raw, values.shape)


def read_labels(path, header=True) -> tuple[np.ndarray, dict]:
    raw, _, rows = _read_rows(path, header)
    labels = []
    for line, fields in rows:
        if len(fields) != 1:
            raise ParseError(f"{path}:{line}: group file must have exactly one column, found {len(fields)}")
        labels.append(fields[0].strip())
    return np.array(labels), _fingerprint(path, raw, (len(labels), 1))


def _fingerprint(path, raw, shape) -> dict:
    return {"path": str(path), "rows": int(shape[0]), "columns": int(shape[1]),
            "sha256": hashlib.sha256(raw).hexdigest()}


def _build_spec(args):
    header = not args.no_header
    inputs = {}

    def load(name):
        data, inputs[name] = read_matrix(getattr(args, name), header)
        return data

    if args.problem == "manova":
        y = load("y")
        groups, inputs["groups"] = read_labels(args.groups, header)
        spec = ManovaSpec(y, groups)
    elif args.problem == "covequal":
        spec = CovEqualSpec(load("x"), load("y"))
    elif args.problem == "cca":
        spec = CcaSpec(load("x"), load("y"))
    else:
        conf = load("confounders") if args.confounders else None
        spec = PcevSpec(load("y"), load("x"), conf)
    return spec, inputs


def cmd_test(args) -> int:
    start = time.perf_counter()
    spec, inputs = _build_spec(args)
    result = run_estimator(spec, K=args.k, fit_method=args.fit, seed=args.seed, shrinkage=args.shrinkage,
                           n_perm=args.perm, threads=args.threads, rank_tolerance=args.rank_tol)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": f"test {args.problem}",
        "result": result.to_dict(),
        "inputs": inputs,
        "timing": {"wall_seconds": time.perf_counter() - start},
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        line = (f"{args.problem}: lambda={result.lambda_obs:.6g} p_tw={result.p_value_tw:.6g}"
                f" mu={result.fit.mu:.6g} sigma={result.fit.sigma:.6g} K={result.K} fit={result.fit.fit_method}")
        if result.p_value_perm is not None:
            line += f" p_perm={result.p_value_perm:.6g}"
        if result.excluded_roots:
            line += f" excluded={result.excluded_roots}"
        print(line)
    else:
        sys.stdout.write(text)
    return 0


def cmd_tw(args) -> int:
    dist = TWLocationScale(args.mu, args.sigma, "cli")
    func = {"cdf": dist.cdf, "pdf": dist.pdf, "quantile": dist.quantile}[args.function]
    try:
        value = func(args.value)
    except ValidationError as err:
        raise ParseError(str(err)) from None
    print(f"{value:.12g}")
    return 0


def _sim_config(args) -> ScenarioConfig:
    common = dict(p=args.p, K=args.k, seed=args.seed, fit_method=args.fit, threads=args.threads,
                  rank_tolerance=args.rank_tol)
    try:
        if args.study == "approx":
            scenario = "approx_cdf_shrunk" if args.shrinkage else "approx_cdf"
            return ScenarioConfig(scenario=scenario, m=args.m, n=args.n, reps=args.reps, **common)
        return ScenarioConfig(scenario=args.method, q=args.q, n=args.n, rho=args.rho, r2=args.r2,
                              reps=args.sims, n_perm=args.perms, **common)
    except ValidationError as err:
        raise ParseError(str(err)) from None


def cmd_simulate(args) -> int:
    config = _sim_config(args)
    study = run_approx_study(config) if args.study == "approx" else run_pvalue_study(config)
    buf = io.StringIO()
    study.write_csv(buf)
    if not args.out:
        sys.stdout.write(buf.getvalue())
        return 0
    out = Path(args.out)
    out.write_text(buf.getvalue(), encoding="utf-8")
    resolved = {k: v for k, v in config.to_dict().items() if k != "threads"}
    side = {"schema_version": SCHEMA_VERSION, "command": f"simulate {args.study}", "config": resolved}
    if args.study == "approx":
        side["ks"] = study.ks
        side["fits"] = {m: {"mu": f.mu, "sigma": f.sigma} for m, f in study.fits.items()}
        side["excluded_roots"] = study.excluded
        print(" ".join(f"ks_{m}={v:.4f}" for m, v in study.ks.items()))
    else:
        print(f"{len(study.p_value_tw)} simulations written to {out}")
    out.with_name(out.stem + ".config.json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n",
                                                        encoding="utf-8")
    return 0


def _add_common(p, seed_required=True):
    p.add_argument("--seed", type=int, required=seed_required, help="random seed (required)")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="permutation replicates for the fit")
    p.add_argument("--fit", choices=FIT_METHODS, default="mm")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="output path")
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twempirical", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="run a Tracy-Widom empirical test on CSV data")
    problems = test.add_subparsers(dest="problem", required=True)
    specs = {
        "manova": [("--y", True), ("--groups", True)],
        "covequal": [("--x", True), ("--y", True)],
        "cca": [("--x", True), ("--y", True)],
        "pcev": [("--y", True), ("--x", True), ("--confounders", False)],
    }
    for name, files in specs.items():
        p = problems.add_parser(name)
        for flag, required in files:
            p.add_argument(flag, required=required, metavar="CSV")
        _add_common(p)
        p.add_argument("--shrinkage", action="store_true", help="Ledoit-Wolf shrinkage of A")
        p.add_argument("--perm", type=int, help="also compute a permutation p-value with N permutations")
        p.add_argument("--no-header", action="store_true", help="CSV files have no header row")
        p.set_defaults(func=cmd_test)

    tw = sub.add_parser("tw", help="evaluate the Tracy-Widom (order 1) distribution")
    tw.add_argument("function", choices=("cdf", "pdf", "quantile"))
    tw.add_argument("value", type=float)
    tw.add_argument("--mu", type=float, default=0.0)
    tw.add_argument("--sigma", type=float, default=1.0)
    tw.set_defaults(func=cmd_tw)

    sim = sub.add_parser("simulate", help="run a simulation study and write a CSV table")
    studies = sim.add_subparsers(dest="study", required=True)
    approx = studies.add_parser("approx")
    _add_common(approx)
    approx.add_argument("--p", type=int, default=200)
    approx.add_argument("--m", type=int, default=96)
    approx.add_argument("--n", type=int, default=4)
    approx.add_argument("--reps", type=int, default=1000)
    approx.add_argument("--shrinkage", action="store_true")
    approx.set_defaults(func=cmd_simulate)

    pv = studies.add_parser("pvalues")
    _add_common(pv)
    pv.add_argument("--method", choices=("covequal", "cca", "pcev"), required=True)
    pv.add_argument("--p", type=int, default=200)
    pv.add_argument("--q", type=int, default=20)
    pv.add_argument("--n", type=int, default=100)
    pv.add_argument("--rho", type=float, default=0.0)
    pv.add_argument("--r2", type=float, default=0.0)
    pv.add_argument("--sims", type=int, default=100)
    pv.add_argument("--perms", type=int, default=500)
    pv.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "sigma", 1.0) <= 0:
        print("error: --sigma must be positive", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateProblemError as err:
        print(f"degenerate problem: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValidationError as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
