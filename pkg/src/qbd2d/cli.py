"""``qbd`` command line: validate, analyze, reproduce, oracle, generate.

Exit codes: 0 success, 1 analysis failure or validation findings, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .asymptotics import EQ_TOL, PSI_BAND, AsymptoticsReport, CriticalPoints, analyze, psi_sign
from .errors import QbdError
from .model import (
    LimitedServiceParams,
    ModelFormatError,
    QbdModel,
    build_limited_service,
    load_model,
    save_model,
    validate,
)
from .oracle import SolveMethod, empirical_decay, truncated_stationary, write_csv
from .qbd_core import TOL
from .spectral import TOL_EIG, TOL_ROOT, SpectralSummary, extreme_points
from .stability import DRIFT_ZERO, DriftReport, Verdict, drifts

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

TABLE_PARAMS = {1: (0.3, 0.3, 1.0, 1.0), 2: (0.24, 0.7, 1.2, 1.0)}
TABLE_KS = (1, 2, 3, 4, 5, 6, 7, 8, 10, 20, 50)
CSV_HEADER = ["K", "Type", "a1_12", "a2_12", "psi1_sign", "psi2_sign", "r1", "r2"]


class InputError(Exception):
    """Bad user input; reported as JSON with exit code 2."""


def tolerances(tol: float = TOL, eq_tol: float = EQ_TOL) -> dict:
    return {
        "kernel": tol,
        "eq_tol": eq_tol,
        "psi_band": max(eq_tol, PSI_BAND),
        "root": TOL_ROOT,
        "eigen": TOL_EIG,
        "drift_zero": DRIFT_ZERO,
    }


@dataclass
class AnalysisBundle:
    """Everything ``qbd analyze`` reports, in a JSON-round-trippable form."""

    model: dict
    drifts: DriftReport
    spectral: SpectralSummary | None = None
    critical: CriticalPoints | None = None
    asymptotics: AsymptoticsReport | None = None
    oracle: dict | None = None
    tolerances: dict = field(default_factory=tolerances)
    version: str = __version__
    schema: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {
            "schema": self.schema,
            "version": self.version,
            "tolerances": dict(self.tolerances),
            "model": dict(self.model),
            "drifts": self.drifts.to_dict(),
        }
        if self.spectral is not None:
            d["spectral"] = self.spectral.to_dict()
        if self.critical is not None:
            d["critical_points"] = self.critical.to_dict()
        if self.asymptotics is not None:
            d["asymptotics"] = self.asymptotics.to_dict()
        if self.oracle is not None:
            d["oracle"] = dict(self.oracle)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisBundle":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        spectral = SpectralSummary(**d["spectral"]) if "spectral" in d else None
        critical = CriticalPoints.from_dict(d["critical_points"]) if "critical_points" in d else None
        asym = (AsymptoticsReport.from_dict(d["asymptotics"], critical, spectral)
                if "asymptotics" in d else None)
        return cls(model=d["model"], drifts=DriftReport.from_dict(d["drifts"]),
                   spectral=spectral, critical=critical, asymptotics=asym,
                   oracle=d.get("oracle"), tolerances=d["tolerances"],
                   version=d["version"], schema=d["schema"])


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def run_analysis(model: QbdModel, descriptor: dict, tol: float = TOL,
                 eq_tol: float = EQ_TOL) -> AnalysisBundle:
    """drifts -> extremes -> critical points -> type -> rates -> form classes."""
    stage = "drifts"
    try:
        dr = drifts(model)
        bundle = AnalysisBundle(model=descriptor, drifts=dr, tolerances=tolerances(tol, eq_tol))
        if dr.verdict is not Verdict.POSITIVE_RECURRENT:
            return bundle
        stage = "extremes"
        bundle.spectral = extreme_points(model)
        stage = "asymptotics"
        report = analyze(model, eq_tol=eq_tol, extremes=bundle.spectral, tol=tol)
    except QbdError as exc:
        raise StageError(stage, exc) from exc
    bundle.critical = report.critical
    bundle.asymptotics = report
    return bundle


def _emit_json(obj, out=None) -> None:
    out = out or sys.stdout
    json.dump(obj, out, indent=2)
    out.write("\n")


def _error(message: str, code: int, **extra) -> int:
    _emit_json({"schema": SCHEMA_VERSION, "error": message, **extra}, sys.stdout)
    return code


def _read_model(path: str) -> tuple[QbdModel, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        model = load_model(text)
    except ModelFormatError as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise InputError(f"invalid model: {exc}") from exc
    digest = hashlib.sha256(text.encode()).hexdigest()
    return model, {"path": path, "s0": model.s0, "sha256": digest}


# -- table rows ---------------------------------------------------------------------


def table_row(table: int, K: int, tol: float = TOL, eq_tol: float = EQ_TOL) -> dict:
    """Full-precision values of one row of a reproduced table."""
    p = LimitedServiceParams(K, *TABLE_PARAMS[table])
    model = build_limited_service(p)
    bundle = run_analysis(model, {"generator": "limited_service", "K": K}, tol, eq_tol)
    row = {"K": K, "a1_12": bundle.drifts.a12[0], "a2_12": bundle.drifts.a12[1],
           "verdict": bundle.drifts.verdict.value}
    a = bundle.asymptotics
    if a is not None:
        row.update(type=a.type.value, psi1_minus_1=a.psi1_at_zmax - 1.0,
                   psi2_minus_1=a.psi2_at_wmax - 1.0,
                   psi1_sign=psi_sign(a.psi1_at_zmax, eq_tol),
                   psi2_sign=psi_sign(a.psi2_at_wmax, eq_tol),
                   r1=a.rates[0], r2=a.rates[1],
                   h1=a.h1_class.tag.value, h2=a.h2_class.tag.value,
                   equality_flags=list(a.equality_flags))
    return row


def format_row(row: dict) -> list[str]:
    """Table layout: drifts at 3 significant digits, rates at 4."""
    if "type" not in row:
        return [str(row["K"]), row["verdict"], f"{row['a1_12']:#.3g}", f"{row['a2_12']:#.3g}",
                "", "", "", ""]
    return [
        str(row["K"]), row["type"], f"{row['a1_12']:#.3g}", f"{row['a2_12']:#.3g}",
        row["psi1_sign"], row["psi2_sign"], f"{row['r1']:.4g}", f"{row['r2']:.4g}",
    ]


def reproduce_rows(table: int, tol: float = TOL, eq_tol: float = EQ_TOL,
                   jobs: int = 1) -> list[dict]:
    args = [(table, K, tol, eq_tol) for K in TABLE_KS]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(table_row, *zip(*args)))
    return [table_row(*a) for a in args]


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(format_row(row))
    return buf.getvalue()


# -- commands -----------------------------------------------------------------------


def cmd_validate(args) -> int:
    model, desc = _read_model(args.path)
    problems = validate(model)
    _emit_json({"schema": SCHEMA_VERSION, "model": desc, "ok": not problems,
                "violations": problems})
    return EXIT_OK if not problems else EXIT_FAIL


def cmd_analyze(args) -> int:
    model, desc = _read_model(args.path)
    problems = [p for p in validate(model) if not p.startswith("heuristic")]
    if problems:
        return _error("model failed validation", EXIT_INPUT, violations=problems)
    try:
        bundle = run_analysis(model, desc, args.tol, args.eq_tol)
    except StageError as exc:
        return _error(str(exc.cause), EXIT_FAIL, stage=exc.stage)
    if args.csv:
        a = bundle.asymptotics
        row = {"K": "-", "a1_12": bundle.drifts.a12[0], "a2_12": bundle.drifts.a12[1],
               "verdict": bundle.drifts.verdict.value}
        if a is not None:
            row.update(type=a.type.value, psi1_sign=psi_sign(a.psi1_at_zmax, args.eq_tol),
                       psi2_sign=psi_sign(a.psi2_at_wmax, args.eq_tol),
                       r1=a.rates[0], r2=a.rates[1])
        sys.stdout.write(rows_to_csv([row]))
    else:
        _emit_json(bundle.to_dict())
    return EXIT_OK


def cmd_reproduce(args) -> int:
    try:
        rows = reproduce_rows(args.table, args.tol, args.eq_tol, args.jobs)
    except StageError as exc:
        return _error(str(exc.cause), EXIT_FAIL, stage=exc.stage)
    if args.json:
        _emit_json({"schema": SCHEMA_VERSION, "version": __version__, "table": args.table,
                    "params": dict(zip(("lambda1", "lambda2", "mu1", "mu2"),
                                       TABLE_PARAMS[args.table])),
                    "tolerances": tolerances(args.tol, args.eq_tol), "rows": rows})
    else:
        sys.stdout.write(rows_to_csv(rows))
    return EXIT_OK


def cmd_oracle(args) -> int:
    model, desc = _read_model(args.path)
    try:
        bundle = run_analysis(model, desc, args.tol, args.eq_tol)
    except StageError as exc:
        return _error(str(exc.cause), EXIT_FAIL, stage=exc.stage)
    if bundle.asymptotics is None:
        return _error(f"oracle needs a positive recurrent model, verdict is "
                      f"{bundle.drifts.verdict.value}", EXIT_FAIL, stage="drifts")
    try:
        sol = truncated_stationary(model, args.truncation, args.method)
    except QbdError as exc:
        return _error(str(exc), EXIT_FAIL, stage="oracle")
    if args.dump:
        write_csv(sol, args.dump)
    axes = (1, 2) if args.axis == "both" else (int(args.axis),)
    window = tuple(args.window) if args.window else None
    result = {"schema": SCHEMA_VERSION, "model": desc, "truncation": args.truncation,
              "method": sol.method.value, "residual": sol.residual,
              "iterations": sol.iterations, "axes": []}
    for axis in axes:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # surfaced in the JSON instead
            est = empirical_decay(sol, axis, window)
        r = bundle.asymptotics.rates[axis - 1]
        result["axes"].append({
            "axis": axis, "analytic_rate": r, "analytic_ratio": 1.0 / r,
            "empirical_ratio": est.estimate, "relative_gap": abs(est.estimate * r - 1.0),
            "window": list(est.window), "spread": est.spread, "warnings": list(est.warnings),
        })
    _emit_json(result)
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        p = LimitedServiceParams(args.k, args.l1, args.l2, args.m1, args.m2)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    text = save_model(build_limited_service(p))
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def tol_flags(p):
        p.add_argument("--tol", type=_positive_float, default=TOL,
                       help="kernel solver tolerance (default %(default)g)")
        p.add_argument("--eq-tol", type=_positive_float, default=EQ_TOL,
                       help="band for equality branches (default %(default)g)")

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="stability, decay rates and form classes")
    p.add_argument("path")
    tol_flags(p)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--csv", action="store_true", help="one table-style CSV row")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reproduce", help="recompute a table of the limited-service model")
    p.add_argument("table", type=int, choices=(1, 2))
    tol_flags(p)
    p.add_argument("--json", action="store_true", help="full-precision JSON instead of CSV")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("oracle", help="compare rates with a truncated-chain solve")
    p.add_argument("path")
    tol_flags(p)
    p.add_argument("--truncation", "-N", type=_positive_int, default=150)
    p.add_argument("--axis", choices=("1", "2", "both"), default="both")
    p.add_argument("--window", type=int, nargs=2, metavar=("K_LO", "K_HI"))
    p.add_argument("--method", choices=[m.value for m in SolveMethod],
                   default=SolveMethod.GAUSS_SEIDEL.value)
    p.add_argument("--dump", metavar="CSV", help="write the truncated distribution here")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("generate", help="write a (1,K)-limited-service model file")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--l1", type=_positive_float, default=0.3)
    p.add_argument("--l2", type=_positive_float, default=0.3)
    p.add_argument("--m1", type=_positive_float, default=1.0)
    p.add_argument("--m2", type=_positive_float, default=1.0)
    p.add_argument("--out", "-o", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        return _error(str(exc), EXIT_INPUT)
    except QbdError as exc:
        return _error(str(exc), EXIT_FAIL)
    except ValueError as exc:
        return _error(str(exc), EXIT_INPUT)
    except OSError as exc:
        return _error(f"I/O error: {exc}", EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
