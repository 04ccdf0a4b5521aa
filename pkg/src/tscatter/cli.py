"""Command-line front end: CSV in, JSON envelope out.

Subcommands: ``estimate`` (location-scatter), ``scatter`` (pure scatter),
``check-domain``, ``asymptotics``, ``oned``, and ``simulate``. Every run emits
a versioned envelope ``{"version": "v1", "command", "timing_ms", "payload",
"warnings"}``; the payload schema ships in ``docs/result_schema.json``.

Exit codes: 0 success, 1 usage or input error, 2 domain violation (with a
structured report in the payload), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import asymptotic_cov_locscatter, asymptotic_cov_scatter
from .domain_check import DomainReport, EmpiricalSample, check_locscat_domain, check_scatter_domain
from .exceptions import (
    CsvParseError,
    DegeneracyError,
    DomainViolation,
    NotSpdError,
    NumericalBreakdown,
    NuOutOfRange,
)
from .locscatter import solve_locscatter
from .oned import solve_oned
from .scatter import ScatterConfig, solve_scatter
from .simlab import discrete_sampler, run_clt_experiment

__all__ = ["RunConfig", "ResultEnvelope", "ingest_csv", "dispatch", "main"]

SCHEMA_VERSION = "v1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    nu: float
    input_path: str
    tol: float = 1e-10
    max_iter: int = 500
    seed: int = 0
    output: str | None = None
    format: str = "json"
    mode: str = "locscatter"       # check-domain / asymptotics / simulate target
    n: int = 1000                  # simulate: per-replicate sample size
    reps: int = 200                # simulate: replicate count
    workers: int = 1
    dump_reps: str | None = None   # simulate: optional per-replicate CSV

    def __post_init__(self):
        if not self.nu > 0.0:
            raise ValueError("nu must be positive")
        if self.command in ("estimate", "oned") and not self.nu > 1.0:
            raise ValueError(f"{self.command} requires nu > 1")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.format!r}")


@dataclass(frozen=True)
class ResultEnvelope:
    version: str
    command: str
    timing_ms: float
    payload: dict
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "command": self.command,
            "timing_ms": self.timing_ms,
            "payload": self.payload,
            "warnings": list(self.warnings),
        }


def ingest_csv(source) -> EmpiricalSample:
    """Parse a CSV of observations into a weighted sample.

    One observation per row, numeric cells, UTF-8. A header is auto-detected
    (first row with any non-numeric cell); with a header, a final column named
    ``weight`` supplies nonnegative weights, normalized to sum 1. Ragged rows,
    non-numeric or non-finite cells, and negative weights raise
    :class:`CsvParseError` with the offending row number.
    """
    if hasattr(source, "read"):
        rows = list(csv.reader(source))
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    rows = [row for row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise CsvParseError("no data rows found")

    def parse_cell(cell, rownum):
        try:
            val = float(cell)
        except ValueError:
            raise CsvParseError(f"row {rownum}: non-numeric cell {cell!r}") from None
        if not np.isfinite(val):
            raise CsvParseError(f"row {rownum}: non-finite cell {cell!r}")
        return val

    def row_is_numeric(row):
        for cell in row:
            try:
                val = float(cell)
            except ValueError:
                return False
            if not np.isfinite(val):
                return False
        return True

    header = None
    start = 0
    if not row_is_numeric(rows[0]):
        header = [cell.strip() for cell in rows[0]]
        start = 1
        if not rows[start:]:
            raise CsvParseError("header present but no data rows")

    width = len(rows[start])
    weight_col = header is not None and header and header[-1].lower() == "weight"

    data = []
    for offset, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise CsvParseError(f"row {offset}: expected {width} cells, got {len(row)}")
        data.append([parse_cell(cell, offset) for cell in row])
    arr = np.asarray(data, dtype=float)

    if weight_col:
        if arr.shape[1] < 2:
            raise CsvParseError("weight column requires at least one coordinate column")
        weights = arr[:, -1]
        points = arr[:, :-1]
        neg = np.nonzero(weights < 0.0)[0]
        if neg.size:
            raise CsvParseError(f"row {start + 1 + int(neg[0])}: negative weight")
        total = weights.sum()
        if total <= 0.0:
            raise CsvParseError("weights sum to zero")
        return EmpiricalSample(points, weights / total)
    return EmpiricalSample(arr)


def _round_trip(obj):
    """Make payload values JSON-ready (floats survive a round trip exactly)."""
    if isinstance(obj, np.ndarray):
        return _round_trip(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (list, tuple)):
        return [_round_trip(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _round_trip(v) for k, v in obj.items()}
    return obj


def _report_payload(report: DomainReport) -> dict:
    return _round_trip(
        {
            "member": report.member,
            "a0": report.a0,
            "worst_subspace_dim": report.worst_subspace_dim,
            "worst_mass": report.worst_mass,
            "threshold": report.threshold,
            "witness_points": list(report.witness_points),
            "exact": report.exact,
        }
    )


def _scatter_payload(result) -> dict:
    return _round_trip(
        {
            "A": result.A.mat,
            "iterations": result.iterations,
            "objective": result.objective,
            "grad_norm": result.grad_norm,
            "fp_residual": result.fp_residual,
            "converged": result.converged,
            "stop_reason": result.stop_reason,
        }
    )


def _cov_payload(cov) -> dict:
    return _round_trip(
        {"S": cov.S, "rank": cov.rank, "parametrization": cov.parametrization}
    )


def dispatch(cfg: RunConfig) -> ResultEnvelope:
    """Run one command against its input sample and wrap the result."""
    start = time.perf_counter()
    warnings: list[str] = []

    if cfg.input_path == "-":
        sample = ingest_csv(io.StringIO(sys.stdin.read()))
    else:
        sample = ingest_csv(cfg.input_path)

    scfg = ScatterConfig(nu=cfg.nu, tol_grad=cfg.tol, max_iter=cfg.max_iter)

    if cfg.command == "estimate":
        est = solve_locscatter(sample, cfg.nu, scfg)
        if not est.converged:
            warnings.append("estimate did not meet its convergence certificates")
        payload = _round_trip(
            {
                "mu": est.mu,
                "Sigma": est.Sigma.mat,
                "nu": est.nu,
                "gamma_check": est.gamma_check,
                "weight_check": est.weight_check,
                "converged": est.converged,
                "iterations": est.scatter_diag.iterations,
                "grad_norm": est.scatter_diag.grad_norm,
            }
        )
    elif cfg.command == "scatter":
        result = solve_scatter(sample, scfg)
        if not result.converged:
            warnings.append("solver stopped before meeting the gradient tolerance")
        payload = _scatter_payload(result)
    elif cfg.command == "check-domain":
        a0 = cfg.nu + sample.d
        if cfg.mode == "scatter":
            report = check_scatter_domain(sample, a0)
        else:
            report = check_locscat_domain(sample, a0)
        payload = _report_payload(report)
        payload["target"] = cfg.mode
    elif cfg.command == "asymptotics":
        if cfg.mode == "scatter":
            cov = asymptotic_cov_scatter(sample, cfg.nu)
        else:
            if not cfg.nu > 1.0:
                raise NuOutOfRange("asymptotics for location-scatter requires nu > 1")
            cov = asymptotic_cov_locscatter(sample, cfg.nu)
        payload = _cov_payload(cov)
    elif cfg.command == "oned":
        est = solve_oned(sample, cfg.nu)
        payload = _round_trip(
            {
                "mu": est.mu,
                "sigma": est.sigma,
                "boundary": est.boundary,
                "atom": list(est.atom) if est.atom is not None else None,
            }
        )
    elif cfg.command == "simulate":
        sampler = discrete_sampler(sample.points, sample.weights, cfg.seed)
        report = run_clt_experiment(
            sampler,
            cfg.nu,
            n=cfg.n,
            reps=cfg.reps,
            mode=cfg.mode,
            workers=cfg.workers,
        )
        warnings.extend(report.warnings)
        payload = _round_trip(
            {
                "n": report.n,
                "reps": report.reps,
                "mode": report.mode,
                "seed": report.seed,
                "empirical_cov": report.empirical_cov,
                "target_cov": _cov_payload(report.target_cov),
                "max_rel_err": report.max_rel_err,
                "normality_stat": list(report.normality_stat),
                "existence_rate": report.existence_rate,
            }
        )
    else:
        raise ValueError(f"unknown command {cfg.command!r}")

    timing_ms = (time.perf_counter() - start) * 1000.0
    return ResultEnvelope(
        version=SCHEMA_VERSION,
        command=cfg.command,
        timing_ms=timing_ms,
        payload=payload,
        warnings=tuple(warnings),
    )


def _emit(envelope: ResultEnvelope, cfg: RunConfig | None):
    text_format = cfg.format if cfg is not None else "json"
    out_path = cfg.output if cfg is not None else None
    if text_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["key", "value"])
        flat = _flatten("payload", envelope.payload)
        for key, value in flat:
            writer.writerow([key, value])
        text = buf.getvalue()
    else:
        text = json.dumps(envelope.to_dict(), indent=2) + "\n"
    if out_path and out_path != "-":
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten(prefix, obj):
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(_flatten(f"{prefix}.{k}", v))
        return out
    if isinstance(obj, list):
        out = []
        for i, v in enumerate(obj):
            out.extend(_flatten(f"{prefix}[{i}]", v))
        return out
    return [(prefix, obj)]


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tscatter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_seed=False):
        p.add_argument("input", help="CSV path, or '-' for stdin")
        p.add_argument("--nu", type=float, required=True, help="tail parameter")
        p.add_argument("--tol", type=float, default=1e-10, help="gradient tolerance")
        p.add_argument("--max-iter", type=int, default=500)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default=None, help="write the envelope here instead of stdout")
        p.add_argument("--format", choices=["json", "csv"], default="json")

    add_common(sub.add_parser("estimate", help="location-scatter estimate (nu > 1)"))
    add_common(sub.add_parser("scatter", help="pure scatter estimate"))

    p = sub.add_parser("check-domain", help="existence-domain report")
    add_common(p)
    p.add_argument("--target", dest="mode", choices=["locscatter", "scatter"],
                   default="locscatter")

    p = sub.add_parser("asymptotics", help="asymptotic covariance of the estimate")
    add_common(p)
    p.add_argument("--mode", choices=["locscatter", "scatter"], default="locscatter")

    add_common(sub.add_parser("oned", help="one-dimensional extended estimate (nu > 1)"))

    p = sub.add_parser("simulate", help="Monte Carlo check against the asymptotic covariance")
    add_common(p)
    p.add_argument("--mode", choices=["scatter", "locscatter"], default="scatter")
    p.add_argument("--n", type=int, default=1000, help="per-replicate sample size")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            nu=args.nu,
            input_path=args.input,
            tol=args.tol,
            max_iter=args.max_iter,
            seed=args.seed,
            output=args.output,
            format=args.format,
            mode=getattr(args, "mode", "locscatter"),
            n=getattr(args, "n", 1000),
            reps=getattr(args, "reps", 200),
            workers=getattr(args, "workers", 1),
        )
    except ValueError as exc:
        sys.stderr.write(f"tscatter: error: {exc}\n")
        return EXIT_USAGE

    try:
        envelope = dispatch(cfg)
    except DomainViolation as exc:
        envelope = ResultEnvelope(
            version=SCHEMA_VERSION,
            command=cfg.command,
            timing_ms=0.0,
            payload={"error": "domain_violation", "report": _report_payload(exc.report)},
            warnings=(str(exc),),
        )
        _emit(envelope, cfg)
        return EXIT_DOMAIN
    except (NumericalBreakdown, NotSpdError, DegeneracyError) as exc:
        envelope = ResultEnvelope(
            version=SCHEMA_VERSION,
            command=cfg.command,
            timing_ms=0.0,
            payload={"error": "numerical_failure", "message": str(exc)},
            warnings=(),
        )
        _emit(envelope, cfg)
        return EXIT_NUMERICAL
    except (CsvParseError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"tscatter: error: {exc}\n")
        return EXIT_USAGE

    _emit(envelope, cfg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
