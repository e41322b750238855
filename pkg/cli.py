"""Command-line entry point: ``spectrum``, ``protocol`` and ``sweep``.

    python cli.py spectrum --config data/pair_spectrum.json --out results
    python cli.py protocol --config data/bell_linear.json --frame full
    python cli.py sweep --config data/sweep_bell_D.json --jobs 4

Exit codes: 0 success, 2 configuration or domain error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

import logs
from errors import ConfigError, DomainError, NumericalError
from evolve import diagonalize
from hamiltonian import build_static
from perturbation import BandAssignment, BandPrediction, assign_bands, band_layout, band_tolerance
from protocols import ProtocolResult, run_protocol, sweep
from run_config import API_VERSION, RunConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    bands: list[BandPrediction]
    tolerance: Optional[float]
    assignment: Optional[BandAssignment]


def format_number(x) -> str:
    """Fixed notation, 12 significant digits, locale independent."""
    return np.format_float_positional(float(x), precision=12, unique=False, fractional=False, trim="-")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if np.isnan(value) else format_number(value)
    return str(value)


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.apply(lambda column: column.map(_cell)).to_csv(index=False, lineterminator="\n")


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def cmd_spectrum(config: RunConfig) -> SpectrumReport:
    spec = config.chain_spec()
    N = config.sector()
    eigenvalues = diagonalize(build_static(spec, N)).eigenvalues
    try:
        bands = band_layout(spec, N)
    except DomainError as exc:
        print(f"[cli] no band layout for this chain: {exc}", flush=True)
        return SpectrumReport(eigenvalues, [], None, None)
    tolerance = band_tolerance(spec)
    return SpectrumReport(eigenvalues, bands, tolerance, assign_bands(eigenvalues, bands, tolerance))


def cmd_protocol(config: RunConfig, frame: Optional[str] = None) -> ProtocolResult:
    return run_protocol(config.protocol_spec(frame))


def cmd_sweep(config: RunConfig, frame: Optional[str] = None, jobs: int = 1) -> pd.DataFrame:
    if config.sweep is None:
        raise ConfigError("sweep: section required for this command")
    return sweep(config.protocol_spec(frame), config.sweep.parameter, config.sweep.values, jobs=jobs)


def spectrum_table(report: SpectrumReport) -> pd.DataFrame:
    if report.assignment is None:
        return pd.DataFrame(columns=["band", "center", "half_width", "predicted_count", "member_count", "max_deviation"])
    return report.assignment.table


def protocol_summary(result: ProtocolResult, config: RunConfig) -> dict:
    echoed = config.model_dump(mode="json")
    # the echoed document records the frame actually run, --frame included
    if echoed.get("protocol") is not None:
        echoed["protocol"]["frame"] = result.pspec.frame
    return {
        "creation_time": result.t_create,
        "branch": result.branch,
        "frame": result.pspec.frame,
        "scores": result.scores,
        "warnings": list(result.warnings),
        "integration": result.series.meta,
        "config": echoed,
    }


def write_spectrum(report: SpectrumReport, out_dir: Path, prefix: str = "") -> list[Path]:
    text = "".join(format_number(e) + "\n" for e in report.eigenvalues)
    return [
        _atomic_write(out_dir / f"{prefix}eigenvalues.txt", text),
        _atomic_write(out_dir / f"{prefix}bands.csv", frame_to_csv(spectrum_table(report))),
    ]


def write_protocol(result: ProtocolResult, config: RunConfig, out_dir: Path, prefix: str = "") -> list[Path]:
    summary = json.dumps(protocol_summary(result, config), indent=2, sort_keys=True, default=logs.json_default)
    return [
        _atomic_write(out_dir / f"{prefix}timeseries.csv", frame_to_csv(result.series.to_frame())),
        _atomic_write(out_dir / f"{prefix}summary.json", summary + "\n"),
    ]


def write_sweep(table: pd.DataFrame, out_dir: Path, prefix: str = "") -> list[Path]:
    return [_atomic_write(out_dir / f"{prefix}sweep.csv", frame_to_csv(table))]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description="XXZ chain defect simulator: spectra, entangled-state protocols, sweeps")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spectrum", "eigenvalues of one excitation sector and their band assignment"),
        ("protocol", "create an entangled state and track its maintenance under detuning"),
        ("sweep", "repeat a protocol over a list of parameter values"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON run document")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None, help="reserved; runs are deterministic")
        if name != "spectrum":
            p.add_argument("--frame", choices=["effective", "full", "full_chain"], default=None,
                           help="override protocol.frame")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = Path(args.out or config.output.dir)
        prefix = config.output.prefix

        if args.command == "spectrum":
            report = cmd_spectrum(config)
            written = write_spectrum(report, out_dir, prefix)
            content = {"eigenvalue_count": len(report.eigenvalues), "bands": spectrum_table(report).to_dict(orient="records")}
            if report.assignment is not None and not report.assignment.is_complete():
                print(f"[cli] WARNING: {len(report.assignment.unassigned)} unassigned and "
                      f"{len(report.assignment.ambiguous)} ambiguous eigenvalue(s)", flush=True)
        elif args.command == "protocol":
            result = cmd_protocol(config, args.frame)
            written = write_protocol(result, config, out_dir, prefix)
            content = protocol_summary(result, config)
            print(f"[cli] {result.pspec.kind} created at t={result.t_create:.6g} (branch {result.branch}), "
                  f"final-window concurrence {result.scores['concurrence_mean']:.4f}", flush=True)
        else:
            table = cmd_sweep(config, args.frame, args.jobs)
            written = write_sweep(table, out_dir, prefix)
            content = {"rows": table.to_dict(orient="records")}
    except (ConfigError, DomainError) as exc:
        print(f"[cli] ERROR: {exc}", file=sys.stderr, flush=True)
        return EXIT_CONFIG
    except NumericalError as exc:
        detail = f" (last step {exc.last_step:.3e})" if exc.last_step is not None else ""
        print(f"[cli] NUMERICAL ERROR: {exc}{detail}", file=sys.stderr, flush=True)
        return EXIT_NUMERICAL

    for path in written:
        print(f"[cli] wrote {path}", flush=True)
    logs.log_usage(args.command, {"config": args.config, "outputs": [str(p) for p in written], **content}, API_VERSION)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
