"""CSV reports and two-column plot series."""
from __future__ import annotations

import csv
import math
import os
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core import LAMBDA_8, DegreeDistribution
from ..metrics import MetricsReport, irsa_asymptotic_throughput, saloha_theory

CSV_COLUMNS = [
    "protocol", "G", "throughput_raf", "throughput_rapc", "pdr", "plr", "mean_delay_slots",
    "delay_per_active", "delay_p95_ms", "reliability", "acr", "realizations",
    "ci_throughput", "ci_plr", "ci_acr",
]

PLOT_KINDS = {
    "throughput": "throughput_raf",
    "plr": "plr",
    "delay": "mean_delay_slots",
    "acr": "acr",
}


def fmt(value) -> str:
    """Six significant digits, shortest form ('0.05', not '0.0500000')."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.6g}"


def _row(report: MetricsReport) -> list[str]:
    return [fmt(getattr(report, c)) for c in CSV_COLUMNS]


def write_csv(reports: Sequence[MetricsReport], path) -> Path:
    if not reports:
        raise ValueError("no reports to write")
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow(_row(r))
    os.replace(tmp, path)
    return path


def read_csv(path) -> list[MetricsReport]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        out = []
        for row in reader:
            values = {c: float(row[c]) for c in CSV_COLUMNS if c != "protocol"}
            values["realizations"] = int(values["realizations"])
            # tolerate 6-digit rounding on the plr = 1 - pdr identity
            values["plr"] = 1.0 - values["pdr"]
            out.append(MetricsReport(protocol=row["protocol"], **values))
        return out


def _write_series(path: Path, xs, ys, header: str) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# G {header}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{fmt(x)} {fmt(y)}\n")
    return path


def emit_plot_data(
    reports: Sequence[MetricsReport], kind: str, out_dir, dist: DegreeDistribution = LAMBDA_8
) -> list[Path]:
    """Write one ``<kind>_<series>.dat`` file per protocol present in ``reports``.

    For throughput, adds the slotted ALOHA law and the asymptotic IRSA
    curve (density evolution with ``dist``) over the same load grid.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")
    if not reports:
        raise ValueError("no reports to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    column = PLOT_KINDS[kind]
    written = []
    by_protocol: dict[str, list[MetricsReport]] = {}
    for r in reports:
        by_protocol.setdefault(r.protocol, []).append(r)
    for proto, rows in by_protocol.items():
        rows = sorted(rows, key=lambda r: r.G)
        ys = [getattr(r, column) for r in rows]
        written.append(_write_series(out_dir / f"{kind}_{proto}.dat", [r.G for r in rows], ys, column))
    if kind == "throughput":
        grid = sorted({r.G for r in reports})
        written.append(_write_series(out_dir / f"{kind}_saloha_theory.dat", grid, [saloha_theory(g) for g in grid], "S"))
        written.append(
            _write_series(
                out_dir / f"{kind}_irsa_asymptotic.dat", grid,
                [irsa_asymptotic_throughput(dist, g) for g in grid], "S",
            )
        )
    return written
