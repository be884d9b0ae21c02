"""CSV/JSON surfaces: dataset loading, report and table serialization.

Curves file: header row holds the grid abscissae, each following row one
curve. Response file: one value per row. All floats are written with 17
significant digits so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .fcore import FunctionalSample, Grid, ResponseVector
from .pipeline import DiagnosticTrajectories, TestReport
from .simulation import PowerTable

FLOAT_FMT = "%.17g"


def _parse_row(row, line_no, path):
    out = []
    for cell in row:
        text = cell.strip()
        try:
            out.append(float(text))
        except ValueError:
            raise ParseError(f"{path}:{line_no}: non-numeric cell {text!r}") from None
    return out


def load_dataset(curves_path, response_path) -> tuple[FunctionalSample, ResponseVector]:
    """Read a (curves CSV, response CSV) pair into validated containers."""
    curves_path, response_path = Path(curves_path), Path(response_path)
    with open(curves_path, newline="") as handle:
        reader = csv.reader(handle)
        rows = [(i + 1, row) for i, row in enumerate(reader) if row and any(c.strip() for c in row)]
    if len(rows) < 2:
        raise ParseError(f"{curves_path}:1: expected a grid header plus at least one curve row")
    header_no, header = rows[0]
    grid_points = _parse_row(header, header_no, curves_path)
    width = len(grid_points)
    curves = []
    for line_no, row in rows[1:]:
        vals = _parse_row(row, line_no, curves_path)
        if len(vals) != width:
            raise ParseError(
                f"{curves_path}:{line_no}: row has {len(vals)} cells, header has {width}"
            )
        curves.append(vals)
    with open(response_path, newline="") as handle:
        reader = csv.reader(handle)
        resp = []
        for i, row in enumerate(reader):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 1:
                raise ParseError(f"{response_path}:{i + 1}: expected a single column")
            resp.extend(_parse_row(row, i + 1, response_path))
    if len(resp) != len(curves):
        raise ParseError(
            f"row-count mismatch: {curves_path} has {len(curves)} curves, "
            f"{response_path} has {len(resp)} responses"
        )
    return FunctionalSample(Grid(np.array(grid_points)), np.array(curves)), ResponseVector(
        np.array(resp)
    )


def write_curves_csv(xs: FunctionalSample, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([FLOAT_FMT % v for v in xs.grid.points])
        for row in xs.values:
            writer.writerow([FLOAT_FMT % v for v in row])


def write_response_csv(ys: ResponseVector, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        for v in ys.values:
            writer.writerow([FLOAT_FMT % v])


def report_to_json(report: TestReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> TestReport:
    return TestReport.from_dict(json.loads(text))


def write_report(report: TestReport, path, fmt: str = "json"):
    if fmt == "json":
        Path(path).write_text(report_to_json(report))
        return
    if fmt == "csv":
        flat = report.to_dict()
        config = flat.pop("config")
        timings = flat.pop("timings")
        flat.update({f"config.{k}": v for k, v in sorted(config.items())})
        flat.update({f"timings.{k}": v for k, v in sorted(timings.items())})
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["key", "value"])
            for key, val in flat.items():
                writer.writerow([key, val])
        return
    raise ParseError(f"unknown report format {fmt!r}")


def power_table_to_json(table: PowerTable) -> str:
    payload = {
        "schema": "flm-gof/power-table/1",
        "M": table.M,
        "B": table.B,
        "config": table.config,
        "rows": table.rows,
        "failures": table.failures,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_power_table(table: PowerTable, path, fmt: str = "csv"):
    if fmt == "json":
        Path(path).write_text(power_table_to_json(table))
        return
    if fmt == "csv":
        columns = ["scenario", "method", "estimator", "n", "alpha",
                   "p_policy", "rate", "se", "M_effective"]
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in table.rows:
                writer.writerow([row[c] for c in columns])
        return
    raise ParseError(f"unknown table format {fmt!r}")


def write_diagnostic(diag: DiagnosticTrajectories, path):
    """CSV with columns u, observed, boot_1..boot_B plus a metadata sidecar."""
    path = Path(path)
    B = diag.bootstrap.shape[0]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["u", "observed"] + [f"boot_{b + 1}" for b in range(B)])
        for k in range(diag.u.size):
            row = [diag.u[k], diag.observed[k]] + list(diag.bootstrap[:, k])
            writer.writerow([FLOAT_FMT % v for v in row])
    meta = dict(diag.metadata)
    meta["G"] = diag.G
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
