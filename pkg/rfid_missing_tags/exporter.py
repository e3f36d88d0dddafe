"""
CSV export.

Experiment reports get one row per configuration cell; efficiency curves
get one row per (p, q) sample.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from pathlib import Path

from .analysis import EfficiencyPoint
from .experiment import CSV_COLUMNS, TrialReport

CURVE_COLUMNS = ("p", "q", "efficiency")


def _render(columns: Sequence[str], rows: Iterable[dict[str, object]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _write(text: str, path: str | Path | None, what: str, count: int, dry_run: bool) -> Path | None:
    if dry_run or path is None:
        if dry_run:
            print(f"[export]   [DRY RUN] Would create: {path}")
        for line in text.splitlines():
            print(f"[export]   {line}")
        return None

    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    print(f"[export] Created: {path.name} ({count} {what})")
    return path


def check_output_path(path: str | Path | None) -> None:
    """Fail before any trial runs when the CSV could not be created."""
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")


def report_csv(reports: Iterable[TrialReport]) -> str:
    return _render(CSV_COLUMNS, (r.row() for r in reports))


def write_report_csv(
    reports: Sequence[TrialReport],
    path: str | Path | None,
    dry_run: bool = False,
) -> Path | None:
    """
    Write one CSV row per report. Returns the path, or None when the rows
    were only printed (dry run or no path).
    """
    return _write(report_csv(reports), path, "rows", len(reports), dry_run)


def curve_csv(points: Iterable[EfficiencyPoint]) -> str:
    rows = (
        {
            "p": f"{pt.p:.6g}",
            "q": "" if pt.q is None else f"{pt.q:.6g}",
            "efficiency": f"{pt.efficiency:.6f}",
        }
        for pt in points
    )
    return _render(CURVE_COLUMNS, rows)


def write_curve_csv(
    points: Sequence[EfficiencyPoint],
    path: str | Path | None,
    dry_run: bool = False,
) -> Path | None:
    return _write(curve_csv(points), path, "points", len(points), dry_run)
