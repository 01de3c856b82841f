"""Output: CSV series and JSON reports.

Files are UTF-8 with LF line endings and reals are written with 17
significant digits, so identical runs give identical bytes::

    <out_dir>/<experiment>/seed-<seed>/events.csv
    <out_dir>/<experiment>/seed-<seed>/temps.csv
    <out_dir>/<experiment>/seed-<seed>/forces.csv
    <out_dir>/<experiment>/seed-<seed>/report.json
    <out_dir>/<experiment>/summary.csv
"""

import csv
import json
import math
import os
from typing import Any
from typing import List
from typing import Sequence

import numpy as np

from _headgrow.harness.experiments import ExperimentReport
from _headgrow.harness.experiments import Table
from _headgrow.utils.common import fmt_real

__all__ = [
    "SUMMARY_COLUMNS",
    "run_dir",
    "to_builtin",
    "write_report",
    "write_summary",
    "write_table",
]

SUMMARY_COLUMNS = ("seed", "passed", "failures")


def to_builtin(obj: Any) -> Any:
    """Recursively convert numpy values into JSON-ready builtins.

    Non-finite reals become ``None``; tuples and sets become lists, sets
    sorted.
    """

    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return [to_builtin(v) for v in sorted(obj)]
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    return str(obj)


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_real(value)
    return str(value)


def write_table(path: str, table: Table) -> None:
    """Write ``table`` as CSV with its header row."""

    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])


def run_dir(out_dir: str, experiment: str, seed: int) -> str:
    """Return (and create) the directory of one seeded run."""

    path = os.path.join(out_dir, experiment, f"seed-{seed}")
    os.makedirs(path, exist_ok=True)
    return path


def write_report(report: ExperimentReport, out_dir: str) -> str:
    """Write every series and ``report.json`` for one report.

    :return: Path of the written JSON report.

    """

    folder = run_dir(out_dir, report.name, report.config.seed)
    for stem, table in sorted(report.tables.items()):
        path = os.path.join(folder, f"{stem}.csv")
        write_table(path, table)
        report.files[stem] = os.path.relpath(path, out_dir)
    target = os.path.join(folder, "report.json")
    with open(target, "w", encoding="utf-8", newline="\n") as handle:
        payload = to_builtin(report.to_dict())
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return target


def write_summary(
    reports: Sequence[ExperimentReport], out_dir: str, experiment: str
) -> str:
    """Merge per-seed verdicts into ``summary.csv``, ordered by seed."""

    ordered = sorted(reports, key=lambda r: r.config.seed)
    flags: List[str] = []
    for report in ordered:
        flags.extend(f for f in report.flags if f not in flags)
    rows = [
        (
            report.config.seed,
            report.passed,
            ";".join(report.failures),
            *(report.flags.get(f, False) for f in flags),
        )
        for report in ordered
    ]
    folder = os.path.join(out_dir, experiment)
    os.makedirs(folder, exist_ok=True)
    path = os.path.join(folder, "summary.csv")
    write_table(path, Table(SUMMARY_COLUMNS + tuple(flags), rows))
    return path
