"""CSV and JSON renderings of traces, sweeps and recommendations.

Every rendering carries the configuration hash and the seed so numbers can
be traced back to the run that produced them. Probabilities are printed with
6 significant digits and counts as integers.

Updates: v0.1.0 - 2026-10-16 - Added trace and sweep emitters.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from .models import ColourStatus, SimulationTrace, SweepResult
from .scenarios import SpecRun
from .utils import atomic_write_text, config_hash, format_probability

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "period",
    "method",
    "n_sampled",
    "y_detected",
    "alpha",
    "beta",
    "t_change",
    "status",
)
TRACE_EXTRA_COLUMNS = ("iteration", "true_rate", "seed", "config_hash")


def _number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return format_probability(value)


def trace_rows(
    traces: Sequence[SimulationTrace], digest: str
) -> list[dict[str, str]]:
    """Flatten traces into one CSV row per simulated period."""
    rows: list[dict[str, str]] = []
    for trace in traces:
        for record in trace.records:
            rows.append(
                {
                    "period": str(record.period),
                    "method": record.method.value,
                    "n_sampled": str(record.n_sampled),
                    "y_detected": str(record.y_detected),
                    "alpha": _number(record.posterior.alpha),
                    "beta": _number(record.posterior.beta),
                    "t_change": format_probability(record.t_change),
                    "status": record.status.value,
                    "iteration": str(trace.iteration),
                    "true_rate": format_probability(record.true_rate),
                    "seed": str(trace.seed),
                    "config_hash": digest,
                }
            )
    return rows


def sweep_rows(sweep: SweepResult, digest: str) -> tuple[list[str], list[dict[str, str]]]:
    """Flatten a sweep into CSV columns and rows."""
    setting_keys: list[str] = []
    for cell in sweep.cells:
        for key in cell.settings:
            if key not in setting_keys:
                setting_keys.append(key)
    if sweep.kind == "status":
        outcome_keys = [
            *(status.value for status in ColourStatus),
            *(f"{status.value}_share" for status in ColourStatus),
        ]
    else:
        outcome_keys = ["n_min", "y_crit", "error"]
    columns = [*setting_keys, *outcome_keys, "seed", "config_hash"]

    rows: list[dict[str, str]] = []
    for cell in sweep.cells:
        row = {key: _render(cell.settings.get(key, "")) for key in setting_keys}
        if cell.counts is not None:
            proportions = cell.proportions or {}
            for status in ColourStatus:
                row[status.value] = str(cell.counts.get(status, 0))
                row[f"{status.value}_share"] = format_probability(proportions[status])
        else:
            row["n_min"] = "" if cell.n_min is None else str(cell.n_min)
            row["y_crit"] = "" if cell.y_crit is None else str(cell.y_crit)
            row["error"] = cell.error or ""
        row["seed"] = "" if sweep.seed is None else str(sweep.seed)
        row["config_hash"] = digest
        rows.append(row)
    return columns, rows


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _number(value)
    return str(value)


def _csv_text(columns: Sequence[str], rows: Sequence[Mapping[str, str]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def render_csv(run: SpecRun) -> str:
    """Return the CSV rendering of a spec run."""
    digest = config_hash(run.config)
    if run.sweep is not None:
        columns, rows = sweep_rows(run.sweep, digest)
        return _csv_text(columns, rows)
    return _csv_text(
        [*TRACE_COLUMNS, *TRACE_EXTRA_COLUMNS], trace_rows(run.traces, digest)
    )


def render_json(run: SpecRun) -> str:
    """Return the JSON rendering of a spec run."""
    payload: dict[str, Any] = {
        "config_hash": config_hash(run.config),
        "seed": run.seed,
        "config": dict(run.config),
    }
    if run.sweep is not None:
        payload["sweep"] = run.sweep.as_dict()
    else:
        payload["traces"] = [trace.as_dict() for trace in run.traces]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_run(run: SpecRun, out: Path, fmt: str | None = None) -> list[Path]:
    """Write a spec run to ``out``; with no format both CSV and JSON are written."""
    targets: list[tuple[Path, str]] = []
    if fmt == "csv":
        targets.append((out, render_csv(run)))
    elif fmt == "json":
        targets.append((out, render_json(run)))
    else:
        targets.append((out.with_suffix(".csv"), render_csv(run)))
        targets.append((out.with_suffix(".json"), render_json(run)))
    for path, text in targets:
        atomic_write_text(path, text)
        logger.info("Wrote %s", path)
    return [path for path, _ in targets]


__all__ = [
    "TRACE_COLUMNS",
    "render_csv",
    "render_json",
    "sweep_rows",
    "trace_rows",
    "write_run",
]
