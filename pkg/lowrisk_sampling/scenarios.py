"""Scenario and sweep spec files.

Spec files are TOML documents with a ``kind`` of ``scenario``,
``status_sweep`` or ``sizing_sweep``. Bundled specs live in the package's
``scenarios/`` directory and can be referenced by name (``routine``,
``risky``, ``very_low_risk``, ``fig3``, ``fig6``, ``fig7``, ``modes``).
Problems are reported as :class:`~lowrisk_sampling.errors.SpecError`
carrying the source, field and (for syntax errors) line.

Updates: v0.1.0 - 2026-10-16 - Added spec parsing, bundled specs and runners.
"""

from __future__ import annotations

import itertools
import logging
import re
import sys
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

from .config import DEFAULT_ITERATIONS, DEFAULT_SEED, DEFAULT_WORKERS
from .errors import SpecError, ValidationError
from .models import (
    FixedDesign,
    Method,
    Rounding,
    ScenarioSchedule,
    SimulationTrace,
    SizingMode,
    SweepCell,
    SweepResult,
)
from .simulator import (
    SWEEP_AXES,
    SimulationConfig,
    SweepBase,
    run_replicates,
    sizing_for_status_sweep,
    sizing_sweep,
    status_sweep,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

logger = logging.getLogger(__name__)

BUNDLED_SPECS = (
    "routine",
    "risky",
    "very_low_risk",
    "fig3",
    "fig6",
    "fig7",
    "modes",
)
_LINE_PATTERN = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class ScenarioSpec:
    """A rate schedule run under one or more methods."""

    name: str
    schedule: ScenarioSchedule
    methods: tuple[Method, ...]
    replicates: int
    config: SimulationConfig
    seed: int | None = None


@dataclass(frozen=True)
class StatusSweepSpec:
    """Colour shares after one period across a grid of true rates."""

    name: str
    config: SimulationConfig
    rates: tuple[float, ...]
    iterations: int
    n1: int | None = None
    seed: int | None = None


@dataclass(frozen=True)
class SizingSweepSpec:
    """Recommended sizes along one axis, optionally per series."""

    name: str
    axis: str
    grid: tuple[float, ...]
    base: SweepBase
    series: tuple[tuple[str, Mapping[str, Any]], ...] = ()


Spec = ScenarioSpec | StatusSweepSpec | SizingSweepSpec


@dataclass(frozen=True)
class SpecRun:
    """Outcome of running a spec: traces for scenarios, a sweep otherwise."""

    spec: Spec
    seed: int
    config: Mapping[str, Any]
    traces: tuple[SimulationTrace, ...] = ()
    sweep: SweepResult | None = None


class _Reader:
    """Typed field access with diagnostics naming the offending field."""

    def __init__(self, table: Mapping[str, Any], source: str, prefix: str = "") -> None:
        self.table = table
        self.source = source
        self.prefix = prefix

    def path(self, key: str) -> str:
        return f"{self.prefix}{key}"

    def fail(self, key: str, message: str) -> SpecError:
        return SpecError(message, source=self.source, field=self.path(key))

    def number(self, key: str, default: float | None = None) -> float:
        value = self.table.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(key, f"expected a number, got {value!r}")
        return float(value)

    def integer(self, key: str, default: int | None = None) -> int:
        value = self.table.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(key, f"expected an integer, got {value!r}")
        return value

    def optional_integer(self, key: str) -> int | None:
        if key not in self.table:
            return None
        return self.integer(key)

    def string(self, key: str, default: str | None = None) -> str:
        value = self.table.get(key, default)
        if not isinstance(value, str):
            raise self.fail(key, f"expected a string, got {value!r}")
        return value

    def numbers(self, key: str) -> tuple[float, ...]:
        value = self.table.get(key)
        if not isinstance(value, list) or not value:
            raise self.fail(key, "expected a non-empty array of numbers")
        for index, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise self.fail(f"{key}[{index}]", f"expected a number, got {item!r}")
        return tuple(float(item) for item in value)

    def pairs(self, key: str, default: Sequence[Sequence[Any]] | None = None) -> list[Any]:
        value = self.table.get(key, default)
        if not isinstance(value, (list, tuple)) or not value:
            raise self.fail(key, "expected a non-empty array of [a, b] pairs")
        for index, item in enumerate(value):
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise self.fail(f"{key}[{index}]", f"expected a pair, got {item!r}")
        return [tuple(item) for item in value]

    def table_at(self, key: str) -> _Reader:
        value = self.table.get(key, {})
        if not isinstance(value, Mapping):
            raise self.fail(key, "expected a table")
        return _Reader(value, self.source, f"{self.path(key)}.")


def _guard(reader: _Reader, key: str, build: Any) -> Any:
    """Run a model constructor, re-raising validation errors against ``key``."""
    try:
        return build()
    except SpecError:
        raise
    except ValidationError as exc:
        raise reader.fail(key, str(exc)) from exc


def _parse_config(root: _Reader) -> SimulationConfig:
    reader = root.table_at("config")
    table = reader.table
    prior_pairs = reader.pairs("prior_batches", [[5000, 3], [5000, 3]])
    for index, (n, y) in enumerate(prior_pairs):
        for value in (n, y):
            if isinstance(value, bool) or not isinstance(value, int):
                raise reader.fail(
                    f"prior_batches[{index}]", f"counts must be integers, got {value!r}"
                )
    overrides: dict[str, Any] = {
        "t_risk": reader.number("t_risk", 0.005),
        "change_level": reader.number("change_level", 0.95),
        "credible_level": reader.number("credible_level", 0.95),
        "target": reader.number("target", 0.95),
        "prior_batches": tuple(prior_pairs),
        "per_trial": bool(table.get("per_trial", False)),
        "power_alpha": reader.number("power_alpha", 0.05),
        "power": reader.number("power", 0.95),
    }
    if "window_len" in table:
        window_len = reader.integer("window_len")
        # Zero or negative keeps every batch.
        overrides["window_len"] = window_len if window_len > 0 else None
    mode = reader.string("mode", "normal")
    overrides["mode"] = _guard(reader, "mode", lambda: SizingMode.parse(mode))

    fixed = reader.table_at("fixed")
    rounding_name = fixed.string("rounding", "exact")
    try:
        rounding = Rounding(rounding_name)
    except ValueError as exc:
        raise fixed.fail("rounding", "expected 'exact' or 'round_to_600'") from exc
    overrides["fixed_design"] = _guard(
        fixed,
        "detection_level",
        lambda: FixedDesign(
            detection_level=fixed.number("detection_level", 0.005),
            confidence=fixed.number("confidence", 0.95),
            rounding=rounding,
        ),
    )
    return _guard(reader, "prior_batches", lambda: SimulationConfig(**overrides))


def _parse_scenario(root: _Reader, name: str) -> ScenarioSpec:
    segments = root.pairs("segments")
    schedule = _guard(
        root,
        "segments",
        lambda: ScenarioSchedule(
            segments=tuple(segments), n_periods=root.integer("n_periods")
        ),
    )
    raw_methods = root.table.get("methods", ["adaptive"])
    if not isinstance(raw_methods, list) or not raw_methods:
        raise root.fail("methods", "expected a non-empty array of method names")
    methods = tuple(
        _guard(root, f"methods[{index}]", lambda value=value: Method.parse(value))
        for index, value in enumerate(raw_methods)
    )
    replicates = root.integer("replicates", 1)
    if replicates < 1:
        raise root.fail("replicates", "must be positive")
    return ScenarioSpec(
        name=name,
        schedule=schedule,
        methods=methods,
        replicates=replicates,
        config=_parse_config(root),
        seed=root.optional_integer("seed"),
    )


def _parse_status_sweep(root: _Reader, name: str) -> StatusSweepSpec:
    rates = root.numbers("rates")
    for index, rate in enumerate(rates):
        if not 0.0 <= rate <= 1.0:
            raise root.fail(f"rates[{index}]", f"rate must lie in [0, 1], got {rate}")
    iterations = root.integer("iterations", DEFAULT_ITERATIONS)
    if iterations < 1:
        raise root.fail("iterations", "must be positive")
    n1 = root.optional_integer("n1")
    if n1 is not None and n1 < 1:
        raise root.fail("n1", "must be positive")
    return StatusSweepSpec(
        name=name,
        config=_parse_config(root),
        rates=rates,
        iterations=iterations,
        n1=n1,
        seed=root.optional_integer("seed"),
    )


_BASE_KEYS = {
    "N0": "n0",
    "y0": "y0",
    "t_risk": "t_risk",
    "change_level": "change_level",
    "credible_level": "credible_level",
    "target": "target",
    "mode": "mode",
}


def _base_overrides(reader: _Reader, table: Mapping[str, Any]) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    known = {item.name for item in fields(SweepBase)}
    values = _Reader(table, reader.source, reader.prefix)
    for key, value in table.items():
        target = _BASE_KEYS.get(key)
        if target is None or target not in known:
            raise values.fail(
                key, f"unknown setting; expected one of {sorted(_BASE_KEYS)}"
            )
        if target == "mode":
            overrides[target] = _guard(
                values, key, lambda value=value: SizingMode.parse(value)
            )
        elif target in ("n0", "y0"):
            overrides[target] = values.integer(key)
        else:
            overrides[target] = values.number(key)
    return overrides


def _parse_sizing_sweep(root: _Reader, name: str) -> SizingSweepSpec:
    axis = root.string("axis")
    if axis not in SWEEP_AXES:
        raise root.fail("axis", f"expected one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    grid = root.numbers("grid")
    base_reader = root.table_at("base")
    base = replace(SweepBase(), **_base_overrides(base_reader, base_reader.table))

    series_reader = root.table_at("series")
    series: list[tuple[str, Mapping[str, Any]]] = []
    if series_reader.table:
        keys = list(series_reader.table)
        choices = []
        for key in keys:
            values = series_reader.table[key]
            if not isinstance(values, list) or not values:
                raise series_reader.fail(key, "expected a non-empty array")
            choices.append(values)
        for combination in itertools.product(*choices):
            table = dict(zip(keys, combination))
            overrides = _base_overrides(series_reader, table)
            label = ",".join(f"{key}={value}" for key, value in table.items())
            series.append((label, overrides))
    return SizingSweepSpec(
        name=name, axis=axis, grid=grid, base=base, series=tuple(series)
    )


def parse_spec(text: str, source: str = "<spec>") -> Spec:
    """Parse spec text into a typed spec."""
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = _LINE_PATTERN.search(str(exc))
        line = getattr(exc, "lineno", None) or (int(match.group(1)) if match else None)
        raise SpecError(f"invalid TOML: {exc}", source=source, line=line) from exc
    root = _Reader(document, source)
    kind = root.string("kind")
    name = root.string("name", Path(source).stem or kind)
    if kind == "scenario":
        return _parse_scenario(root, name)
    if kind == "status_sweep":
        return _parse_status_sweep(root, name)
    if kind == "sizing_sweep":
        return _parse_sizing_sweep(root, name)
    raise root.fail(
        "kind", f"expected 'scenario', 'status_sweep' or 'sizing_sweep', got {kind!r}"
    )


def load_spec(name_or_path: str | Path) -> Spec:
    """Load a bundled spec by name or a spec file by path."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_spec(path.read_text(encoding="utf-8"), source=str(path))
    name = str(name_or_path)
    if name in BUNDLED_SPECS:
        resource = resources.files("lowrisk_sampling").joinpath("scenarios", f"{name}.toml")
        return parse_spec(resource.read_text(encoding="utf-8"), source=f"{name}.toml")
    raise SpecError(
        f"no spec file or bundled spec named {name!r} "
        f"(bundled: {', '.join(BUNDLED_SPECS)})",
        source=name,
    )


def _sweep_config(spec: SizingSweepSpec) -> dict[str, Any]:
    return {
        "axis": spec.axis,
        "grid": list(spec.grid),
        "base": spec.base.settings(),
        "series": [label for label, _ in spec.series],
    }


def run_spec(
    spec: Spec,
    seed: int | None = None,
    workers: int = DEFAULT_WORKERS,
    methods: Sequence[Method] | None = None,
    replicates: int | None = None,
    iterations: int | None = None,
) -> SpecRun:
    """Execute a parsed spec; CLI overrides take precedence over the file."""
    file_seed = None if isinstance(spec, SizingSweepSpec) else spec.seed
    if seed is None:
        seed = file_seed if file_seed is not None else DEFAULT_SEED
    if isinstance(spec, ScenarioSpec):
        chosen = tuple(methods) if methods else spec.methods
        count = replicates or spec.replicates
        traces: list[SimulationTrace] = []
        for method in chosen:
            traces.extend(
                run_replicates(spec.schedule, method, spec.config, seed, count, workers)
            )
        config = {
            "kind": "scenario",
            "name": spec.name,
            "segments": [list(segment) for segment in spec.schedule.segments],
            "n_periods": spec.schedule.n_periods,
            "methods": [method.value for method in chosen],
            "replicates": count,
            **spec.config.as_dict(),
        }
        return SpecRun(spec=spec, seed=seed, config=config, traces=tuple(traces))

    if isinstance(spec, StatusSweepSpec):
        window = spec.config.initial_window()
        thresholds, sizing = sizing_for_status_sweep(window, spec.config)
        n1 = spec.n1 or sizing.n_min
        count = iterations or spec.iterations
        sweep = status_sweep(
            window,
            thresholds,
            n1,
            spec.rates,
            count,
            seed,
            workers,
            spec.config.per_trial,
        )
        config = {
            "kind": "status_sweep",
            "name": spec.name,
            "rates": list(spec.rates),
            "iterations": count,
            "n1": n1,
            **spec.config.as_dict(),
        }
        return SpecRun(
            spec=spec,
            seed=seed,
            config=config,
            sweep=replace(sweep, name=spec.name),
        )

    cells: list[SweepCell] = []
    series = spec.series or (("base", {}),)
    for label, overrides in series:
        base = replace(spec.base, **overrides)
        result = sizing_sweep(spec.axis, spec.grid, base, workers, label=label)
        cells.extend(result.cells)
    sweep = SweepResult(name=spec.name, kind="sizing", cells=tuple(cells), seed=seed)
    config = {"kind": "sizing_sweep", "name": spec.name, **_sweep_config(spec)}
    logger.info("Sizing sweep %s produced %s cells", spec.name, len(cells))
    return SpecRun(spec=spec, seed=seed, config=config, sweep=sweep)


__all__ = [
    "BUNDLED_SPECS",
    "ScenarioSpec",
    "SizingSweepSpec",
    "Spec",
    "SpecRun",
    "StatusSweepSpec",
    "load_spec",
    "parse_spec",
    "run_spec",
]
