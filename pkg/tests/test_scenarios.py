"""Spec-file parsing and execution tests."""

from __future__ import annotations

import math
import time
from pathlib import Path

import pytest
from scipy.stats import binom

from lowrisk_sampling.belief import window_prior
from lowrisk_sampling.config import DEFAULT_SEED
from lowrisk_sampling.errors import SpecError
from lowrisk_sampling.models import ColourStatus, Method, Rounding, SizingMode
from lowrisk_sampling.reporting import render_csv
from lowrisk_sampling.scenarios import (
    BUNDLED_SPECS,
    ScenarioSpec,
    SizingSweepSpec,
    StatusSweepSpec,
    load_spec,
    parse_spec,
    run_spec,
)
from lowrisk_sampling.sizing import critical_contamination_count
from lowrisk_sampling.status import tune_change_threshold

SCENARIO_TEXT = """
kind = "scenario"
name = "short"
seed = 77
n_periods = 3
segments = [[1, 0.0012], [3, 0.02]]
methods = ["fixed", "power"]
replicates = 2

[config]
t_risk = 0.005
window_len = 2
prior_batches = [[5000, 3], [5000, 3]]

[config.fixed]
rounding = "round_to_600"
"""


@pytest.mark.parametrize("name", BUNDLED_SPECS)
def test_bundled_specs_parse(name: str) -> None:
    """Every bundled spec loads by name."""
    spec = load_spec(name)
    assert spec.name == name


def test_bundled_kinds() -> None:
    """Scenario and sweep specs map to their typed records."""
    assert isinstance(load_spec("routine"), ScenarioSpec)
    assert isinstance(load_spec("fig6"), StatusSweepSpec)
    fig3 = load_spec("fig3")
    assert isinstance(fig3, SizingSweepSpec)
    assert fig3.axis == "t_risk"
    assert len(fig3.series) == 12
    labels = [label for label, _ in fig3.series]
    assert "y0=0,change_level=0.94" in labels
    modes = load_spec("modes")
    assert isinstance(modes, SizingSweepSpec)
    assert len(modes.series) == 12
    assert modes.series[0] == (
        "N0=2000,t_risk=0.005,mode=normal",
        {"n0": 2000, "t_risk": 0.005, "mode": SizingMode.NORMAL},
    )


def test_status_sweep_spec_keeps_every_batch() -> None:
    """window_len of zero means the window is unbounded."""
    spec = load_spec("fig6")
    assert isinstance(spec, StatusSweepSpec)
    assert spec.config.window_len is None
    assert spec.config.prior_batches == ((10000, 6),)
    assert spec.rates[0] == 0.0 and spec.rates[-1] == 0.05


def test_parse_scenario_text() -> None:
    """Fields, nested tables and defaults are read into the spec."""
    spec = parse_spec(SCENARIO_TEXT, source="short.toml")
    assert isinstance(spec, ScenarioSpec)
    assert spec.seed == 77
    assert spec.methods == (Method.FIXED, Method.POWER)
    assert spec.schedule.rate_at(3) == 0.02
    assert spec.config.mode is SizingMode.NORMAL
    assert spec.config.fixed_design.rounding is Rounding.ROUND_TO_600


def test_spec_errors_name_the_field() -> None:
    """Type problems report the offending field path."""
    text = SCENARIO_TEXT.replace("t_risk = 0.005", 't_risk = "low"')
    with pytest.raises(SpecError) as excinfo:
        parse_spec(text, source="bad.toml")
    assert excinfo.value.field == "config.t_risk"
    assert "bad.toml" in str(excinfo.value)


def test_spec_errors_report_model_validation() -> None:
    """Out-of-range values surface as spec errors on their field."""
    text = SCENARIO_TEXT.replace("[[1, 0.0012], [3, 0.02]]", "[[2, 0.0012]]")
    with pytest.raises(SpecError) as excinfo:
        parse_spec(text)
    assert excinfo.value.field == "segments"


def test_spec_syntax_error_carries_line() -> None:
    """Malformed TOML reports a line number."""
    with pytest.raises(SpecError) as excinfo:
        parse_spec('kind = "scenario"\nn_periods = = 3\n', source="broken.toml")
    assert excinfo.value.line == 2


def test_unknown_kind_and_name() -> None:
    """Unknown kinds and spec names are rejected."""
    with pytest.raises(SpecError):
        parse_spec('kind = "forecast"\n')
    with pytest.raises(SpecError):
        load_spec("no-such-spec")


def test_load_spec_from_path(tmp_path: Path) -> None:
    """Specs may be loaded from a file path."""
    path = tmp_path / "short.toml"
    path.write_text(SCENARIO_TEXT, encoding="utf-8")
    spec = load_spec(path)
    assert isinstance(spec, ScenarioSpec)


def test_run_scenario_spec_seed_precedence() -> None:
    """The command-line seed wins over the file seed."""
    spec = parse_spec(SCENARIO_TEXT)
    from_file = run_spec(spec)
    overridden = run_spec(spec, seed=5)
    assert from_file.seed == 77
    assert overridden.seed == 5
    assert len(from_file.traces) == 4
    assert all(record.n_sampled == 600 for record in from_file.traces[0].records)
    assert from_file.config["replicates"] == 2


def test_run_scenario_spec_method_override() -> None:
    """Methods and replicates given at run time replace the file values."""
    spec = parse_spec(SCENARIO_TEXT)
    run = run_spec(spec, methods=[Method.FIXED], replicates=1)
    assert [trace.method for trace in run.traces] == [Method.FIXED]


def test_run_sizing_sweep_spec() -> None:
    """Series overrides combine with the base and default seed."""
    text = """
kind = "sizing_sweep"
name = "tiny"
axis = "t_risk"
grid = [0.005, 0.01]

[base]
N0 = 10000

[series]
y0 = [1, 6]
"""
    run = run_spec(parse_spec(text))
    assert run.seed == DEFAULT_SEED
    assert run.sweep is not None
    cells = run.sweep.cells
    assert len(cells) == 4
    assert {cell.settings["series"] for cell in cells} == {"y0=1", "y0=6"}
    assert all(cell.n_min is not None for cell in cells)


def test_run_status_sweep_spec() -> None:
    """A status sweep sizes the period from its prior and counts colours."""
    text = """
kind = "status_sweep"
name = "mini"
seed = 3
iterations = 40
rates = [0.0, 0.05]

[config]
prior_batches = [[10000, 6]]
window_len = 0
"""
    run = run_spec(parse_spec(text))
    assert run.sweep is not None
    zero, high = run.sweep.cells
    assert zero.counts is not None and zero.counts[ColourStatus.GREEN] == 40
    assert high.counts is not None and high.counts[ColourStatus.GREEN] == 0
    assert run.config["n1"] == zero.settings["n1"]


def test_bundled_colour_sweep_envelope() -> None:
    """The bundled colour sweep at 100 iterations keeps its expected envelope.

    One detection already leaves Green at the recommended volume, so the Green
    share at a rate ``r`` tracks ``P(Y < y_crit)`` rather than a fixed floor.
    """
    spec = load_spec("fig6")
    assert isinstance(spec, StatusSweepSpec)
    started = time.perf_counter()
    run = run_spec(spec)
    assert time.perf_counter() - started < 60.0
    assert run.sweep is not None
    n1 = run.config["n1"]
    assert abs(n1 - 756) <= 0.03 * 756

    prior = window_prior(spec.config.initial_window())
    t_change = tune_change_threshold(prior, spec.config.change_level)
    y_crit = critical_contamination_count(n1, prior, t_change)
    shares = {}
    for cell in run.sweep.cells:
        assert cell.proportions is not None
        shares[cell.settings["rate"]] = cell.proportions

    assert shares[0.0][ColourStatus.GREEN] == 1.0
    for rate in (0.0005, 0.001):
        expected = float(binom.cdf(y_crit - 1, n1, rate))
        spread = 4.0 * math.sqrt(expected * (1.0 - expected) / spec.iterations)
        assert abs(shares[rate][ColourStatus.GREEN] - expected) <= spread + 0.01
    assert shares[0.005][ColourStatus.GREEN] < 0.5
    for rate, share in shares.items():
        if rate < 0.02:
            assert share[ColourStatus.RED] < 0.1
    assert shares[0.05][ColourStatus.RED] > 0.5


def test_adaptive_trace_bytes_do_not_depend_on_workers() -> None:
    """Serial and pooled adaptive replicates render to identical CSV bytes."""
    spec = load_spec("routine")
    serial, pooled = (
        run_spec(
            spec, seed=13, workers=workers, methods=[Method.ADAPTIVE], replicates=4
        )
        for workers in (1, 3)
    )
    assert len(serial.traces) == 4
    assert render_csv(serial).encode("utf-8") == render_csv(pooled).encode("utf-8")
