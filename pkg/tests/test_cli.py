"""Command-line tests: state commands, exit codes and spec runs."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from lowrisk_sampling import config as config_module
from lowrisk_sampling.cli import parse_count_pair, parse_meta, render_error, run
from lowrisk_sampling.comparators import power_analysis_size
from lowrisk_sampling.errors import ValidationError
from lowrisk_sampling.models import EvidenceWindow

PRIOR_ARGS = ["--prior", "5000:3", "--prior", "5000:3"]


def _init(state_path: Path, *extra: str) -> int:
    return run(["init", "--state", str(state_path), *PRIOR_ARGS, *extra])


def _json_output(capsys: pytest.CaptureFixture[str]) -> dict:
    return json.loads(capsys.readouterr().out)


def test_init_writes_state_and_prints_summary(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """init persists the state and prints the status text."""
    assert _init(state_path) == 0
    assert state_path.exists()
    out = capsys.readouterr().out
    assert "status: green" in out
    assert "next_period: 1" in out
    assert "recommendation.n_min:" in out


def test_init_refuses_to_overwrite(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """An existing state needs --force."""
    assert _init(state_path) == 0
    assert _init(state_path) == 2
    assert "--force" in capsys.readouterr().err
    assert _init(state_path, "--force") == 0


def test_init_high_risk_prior_exits_three(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """A prior failing the low-risk requirement exits with code 3."""
    assert run(["init", "--state", str(state_path), "--prior", "2000:30"]) == 3
    assert "high-risk subpathways" in capsys.readouterr().err
    assert not state_path.exists()


def test_invalid_prior_pair_is_usage_error(state_path: Path) -> None:
    """Malformed N:Y values are rejected by the parser."""
    with pytest.raises(SystemExit) as excinfo:
        run(["init", "--state", str(state_path), "--prior", "5:9"])
    assert excinfo.value.code == 2


def test_recommend_before_init(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """Commands needing state exit 2 and mention init."""
    assert run(["recommend"]) == 2
    assert "init" in capsys.readouterr().err


def test_recommend_json(state_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """--format json prints a parseable recommendation with hash and seed."""
    _init(state_path)
    capsys.readouterr()
    assert run(["recommend", "--format", "json", "--seed", "11"]) == 0
    payload = _json_output(capsys)
    assert payload["period"] == 1
    assert payload["mode"] == "normal"
    assert payload["n_min"] > 0
    assert payload["seed"] == 11
    assert len(payload["config_hash"]) == 12


def test_recommend_mode_override(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """--mode exact recomputes the size without changing the state."""
    _init(state_path)
    capsys.readouterr()
    run(["recommend", "--format", "json"])
    normal = _json_output(capsys)
    run(["recommend", "--format", "json", "--mode", "exact"])
    exact = _json_output(capsys)
    assert exact["mode"] == "exact"
    assert exact["n_min"] < normal["n_min"]


def test_record_and_status_audit(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """Recorded periods persist and the replay audit agrees."""
    _init(state_path)
    assert run(["record", "756", "0", "--meta", "port=Auckland"]) == 0
    assert run(["record", "756", "1"]) == 0
    capsys.readouterr()
    assert run(["status", "--audit", "--format", "json"]) == 0
    payload = _json_output(capsys)
    assert payload["audit"] == "ok"
    assert payload["next_period"] == 3
    assert payload["history_length"] == 4
    assert [row["period_id"] for row in payload["window"]] == [1, 2]


def test_red_record_then_recommend_exits_three(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """A Red period warns on record and blocks the next recommendation."""
    _init(state_path)
    assert run(["record", "756", "60"]) == 0
    captured = capsys.readouterr()
    assert "status: red" in captured.out
    assert "RED" in captured.err
    assert run(["recommend"]) == 3


def test_no_solution_exits_four(
    state_path: Path,
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture[str],
) -> None:
    """A search cap below the required size exits with code 4."""
    monkeypatch.setitem(config_module.DEFAULT_SETTINGS, "search_cap", 10)
    assert _init(state_path) == 0
    capsys.readouterr()
    assert run(["recommend"]) == 4
    assert "no sample size up to 10" in capsys.readouterr().err


def test_compare_lists_every_method(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """compare prints the adaptive, fixed and power sizes."""
    _init(state_path)
    capsys.readouterr()
    assert run(["compare", "--format", "json"]) == 0
    payload = _json_output(capsys)
    sizes = {row["method"]: row["n"] for row in payload["methods"]}
    assert set(sizes) == {"adaptive", "fixed", "power"}
    assert sizes["fixed"] == 598
    assert sizes["power"] == power_analysis_size(
        EvidenceWindow.from_counts([(5000, 3), (5000, 3)])
    )
    assert sizes["adaptive"] < sizes["power"]


def test_output_file(state_path: Path, tmp_path: Path) -> None:
    """--out writes the rendering to a file instead of stdout."""
    _init(state_path)
    target = tmp_path / "status.json"
    assert run(["status", "--format", "json", "--out", str(target)]) == 0
    assert json.loads(target.read_text(encoding="utf-8"))["status"] == "green"


def test_simulate_spec_file(tmp_path: Path) -> None:
    """simulate runs a spec file and writes its CSV trace."""
    spec = tmp_path / "short.toml"
    spec.write_text(
        "\n".join(
            [
                'kind = "scenario"',
                'name = "short"',
                "n_periods = 2",
                "segments = [[1, 0.0012]]",
                'methods = ["fixed"]',
                "replicates = 1",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    out = tmp_path / "trace.csv"
    code = run(
        [
            "simulate",
            "--spec",
            str(spec),
            "--format",
            "csv",
            "--out",
            str(out),
            "--seed",
            "3",
        ]
    )
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith(
        "period,method,n_sampled,y_detected,alpha,beta,t_change,status"
    )
    assert len(lines) == 3


def test_simulate_rejects_sweep_spec() -> None:
    """Sweep specs belong to the sweep command."""
    assert run(["simulate", "--spec", "fig6"]) == 2


def test_check_reports_ready(
    state_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """check prints the readiness verdict."""
    assert run(["check"]) == 0
    assert "Verdict: READY" in capsys.readouterr().out


def test_argument_helpers() -> None:
    """Pair and metadata parsers accept the documented forms."""
    assert parse_count_pair("10000:6") == (10000, 6)
    assert parse_meta(" port = Auckland ") == ("port", "Auckland")
    message = render_error(ValidationError("x" * 1000))
    assert message.startswith("error: ")
    assert len(message) <= len("error: ") + 400
