"""Smoke tests for application metadata, diagnostics and entrypoint wiring.

Validates:
- APP_METADATA presence and basic field values
- APP_VERSION formatting
- Readiness diagnostics collection and rendering
- Thin delegation contract between __main__ and main module
"""

from __future__ import annotations

import sys
from pathlib import Path

import pytest


def test_app_metadata_basic_fields() -> None:
    """Validate core APP_METADATA field values."""
    from lowrisk_sampling.main import APP_METADATA

    assert APP_METADATA.name == "lowrisk-sampling"
    assert APP_METADATA.version.startswith("v")
    assert "low-risk" in APP_METADATA.description


def test_app_version_constant() -> None:
    """APP_VERSION should be a simple version string without the 'v' prefix."""
    from lowrisk_sampling.main import APP_METADATA, APP_VERSION

    assert APP_VERSION == "0.1"
    assert APP_METADATA.version == f"v{APP_VERSION}"


def test_collect_diagnostics_ready(tmp_path: Path) -> None:
    """Installed numerics and a writable state path make the tool ready."""
    from lowrisk_sampling.main import collect_diagnostics

    report = collect_diagnostics(tmp_path / "missing" / "state.json")
    names = {check["name"]: check for check in report["checks"]}
    assert names["numpy"]["status"] == "confirmed"
    assert names["scipy"]["status"] == "confirmed"
    assert names["State path"]["status"] == "confirmed"
    assert names["python-dotenv"]["required"] is False
    assert report["required_ready"]
    assert report["required_failures"] == []


def test_render_diagnostics_not_ready() -> None:
    """Failed required checks are listed and flip the verdict."""
    from lowrisk_sampling.main import render_diagnostics

    text = render_diagnostics(
        {
            "python_version": "3.12.0",
            "app_version": "v0.1",
            "checks": [
                {
                    "name": "scipy",
                    "status": "failed",
                    "detail": "missing (scipy)",
                    "required": True,
                },
                {
                    "name": "python-dotenv",
                    "status": "optional",
                    "detail": "missing (dotenv)",
                    "required": False,
                },
            ],
            "required_ready": False,
            "required_failures": ["scipy: missing (scipy)"],
        }
    )
    lines = text.splitlines()
    assert lines[0] == "Python: 3.12.0"
    assert "- scipy missing (scipy)" in lines
    assert "optional / not configured" in lines
    assert lines[-1] == "Verdict: NOT READY"


def test_main_callable_without_invocation() -> None:
    """Ensure main is importable and callable."""
    from lowrisk_sampling.main import main

    assert callable(main)


def test_run_wrapper_delegates_to_module_main(monkeypatch: pytest.MonkeyPatch) -> None:
    """The package front door should delegate exactly once, mapping --check."""
    from lowrisk_sampling import __main__ as package_main

    calls: list[list[str]] = []

    def fake_main(argv: list[str] | None) -> int:
        calls.append(list(argv or []))
        return 0

    monkeypatch.setattr(package_main, "main", fake_main)
    monkeypatch.setattr(sys, "argv", ["lowrisk-sampling", "--check"])

    with pytest.raises(SystemExit) as excinfo:
        package_main._run()

    assert excinfo.value.code == 0
    assert calls == [["check"]]
