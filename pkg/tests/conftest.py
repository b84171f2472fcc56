"""Pytest configuration and shared fixtures.

- Prepend project root to sys.path so 'lowrisk_sampling' is importable with testpaths.
- Provide the reference pathway used across modules: one prior batch of
  10000 inspections with 6 detections, ``t_risk`` 0.005 and 95% levels.
"""

from __future__ import annotations

import sys
from pathlib import Path

import pytest


def _ensure_project_root_on_syspath() -> None:
    """Prepend repository root to sys.path for package imports."""
    tests_dir = Path(__file__).resolve().parent
    project_root = tests_dir.parent
    root_str = str(project_root)
    if root_str not in sys.path:
        sys.path.insert(0, root_str)


_ensure_project_root_on_syspath()

from lowrisk_sampling.belief import window_prior  # noqa: E402
from lowrisk_sampling.models import BetaParams, EvidenceWindow, Thresholds  # noqa: E402
from lowrisk_sampling.status import build_thresholds  # noqa: E402

REFERENCE_T_RISK = 0.005


@pytest.fixture
def reference_window() -> EvidenceWindow:
    """Single prior batch of 10000 inspections with 6 detections."""
    return EvidenceWindow.from_counts([(10000, 6)], window_len=2)


@pytest.fixture
def reference_prior(reference_window: EvidenceWindow) -> BetaParams:
    """Jeffreys-updated belief of the reference window, Beta(6.5, 9994.5)."""
    return window_prior(reference_window)


@pytest.fixture
def reference_thresholds(reference_prior: BetaParams) -> Thresholds:
    """Thresholds tuned on the reference prior at the 95% level."""
    return build_thresholds(reference_prior, REFERENCE_T_RISK, 0.95, 0.95)


@pytest.fixture
def state_path(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Isolated state file location, also exported through LOWRISK_STATE."""
    path = tmp_path / "state" / "pathway_state.json"
    monkeypatch.setenv("LOWRISK_STATE", str(path))
    return path
