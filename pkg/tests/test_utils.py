"""Unit tests for lowrisk_sampling.utils and lowrisk_sampling.config.

Covers:
- read_optional_env
- format_probability
- config_hash
- atomic_write_text
- resolve_state_path and merge_settings
"""

from __future__ import annotations

from pathlib import Path

import pytest

from lowrisk_sampling.config import (
    DEFAULT_SETTINGS,
    DEFAULT_STATE_PATH,
    merge_settings,
    resolve_state_path,
)
from lowrisk_sampling.utils import (
    atomic_write_text,
    config_hash,
    format_probability,
    read_optional_env,
)


def test_read_optional_env_returns_trimmed_value(monkeypatch: pytest.MonkeyPatch) -> None:
    """Environment value should be trimmed and returned when non-blank."""
    monkeypatch.setenv("TEST_ENV_VAR", "  value  ")
    assert read_optional_env("TEST_ENV_VAR") == "value"


def test_read_optional_env_unset(monkeypatch: pytest.MonkeyPatch) -> None:
    """Unset environment variable should yield None."""
    monkeypatch.delenv("MISSING_ENV_VAR", raising=False)
    assert read_optional_env("MISSING_ENV_VAR") is None


def test_read_optional_env_blank(monkeypatch: pytest.MonkeyPatch) -> None:
    """Blank environment variable should yield None."""
    monkeypatch.setenv("BLANK_ENV_VAR", "   ")
    assert read_optional_env("BLANK_ENV_VAR") is None


def test_format_probability_six_significant_digits() -> None:
    assert format_probability(0.95) == "0.95"
    assert format_probability(0.001118234567) == "0.00111823"
    assert format_probability(1.0) == "1"


def test_config_hash_ignores_key_order() -> None:
    """Hashes depend on content, not insertion order."""
    first = config_hash({"t_risk": 0.005, "window_len": 2})
    second = config_hash({"window_len": 2, "t_risk": 0.005})
    assert first == second
    assert len(first) == 12
    assert config_hash({"t_risk": 0.01, "window_len": 2}) != first


def test_atomic_write_text_creates_parents(tmp_path: Path) -> None:
    """Missing parent directories are created and no temp files remain."""
    target = tmp_path / "a" / "b" / "out.txt"
    atomic_write_text(target, "first\n")
    atomic_write_text(target, "second\n")
    assert target.read_text(encoding="utf-8") == "second\n"
    assert [path.name for path in target.parent.iterdir()] == ["out.txt"]


def test_resolve_state_path_precedence(
    monkeypatch: pytest.MonkeyPatch, tmp_path: Path
) -> None:
    """Explicit override beats LOWRISK_STATE, which beats the default."""
    monkeypatch.delenv("LOWRISK_STATE", raising=False)
    assert resolve_state_path() == DEFAULT_STATE_PATH
    monkeypatch.setenv("LOWRISK_STATE", str(tmp_path / "env.json"))
    assert resolve_state_path() == tmp_path / "env.json"
    assert resolve_state_path(tmp_path / "cli.json") == tmp_path / "cli.json"


def test_merge_settings_skips_unknown_and_none() -> None:
    """Only known keys with values replace the defaults."""
    merged = merge_settings({"t_risk": 0.01, "mode": None, "colour": "blue"})
    assert merged["t_risk"] == 0.01
    assert merged["mode"] == DEFAULT_SETTINGS["mode"]
    assert "colour" not in merged
    assert merge_settings(None) == DEFAULT_SETTINGS
