"""Configuration primitives and defaults for lowrisk-sampling.

This module centralises solver tolerances, pathway defaults and the state
file location so other layers can import them without side effects. Most
values can be overridden through environment variables (or a ``.env`` file
when python-dotenv is installed).

Updates: v0.1.0 - 2026-10-16 - Extracted solver and pathway defaults.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Any, Mapping

from .utils import read_optional_env

try:  # pragma: no cover - optional dependency
    from dotenv import load_dotenv as _config_load_dotenv  # type: ignore
except ImportError:  # pragma: no cover - optional dependency
    _config_load_dotenv = None
else:
    _config_load_dotenv()


# --- Pathway defaults ---------------------------------------------------------

DEFAULT_T_RISK = 0.005
DEFAULT_CREDIBLE_LEVEL = 0.95
DEFAULT_CHANGE_LEVEL = 0.95
DEFAULT_WINDOW_LEN = 2
DEFAULT_TARGET = 0.95
DEFAULT_MODE = "normal"

# Fixed detection-level comparator (598 samples, commonly rounded to 600).
DEFAULT_DETECTION_LEVEL = 0.005
DEFAULT_DETECTION_CONFIDENCE = 0.95

# Power-analysis surrogate.
DEFAULT_POWER_ALPHA = 0.05
DEFAULT_POWER = 0.95


# --- Solver tolerances ---------------------------------------------------------

try:
    SEARCH_CAP = max(1, int(os.getenv("LOWRISK_SEARCH_CAP", "1000000")))
except ValueError:
    SEARCH_CAP = 1_000_000

try:
    SAWTOOTH_SCAN_DEPTH = max(0, int(os.getenv("LOWRISK_SCAN_DEPTH", "50")))
except ValueError:
    SAWTOOTH_SCAN_DEPTH = 50

QUANTILE_TOL = 1e-10
QUANTILE_MAX_ITER = 400
BETACF_EPS = 1e-15
BETACF_MAX_ITER = 10_000
QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
POWER_SCAN_CHUNK = 4096


# --- Simulation defaults -------------------------------------------------------

try:
    DEFAULT_ITERATIONS = max(1, int(os.getenv("LOWRISK_ITERATIONS", "100")))
except ValueError:
    DEFAULT_ITERATIONS = 100

try:
    DEFAULT_SEED = int(os.getenv("LOWRISK_SEED", "20240601"))
except ValueError:
    DEFAULT_SEED = 20240601

DEFAULT_WORKERS = 1


# --- State persistence ---------------------------------------------------------

STATE_SCHEMA_VERSION = 1

_LOCAL_APPDATA = os.getenv("LOCALAPPDATA")
_XDG_CONFIG_HOME = os.getenv("XDG_CONFIG_HOME")

if os.name == "nt":
    _BASE_STATE_DIR = (
        Path(_LOCAL_APPDATA) if _LOCAL_APPDATA else Path.home() / "AppData" / "Local"
    )
elif sys.platform == "darwin":
    _BASE_STATE_DIR = (
        Path(_XDG_CONFIG_HOME)
        if _XDG_CONFIG_HOME
        else Path.home() / "Library" / "Application Support"
    )
else:
    _BASE_STATE_DIR = (
        Path(_XDG_CONFIG_HOME) if _XDG_CONFIG_HOME else Path.home() / ".config"
    )

DEFAULT_STATE_PATH = _BASE_STATE_DIR / "LowRiskSampling" / "pathway_state.json"


def resolve_state_path(override: str | os.PathLike[str] | None = None) -> Path:
    """Return the state file path: explicit override, ``LOWRISK_STATE``, default."""
    if override:
        return Path(override)
    env_value = read_optional_env("LOWRISK_STATE")
    return Path(env_value) if env_value else DEFAULT_STATE_PATH


DEFAULT_SETTINGS: dict[str, Any] = {
    "t_risk": DEFAULT_T_RISK,
    "credible_level": DEFAULT_CREDIBLE_LEVEL,
    "change_level": DEFAULT_CHANGE_LEVEL,
    "window_len": DEFAULT_WINDOW_LEN,
    "mode": DEFAULT_MODE,
    "target": DEFAULT_TARGET,
    "search_cap": SEARCH_CAP,
    "scan_depth": SAWTOOTH_SCAN_DEPTH,
}


def merge_settings(overrides: Mapping[str, Any] | None) -> dict[str, Any]:
    """Return DEFAULT_SETTINGS with known keys replaced by ``overrides``."""
    settings = DEFAULT_SETTINGS.copy()
    if overrides:
        for key in settings:
            if key in overrides and overrides[key] is not None:
                settings[key] = overrides[key]
    return settings


__all__ = [
    "BETACF_EPS",
    "BETACF_MAX_ITER",
    "DEFAULT_CHANGE_LEVEL",
    "DEFAULT_CREDIBLE_LEVEL",
    "DEFAULT_DETECTION_CONFIDENCE",
    "DEFAULT_DETECTION_LEVEL",
    "DEFAULT_ITERATIONS",
    "DEFAULT_MODE",
    "DEFAULT_POWER",
    "DEFAULT_POWER_ALPHA",
    "DEFAULT_SEED",
    "DEFAULT_SETTINGS",
    "DEFAULT_STATE_PATH",
    "DEFAULT_TARGET",
    "DEFAULT_T_RISK",
    "DEFAULT_WINDOW_LEN",
    "DEFAULT_WORKERS",
    "POWER_SCAN_CHUNK",
    "QUAD_EPSABS",
    "QUAD_EPSREL",
    "QUAD_LIMIT",
    "QUANTILE_MAX_ITER",
    "QUANTILE_TOL",
    "SAWTOOTH_SCAN_DEPTH",
    "SEARCH_CAP",
    "STATE_SCHEMA_VERSION",
    "merge_settings",
    "resolve_state_path",
]
