"""Application entrypoint wiring for lowrisk-sampling.

Holds the package metadata, the ``check`` readiness diagnostics and the
``main`` routine the console script delegates to.

Updates: v0.1.0 - 2026-10-16 - Added metadata, readiness diagnostics and main.
"""

from __future__ import annotations

import importlib
import logging
import os
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, TypedDict

from .config import resolve_state_path

logger = logging.getLogger(__name__)

APP_VERSION = "0.1"


@dataclass(frozen=True)
class AppMetadata:
    """App metadata used by the CLI version flag and diagnostics."""

    name: str
    version: str
    description: str


APP_METADATA = AppMetadata(
    name="lowrisk-sampling",
    version=f"v{APP_VERSION}",
    description=(
        "Adaptive inspection sample sizes and traffic-light status for low-risk "
        "trade pathways, with scenario simulation against fixed and "
        "power-analysis designs."
    ),
)


class DiagnosticCheck(TypedDict):
    """Single readiness-check result for diagnostics mode."""

    name: str
    status: Literal["confirmed", "failed", "optional"]
    detail: str
    required: bool


class StartupDiagnostics(TypedDict):
    """Structured readiness report for terminal diagnostics."""

    python_version: str
    app_version: str
    checks: list[DiagnosticCheck]
    required_ready: bool
    required_failures: list[str]


def _module_check(name: str, module: str, *, required: bool) -> DiagnosticCheck:
    try:
        loaded = importlib.import_module(module)
    except ModuleNotFoundError as exc:
        return {
            "name": name,
            "status": "failed" if required else "optional",
            "detail": f"missing ({exc.name})",
            "required": required,
        }
    version = getattr(loaded, "__version__", None)
    return {
        "name": name,
        "status": "confirmed",
        "detail": f"available ({version})" if version else "available",
        "required": required,
    }


def is_state_path_writable(path: Path) -> bool:
    """Return whether the state path (or its nearest existing parent) is writable."""
    candidate = path if path.is_dir() else path.parent
    while not candidate.exists() and candidate != candidate.parent:
        candidate = candidate.parent
    return os.access(candidate, os.W_OK)


def collect_diagnostics(state_path: Path | None = None) -> StartupDiagnostics:
    """Collect readiness diagnostics without touching the state file."""
    checks: list[DiagnosticCheck] = [
        _module_check("numpy", "numpy", required=True),
        _module_check("scipy", "scipy", required=True),
    ]
    toml_module = "tomllib" if sys.version_info >= (3, 11) else "tomli"
    checks.append(_module_check("TOML reader", toml_module, required=True))
    checks.append(_module_check("python-dotenv", "dotenv", required=False))

    path = state_path or resolve_state_path()
    writable = is_state_path_writable(path)
    checks.append(
        {
            "name": "State path",
            "status": "confirmed" if writable else "failed",
            "detail": f"writable ({path})" if writable else f"not writable ({path})",
            "required": True,
        }
    )

    required_failures = [
        f"{check['name']}: {check['detail']}"
        for check in checks
        if check["required"] and check["status"] == "failed"
    ]
    python_version = (
        f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}"
    )
    return {
        "python_version": python_version,
        "app_version": APP_METADATA.version,
        "checks": checks,
        "required_ready": not required_failures,
        "required_failures": required_failures,
    }


def render_diagnostics(report: StartupDiagnostics) -> str:
    """Render diagnostics as short terminal-friendly text."""

    def section(status: str) -> list[str]:
        return [
            f"- {check['name']} {check['detail']}"
            for check in report["checks"]
            if check["status"] == status
        ]

    confirmed = section("confirmed")
    failed = section("failed")
    optional = section("optional")
    lines = [
        f"Python: {report['python_version']}",
        f"App version: {report['app_version']}",
        "confirmed",
        *(confirmed or ["- none"]),
        "problem / missing prerequisite",
        *(failed or ["- none"]),
    ]
    if optional:
        lines.extend(["optional / not configured", *optional])
    verdict = "READY" if report["required_ready"] else "NOT READY"
    lines.append(f"Verdict: {verdict}")
    return "\n".join(lines)


def run_diagnostics(state_path: Path | None = None) -> int:
    """Print the readiness report and return its exit code."""
    report = collect_diagnostics(state_path)
    print(render_diagnostics(report))
    return 0 if report["required_ready"] else 1


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the process exit code."""
    from .cli import run

    logger.debug("Dispatching lowrisk-sampling command line")
    return run(argv)


__all__ = [
    "APP_METADATA",
    "APP_VERSION",
    "AppMetadata",
    "DiagnosticCheck",
    "StartupDiagnostics",
    "collect_diagnostics",
    "is_state_path_writable",
    "main",
    "render_diagnostics",
    "run_diagnostics",
]
