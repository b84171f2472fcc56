"""Exception hierarchy shared by the solver, the simulator and the CLI.

Every class carries the process exit code the CLI maps it to, so command
handlers can let exceptions propagate and translate them in one place.

Updates: v0.1.0 - 2026-10-16 - Introduced typed errors with exit codes.
"""

from __future__ import annotations

LOW_RISK_RULE = (
    "sizing requires a low-risk (green) starting belief; "
    "high-risk subpathways' data should be removed before proceeding"
)


class SamplingError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class ValidationError(SamplingError, ValueError):
    """Invalid counts, thresholds, period ordering or stored state."""

    exit_code = 2


class DomainError(ValidationError):
    """A probability argument fell outside the distribution's domain."""


class SpecError(ValidationError):
    """A scenario or sweep spec file failed to parse or validate."""

    def __init__(
        self,
        message: str,
        *,
        source: str = "<spec>",
        field: str | None = None,
        line: int | None = None,
    ) -> None:
        self.source = source
        self.field = field
        self.line = line
        location = source
        if line is not None:
            location = f"{location}:{line}"
        if field:
            location = f"{location} [{field}]"
        super().__init__(f"{location}: {message}")


class NotLowRiskError(SamplingError):
    """The prior belief violates the low-risk requirement."""

    exit_code = 3

    def __init__(self, detail: str) -> None:
        super().__init__(f"{detail}; {LOW_RISK_RULE}")


class RedStatusError(SamplingError):
    """A recommendation was requested while the pathway is in Red status."""

    exit_code = 3


class NoSolutionError(SamplingError):
    """No sample size up to the configured cap meets the target."""

    exit_code = 4


__all__ = [
    "LOW_RISK_RULE",
    "DomainError",
    "NoSolutionError",
    "NotLowRiskError",
    "RedStatusError",
    "SamplingError",
    "SpecError",
    "ValidationError",
]
