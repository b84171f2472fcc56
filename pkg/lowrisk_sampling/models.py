"""Domain models backing the sampling solver, simulator and state store.

All records are frozen dataclasses so they can be shared between worker
threads and used as cache keys. Validation happens in ``__post_init__`` and
raises :class:`~lowrisk_sampling.errors.ValidationError`.

Updates: v0.1.0 - 2026-10-16 - Introduced belief, threshold, sizing and trace models.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .config import (
    DEFAULT_DETECTION_CONFIDENCE,
    DEFAULT_DETECTION_LEVEL,
    DEFAULT_POWER,
    DEFAULT_POWER_ALPHA,
    DEFAULT_T_RISK,
)
from .errors import ValidationError


class ColourStatus(str, Enum):
    """Traffic-light status, ordered by severity."""

    GREEN = "green"
    ORANGE = "orange"
    RED = "red"

    @property
    def severity(self) -> int:
        return _SEVERITY[self]

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, ColourStatus):
            return NotImplemented
        return self.severity < other.severity

    def __le__(self, other: object) -> bool:
        if not isinstance(other, ColourStatus):
            return NotImplemented
        return self.severity <= other.severity

    def __gt__(self, other: object) -> bool:
        if not isinstance(other, ColourStatus):
            return NotImplemented
        return self.severity > other.severity

    def __ge__(self, other: object) -> bool:
        if not isinstance(other, ColourStatus):
            return NotImplemented
        return self.severity >= other.severity


_SEVERITY = {ColourStatus.GREEN: 0, ColourStatus.ORANGE: 1, ColourStatus.RED: 2}


class SizingMode(str, Enum):
    """How binomial detection probabilities are evaluated."""

    EXACT = "exact"
    NORMAL = "normal"

    @classmethod
    def parse(cls, value: str | SizingMode) -> SizingMode:
        try:
            return cls(value)
        except ValueError as exc:
            raise ValidationError(
                f"unknown sizing mode {value!r}; expected 'exact' or 'normal'"
            ) from exc


class Method(str, Enum):
    """Sample-size policy applied in a simulated period."""

    ADAPTIVE = "adaptive"
    POWER = "power"
    FIXED = "fixed"

    @classmethod
    def parse(cls, value: str | Method) -> Method:
        try:
            return cls(value)
        except ValueError as exc:
            choices = ", ".join(item.value for item in cls)
            raise ValidationError(
                f"unknown method {value!r}; expected one of {choices}"
            ) from exc


class Rounding(str, Enum):
    """Whether the fixed design keeps its exact size or rounds to 600."""

    EXACT = "exact"
    ROUND_TO_600 = "round_to_600"


def _check_probability(name: str, value: float, *, closed: bool = False) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(f"{name} must be a finite number, got {value!r}")
    if closed:
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    elif not 0.0 < value < 1.0:
        raise ValidationError(f"{name} must lie in (0, 1), got {value}")


def _check_count(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class BetaParams:
    """Shape pair of the Beta belief about the leakage rate."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite number, got {value!r}")
            if value <= 0:
                raise ValidationError(f"{name} must be positive, got {value}")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def as_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> BetaParams:
        try:
            return cls(alpha=float(payload["alpha"]), beta=float(payload["beta"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed Beta parameters: {payload!r}") from exc


@dataclass(frozen=True)
class InspectionBatch:
    """One reporting period's inspection counts.

    ``metadata`` (dates, consignment ids, ...) is carried opaquely and is
    ignored by equality and hashing.
    """

    period_id: int
    n_inspected: int
    n_contaminated: int
    metadata: Mapping[str, Any] = field(
        default_factory=dict, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        if isinstance(self.period_id, bool) or not isinstance(self.period_id, int):
            raise ValidationError(
                f"period_id must be an integer, got {self.period_id!r}"
            )
        _check_count("n_inspected", self.n_inspected)
        _check_count("n_contaminated", self.n_contaminated)
        if self.n_contaminated > self.n_inspected:
            raise ValidationError(
                f"period {self.period_id}: n_contaminated ({self.n_contaminated}) "
                f"exceeds n_inspected ({self.n_inspected})"
            )

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "period_id": self.period_id,
            "n_inspected": self.n_inspected,
            "n_contaminated": self.n_contaminated,
        }
        if self.metadata:
            payload["metadata"] = dict(self.metadata)
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> InspectionBatch:
        if not isinstance(payload, Mapping):
            raise ValidationError(f"batch must be an object, got {payload!r}")
        metadata = payload.get("metadata", {})
        if not isinstance(metadata, Mapping):
            metadata = {}
        try:
            return cls(
                period_id=payload["period_id"],
                n_inspected=payload["n_inspected"],
                n_contaminated=payload["n_contaminated"],
                metadata=dict(metadata),
            )
        except KeyError as exc:
            raise ValidationError(f"batch is missing field {exc}") from exc


@dataclass(frozen=True)
class EvidenceWindow:
    """The most recent batches whose totals form the next period's prior.

    ``window_len`` of ``None`` retains every batch.
    """

    batches: tuple[InspectionBatch, ...]
    window_len: int | None = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "batches", tuple(self.batches))
        if self.window_len is not None:
            if isinstance(self.window_len, bool) or not isinstance(
                self.window_len, int
            ):
                raise ValidationError(
                    f"window_len must be an integer, got {self.window_len!r}"
                )
            if self.window_len < 1:
                raise ValidationError(
                    f"window_len must be positive, got {self.window_len}"
                )
            if len(self.batches) > self.window_len:
                raise ValidationError(
                    f"window holds {len(self.batches)} batches, "
                    f"more than window_len={self.window_len}"
                )
        for previous, current in zip(self.batches, self.batches[1:]):
            if current.period_id <= previous.period_id:
                raise ValidationError(
                    "window batches must be strictly ordered by period_id "
                    f"({previous.period_id} then {current.period_id})"
                )

    @classmethod
    def from_counts(
        cls,
        counts: Sequence[tuple[int, int]],
        window_len: int | None = 2,
    ) -> EvidenceWindow:
        """Build a window from ``(n, y)`` pairs numbered up to period 0."""
        offset = len(counts) - 1
        batches = tuple(
            InspectionBatch(period_id=index - offset, n_inspected=n, n_contaminated=y)
            for index, (n, y) in enumerate(counts)
        )
        if window_len is not None and len(batches) > window_len:
            batches = batches[-window_len:]
        return cls(batches=batches, window_len=window_len)

    @property
    def total_inspected(self) -> int:
        return sum(batch.n_inspected for batch in self.batches)

    @property
    def total_contaminated(self) -> int:
        return sum(batch.n_contaminated for batch in self.batches)

    @property
    def latest_period(self) -> int | None:
        return self.batches[-1].period_id if self.batches else None

    def aggregate(self) -> InspectionBatch:
        """Return one batch holding the summed counts of the retained periods."""
        return InspectionBatch(
            period_id=self.latest_period if self.latest_period is not None else 0,
            n_inspected=self.total_inspected,
            n_contaminated=self.total_contaminated,
        )


@dataclass(frozen=True)
class Thresholds:
    """Risk ceiling, tuned change-detection level and credible level."""

    t_risk: float
    t_change: float
    credible_level: float = 0.95

    def __post_init__(self) -> None:
        _check_probability("t_risk", self.t_risk)
        _check_probability("t_change", self.t_change)
        _check_probability("credible_level", self.credible_level)
        if not self.t_change < self.t_risk:
            raise ValidationError(
                f"t_change ({self.t_change:.6g}) must be below "
                f"t_risk ({self.t_risk:.6g})"
            )
        if not self.credible_level > 0.5:
            raise ValidationError(
                f"credible_level must exceed 0.5, got {self.credible_level}"
            )

    def as_dict(self) -> dict[str, float]:
        return {
            "t_risk": self.t_risk,
            "t_change": self.t_change,
            "credible_level": self.credible_level,
        }


@dataclass(frozen=True)
class HypotheticalRate:
    """A leakage rate r' assumed to exceed the risk ceiling."""

    r_prime: float
    t_risk: float

    def __post_init__(self) -> None:
        _check_probability("t_risk", self.t_risk)
        _check_probability("r_prime", self.r_prime, closed=True)
        if not self.r_prime > self.t_risk:
            raise ValidationError(
                f"r_prime ({self.r_prime:.6g}) must exceed t_risk ({self.t_risk:.6g})"
            )


@dataclass(frozen=True)
class SizingResult:
    """Recommended minimum sample size for the next period."""

    n_min: int
    y_crit: int
    achieved_success: float
    mode: SizingMode
    t_change: float
    target: float = 0.95

    def as_dict(self) -> dict[str, Any]:
        return {
            "n_min": self.n_min,
            "y_crit": self.y_crit,
            "achieved_success": self.achieved_success,
            "mode": self.mode.value,
            "t_change": self.t_change,
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> SizingResult:
        try:
            return cls(
                n_min=int(payload["n_min"]),
                y_crit=int(payload["y_crit"]),
                achieved_success=float(payload["achieved_success"]),
                mode=SizingMode.parse(payload["mode"]),
                t_change=float(payload["t_change"]),
                target=float(payload.get("target", 0.95)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed sizing result: {payload!r}") from exc


@dataclass(frozen=True)
class FixedDesign:
    """Classical detection-level design (detect ``detection_level`` w.p. ``confidence``)."""

    detection_level: float = DEFAULT_DETECTION_LEVEL
    confidence: float = DEFAULT_DETECTION_CONFIDENCE
    rounding: Rounding = Rounding.EXACT

    def __post_init__(self) -> None:
        _check_probability("detection_level", self.detection_level)
        _check_probability("confidence", self.confidence)
        object.__setattr__(self, "rounding", Rounding(self.rounding))


@dataclass(frozen=True)
class PowerDesign:
    """Binomial power analysis of H0: rate >= cutoff."""

    cutoff: float = DEFAULT_T_RISK
    alpha: float = DEFAULT_POWER_ALPHA
    power: float = DEFAULT_POWER

    def __post_init__(self) -> None:
        _check_probability("cutoff", self.cutoff)
        _check_probability("alpha", self.alpha)
        _check_probability("power", self.power)


@dataclass(frozen=True)
class PeriodEvaluation:
    """Outcome of updating and classifying one period against its prior."""

    prior: BetaParams
    posterior: BetaParams
    t_change: float
    status: ColourStatus
    prior_low_risk: bool


@dataclass(frozen=True)
class ScenarioSchedule:
    """Piecewise-constant true leakage rates over the simulated periods."""

    segments: tuple[tuple[int, float], ...]
    n_periods: int

    def __post_init__(self) -> None:
        segments = tuple((int(start), float(rate)) for start, rate in self.segments)
        object.__setattr__(self, "segments", segments)
        if isinstance(self.n_periods, bool) or not isinstance(self.n_periods, int):
            raise ValidationError(f"n_periods must be an integer, got {self.n_periods!r}")
        if self.n_periods < 1:
            raise ValidationError(f"n_periods must be positive, got {self.n_periods}")
        if not segments:
            raise ValidationError("schedule needs at least one segment")
        if segments[0][0] != 1:
            raise ValidationError(
                f"first segment must start at period 1, got {segments[0][0]}"
            )
        for (start, _), (next_start, _) in zip(segments, segments[1:]):
            if next_start <= start:
                raise ValidationError(
                    "segment start periods must be strictly increasing "
                    f"({start} then {next_start})"
                )
        for start, rate in segments:
            _check_probability(f"true_rate (segment at period {start})", rate, closed=True)

    def rate_at(self, period: int) -> float:
        """Return the true rate in force at ``period`` (1-based)."""
        if not 1 <= period <= self.n_periods:
            raise ValidationError(
                f"period {period} outside schedule 1..{self.n_periods}"
            )
        rate = self.segments[0][1]
        for start, segment_rate in self.segments:
            if start > period:
                break
            rate = segment_rate
        return rate

    @classmethod
    def constant(cls, rate: float, n_periods: int) -> ScenarioSchedule:
        return cls(segments=((1, rate),), n_periods=n_periods)


@dataclass(frozen=True)
class PeriodRecord:
    """One simulated period; the posterior must equal prior plus counts."""

    period: int
    method: Method
    true_rate: float
    n_sampled: int
    y_detected: int
    prior: BetaParams
    posterior: BetaParams
    t_change: float
    status: ColourStatus

    def __post_init__(self) -> None:
        if not 0 <= self.y_detected <= self.n_sampled:
            raise ValidationError(
                f"period {self.period}: y_detected={self.y_detected} "
                f"outside 0..{self.n_sampled}"
            )
        expected = (
            self.prior.alpha + self.y_detected,
            self.prior.beta + (self.n_sampled - self.y_detected),
        )
        if (self.posterior.alpha, self.posterior.beta) != expected:
            raise ValidationError(
                f"period {self.period}: posterior {self.posterior} is not the "
                f"conjugate update of {self.prior}"
            )

    def as_dict(self) -> dict[str, Any]:
        return {
            "period": self.period,
            "method": self.method.value,
            "true_rate": self.true_rate,
            "n_sampled": self.n_sampled,
            "y_detected": self.y_detected,
            "prior": self.prior.as_dict(),
            "posterior": self.posterior.as_dict(),
            "t_change": self.t_change,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class SimulationTrace:
    """Per-period results of one scenario run."""

    method: Method
    seed: int
    iteration: int
    records: tuple[PeriodRecord, ...]
    halted: bool = False
    halt_reason: str | None = None
    halt_period: int | None = None

    @property
    def statuses(self) -> list[ColourStatus]:
        return [record.status for record in self.records]

    def as_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "seed": self.seed,
            "iteration": self.iteration,
            "halted": self.halted,
            "halt_reason": self.halt_reason,
            "halt_period": self.halt_period,
            "records": [record.as_dict() for record in self.records],
        }


@dataclass(frozen=True)
class SweepCell:
    """One grid point of a sweep: either a sizing outcome or colour counts."""

    settings: Mapping[str, Any]
    n_min: int | None = None
    y_crit: int | None = None
    error: str | None = None
    counts: Mapping[ColourStatus, int] | None = None

    @property
    def proportions(self) -> dict[ColourStatus, float] | None:
        if self.counts is None:
            return None
        total = sum(self.counts.values())
        if total == 0:
            return {status: 0.0 for status in ColourStatus}
        return {status: self.counts.get(status, 0) / total for status in ColourStatus}

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"settings": dict(self.settings)}
        if self.counts is not None:
            payload["counts"] = {
                status.value: self.counts.get(status, 0) for status in ColourStatus
            }
            proportions = self.proportions or {}
            payload["proportions"] = {
                status.value: value for status, value in proportions.items()
            }
        else:
            payload["n_min"] = self.n_min
            payload["y_crit"] = self.y_crit
            payload["error"] = self.error
        return payload


@dataclass(frozen=True)
class SweepResult:
    """Grid of settings mapped to sizing or status outcomes."""

    name: str
    kind: str
    cells: tuple[SweepCell, ...]
    seed: int | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "seed": self.seed,
            "cells": [cell.as_dict() for cell in self.cells],
        }


__all__ = [
    "BetaParams",
    "ColourStatus",
    "EvidenceWindow",
    "FixedDesign",
    "HypotheticalRate",
    "InspectionBatch",
    "Method",
    "PeriodEvaluation",
    "PeriodRecord",
    "PowerDesign",
    "Rounding",
    "ScenarioSchedule",
    "SimulationTrace",
    "SizingMode",
    "SizingResult",
    "SweepCell",
    "SweepResult",
    "Thresholds",
]
