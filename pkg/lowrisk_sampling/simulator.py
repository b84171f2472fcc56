"""Scenario engine for simulated inspection pathways.

Each period picks a sample size from the chosen method, draws the number of
contaminated items from the true rate, updates and classifies the belief,
then rolls the evidence window. Random streams are derived from
``(seed, period, iteration)`` only, so traces do not depend on execution
order or worker count.

Updates: v0.1.0 - 2026-10-16 - Added scenario runs, sweeps and Monte Carlo checks.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, TypeVar

import numpy as np

from .belief import posterior_update, window_prior
from .comparators import fixed_detection_size, power_analysis_size
from .config import (
    DEFAULT_CHANGE_LEVEL,
    DEFAULT_CREDIBLE_LEVEL,
    DEFAULT_ITERATIONS,
    DEFAULT_MODE,
    DEFAULT_POWER,
    DEFAULT_POWER_ALPHA,
    DEFAULT_TARGET,
    DEFAULT_T_RISK,
    DEFAULT_WINDOW_LEN,
    DEFAULT_WORKERS,
    SAWTOOTH_SCAN_DEPTH,
    SEARCH_CAP,
)
from .errors import NoSolutionError, NotLowRiskError, SamplingError, ValidationError
from .models import (
    ColourStatus,
    EvidenceWindow,
    FixedDesign,
    InspectionBatch,
    Method,
    PeriodRecord,
    PowerDesign,
    ScenarioSchedule,
    SimulationTrace,
    SizingMode,
    SizingResult,
    SweepCell,
    SweepResult,
    Thresholds,
)
from .sizing import min_sample_size, recommend, sample_truncated_prior
from .status import build_thresholds, classify, evaluate_period

logger = logging.getLogger(__name__)

T = TypeVar("T")

HALT_RED = "red_status"
HALT_NOT_LOW_RISK = "prior_not_low_risk"
HALT_NO_SOLUTION = "no_solution"

SWEEP_AXES = ("t_risk", "y0", "N0", "credible_level")


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters shared by every period of a scenario run."""

    t_risk: float = DEFAULT_T_RISK
    change_level: float = DEFAULT_CHANGE_LEVEL
    credible_level: float = DEFAULT_CREDIBLE_LEVEL
    window_len: int | None = DEFAULT_WINDOW_LEN
    mode: SizingMode = SizingMode(DEFAULT_MODE)
    target: float = DEFAULT_TARGET
    prior_batches: tuple[tuple[int, int], ...] = ((5000, 3), (5000, 3))
    fixed_design: FixedDesign = field(default_factory=FixedDesign)
    power_alpha: float = DEFAULT_POWER_ALPHA
    power: float = DEFAULT_POWER
    per_trial: bool = False
    cap: int = SEARCH_CAP
    scan_depth: int = SAWTOOTH_SCAN_DEPTH

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", SizingMode.parse(self.mode))
        object.__setattr__(
            self,
            "prior_batches",
            tuple((int(n), int(y)) for n, y in self.prior_batches),
        )
        if not self.prior_batches:
            raise ValidationError(
                "at least one prior batch is required; supply elicited or proxy "
                "priors when no inspection history exists"
            )

    def initial_window(self) -> EvidenceWindow:
        return EvidenceWindow.from_counts(self.prior_batches, self.window_len)

    def power_design(self) -> PowerDesign:
        return PowerDesign(cutoff=self.t_risk, alpha=self.power_alpha, power=self.power)

    def as_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["mode"] = self.mode.value
        payload["prior_batches"] = [list(pair) for pair in self.prior_batches]
        payload["fixed_design"] = {
            "detection_level": self.fixed_design.detection_level,
            "confidence": self.fixed_design.confidence,
            "rounding": self.fixed_design.rounding.value,
        }
        return payload


@dataclass(frozen=True)
class SweepBase:
    """Baseline configuration a sizing sweep varies one axis of."""

    n0: int = 10000
    y0: int = 6
    t_risk: float = DEFAULT_T_RISK
    change_level: float = DEFAULT_CHANGE_LEVEL
    credible_level: float = DEFAULT_CREDIBLE_LEVEL
    target: float = DEFAULT_TARGET
    mode: SizingMode = SizingMode(DEFAULT_MODE)
    cap: int = SEARCH_CAP
    scan_depth: int = SAWTOOTH_SCAN_DEPTH

    def with_axis(self, axis: str, value: float) -> SweepBase:
        if axis == "t_risk":
            return replace(self, t_risk=float(value))
        if axis == "y0":
            return replace(self, y0=int(value))
        if axis == "N0":
            return replace(self, n0=int(value))
        if axis == "credible_level":
            # The level at which t_change is tuned; classification stays fixed.
            return replace(self, change_level=float(value))
        raise ValidationError(
            f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}"
        )

    def settings(self) -> dict[str, Any]:
        return {
            "N0": self.n0,
            "y0": self.y0,
            "t_risk": self.t_risk,
            "change_level": self.change_level,
            "credible_level": self.credible_level,
            "mode": SizingMode.parse(self.mode).value,
        }


@dataclass(frozen=True)
class MethodRecommendation:
    """Next-period sample size from one method, or why it has none."""

    method: Method
    n: int | None
    sizing: SizingResult | None = None
    detail: str | None = None


def period_rng(seed: int, period: int, iteration: int = 0) -> np.random.Generator:
    """Return the random stream for one (period, iteration) cell."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(period, iteration))
    )


def run_period(
    true_rate: float,
    n: int,
    rng: np.random.Generator,
    per_trial: bool = False,
) -> int:
    """Return the contaminated count among ``n`` items at ``true_rate``.

    The default draws the binomial count directly; ``per_trial`` realizes the
    ``n`` Bernoulli trials one by one.
    """
    if n < 0:
        raise ValidationError(f"sample size must be non-negative, got {n}")
    if not 0.0 <= true_rate <= 1.0:
        raise ValidationError(f"true rate must lie in [0, 1], got {true_rate}")
    if n == 0:
        return 0
    if per_trial:
        return int(np.count_nonzero(rng.random(n) < true_rate))
    return int(rng.binomial(n, true_rate))


def roll_window(window: EvidenceWindow, new_batch: InspectionBatch) -> EvidenceWindow:
    """Append ``new_batch`` and keep only the ``window_len`` most recent batches."""
    latest = window.latest_period
    if latest is not None and new_batch.period_id <= latest:
        raise ValidationError(
            f"period {new_batch.period_id} does not follow the latest retained "
            f"period {latest}"
        )
    batches = (*window.batches, new_batch)
    if window.window_len is not None:
        batches = batches[-window.window_len :]
    return EvidenceWindow(batches=batches, window_len=window.window_len)


def _sample_size(
    method: Method, window: EvidenceWindow, config: SimulationConfig
) -> tuple[int, SizingResult | None]:
    if method is Method.FIXED:
        return fixed_detection_size(config.fixed_design), None
    if method is Method.POWER:
        return power_analysis_size(window, config.power_design(), cap=config.cap), None
    result = recommend(
        window,
        config.t_risk,
        config.change_level,
        config.credible_level,
        config.target,
        config.mode,
        config.cap,
        config.scan_depth,
    )
    return result.n_min, result


def run_scenario(
    schedule: ScenarioSchedule,
    method: Method | str,
    config: SimulationConfig,
    seed: int,
    iteration: int = 0,
) -> SimulationTrace:
    """Simulate ``schedule`` under one sizing method.

    The adaptive method needs a low-risk initial window and raises
    :class:`NotLowRiskError` otherwise. It halts with a flagged trace after a
    Red period or when a later window stops being low risk.
    """
    method = Method.parse(method)
    window = config.initial_window()
    if method is Method.ADAPTIVE:
        build_thresholds(
            window_prior(window),
            config.t_risk,
            config.change_level,
            config.credible_level,
        )

    records: list[PeriodRecord] = []
    halt_reason: str | None = None
    halt_period: int | None = None
    for period in range(1, schedule.n_periods + 1):
        prior = window_prior(window)
        try:
            n, _ = _sample_size(method, window, config)
        except NotLowRiskError as exc:
            halt_reason, halt_period = HALT_NOT_LOW_RISK, period
            logger.warning("%s trace halted at period %s: %s", method.value, period, exc)
            break
        except NoSolutionError as exc:
            halt_reason, halt_period = HALT_NO_SOLUTION, period
            logger.warning("%s trace halted at period %s: %s", method.value, period, exc)
            break

        rate = schedule.rate_at(period)
        y = run_period(rate, n, period_rng(seed, period, iteration), config.per_trial)
        batch = InspectionBatch(period_id=period, n_inspected=n, n_contaminated=y)
        evaluation = evaluate_period(
            prior, batch, config.t_risk, config.change_level, config.credible_level
        )
        records.append(
            PeriodRecord(
                period=period,
                method=method,
                true_rate=rate,
                n_sampled=n,
                y_detected=y,
                prior=prior,
                posterior=evaluation.posterior,
                t_change=evaluation.t_change,
                status=evaluation.status,
            )
        )
        window = roll_window(window, batch)
        if method is Method.ADAPTIVE and evaluation.status is ColourStatus.RED:
            halt_reason, halt_period = HALT_RED, period
            logger.warning(
                "Adaptive trace halted at period %s: red status (y=%s of n=%s)",
                period,
                y,
                n,
            )
            break

    return SimulationTrace(
        method=method,
        seed=seed,
        iteration=iteration,
        records=tuple(records),
        halted=halt_reason is not None,
        halt_reason=halt_reason,
        halt_period=halt_period,
    )


def _map(fn: Callable[[int], T], items: Iterable[int], workers: int) -> list[T]:
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def run_replicates(
    schedule: ScenarioSchedule,
    method: Method | str,
    config: SimulationConfig,
    seed: int,
    replicates: int = 1,
    workers: int = DEFAULT_WORKERS,
) -> list[SimulationTrace]:
    """Run ``replicates`` independent traces, ordered by iteration index."""
    if replicates < 1:
        raise ValidationError(f"replicates must be positive, got {replicates}")
    return _map(
        lambda iteration: run_scenario(schedule, method, config, seed, iteration),
        range(replicates),
        workers,
    )


def status_sweep(
    prior_window: EvidenceWindow,
    thresholds: Thresholds,
    n1: int,
    rate_grid: Sequence[float],
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    workers: int = DEFAULT_WORKERS,
    per_trial: bool = False,
) -> SweepResult:
    """Tabulate posterior colours after one period of ``n1`` samples per rate."""
    if n1 <= 0:
        raise ValidationError(f"n1 must be positive, got {n1}")
    if iterations < 1:
        raise ValidationError(f"iterations must be positive, got {iterations}")
    prior = window_prior(prior_window)
    rates = [float(rate) for rate in rate_grid]

    def cell(index: int) -> SweepCell:
        rate = rates[index]
        counts: Counter[ColourStatus] = Counter()
        for iteration in range(iterations):
            y = run_period(rate, n1, period_rng(seed, index, iteration), per_trial)
            posterior = posterior_update(
                prior, InspectionBatch(period_id=1, n_inspected=n1, n_contaminated=y)
            )
            counts[classify(posterior, thresholds)] += 1
        return SweepCell(
            settings={"rate": rate, "n1": n1, "iterations": iterations},
            counts={status: counts.get(status, 0) for status in ColourStatus},
        )

    cells = _map(cell, range(len(rates)), workers)
    return SweepResult(name="status", kind="status", cells=tuple(cells), seed=seed)


def sizing_sweep(
    axis: str,
    grid: Sequence[float],
    base: SweepBase | None = None,
    workers: int = DEFAULT_WORKERS,
    label: str | None = None,
) -> SweepResult:
    """Return ``n_min`` across ``grid`` values of one axis.

    Grid points whose prior is not low risk, or that have no solution under
    the cap, are recorded with an error instead of aborting the sweep.
    """
    base = base or SweepBase()
    if axis not in SWEEP_AXES:
        raise ValidationError(
            f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}"
        )
    points = [base.with_axis(axis, value) for value in grid]

    def cell(index: int) -> SweepCell:
        point = points[index]
        settings: dict[str, Any] = {"axis": axis, **point.settings()}
        if label is not None:
            settings["series"] = label
        try:
            window = EvidenceWindow.from_counts([(point.n0, point.y0)], window_len=None)
            result = recommend(
                window,
                point.t_risk,
                point.change_level,
                point.credible_level,
                point.target,
                point.mode,
                point.cap,
                point.scan_depth,
            )
        except (NotLowRiskError, NoSolutionError, ValidationError) as exc:
            logger.info("Sweep point %s failed: %s", settings, exc)
            return SweepCell(settings=settings, error=f"{type(exc).__name__}: {exc}")
        return SweepCell(settings=settings, n_min=result.n_min, y_crit=result.y_crit)

    cells = _map(cell, range(len(points)), workers)
    return SweepResult(name=label or axis, kind="sizing", cells=tuple(cells))


def weighted_success_monte_carlo(
    prior_window: EvidenceWindow,
    thresholds: Thresholds,
    n1: int,
    draws: int = 20000,
    seed: int = 0,
) -> float:
    """Return the non-Green frequency after one period at rates above ``t_risk``.

    Rates are drawn from the prior conditioned on ``r > t_risk``; the result
    estimates the weighted success probability the solver integrates.
    """
    prior = window_prior(prior_window)
    rng = period_rng(seed, 0, 0)
    rates = sample_truncated_prior(prior, thresholds.t_risk, draws, rng)
    detected = rng.binomial(n1, rates)
    escalated = 0
    for y, count in zip(*np.unique(detected, return_counts=True)):
        posterior = posterior_update(
            prior, InspectionBatch(period_id=1, n_inspected=n1, n_contaminated=int(y))
        )
        if classify(posterior, thresholds) is not ColourStatus.GREEN:
            escalated += int(count)
    return escalated / draws


def compare_methods(
    prior_window: EvidenceWindow, config: SimulationConfig
) -> list[MethodRecommendation]:
    """Return every method's next-period sample size for the same window."""
    recommendations: list[MethodRecommendation] = []
    for method in Method:
        try:
            n, sizing = _sample_size(method, prior_window, config)
        except SamplingError as exc:
            recommendations.append(
                MethodRecommendation(method=method, n=None, detail=str(exc))
            )
            continue
        recommendations.append(MethodRecommendation(method=method, n=n, sizing=sizing))
    return recommendations


def sizing_for_status_sweep(
    prior_window: EvidenceWindow, config: SimulationConfig
) -> tuple[Thresholds, SizingResult]:
    """Return the thresholds and adaptive sizing a status sweep runs at."""
    thresholds = build_thresholds(
        window_prior(prior_window),
        config.t_risk,
        config.change_level,
        config.credible_level,
    )
    result = min_sample_size(
        prior_window,
        thresholds,
        config.target,
        config.mode,
        config.cap,
        config.scan_depth,
    )
    return thresholds, result


__all__ = [
    "HALT_NOT_LOW_RISK",
    "HALT_NO_SOLUTION",
    "HALT_RED",
    "MethodRecommendation",
    "SWEEP_AXES",
    "SimulationConfig",
    "SweepBase",
    "compare_methods",
    "period_rng",
    "roll_window",
    "run_period",
    "run_replicates",
    "run_scenario",
    "sizing_for_status_sweep",
    "sizing_sweep",
    "status_sweep",
    "weighted_success_monte_carlo",
]
