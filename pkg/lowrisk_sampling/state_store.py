"""Persistent pathway state for operators recording real inspection results.

The state file is a single JSON document holding the pathway configuration,
the full batch history and a derived cache (window, belief, ``t_change`` in
force, last status and last recommendation). The cache can always be
rebuilt by replaying the history, and ``audit_state`` checks that it matches.
Writes go through a temp file and rename, guarded by an advisory lock.

Updates: v0.1.0 - 2026-10-16 - Added state model, replay audit and atomic persistence.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .belief import window_prior
from .config import STATE_SCHEMA_VERSION, merge_settings
from .errors import (
    NoSolutionError,
    NotLowRiskError,
    RedStatusError,
    ValidationError,
)
from .models import (
    BetaParams,
    ColourStatus,
    EvidenceWindow,
    InspectionBatch,
    SizingMode,
    SizingResult,
    Thresholds,
)
from .simulator import roll_window
from .sizing import recommend
from .status import assert_low_risk, classify, evaluate_period, tune_change_threshold
from .utils import atomic_write_text, config_hash

try:  # pragma: no cover - platform dependent
    import fcntl
except ImportError:  # pragma: no cover - Windows
    fcntl = None  # type: ignore[assignment]

logger = logging.getLogger(__name__)

SUPPORTED_SCHEMA_VERSIONS = (STATE_SCHEMA_VERSION,)


@dataclass(frozen=True)
class PathwayConfig:
    """Operator-chosen thresholds and solver settings for one pathway."""

    t_risk: float
    credible_level: float
    change_level: float
    window_len: int | None
    mode: SizingMode
    target: float
    search_cap: int
    scan_depth: int

    @classmethod
    def from_settings(cls, overrides: Mapping[str, Any] | None = None) -> PathwayConfig:
        settings = merge_settings(overrides)
        window_len = settings["window_len"]
        if overrides is not None and "window_len" in overrides:
            # null or 0 keeps every batch
            window_len = overrides["window_len"]
        return cls(
            t_risk=float(settings["t_risk"]),
            credible_level=float(settings["credible_level"]),
            change_level=float(settings["change_level"]),
            window_len=int(window_len) if window_len else None,
            mode=SizingMode.parse(settings["mode"]),
            target=float(settings["target"]),
            search_cap=int(settings["search_cap"]),
            scan_depth=int(settings["scan_depth"]),
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "t_risk": self.t_risk,
            "credible_level": self.credible_level,
            "change_level": self.change_level,
            "window_len": self.window_len,
            "mode": self.mode.value,
            "target": self.target,
            "search_cap": self.search_cap,
            "scan_depth": self.scan_depth,
        }

    @property
    def digest(self) -> str:
        return config_hash(self.as_dict())


@dataclass(frozen=True)
class DerivedState:
    """Cache recomputable from config and history."""

    window: EvidenceWindow
    belief: BetaParams
    t_change: float
    prior_low_risk: bool
    last_status: ColourStatus
    last_posterior: BetaParams | None = None
    last_recommendation: SizingResult | None = None
    recommendation_error: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "window": [batch.as_dict() for batch in self.window.batches],
            "belief": self.belief.as_dict(),
            "t_change": self.t_change,
            "prior_low_risk": self.prior_low_risk,
            "last_status": self.last_status.value,
            "last_posterior": (
                self.last_posterior.as_dict() if self.last_posterior else None
            ),
            "last_recommendation": (
                self.last_recommendation.as_dict()
                if self.last_recommendation
                else None
            ),
            "recommendation_error": self.recommendation_error,
        }

    @classmethod
    def from_dict(
        cls, payload: Mapping[str, Any], window_len: int | None
    ) -> DerivedState:
        try:
            window = EvidenceWindow(
                batches=tuple(
                    InspectionBatch.from_dict(item) for item in payload["window"]
                ),
                window_len=window_len,
            )
            posterior = payload.get("last_posterior")
            recommendation = payload.get("last_recommendation")
            return cls(
                window=window,
                belief=BetaParams.from_dict(payload["belief"]),
                t_change=float(payload["t_change"]),
                prior_low_risk=bool(payload["prior_low_risk"]),
                last_status=ColourStatus(payload["last_status"]),
                last_posterior=BetaParams.from_dict(posterior) if posterior else None,
                last_recommendation=(
                    SizingResult.from_dict(recommendation) if recommendation else None
                ),
                recommendation_error=payload.get("recommendation_error"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed derived state: {exc}") from exc


@dataclass(frozen=True)
class PathwayState:
    """Configuration, batch history and derived cache of one pathway."""

    config: PathwayConfig
    history: tuple[InspectionBatch, ...]
    prior_count: int
    derived: DerivedState
    schema_version: int = STATE_SCHEMA_VERSION

    @property
    def next_period(self) -> int:
        return self.history[-1].period_id + 1 if self.history else 1

    @property
    def thresholds(self) -> Thresholds | None:
        """Thresholds in force for the next period, if the window is low risk."""
        if not self.derived.prior_low_risk:
            return None
        return Thresholds(
            t_risk=self.config.t_risk,
            t_change=self.derived.t_change,
            credible_level=self.config.credible_level,
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "config": self.config.as_dict(),
            "config_hash": self.config.digest,
            "prior_count": self.prior_count,
            "history": [batch.as_dict() for batch in self.history],
            "derived": self.derived.as_dict(),
        }


def _derive(
    config: PathwayConfig,
    window: EvidenceWindow,
    last_status: ColourStatus | None,
    last_posterior: BetaParams | None,
) -> DerivedState:
    belief = window_prior(window)
    t_change = tune_change_threshold(belief, config.change_level)
    low_risk = assert_low_risk(belief, config.t_risk, config.credible_level) and (
        t_change < config.t_risk
    )
    if last_status is None:
        last_status = (
            classify(
                belief,
                Thresholds(config.t_risk, t_change, config.credible_level),
            )
            if low_risk
            else ColourStatus.RED
        )

    recommendation: SizingResult | None = None
    error: str | None = None
    if last_status is ColourStatus.RED:
        error = "status is red; remove high-risk subpathways before sizing"
    elif not low_risk:
        error = "current evidence window does not satisfy the low-risk requirement"
    else:
        try:
            recommendation = recommend(
                window,
                config.t_risk,
                config.change_level,
                config.credible_level,
                config.target,
                config.mode,
                config.search_cap,
                config.scan_depth,
            )
        except NoSolutionError as exc:
            error = str(exc)
    return DerivedState(
        window=window,
        belief=belief,
        t_change=t_change,
        prior_low_risk=low_risk,
        last_status=last_status,
        last_posterior=last_posterior,
        last_recommendation=recommendation,
        recommendation_error=error,
    )


def init_state(
    config: PathwayConfig, prior_batches: Sequence[tuple[int, int]]
) -> PathwayState:
    """Create a pathway state from past inspection counts.

    The prior window must satisfy the low-risk requirement.
    """
    if not prior_batches:
        raise ValidationError(
            "no prior inspection data supplied; provide past batches, or elicited "
            "or proxy priors (for example counts from a comparable pathway)"
        )
    window = EvidenceWindow.from_counts(list(prior_batches), config.window_len)
    offset = len(prior_batches) - 1
    history = tuple(
        InspectionBatch(period_id=index - offset, n_inspected=n, n_contaminated=y)
        for index, (n, y) in enumerate(prior_batches)
    )
    belief = window_prior(window)
    if not assert_low_risk(belief, config.t_risk, config.credible_level):
        raise NotLowRiskError(
            f"prior Beta({belief.alpha:g}, {belief.beta:g}) is not confidently "
            f"below t_risk={config.t_risk:g}"
        )
    derived = _derive(config, window, None, None)
    if not derived.prior_low_risk:
        raise NotLowRiskError(
            f"t_change tuned at {config.change_level:g} is not below "
            f"t_risk={config.t_risk:g}"
        )
    logger.info(
        "Initialised pathway with %s prior batches, belief Beta(%s, %s)",
        len(history),
        belief.alpha,
        belief.beta,
    )
    return PathwayState(
        config=config, history=history, prior_count=len(history), derived=derived
    )


def record_batch(
    state: PathwayState,
    n_inspected: int,
    n_contaminated: int,
    metadata: Mapping[str, Any] | None = None,
) -> PathwayState:
    """Append one period's counts, classify it and roll the window.

    Empty batches are logged but leave the derived cache untouched.
    """
    batch = InspectionBatch(
        period_id=state.next_period,
        n_inspected=n_inspected,
        n_contaminated=n_contaminated,
        metadata=dict(metadata or {}),
    )
    history = (*state.history, batch)
    if batch.n_inspected == 0:
        logger.info("Logged empty batch for period %s", batch.period_id)
        return replace(state, history=history)

    config = state.config
    evaluation = evaluate_period(
        state.derived.belief,
        batch,
        config.t_risk,
        config.change_level,
        config.credible_level,
    )
    window = roll_window(state.derived.window, batch)
    derived = _derive(config, window, evaluation.status, evaluation.posterior)
    if evaluation.status is ColourStatus.RED:
        logger.warning(
            "Period %s is RED (%s of %s contaminated): the pathway is no longer "
            "low risk and needs management action",
            batch.period_id,
            n_contaminated,
            n_inspected,
        )
    else:
        logger.info("Period %s classified %s", batch.period_id, evaluation.status.value)
    return replace(state, history=history, derived=derived)


def recommendation_for(
    state: PathwayState, mode: SizingMode | str | None = None
) -> SizingResult:
    """Return the next-period recommendation without modifying the state."""
    derived = state.derived
    if derived.last_status is ColourStatus.RED:
        raise RedStatusError(
            "pathway status is red: no sample size is recommended until "
            "high-risk subpathways are removed"
        )
    if not derived.prior_low_risk:
        raise NotLowRiskError(
            f"the evidence window Beta({derived.belief.alpha:g}, "
            f"{derived.belief.beta:g}) is not low risk"
        )
    config = state.config
    if mode is not None and SizingMode.parse(mode) is not config.mode:
        return recommend(
            derived.window,
            config.t_risk,
            config.change_level,
            config.credible_level,
            config.target,
            mode,
            config.search_cap,
            config.scan_depth,
        )
    if derived.last_recommendation is None:
        raise NoSolutionError(derived.recommendation_error or "no recommendation")
    return derived.last_recommendation


def rebuild_state(
    config: PathwayConfig, history: Sequence[InspectionBatch], prior_count: int
) -> PathwayState:
    """Replay ``history`` from scratch and return the resulting state."""
    if not 0 < prior_count <= len(history):
        raise ValidationError(
            f"prior_count {prior_count} inconsistent with {len(history)} batches"
        )
    priors = history[:prior_count]
    state = init_state(
        config, [(batch.n_inspected, batch.n_contaminated) for batch in priors]
    )
    if tuple(batch.period_id for batch in state.history) != tuple(
        batch.period_id for batch in priors
    ):
        raise ValidationError("prior batch period ids are not consecutive up to 0")
    for batch in history[prior_count:]:
        if batch.period_id != state.next_period:
            raise ValidationError(
                f"history out of order: expected period {state.next_period}, "
                f"found {batch.period_id}"
            )
        state = record_batch(
            state, batch.n_inspected, batch.n_contaminated, batch.metadata
        )
    return state


def audit_state(state: PathwayState) -> bool:
    """Return whether replaying the history reproduces the stored cache."""
    rebuilt = rebuild_state(state.config, state.history, state.prior_count)
    matches = rebuilt.derived == state.derived
    if not matches:
        logger.warning("State audit failed: derived cache differs from replay")
    return matches


def state_from_dict(payload: Mapping[str, Any]) -> PathwayState:
    """Parse a state document, checking its schema version."""
    if not isinstance(payload, Mapping):
        raise ValidationError("state document must be a JSON object")
    version = payload.get("schema_version")
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise ValidationError(
            f"unsupported state schema_version {version!r}; "
            f"supported: {', '.join(map(str, SUPPORTED_SCHEMA_VERSIONS))}"
        )
    config = PathwayConfig.from_settings(payload.get("config"))
    raw_history = payload.get("history")
    if not isinstance(raw_history, list):
        raise ValidationError("state history must be a list")
    history = tuple(InspectionBatch.from_dict(item) for item in raw_history)
    for previous, current in zip(history, history[1:]):
        if current.period_id <= previous.period_id:
            raise ValidationError(
                f"history periods out of order ({previous.period_id} then "
                f"{current.period_id})"
            )
    derived_payload = payload.get("derived")
    if not isinstance(derived_payload, Mapping):
        raise ValidationError("state is missing its derived cache")
    return PathwayState(
        config=config,
        history=history,
        prior_count=int(payload.get("prior_count", 0)),
        derived=DerivedState.from_dict(derived_payload, config.window_len),
        schema_version=int(version),
    )


def load_state(path: Path) -> PathwayState:
    """Load a state file."""
    try:
        with path.open("r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except FileNotFoundError as exc:
        raise ValidationError(
            f"no pathway state at {path}; run `init` first"
        ) from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"state file {path} is not valid JSON: {exc}") from exc
    return state_from_dict(payload)


def save_state(state: PathwayState, path: Path) -> None:
    """Persist ``state`` atomically."""
    text = json.dumps(state.as_dict(), indent=2, sort_keys=True) + "\n"
    atomic_write_text(path, text)
    logger.debug("Saved pathway state to %s", path)


@contextmanager
def state_lock(path: Path) -> Iterator[None]:
    """Hold an exclusive advisory lock beside ``path`` for a writer."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lock_path = path.with_name(path.name + ".lock")
    with lock_path.open("a+", encoding="utf-8") as handle:
        if fcntl is not None:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX)
        try:
            yield
        finally:
            if fcntl is not None:
                fcntl.flock(handle.fileno(), fcntl.LOCK_UN)


__all__ = [
    "DerivedState",
    "PathwayConfig",
    "PathwayState",
    "audit_state",
    "init_state",
    "load_state",
    "rebuild_state",
    "recommendation_for",
    "record_batch",
    "save_state",
    "state_from_dict",
    "state_lock",
]
