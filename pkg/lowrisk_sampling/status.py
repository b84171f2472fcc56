"""Threshold tuning and traffic-light classification of the leakage belief.

Green means the belief is confidently below ``t_change``; Orange means it is
only confidently below ``t_risk``; Red means neither. Ties at the credible
level resolve to the less severe colour.

Updates: v0.1.0 - 2026-10-16 - Added classification and per-period evaluation.
"""

from __future__ import annotations

import logging
from functools import lru_cache

from .belief import beta_cdf, beta_quantile, posterior_update
from .errors import NotLowRiskError
from .models import (
    BetaParams,
    ColourStatus,
    InspectionBatch,
    PeriodEvaluation,
    Thresholds,
)

logger = logging.getLogger(__name__)


def tune_change_threshold(prior: BetaParams, credible_level: float = 0.95) -> float:
    """Return the one-sided ``credible_level`` quantile of the prior belief."""
    return beta_quantile(credible_level, prior)


@lru_cache(maxsize=8192)
def _classify(belief: BetaParams, thresholds: Thresholds) -> ColourStatus:
    if beta_cdf(thresholds.t_change, belief) >= thresholds.credible_level:
        return ColourStatus.GREEN
    if beta_cdf(thresholds.t_risk, belief) >= thresholds.credible_level:
        return ColourStatus.ORANGE
    return ColourStatus.RED


def classify(belief: BetaParams, thresholds: Thresholds) -> ColourStatus:
    """Return the colour status of ``belief`` under ``thresholds``."""
    return _classify(belief, thresholds)


def assert_low_risk(
    prior: BetaParams, t_risk: float, credible_level: float = 0.95
) -> bool:
    """Return whether ``P(r < t_risk | prior) >= credible_level``."""
    return beta_cdf(t_risk, prior) >= credible_level


def require_low_risk(
    prior: BetaParams, t_risk: float, credible_level: float = 0.95
) -> None:
    """Raise :class:`NotLowRiskError` unless the prior passes the requirement."""
    if not assert_low_risk(prior, t_risk, credible_level):
        probability = beta_cdf(t_risk, prior)
        raise NotLowRiskError(
            f"P(r < {t_risk:.6g}) = {probability:.6g} is below the credible "
            f"level {credible_level:.6g} for prior Beta({prior.alpha:g}, {prior.beta:g})"
        )


def build_thresholds(
    prior: BetaParams,
    t_risk: float,
    change_level: float = 0.95,
    credible_level: float = 0.95,
) -> Thresholds:
    """Tune ``t_change`` on a low-risk prior and return the full threshold set."""
    require_low_risk(prior, t_risk, credible_level)
    t_change = tune_change_threshold(prior, change_level)
    if not t_change < t_risk:
        raise NotLowRiskError(
            f"tuned t_change {t_change:.6g} at level {change_level:.6g} "
            f"is not below t_risk {t_risk:.6g}"
        )
    return Thresholds(t_risk=t_risk, t_change=t_change, credible_level=credible_level)


def evaluate_period(
    prior: BetaParams,
    batch: InspectionBatch,
    t_risk: float,
    change_level: float = 0.95,
    credible_level: float = 0.95,
) -> PeriodEvaluation:
    """Update ``prior`` with ``batch`` and classify the posterior.

    ``t_change`` is tuned on the prior and frozen for the period. A prior that
    fails the low-risk requirement makes the period Red.
    """
    posterior = posterior_update(prior, batch)
    t_change = tune_change_threshold(prior, change_level)
    prior_low_risk = assert_low_risk(prior, t_risk, credible_level) and (
        t_change < t_risk
    )
    if prior_low_risk:
        thresholds = Thresholds(
            t_risk=t_risk, t_change=t_change, credible_level=credible_level
        )
        status = classify(posterior, thresholds)
    else:
        status = ColourStatus.RED
    if status is ColourStatus.RED:
        logger.debug(
            "Period %s classified red (prior low risk: %s)",
            batch.period_id,
            prior_low_risk,
        )
    return PeriodEvaluation(
        prior=prior,
        posterior=posterior,
        t_change=t_change,
        status=status,
        prior_low_risk=prior_low_risk,
    )


__all__ = [
    "assert_low_risk",
    "build_thresholds",
    "classify",
    "evaluate_period",
    "require_low_risk",
    "tune_change_threshold",
]
