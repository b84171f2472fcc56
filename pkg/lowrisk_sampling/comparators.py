"""Baseline sizing policies the adaptive method is compared against.

``fixed_detection_size`` is the classical detection-level plan (598 samples
detect a 0.5% rate with 95% confidence, usually rounded to 600).
``power_analysis_size`` is a surrogate for power-analysis based inspection
volumes: a one-sided binomial test of H0 "rate >= cutoff", rejected when the
count is at most ``c``, sized for the requested power at the posterior-mean
rate estimate.

Updates: v0.1.0 - 2026-10-16 - Added fixed and power-analysis comparators.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import NDArray
from scipy.special import ndtr, ndtri
from scipy.stats import binom

from .belief import window_prior
from .config import POWER_SCAN_CHUNK, SEARCH_CAP
from .errors import NoSolutionError, NotLowRiskError, ValidationError
from .models import EvidenceWindow, FixedDesign, PowerDesign, Rounding, SizingMode

logger = logging.getLogger(__name__)

CONVENTIONAL_PLAN_SIZE = 600


def _detection_probability(n: int, detection_level: float) -> float:
    return -math.expm1(n * math.log1p(-detection_level))


def fixed_detection_size(design: FixedDesign | None = None) -> int:
    """Return the smallest ``n`` detecting ``detection_level`` with ``confidence``."""
    design = design or FixedDesign()
    if design.rounding is Rounding.ROUND_TO_600:
        return CONVENTIONAL_PLAN_SIZE
    n = max(
        1,
        math.ceil(math.log1p(-design.confidence) / math.log1p(-design.detection_level)),
    )
    while n > 1 and _detection_probability(n - 1, design.detection_level) >= (
        design.confidence
    ):
        n -= 1
    while _detection_probability(n, design.detection_level) < design.confidence:
        n += 1
    return n


def _power_exact(
    ns: NDArray[np.int64], design: PowerDesign, rate: float
) -> NDArray[np.float64]:
    critical = binom.ppf(design.alpha, ns, design.cutoff)
    critical = np.where(
        binom.cdf(critical, ns, design.cutoff) <= design.alpha, critical, critical - 1
    )
    return np.asarray(
        np.where(critical >= 0, binom.cdf(critical, ns, rate), 0.0), dtype=np.float64
    )


def _power_normal(
    ns: NDArray[np.int64], design: PowerDesign, rate: float
) -> NDArray[np.float64]:
    n = ns.astype(np.float64)
    null_sd = np.sqrt(n * design.cutoff * (1.0 - design.cutoff))
    critical = np.floor(n * design.cutoff + ndtri(design.alpha) * null_sd)
    alt_sd = np.sqrt(n * rate * (1.0 - rate))
    return np.asarray(
        np.where(critical >= 0, ndtr((critical - n * rate) / alt_sd), 0.0),
        dtype=np.float64,
    )


def power_analysis_size(
    prior_window: EvidenceWindow,
    design: PowerDesign | None = None,
    mode: SizingMode | str = SizingMode.EXACT,
    cap: int = SEARCH_CAP,
) -> int:
    """Return the smallest ``n`` whose test reaches ``design.power`` at ``r_hat``.

    ``r_hat`` is the posterior mean ``(y0 + 0.5) / (N0 + 1)``. Power is not
    monotone in ``n`` (the critical count moves in steps), so candidates are
    scanned in vectorized chunks rather than bisected.
    """
    design = design or PowerDesign()
    mode = SizingMode.parse(mode)
    if not prior_window.batches:
        raise ValidationError("power analysis needs a non-empty prior window")
    rate = window_prior(prior_window).mean
    if rate >= design.cutoff:
        raise NotLowRiskError(
            f"estimated rate {rate:.6g} is not below the cutoff {design.cutoff:.6g}, "
            "so no sample size reaches the power target"
        )
    power_fn = _power_exact if mode is SizingMode.EXACT else _power_normal
    # Below this size even zero detections cannot reject at level alpha.
    start = fixed_detection_size(
        FixedDesign(detection_level=design.cutoff, confidence=1.0 - design.alpha)
    )
    for begin in range(start, cap + 1, POWER_SCAN_CHUNK):
        ns = np.arange(begin, min(begin + POWER_SCAN_CHUNK, cap + 1), dtype=np.int64)
        hits = np.flatnonzero(power_fn(ns, design, rate) >= design.power)
        if hits.size:
            n = int(ns[hits[0]])
            logger.debug("Power analysis at r_hat=%.6g picked n=%s", rate, n)
            return n
    raise NoSolutionError(
        f"power analysis found no sample size up to {cap} "
        f"(r_hat={rate:.6g}, cutoff={design.cutoff:.6g})"
    )


__all__ = [
    "CONVENTIONAL_PLAN_SIZE",
    "fixed_detection_size",
    "power_analysis_size",
]
