"""Minimum next-period sample size for a low-risk pathway.

The solver picks the smallest ``n`` whose weighted success probability (the
chance of leaving Green, averaged over leakage rates above ``t_risk`` under
the truncated prior) reaches the target. Integrals run in ``t = -log r``,
where ``r**(a-1) dr`` becomes ``exp(-a t) dt``, and the kernel is scaled by
its maximum before exponentiation so Beta shapes around 1e4 do not underflow.

Exact mode counts contaminated items as integers and uses exact binomial
tails. Normal mode treats the count as continuous: the posterior leaves Green
once the count passes the real-valued level ``y*`` and success at ``r'`` is the
Gaussian tail beyond ``y*``, capped by the exact tail at ``y_crit``. The cap
keeps normal-mode sizes at or above exact-mode sizes; where the Gaussian tail
binds the weighted success is smooth in ``n``.

Updates: v0.1.0 - 2026-10-16 - Added weighted-success quadrature and search.
Updates: v0.1.1 - 2026-10-16 - Capped normal-mode success by the exact tail.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import xlog1py
from scipy.stats import beta as beta_dist

from .belief import beta_cdf, binomial_tail_upper, window_prior
from .config import (
    DEFAULT_TARGET,
    QUAD_EPSABS,
    QUAD_EPSREL,
    QUAD_LIMIT,
    SAWTOOTH_SCAN_DEPTH,
    SEARCH_CAP,
)
from .errors import DomainError, NoSolutionError, ValidationError
from .models import (
    BetaParams,
    EvidenceWindow,
    HypotheticalRate,
    SizingMode,
    SizingResult,
    Thresholds,
)
from .status import build_thresholds, require_low_risk

logger = logging.getLogger(__name__)

_BREAKPOINT_SCALES = (0.5, 2.0, 8.0, 32.0, 128.0)


def _posterior_cdf(
    y: float, n1: int, prior: BetaParams, t_change: float
) -> float:
    posterior = BetaParams(alpha=prior.alpha + y, beta=prior.beta + (n1 - y))
    return beta_cdf(t_change, posterior)


def critical_contamination_count(
    n1: int,
    prior: BetaParams,
    t_change: float,
    credible_level: float = 0.95,
) -> int:
    """Return the smallest count that takes the posterior out of Green.

    Returns ``n1 + 1`` when even ``n1`` detections keep it Green.
    """
    if n1 < 0:
        raise ValidationError(f"n1 must be non-negative, got {n1}")

    def escalated(y: int) -> bool:
        return _posterior_cdf(y, n1, prior, t_change) < credible_level

    if not escalated(n1):
        return n1 + 1
    if escalated(0):
        return 0
    lo, hi = 0, n1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if escalated(mid):
            hi = mid
        else:
            lo = mid
    return hi


def critical_contamination_level(
    n1: int,
    prior: BetaParams,
    t_change: float,
    credible_level: float = 0.95,
) -> float:
    """Return the real count ``y*`` in ``[0, n1]`` where the Green test is tight.

    ``0.0`` means the posterior is non-Green even without detections and
    ``n1 + 1`` means no count in range escalates.
    """
    if n1 < 0:
        raise ValidationError(f"n1 must be non-negative, got {n1}")

    def gap(y: float) -> float:
        return _posterior_cdf(y, n1, prior, t_change) - credible_level

    if gap(0.0) < 0.0:
        return 0.0
    if n1 == 0 or gap(float(n1)) >= 0.0:
        return float(n1 + 1)
    upper = min(1.0, float(n1))
    while gap(upper) >= 0.0:
        upper = min(2.0 * upper, float(n1))
    lower = upper / 2.0 if upper > 1.0 else 0.0
    return float(brentq(gap, lower, upper, xtol=1e-10, rtol=1e-12))


def _critical_levels(
    n1: int,
    prior: BetaParams,
    t_change: float,
    credible_level: float,
    mode: SizingMode,
) -> tuple[float, int]:
    y_crit = critical_contamination_count(n1, prior, t_change, credible_level)
    if mode is SizingMode.EXACT or y_crit == 0 or y_crit > n1:
        return float(y_crit), y_crit
    return critical_contamination_level(n1, prior, t_change, credible_level), y_crit


def _success_given_levels(
    n1: int, r: float, y_star: float, y_crit: int, mode: SizingMode
) -> float:
    exact = binomial_tail_upper(n1, r, y_crit, SizingMode.EXACT)
    if mode is SizingMode.EXACT:
        return exact
    # The Gaussian tail is never credited above the exact tail at y_crit.
    return min(binomial_tail_upper(n1, r, y_star, SizingMode.NORMAL), exact)


def success_prob_at_rate(
    n1: int,
    r_prime: HypotheticalRate,
    prior: BetaParams,
    t_change: float,
    mode: SizingMode | str = SizingMode.NORMAL,
    credible_level: float = 0.95,
) -> float:
    """Return the probability that ``n1`` samples at rate ``r'`` leave Green."""
    mode = SizingMode.parse(mode)
    y_star, y_crit = _critical_levels(n1, prior, t_change, credible_level, mode)
    return _success_given_levels(n1, r_prime.r_prime, y_star, y_crit, mode)


@dataclass(frozen=True)
class _TruncatedTail:
    """Prior kernel restricted to ``r > t_risk`` in the ``t = -log r`` variable."""

    alpha: float
    beta: float
    t_upper: float
    log_mass: float
    points: tuple[float, ...]

    def log_kernel(self, t: float) -> float:
        return -self.alpha * t + float(xlog1py(self.beta - 1.0, -math.exp(-t)))

    def weight(self, t: float) -> float:
        """Normalized density of ``t``; integrates to one over ``(0, t_upper)``."""
        return math.exp(self.log_kernel(t) - self.log_mass)


def _reference_point(alpha: float, beta: float, t_upper: float) -> tuple[float, float]:
    """Return the kernel's peak location in ``t`` and a width scale around it."""
    if beta <= 1.0:
        slope = alpha + (1.0 - beta) / math.expm1(t_upper)
        return t_upper, 1.0 / max(slope, 1e-12)
    t_peak = math.log((alpha + beta - 1.0) / alpha)
    if t_peak >= t_upper:
        odds = math.exp(-t_upper) / -math.expm1(-t_upper)
        slope = (beta - 1.0) * odds - alpha
        if slope > 1e-8:
            return t_upper, 1.0 / slope
        t_peak = t_upper
    odds = math.exp(-t_peak) / -math.expm1(-t_peak)
    curvature = (beta - 1.0) * odds / -math.expm1(-t_peak)
    return t_peak, 1.0 / math.sqrt(curvature)


@lru_cache(maxsize=1024)
def _truncated_tail(prior: BetaParams, t_risk: float) -> _TruncatedTail:
    alpha, beta = prior.alpha, prior.beta
    t_upper = -math.log(t_risk)
    t_ref, width = _reference_point(alpha, beta, t_upper)
    points = sorted(
        {
            t
            for scale in _BREAKPOINT_SCALES
            for t in (t_ref - scale * width, t_ref + scale * width)
            if 0.0 < t < t_upper
        }
    )
    unscaled = _TruncatedTail(alpha, beta, t_upper, 0.0, tuple(points))
    h_ref = unscaled.log_kernel(t_ref)
    integral, abserr = quad(
        lambda t: math.exp(unscaled.log_kernel(t) - h_ref),
        0.0,
        t_upper,
        points=points or None,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
    )
    if not integral > 0.0:
        raise ValidationError(
            f"truncated prior Beta({alpha:g}, {beta:g}) above {t_risk:g} has no mass"
        )
    logger.debug(
        "Truncated tail Beta(%s, %s) above %s: integral=%s err=%s",
        alpha,
        beta,
        t_risk,
        integral,
        abserr,
    )
    return _TruncatedTail(alpha, beta, t_upper, h_ref + math.log(integral), tuple(points))


def truncated_prior_log_normalizer(prior: BetaParams, t_risk: float) -> float:
    """Return ``log M`` with ``M`` the unnormalized prior mass above ``t_risk``."""
    if not 0.0 < t_risk < 1.0:
        raise DomainError(f"t_risk must lie in (0, 1), got {t_risk!r}")
    return _truncated_tail(prior, t_risk).log_mass


def truncated_prior_log_density(r: float, prior: BetaParams, t_risk: float) -> float:
    """Return the log density of the prior conditioned on ``r > t_risk``."""
    if not 0.0 < t_risk < 1.0:
        raise DomainError(f"t_risk must lie in (0, 1), got {t_risk!r}")
    if not math.isfinite(r) or not t_risk < r <= 1.0:
        raise DomainError(f"r must lie in (t_risk, 1] = ({t_risk:g}, 1], got {r!r}")
    log_mass = truncated_prior_log_normalizer(prior, t_risk)
    return (
        (prior.alpha - 1.0) * math.log(r)
        + float(xlog1py(prior.beta - 1.0, -r))
        - log_mass
    )


def sample_truncated_prior(
    prior: BetaParams,
    t_risk: float,
    size: int,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Draw ``size`` rates from the prior conditioned on ``r > t_risk``.

    When the density decreases over ``(t_risk, 1]`` an exponential envelope
    tangent at ``t_risk`` gives exact rejection sampling; otherwise the
    Beta inverse survival function is used.
    """
    if not 0.0 < t_risk < 1.0:
        raise DomainError(f"t_risk must lie in (0, 1), got {t_risk!r}")
    a, b = prior.alpha, prior.beta
    decreasing = b >= 1.0 and (a <= 1.0 or (a - 1.0) / (a + b - 2.0) <= t_risk)
    if not decreasing:
        tail = beta_dist.sf(t_risk, a, b)
        u = rng.random(size)
        return np.asarray(beta_dist.isf(u * tail, a, b), dtype=np.float64)

    width = 1.0 - t_risk
    if a >= 1.0:
        rate = (b - 1.0) / width - (a - 1.0) / t_risk
    else:
        rate = (b - 1.0) / width
    log_f_t = (a - 1.0) * math.log(t_risk) + (b - 1.0) * math.log1p(-t_risk)

    accepted: list[NDArray[np.float64]] = []
    remaining = size
    while remaining > 0:
        batch = max(64, int(remaining * 1.2))
        u = rng.random(batch)
        if rate > 0.0:
            draws = t_risk - np.log1p(-u * -math.expm1(-rate * width)) / rate
        else:
            draws = t_risk + u * width
        draws = np.clip(draws, np.nextafter(t_risk, 1.0), 1.0)
        log_accept = (
            (a - 1.0) * np.log(draws)
            + xlog1py(b - 1.0, -draws)
            - log_f_t
            + rate * (draws - t_risk)
        )
        keep = draws[np.log(rng.random(batch)) < log_accept]
        accepted.append(keep[:remaining])
        remaining -= min(remaining, keep.size)
    return np.concatenate(accepted)


def weighted_success_prob(
    n1: int,
    prior: BetaParams,
    thresholds: Thresholds,
    mode: SizingMode | str = SizingMode.NORMAL,
) -> float:
    """Return the success probability averaged over ``r' > t_risk``."""
    mode = SizingMode.parse(mode)
    require_low_risk(prior, thresholds.t_risk, thresholds.credible_level)
    return _weighted_success(n1, prior, thresholds, mode)


def _weighted_success(
    n1: int, prior: BetaParams, thresholds: Thresholds, mode: SizingMode
) -> float:
    if n1 < 0:
        raise ValidationError(f"n1 must be non-negative, got {n1}")
    tail = _truncated_tail(prior, thresholds.t_risk)
    y_star, y_crit = _critical_levels(
        n1, prior, thresholds.t_change, thresholds.credible_level, mode
    )
    if y_crit == 0:
        return 1.0
    if y_crit > n1:
        return 0.0

    def integrand(t: float) -> float:
        success = _success_given_levels(n1, math.exp(-t), y_star, y_crit, mode)
        return success * tail.weight(t)

    value, _ = quad(
        integrand,
        0.0,
        tail.t_upper,
        points=tail.points or None,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
    )
    return min(1.0, max(0.0, float(value)))


@lru_cache(maxsize=1024)
def _solve(
    prior: BetaParams,
    thresholds: Thresholds,
    target: float,
    mode: SizingMode,
    cap: int,
    scan_depth: int,
) -> SizingResult:
    evaluated: dict[int, float] = {}

    def success(n: int) -> float:
        if n not in evaluated:
            evaluated[n] = _weighted_success(n, prior, thresholds, mode)
        return evaluated[n]

    lo, hi = 0, 1
    while success(hi) < target:
        if hi >= cap:
            raise NoSolutionError(
                f"no sample size up to {cap} reaches weighted success {target:g} "
                f"(best {success(hi):.6g})"
            )
        lo, hi = hi, min(2 * hi, cap)
    logger.debug("Bracketed n_min in (%s, %s]", lo, hi)

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if success(mid) >= target:
            hi = mid
        else:
            lo = mid
    n_min = hi

    if mode is SizingMode.EXACT:
        for n in range(hi - 1, max(0, hi - 1 - scan_depth), -1):
            if success(n) >= target:
                n_min = n
        if n_min != hi:
            logger.debug("Sawtooth scan lowered n_min from %s to %s", hi, n_min)

    return SizingResult(
        n_min=n_min,
        y_crit=critical_contamination_count(
            n_min, prior, thresholds.t_change, thresholds.credible_level
        ),
        achieved_success=success(n_min),
        mode=mode,
        t_change=thresholds.t_change,
        target=target,
    )


def min_sample_size(
    prior_window: EvidenceWindow,
    thresholds: Thresholds,
    target: float = DEFAULT_TARGET,
    mode: SizingMode | str = SizingMode.NORMAL,
    cap: int = SEARCH_CAP,
    scan_depth: int = SAWTOOTH_SCAN_DEPTH,
) -> SizingResult:
    """Return the smallest ``n`` with weighted success at least ``target``.

    Raises :class:`NotLowRiskError` for a prior failing the low-risk
    requirement and :class:`NoSolutionError` when ``cap`` samples do not
    suffice.
    """
    if not 0.0 < target < 1.0:
        raise ValidationError(f"target must lie in (0, 1), got {target}")
    if cap < 1:
        raise ValidationError(f"cap must be positive, got {cap}")
    mode = SizingMode.parse(mode)
    prior = window_prior(prior_window)
    require_low_risk(prior, thresholds.t_risk, thresholds.credible_level)
    result = _solve(prior, thresholds, float(target), mode, int(cap), int(scan_depth))
    logger.info(
        "Recommended n_min=%s (y_crit=%s, success=%.6g, mode=%s)",
        result.n_min,
        result.y_crit,
        result.achieved_success,
        result.mode.value,
    )
    return result


def recommend(
    prior_window: EvidenceWindow,
    t_risk: float,
    change_level: float = 0.95,
    credible_level: float = 0.95,
    target: float = DEFAULT_TARGET,
    mode: SizingMode | str = SizingMode.NORMAL,
    cap: int = SEARCH_CAP,
    scan_depth: int = SAWTOOTH_SCAN_DEPTH,
) -> SizingResult:
    """Tune ``t_change`` on the window's prior, then size the next period."""
    thresholds = build_thresholds(
        window_prior(prior_window), t_risk, change_level, credible_level
    )
    return min_sample_size(prior_window, thresholds, target, mode, cap, scan_depth)


__all__ = [
    "critical_contamination_count",
    "critical_contamination_level",
    "min_sample_size",
    "recommend",
    "sample_truncated_prior",
    "success_prob_at_rate",
    "truncated_prior_log_density",
    "truncated_prior_log_normalizer",
    "weighted_success_prob",
]
