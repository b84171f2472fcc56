"""Beta belief and binomial detection machinery.

The regularized incomplete beta function is evaluated with the classic
continued fraction (modified Lentz) and the symmetry switch at
``x = (a + 1) / (a + b + 2)``; prefactors are assembled in log space so the
``beta >> alpha`` regime (beta around 1e4) stays accurate. Quantiles are
found by bracketed bisection. Binomial tails are either summed exactly in log
space or approximated by a Gaussian without continuity correction.

Updates: v0.1.0 - 2026-10-16 - Added CDF, quantile and binomial tail helpers.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import betaln, logsumexp, ndtr, ndtri, xlog1py, xlogy

from .config import BETACF_EPS, BETACF_MAX_ITER, QUANTILE_MAX_ITER, QUANTILE_TOL
from .errors import DomainError, ValidationError
from .models import BetaParams, EvidenceWindow, InspectionBatch, SizingMode

logger = logging.getLogger(__name__)

_FPMIN = 1e-300
_CDF_SLACK = 1e-12

JEFFREYS = BetaParams(alpha=0.5, beta=0.5)


def jeffreys_prior() -> BetaParams:
    """Return the uninformative Beta(0.5, 0.5) starting belief."""
    return JEFFREYS


def posterior_update(prior: BetaParams, batch: InspectionBatch) -> BetaParams:
    """Return the conjugate update of ``prior`` with one batch of counts."""
    if batch.n_contaminated > batch.n_inspected:
        raise ValidationError(
            f"n_contaminated ({batch.n_contaminated}) exceeds "
            f"n_inspected ({batch.n_inspected})"
        )
    return BetaParams(
        alpha=prior.alpha + batch.n_contaminated,
        beta=prior.beta + (batch.n_inspected - batch.n_contaminated),
    )


def window_prior(window: EvidenceWindow) -> BetaParams:
    """Return the Jeffreys prior updated with the window's aggregate counts."""
    return posterior_update(jeffreys_prior(), window.aggregate())


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_EPS:
            return h
    logger.warning(
        "Incomplete beta continued fraction did not converge (a=%s, b=%s, x=%s)",
        a,
        b,
        x,
    )
    return h


def beta_cdf(x: float, params: BetaParams) -> float:
    """Return the regularized incomplete beta ``I_x(alpha, beta)``."""
    if not isinstance(x, (int, float)) or not math.isfinite(x) or not 0.0 <= x <= 1.0:
        raise DomainError(f"beta_cdf argument must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    a, b = params.alpha, params.beta
    log_front = a * math.log(x) + b * math.log1p(-x) - float(betaln(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        value = math.exp(log_front) * _betacf(a, b, x) / a
    else:
        value = 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, value))


def beta_quantile(
    q: float, params: BetaParams, tol: float = QUANTILE_TOL
) -> float:
    """Invert :func:`beta_cdf` by bisection.

    The bracket keeps ``cdf(lo) < q <= cdf(hi)`` and the upper end is
    returned, so ``beta_cdf(beta_quantile(q)) >= q`` always holds. The search
    stops once the bracket is narrower than ``tol`` and the CDF at the upper
    end is within 1e-12 of ``q``, or when the bracket hits float resolution.
    """
    if not isinstance(q, (int, float)) or not math.isfinite(q) or not 0.0 < q < 1.0:
        raise DomainError(f"beta_quantile level must lie in (0, 1), got {q!r}")

    a, b = params.alpha, params.beta
    total = a + b
    mean = a / total
    sd = math.sqrt(a * b / (total * total * (total + 1.0)))
    guess = min(max(mean + float(ndtri(q)) * sd, 0.0), 1.0)

    lo, hi = 0.0, 1.0
    cdf_hi = 1.0
    if 0.0 < guess < 1.0:
        step = sd
        cdf_guess = beta_cdf(guess, params)
        if cdf_guess < q:
            lo = guess
            while True:
                candidate = min(1.0, lo + step)
                cdf_candidate = beta_cdf(candidate, params)
                if cdf_candidate >= q:
                    hi, cdf_hi = candidate, cdf_candidate
                    break
                lo = candidate
                step *= 2.0
        else:
            hi, cdf_hi = guess, cdf_guess
            while True:
                candidate = max(0.0, hi - step)
                cdf_candidate = beta_cdf(candidate, params)
                if cdf_candidate < q:
                    lo = candidate
                    break
                hi, cdf_hi = candidate, cdf_candidate
                step *= 2.0

    for _ in range(QUANTILE_MAX_ITER):
        if hi - lo <= tol and cdf_hi - q <= _CDF_SLACK:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        cdf_mid = beta_cdf(mid, params)
        if cdf_mid < q:
            lo = mid
        else:
            hi, cdf_hi = mid, cdf_mid
    else:
        logger.debug("beta_quantile hit the iteration limit at q=%s %s", q, params)
    return hi


def binomial_log_pmf(n: int, r: float, ks: ArrayLike) -> NDArray[np.float64]:
    """Return ``log P(Y = k)`` for ``Y ~ Binomial(n, r)`` and each ``k`` in ``ks``."""
    k = np.asarray(ks, dtype=np.float64)
    return np.asarray(
        -math.log1p(n) - betaln(n - k + 1.0, k + 1.0) + xlogy(k, r) + xlog1py(n - k, -r),
        dtype=np.float64,
    )


def _validate_tail_args(n: int, r: float, k: float) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise ValidationError(f"n must be a non-negative integer, got {n!r}")
    if not isinstance(r, (int, float)) or not math.isfinite(r) or not 0.0 <= r <= 1.0:
        raise DomainError(f"rate must lie in [0, 1], got {r!r}")
    if not math.isfinite(k) or k > n + 1:
        raise ValidationError(f"k must not exceed n + 1 = {n + 1}, got {k!r}")


def binomial_tail_upper(
    n: int,
    r: float,
    k: float,
    mode: SizingMode | str = SizingMode.EXACT,
) -> float:
    """Return ``P(Y >= k)`` for ``Y ~ Binomial(n, r)``.

    Exact mode sums the smaller side of the pmf in log space. Normal mode uses
    the Gaussian with mean ``n r`` and variance ``n r (1 - r)`` and accepts a
    real-valued ``k``. ``r`` of 0 or 1 is a point mass in both modes.
    """
    _validate_tail_args(n, r, k)
    mode = SizingMode.parse(mode)
    if k <= 0:
        return 1.0
    if mode is SizingMode.NORMAL:
        if n == 0 or r == 0.0 or r == 1.0:
            return 1.0 if n * r >= k else 0.0
        mean = n * r
        sd = math.sqrt(mean * (1.0 - r))
        return float(ndtr((mean - k) / sd))

    k_int = math.ceil(k)
    if k_int > n:
        return 0.0
    if r == 0.0:
        return 0.0
    if r == 1.0:
        return 1.0
    if k_int <= n * r:
        lower = binomial_log_pmf(n, r, np.arange(0, k_int))
        return float(max(0.0, -np.expm1(logsumexp(lower))))
    upper = binomial_log_pmf(n, r, np.arange(k_int, n + 1))
    return float(min(1.0, math.exp(float(logsumexp(upper)))))


__all__ = [
    "JEFFREYS",
    "beta_cdf",
    "beta_quantile",
    "binomial_log_pmf",
    "binomial_tail_upper",
    "jeffreys_prior",
    "posterior_update",
    "window_prior",
]
