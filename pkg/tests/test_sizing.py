"""Tests for critical counts, the truncated prior and the sample-size search.

The reference pathway (10000 inspections, 6 detections, ``t_risk`` 0.005)
needs roughly 756 samples in normal mode and roughly 586 in exact mode.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.special import betaln
from scipy.stats import beta as beta_dist

from lowrisk_sampling import sizing
from lowrisk_sampling.belief import beta_cdf, window_prior
from lowrisk_sampling.errors import (
    DomainError,
    NoSolutionError,
    NotLowRiskError,
    ValidationError,
)
from lowrisk_sampling.models import (
    BetaParams,
    EvidenceWindow,
    HypotheticalRate,
    SizingMode,
    Thresholds,
)
from lowrisk_sampling.sizing import (
    critical_contamination_count,
    critical_contamination_level,
    min_sample_size,
    recommend,
    sample_truncated_prior,
    success_prob_at_rate,
    truncated_prior_log_density,
    truncated_prior_log_normalizer,
    weighted_success_prob,
)
from lowrisk_sampling.status import assert_low_risk, build_thresholds


def _posterior_green(
    prior: BetaParams, n1: int, y: float, thresholds: Thresholds
) -> bool:
    posterior = BetaParams(prior.alpha + y, prior.beta + n1 - y)
    return beta_cdf(thresholds.t_change, posterior) >= thresholds.credible_level


def _n_min(
    counts: list[tuple[int, int]],
    t_risk: float = 0.005,
    change_level: float = 0.95,
    mode: str = "normal",
) -> int:
    window = EvidenceWindow.from_counts(counts, window_len=None)
    return recommend(window, t_risk, change_level, 0.95, 0.95, mode).n_min


def test_critical_count_is_smallest_escalating_count(
    reference_prior: BetaParams, reference_thresholds: Thresholds
) -> None:
    """One fewer detection keeps Green; the critical count does not."""
    y_crit = critical_contamination_count(
        756, reference_prior, reference_thresholds.t_change
    )
    assert 1 <= y_crit <= 756
    assert _posterior_green(reference_prior, 756, y_crit - 1, reference_thresholds)
    assert not _posterior_green(reference_prior, 756, y_crit, reference_thresholds)


def test_critical_count_when_nothing_escalates(reference_prior: BetaParams) -> None:
    """Tiny samples cannot leave Green, so n1 + 1 is returned."""
    assert critical_contamination_count(1, reference_prior, 0.002) == 2


def test_critical_level_lies_below_integer_count(
    reference_prior: BetaParams, reference_thresholds: Thresholds
) -> None:
    """The continuous level sits in the unit interval below the integer count."""
    t_change = reference_thresholds.t_change
    y_crit = critical_contamination_count(756, reference_prior, t_change)
    y_star = critical_contamination_level(756, reference_prior, t_change)
    assert y_crit - 1 < y_star <= y_crit
    posterior = BetaParams(
        reference_prior.alpha + y_star, reference_prior.beta + 756 - y_star
    )
    assert beta_cdf(t_change, posterior) == pytest.approx(0.95, abs=1e-8)


def test_success_at_rate_increases_with_rate(
    reference_prior: BetaParams, reference_thresholds: Thresholds
) -> None:
    """Larger hypothetical rates are detected more often."""
    values = [
        success_prob_at_rate(
            756,
            HypotheticalRate(r_prime, 0.005),
            reference_prior,
            reference_thresholds.t_change,
        )
        for r_prime in (0.0055, 0.0066, 0.01, 0.02, 0.05)
    ]
    assert values == sorted(values)
    assert values[-1] > 0.999


@pytest.mark.parametrize("r_prime", [0.0066, 0.01, 0.02, 0.05])
def test_success_at_rate_modes_agree(
    r_prime: float, reference_prior: BetaParams, reference_thresholds: Thresholds
) -> None:
    """Gaussian and exact success probabilities agree within a few percent."""
    rate = HypotheticalRate(r_prime, 0.005)
    t_change = reference_thresholds.t_change
    normal = success_prob_at_rate(756, rate, reference_prior, t_change, "normal")
    exact = success_prob_at_rate(756, rate, reference_prior, t_change, "exact")
    assert abs(normal - exact) < 0.05


def test_hypothetical_rate_must_exceed_t_risk() -> None:
    """Rates at or below t_risk are not hypothetical failures."""
    with pytest.raises(ValidationError):
        HypotheticalRate(0.005, 0.005)


def test_truncated_normalizer_matches_scipy(reference_prior: BetaParams) -> None:
    """log M equals the Beta log survival plus the log Beta function."""
    a, b = reference_prior.alpha, reference_prior.beta
    expected = float(beta_dist.logsf(0.005, a, b)) + float(betaln(a, b))
    assert truncated_prior_log_normalizer(reference_prior, 0.005) == pytest.approx(
        expected, rel=1e-8
    )


@pytest.mark.parametrize("r", [0.0051, 0.006, 0.008])
def test_truncated_density_matches_conditioned_beta(
    r: float, reference_prior: BetaParams
) -> None:
    """The truncated log density is the Beta log density minus log P(r > t_risk)."""
    a, b = reference_prior.alpha, reference_prior.beta
    expected = float(beta_dist.logpdf(r, a, b) - beta_dist.logsf(0.005, a, b))
    assert truncated_prior_log_density(r, reference_prior, 0.005) == pytest.approx(
        expected, rel=1e-7
    )


def test_truncated_density_rejects_rates_below_threshold(
    reference_prior: BetaParams,
) -> None:
    """Rates outside (t_risk, 1] have no truncated density."""
    with pytest.raises(DomainError):
        truncated_prior_log_density(0.004, reference_prior, 0.005)


@pytest.mark.parametrize(
    ("prior", "t_risk"),
    [(BetaParams(6.5, 9994.5), 0.005), (BetaParams(2.0, 3.0), 0.1)],
)
def test_truncated_sampler_matches_conditional_mean(
    prior: BetaParams, t_risk: float
) -> None:
    """Draws exceed t_risk and reproduce the conditional mean."""
    a, b = prior.alpha, prior.beta
    draws = sample_truncated_prior(prior, t_risk, 20000, np.random.default_rng(7))
    assert draws.shape == (20000,)
    assert np.all(draws > t_risk)
    expected = a / (a + b) * beta_dist.sf(t_risk, a + 1, b) / beta_dist.sf(t_risk, a, b)
    assert float(draws.mean()) == pytest.approx(expected, rel=0.01)


def test_weighted_success_increases_with_n(
    reference_prior: BetaParams, reference_thresholds: Thresholds
) -> None:
    """More samples detect the truncated tail more often in normal mode."""
    values = [
        weighted_success_prob(n, reference_prior, reference_thresholds)
        for n in (100, 300, 600, 900)
    ]
    assert values == sorted(values)
    assert 0.0 <= values[0] < values[-1] <= 1.0


def test_weighted_success_requires_low_risk_prior(
    reference_thresholds: Thresholds,
) -> None:
    """A prior failing the requirement is refused."""
    with pytest.raises(NotLowRiskError):
        weighted_success_prob(500, BetaParams(40.5, 4000.5), reference_thresholds)


def test_reference_recommendation_normal_mode(
    reference_window: EvidenceWindow, reference_thresholds: Thresholds
) -> None:
    """The reference pathway needs about 756 samples in normal mode."""
    result = min_sample_size(reference_window, reference_thresholds)
    assert result.mode is SizingMode.NORMAL
    assert abs(result.n_min - 756) <= 0.03 * 756
    assert result.achieved_success >= 0.95
    prior = window_prior(reference_window)
    below = weighted_success_prob(result.n_min - 1, prior, reference_thresholds)
    assert below < 0.95
    assert result.y_crit == critical_contamination_count(
        result.n_min, prior, reference_thresholds.t_change
    )


def test_reference_recommendation_exact_mode(
    reference_window: EvidenceWindow, reference_thresholds: Thresholds
) -> None:
    """Exact mode needs about 586 samples and is no larger than normal mode."""
    exact = min_sample_size(reference_window, reference_thresholds, mode="exact")
    normal = min_sample_size(reference_window, reference_thresholds, mode="normal")
    assert abs(exact.n_min - 586) <= 25
    assert exact.n_min <= normal.n_min
    assert exact.achieved_success >= 0.95


def test_reference_recommendation_runs_within_budget(
    reference_window: EvidenceWindow,
) -> None:
    """A cold solve of the reference pathway finishes in under five seconds."""
    sizing._solve.cache_clear()
    sizing._truncated_tail.cache_clear()
    started = time.perf_counter()
    result = recommend(reference_window, 0.005)
    assert time.perf_counter() - started < 5.0
    assert abs(result.n_min - 756) <= 0.03 * 756


CONSERVATIVE_GRID = [
    (n0, y0, t_risk)
    for n0 in (2000, 5000, 10000)
    for y0 in (0, 1, 3, 6)
    for t_risk in (0.005, 0.01)
]


@pytest.mark.parametrize(("n0", "y0", "t_risk"), CONSERVATIVE_GRID)
def test_normal_mode_is_conservative(n0: int, y0: int, t_risk: float) -> None:
    """The Gaussian approximation never recommends fewer samples than exact."""
    counts = [(n0, y0)]
    prior = window_prior(EvidenceWindow.from_counts(counts, window_len=None))
    if not assert_low_risk(prior, t_risk):
        for mode in ("normal", "exact"):
            with pytest.raises(NotLowRiskError):
                _n_min(counts, t_risk, mode=mode)
        return
    assert _n_min(counts, t_risk, mode="exact") <= _n_min(counts, t_risk)


def test_clean_pathway_recommendation_meets_exact_target() -> None:
    """With no past detections the normal-mode size also meets the exact target."""
    window = EvidenceWindow.from_counts([(10000, 0)], window_len=None)
    result = recommend(window, 0.005)
    prior = window_prior(window)
    thresholds = build_thresholds(prior, 0.005)
    assert weighted_success_prob(result.n_min, prior, thresholds, "exact") >= 0.95


@pytest.mark.parametrize("r_prime", [0.0051, 0.0066, 0.01, 0.02])
def test_normal_success_never_exceeds_exact(r_prime: float) -> None:
    """Per-rate normal-mode success is capped by the exact tail."""
    prior = BetaParams(0.5, 10000.5)
    rate = HypotheticalRate(r_prime, 0.005)
    t_change = build_thresholds(prior, 0.005).t_change
    for n1 in (300, 587, 900):
        normal = success_prob_at_rate(n1, rate, prior, t_change, "normal")
        exact = success_prob_at_rate(n1, rate, prior, t_change, "exact")
        assert normal <= exact


def test_n_min_decreases_as_t_risk_grows() -> None:
    """Looser risk thresholds need fewer samples."""
    sizes = [_n_min([(10000, 6)], t_risk) for t_risk in (0.004, 0.005, 0.0075, 0.01)]
    assert sizes == sorted(sizes, reverse=True)
    assert sizes[0] > sizes[-1]


def test_n_min_grows_with_prior_detections() -> None:
    """More detections in the prior batch need more samples."""
    sizes = [_n_min([(10000, y0)]) for y0 in range(7)]
    assert sizes == sorted(sizes)


@pytest.mark.parametrize("n0", [5000, 10000])
def test_exact_mode_drift_in_prior_detections_is_small(n0: int) -> None:
    """Exact sizes may slip by a sample or two while y_crit stays put.

    The truncated tail above t_risk thickens as y0 grows, so the same critical
    count is reached a little sooner; any step down stays within 1%.
    """
    sizes = [_n_min([(n0, y0)], mode="exact") for y0 in range(7)]
    for before, after in zip(sizes, sizes[1:]):
        assert after >= before - math.ceil(0.01 * before)


def test_n_min_grows_with_change_level() -> None:
    """A higher tuning level for t_change needs more samples."""
    sizes = [_n_min([(10000, 6)], change_level=q) for q in (0.94, 0.95, 0.96)]
    assert sizes == sorted(sizes)


def test_clean_period_lowers_next_recommendation() -> None:
    """A clean period of 756 samples lowers the next recommendation."""
    assert _n_min([(10000, 6), (756, 0)]) < 756


def test_min_sample_size_reports_no_solution_under_cap(
    reference_window: EvidenceWindow, reference_thresholds: Thresholds
) -> None:
    """A cap far below the answer raises NoSolutionError."""
    with pytest.raises(NoSolutionError) as excinfo:
        min_sample_size(reference_window, reference_thresholds, cap=50)
    assert excinfo.value.exit_code == 4


def test_min_sample_size_rejects_bad_target(
    reference_window: EvidenceWindow, reference_thresholds: Thresholds
) -> None:
    """Targets outside (0, 1) are invalid."""
    with pytest.raises(ValidationError):
        min_sample_size(reference_window, reference_thresholds, target=1.0)


def test_recommend_rejects_high_risk_window() -> None:
    """Sizing refuses a window that is not low risk."""
    window = EvidenceWindow.from_counts([(1000, 20)])
    with pytest.raises(NotLowRiskError):
        recommend(window, 0.005)


def test_recommend_is_deterministic(reference_window: EvidenceWindow) -> None:
    """Repeated calls return identical results."""
    first = recommend(reference_window, 0.005)
    second = recommend(reference_window, 0.005)
    assert first == second
    assert math.isfinite(first.t_change)
