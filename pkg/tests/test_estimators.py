import numpy as np
import pytest
from numpy.testing import assert_allclose

from plrank.estimators import (
    ESTIMATOR_NAMES,
    EstimatorKind,
    EstimatorWorkspace,
    GradientWeights,
    estimate,
    estimate_basic_pg,
    estimate_pl_rank_2,
    per_sample_lambdas,
)
from plrank.kernels.numpy_backend import DenominatorDriftError
from plrank.metrics import RankingSample, RankWeights
from plrank.oracle import exact_gradient
from plrank.sampling import rng_stream, sample_ranking_matrix

import oracles

SAMPLE_A = np.array([[0]])  # the relevant item placed first
SAMPLE_B = np.array([[1]])  # the irrelevant item placed first


def test_estimator_names():
    assert ESTIMATOR_NAMES == ("basic-pg", "placement-pg", "pl-rank-1", "pl-rank-2")
    assert EstimatorKind("pl-rank-2") is EstimatorKind.PL_RANK_2
    with pytest.raises(ValueError):
        EstimatorKind("pl-rank-3")


@pytest.mark.parametrize(
    "kind, lam_a, lam_b",
    [
        ("basic-pg", [0.5, -0.5], [0.0, 0.0]),
        ("placement-pg", [0.5, -0.5], [0.0, 0.0]),
        ("pl-rank-1", [0.5, -0.5], [0.0, 0.0]),
        ("pl-rank-2", [0.0, -0.5], [0.5, 0.0]),
    ],
)
def test_two_item_single_sample_weights(
    kind, lam_a, lam_b, two_item_scores, two_item_relevances, unit_weights
):
    """Hand-computed lambda values for both single-sample rankings at K=1."""
    got_a = estimate(kind, two_item_scores, two_item_relevances, unit_weights, SAMPLE_A)
    got_b = estimate(kind, two_item_scores, two_item_relevances, unit_weights, SAMPLE_B)
    assert_allclose(got_a.lam, lam_a, atol=1e-15)
    assert_allclose(got_b.lam, lam_b, atol=1e-15)
    assert got_a.n_samples == 1
    # The two equiprobable rankings average to the exact gradient already.
    both = estimate(kind, two_item_scores, two_item_relevances, unit_weights,
                    np.array([[0], [1]]))
    assert_allclose(both.lam, [0.25, -0.25], atol=1e-15)


def test_two_item_expectation_matches_exact_gradient(
    two_item_scores, two_item_relevances, unit_weights
):
    n = 50_000
    rankings = sample_ranking_matrix(two_item_scores, 1, n, rng_stream(0, "worked"))
    exact = exact_gradient(two_item_scores, two_item_relevances, unit_weights)
    assert_allclose(exact, [0.25, -0.25], atol=1e-15)
    for kind in ESTIMATOR_NAMES:
        per = per_sample_lambdas(kind, two_item_scores, two_item_relevances, unit_weights, rankings)
        se = per.std(axis=0, ddof=1) / np.sqrt(n)
        err = np.abs(per.mean(axis=0) - exact)
        assert np.all(err <= 4 * se + 1e-12), f"{kind}: {err} vs {se}"


def _random_case(seed, n_items=None):
    rng = rng_stream(seed, "est-case")
    n = int(rng.integers(3, 8)) if n_items is None else n_items
    m = rng.normal(size=n)
    rho = rng.integers(0, 5, size=n).astype(float)
    cutoff = int(rng.integers(1, min(4, n) + 1))
    w = RankWeights.dcg(cutoff)
    rankings = sample_ranking_matrix(m, cutoff, int(rng.integers(5, 30)), rng)
    return m, rho, w, rankings


@pytest.mark.parametrize("kind", ESTIMATOR_NAMES)
@pytest.mark.parametrize("seed", range(8))
def test_kernels_match_straight_line_references(kind, seed):
    """Package kernels against the independent per-sample reference code."""
    m, rho, w, rankings = _random_case(seed)
    theta = w.theta(rankings.shape[1])
    expect = oracles.mean_lambdas(kind, m, rho, theta, rankings)
    got = estimate(kind, m, rho, w, rankings)
    assert_allclose(got.lam, expect, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("kind", ESTIMATOR_NAMES)
def test_per_sample_rows_match_references_and_mean(kind):
    m, rho, w, rankings = _random_case(99)
    theta = w.theta(rankings.shape[1])
    per = per_sample_lambdas(kind, m, rho, w, rankings)
    assert per.shape == (rankings.shape[0], m.size)
    for row, ranking in zip(per, rankings):
        expect = oracles.SINGLE_SAMPLE[kind](m, rho, theta, list(ranking))
        assert_allclose(row, expect, rtol=1e-10, atol=1e-12)
    got = estimate(kind, m, rho, w, rankings)
    assert_allclose(per.mean(axis=0), got.lam, rtol=1e-12, atol=1e-14)


def test_placement_pg_and_pl_rank_1_are_identical_per_sample():
    for seed in range(5):
        m, rho, w, rankings = _random_case(seed + 300)
        a = per_sample_lambdas("placement-pg", m, rho, w, rankings)
        b = per_sample_lambdas("pl-rank-1", m, rho, w, rankings)
        assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_basic_and_placement_differ_beyond_rank_one():
    m, rho, w, rankings = _random_case(17, n_items=6)
    if rankings.shape[1] < 2:
        w = RankWeights.dcg(3)
        rankings = sample_ranking_matrix(m, 3, 20, rng_stream(17, "extra"))
    a = per_sample_lambdas("basic-pg", m, rho, w, rankings)
    b = per_sample_lambdas("placement-pg", m, rho, w, rankings)
    assert np.max(np.abs(a - b)) > 1e-6


def test_variance_ordering_suffix_beats_full_reward():
    """Suffix-reward weighting strictly reduces per-item variance here."""
    rng = rng_stream(4, "variance")
    m = rng.normal(size=6)
    rho = np.array([0.0, 1.0, 3.0, 7.0, 15.0, 1.0])
    w = RankWeights.dcg(3)
    rankings = sample_ranking_matrix(m, 3, 4000, rng)
    var_basic = per_sample_lambdas("basic-pg", m, rho, w, rankings).var(axis=0).sum()
    var_place = per_sample_lambdas("placement-pg", m, rho, w, rankings).var(axis=0).sum()
    var_pl2 = per_sample_lambdas("pl-rank-2", m, rho, w, rankings).var(axis=0).sum()
    assert var_place < var_basic
    assert var_pl2 < var_basic


def test_estimate_accepts_ranking_sample_lists(two_item_scores, two_item_relevances, unit_weights):
    samples = [RankingSample(ranked_items=np.array([0]), n_items=2)]
    a = estimate_basic_pg(two_item_scores, two_item_relevances, unit_weights, samples)
    b = estimate_basic_pg(two_item_scores, two_item_relevances, unit_weights, SAMPLE_A)
    assert_allclose(a.lam, b.lam)


def test_workspace_validation(two_item_scores, unit_weights):
    with pytest.raises(ValueError, match="relevance vector length"):
        EstimatorWorkspace.build(two_item_scores, np.ones(3), unit_weights, SAMPLE_A)
    with pytest.raises(ValueError, match="outside the score vector"):
        EstimatorWorkspace.build(two_item_scores, np.ones(2), unit_weights, np.array([[2]]))


def test_gradient_weights_reject_non_finite():
    with pytest.raises(FloatingPointError, match="non-finite"):
        GradientWeights(lam=np.array([1.0, np.nan]), n_samples=1)
    with pytest.raises(FloatingPointError, match="non-finite"):
        GradientWeights(lam=np.array([np.inf]), n_samples=1)


DRIFT_SCORES = np.array([0.0, -40.0, -40.0])
DRIFT_RANKINGS = np.array([[0, 1]])


def test_extreme_score_spread_trips_the_debug_validator():
    """Subtracting a dominant exp score cancels to zero; debug mode must say so."""
    rho = np.array([1.0, 1.0, 1.0])
    w = RankWeights.dcg(2)
    with pytest.raises(DenominatorDriftError, match="drift"):
        estimate("placement-pg", DRIFT_SCORES, rho, w, DRIFT_RANKINGS, debug=True)
    with pytest.raises(DenominatorDriftError, match="drift"):
        estimate("pl-rank-2", DRIFT_SCORES, rho, w, DRIFT_RANKINGS, debug=True)


def test_extreme_score_spread_fails_loudly_without_debug():
    rho = np.array([1.0, 1.0, 1.0])
    w = RankWeights.dcg(2)
    with np.errstate(divide="ignore", invalid="ignore"):
        with pytest.raises(FloatingPointError):
            estimate("placement-pg", DRIFT_SCORES, rho, w, DRIFT_RANKINGS, backend="numpy")


def test_debug_mode_matches_plain_path_on_benign_scores():
    m, rho, w, rankings = _random_case(21)
    for kind in ESTIMATOR_NAMES:
        plain = estimate(kind, m, rho, w, rankings, backend="numpy")
        checked = estimate(kind, m, rho, w, rankings, debug=True)
        assert_allclose(checked.lam, plain.lam, rtol=1e-15)


def test_estimators_are_linear_in_relevance():
    """Scaling relevances scales every lambda, the hook the fairness blend uses."""
    m, rho, w, rankings = _random_case(31)
    for kind in ESTIMATOR_NAMES:
        base = estimate(kind, m, rho, w, rankings).lam
        scaled = estimate(kind, m, 2.5 * rho, w, rankings).lam
        assert_allclose(scaled, 2.5 * base, rtol=1e-10, atol=1e-12)
