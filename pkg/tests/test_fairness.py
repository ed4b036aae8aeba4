import numpy as np
import pytest
from numpy.testing import assert_allclose

from plrank.fairness import (
    ExposureVector,
    disparity_gradient,
    disparity_metric,
    estimate_exposure,
    exposure_from_rankings,
    fairness_pseudo_relevances,
)
from plrank.metrics import RankWeights
from plrank.oracle import central_difference_gradient, exact_exposure, exact_gradient
from plrank.sampling import rng_stream, sample_ranking_matrix


def test_exposure_vector_rejects_negatives():
    with pytest.raises(ValueError, match="negative"):
        ExposureVector(exposure=np.array([0.1, -0.2]), n_samples=3)


def test_exposure_from_rankings_hand_case():
    w = RankWeights.dcg(2)
    theta = w.theta(2)
    rankings = np.array([[0, 1], [0, 2], [1, 0], [0, 1]])
    expo = exposure_from_rankings(rankings, w, 3)
    assert expo.n_samples == 4
    expect = np.array([
        3 * theta[0] + theta[1],  # item 0: three firsts, one second
        theta[0] + 2 * theta[1],  # item 1: one first, two seconds
        theta[1],                 # item 2: one second
    ]) / 4
    assert_allclose(expo.exposure, expect)


def test_estimate_exposure_is_seeded_and_converges():
    m = np.array([0.8, 0.0, -0.5])
    w = RankWeights.dcg(2)
    a = estimate_exposure(m, w, 500, rng_stream(3, "x"))
    b = estimate_exposure(m, w, 500, rng_stream(3, "x"))
    assert_allclose(a.exposure, b.exposure)
    big = estimate_exposure(m, w, 200_000, rng_stream(4, "x"))
    assert_allclose(big.exposure, exact_exposure(m, w), atol=5e-3)


def test_estimate_exposure_reuses_given_samples():
    m = np.array([0.2, -0.2])
    w = RankWeights.dcg(1)
    rankings = sample_ranking_matrix(m, 1, 64, rng_stream(5, "x"))
    direct = exposure_from_rankings(rankings, w, 2)
    shared = estimate_exposure(m, w, 9999, rng_stream(6, "unused"), samples=rankings)
    assert shared.n_samples == 64
    assert_allclose(shared.exposure, direct.exposure)


def test_disparity_hand_example():
    rho = np.array([1.0, 1.0])
    expo = np.array([0.75, 0.25])
    assert_allclose(disparity_metric(expo, rho), 0.25)
    grad = disparity_gradient(expo, rho)
    assert_allclose(grad, [1.0, -1.0])
    fd = central_difference_gradient(lambda e: disparity_metric(e, rho), expo)
    assert_allclose(grad, fd, rtol=1e-8)


def test_disparity_zero_when_exposure_proportional():
    rho = np.array([0.0, 1.0, 3.0, 7.0])
    assert_allclose(disparity_metric(0.37 * rho, rho), 0.0, atol=1e-15)
    assert_allclose(disparity_gradient(0.37 * rho, rho), np.zeros(4), atol=1e-12)


def test_disparity_gradient_matches_finite_differences_at_random_points():
    rng = rng_stream(8, "fair-fd")
    for trial in range(10):
        n = int(rng.integers(2, 7))
        rho = rng.integers(0, 5, size=n).astype(float)
        expo = rng.uniform(0.05, 1.0, size=n)
        grad = disparity_gradient(expo, rho)
        fd = central_difference_gradient(lambda e: disparity_metric(e, rho), expo)
        assert_allclose(grad, fd, rtol=1e-6, atol=1e-9)


def test_descending_the_disparity_gradient_lowers_disparity():
    rho = np.array([1.0, 3.0, 0.0, 7.0])
    expo = np.array([0.9, 0.2, 0.4, 0.1])
    g = disparity_gradient(expo, rho)
    before = disparity_metric(expo, rho)
    after = disparity_metric(expo - 1e-3 * g, rho)
    assert after < before


def test_single_item_group_warns_and_scores_zero():
    with pytest.warns(RuntimeWarning, match="single-item"):
        assert disparity_metric(np.array([0.4]), np.array([1.0])) == 0.0
    with pytest.warns(RuntimeWarning, match="single-item"):
        assert_allclose(disparity_gradient(np.array([0.4]), np.array([1.0])), [0.0])


def test_disparity_shape_validation():
    with pytest.raises(ValueError, match="equal length"):
        disparity_metric(np.ones(3), np.ones(2))


def test_pseudo_relevance_blend():
    rho = np.array([1.0, 3.0])
    g = np.array([0.5, -0.5])
    assert_allclose(fairness_pseudo_relevances(g, rho, 1.0, 0.0), rho)
    assert_allclose(fairness_pseudo_relevances(g, rho, 0.0, 1.0), -g)
    assert_allclose(fairness_pseudo_relevances(g, rho, 2.0, 3.0), 2 * rho - 3 * g)
    with pytest.raises(ValueError, match="finite"):
        fairness_pseudo_relevances(g, rho, np.inf, 1.0)
    with pytest.raises(ValueError, match="equal length"):
        fairness_pseudo_relevances(np.ones(3), rho, 1.0, 1.0)


def test_score_gradient_of_disparity_via_pseudo_relevances():
    """Chain rule through exposure: feeding dF/dE as relevances to the exact
    score-gradient oracle must reproduce finite differences of the full map
    m -> disparity(exposure(m))."""
    rng = rng_stream(9, "fair-chain")
    w = RankWeights.dcg(2)
    for trial in range(4):
        n = 4
        m = rng.normal(size=n)
        rho = rng.integers(0, 5, size=n).astype(float)
        g = disparity_gradient(exact_exposure(m, w), rho)
        chained = exact_gradient(m, g, w)
        fd = central_difference_gradient(
            lambda x: disparity_metric(exact_exposure(x, w), rho), m
        )
        assert_allclose(chained, fd, rtol=1e-5, atol=1e-8)
