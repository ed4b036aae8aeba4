"""Exposure estimation and the disparity objective for fair ranking.

An item's exposure is the expected rank weight it collects under the
stochastic ranking policy.  The disparity metric below scores how far
exposure deviates from being proportional to relevance across item pairs;
zero means every pair is treated proportionally, and the measure stays
well defined when some items have zero relevance.

Optimizing fairness reuses the relevance machinery wholesale: the gradient
of the disparity metric with respect to exposure, fed to any estimator as a
pseudo-relevance vector, yields the disparity's gradient with respect to
the model scores.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .metrics import RankWeights, as_ranking_matrix
from .sampling import PLScores, sample_ranking_matrix


@dataclass(frozen=True, eq=False)
class ExposureVector:
    """Estimated per-item exposure and the sample count behind it."""

    exposure: np.ndarray
    n_samples: int

    def __post_init__(self):
        e = np.ascontiguousarray(self.exposure, dtype=np.float64)
        e.setflags(write=False)
        if e.min() < 0:
            raise ValueError("exposure cannot be negative")
        object.__setattr__(self, "exposure", e)


def exposure_from_rankings(rankings, weights: RankWeights, n_items: int) -> ExposureVector:
    """Average rank weight each item received over a batch of rankings."""
    mat = as_ranking_matrix(rankings)
    theta = weights.theta(mat.shape[1])
    exposure = np.zeros(n_items)
    np.add.at(exposure, mat, np.broadcast_to(theta, mat.shape))
    return ExposureVector(exposure=exposure / mat.shape[0], n_samples=mat.shape[0])


def estimate_exposure(scores, weights: RankWeights, n_samples: int, rng, samples=None) -> ExposureVector:
    """Monte Carlo exposure estimate from n_samples fresh rankings.

    Passing pre-drawn samples reuses them instead (pairing exposure with a
    gradient estimate drawn from the same rankings); fresh draws are the
    default so the two estimates stay independent.
    """
    pl = PLScores.of(scores)
    if samples is None:
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        samples = sample_ranking_matrix(pl, weights.cutoff, n_samples, rng)
    return exposure_from_rankings(samples, weights, pl.n_items)


def _pair_differences(exposure, relevances):
    e = np.asarray(exposure, dtype=np.float64)
    rho = np.asarray(relevances, dtype=np.float64)
    if e.shape != rho.shape or e.ndim != 1:
        raise ValueError("exposure and relevances must be 1-D vectors of equal length")
    return e, rho, np.outer(rho, e) - np.outer(e, rho)


def disparity_metric(exposure, relevances) -> float:
    """Mean squared cross-proportionality error over ordered item pairs.

    For each pair the residual is E_{d'} rho_d - E_d rho_{d'}, zero exactly
    when the two items' exposure is proportional to their relevance.  A
    single-item group has no pairs; it scores 0.0 with a warning.
    """
    e, rho, diffs = _pair_differences(exposure, relevances)
    n = e.size
    if n < 2:
        warnings.warn("disparity of a single-item group is vacuously 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(np.sum(diffs * diffs) / (n * (n - 1)))


def disparity_gradient(exposure, relevances) -> np.ndarray:
    """Gradient of disparity_metric with respect to the exposure vector.

    Each component is 4/(n(n-1)) * sum_x (E_d rho_x - E_x rho_d) rho_x,
    which matches central finite differences of disparity_metric; moving
    exposure against this direction lowers the disparity.  Items whose
    pair partners all have zero relevance get zero gradient.
    """
    e, rho, _ = _pair_differences(exposure, relevances)
    n = e.size
    if n < 2:
        warnings.warn("disparity of a single-item group is vacuously 0", RuntimeWarning, stacklevel=2)
        return np.zeros(n)
    return (4.0 / (n * (n - 1))) * (e * np.sum(rho * rho) - rho * np.sum(e * rho))


def fairness_pseudo_relevances(gradient, relevances, alpha: float, beta: float) -> np.ndarray:
    """Blend relevance and fairness into one pseudo-relevance vector.

    Feeding alpha * rho - beta * g to any gradient estimator in place of
    the relevances makes gradient ascent maximize alpha * reward - beta *
    disparity: the estimators are linear in the relevance vector, and the
    chain rule through per-item exposure is exactly a relevance swap.
    """
    g = np.asarray(gradient, dtype=np.float64)
    rho = np.asarray(relevances, dtype=np.float64)
    if g.shape != rho.shape:
        raise ValueError("gradient and relevance vectors must have equal length")
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise ValueError("blend coefficients must be finite")
    return alpha * rho - beta * g
