"""Gradient weight estimators for stochastic ranking policies.

The gradient of an expected ranking metric with respect to model parameters
factors as sum_d lambda_d * dm(d)/dw, so every estimator here reduces to
computing one scalar weight per item from a batch of sampled rankings:

- basic-pg: score-function estimator, every placement weighted by the full
  ranking reward.
- placement-pg: score-function estimator, each rank's placement weighted by
  the reward from that rank onward (the suffix reward).
- pl-rank-1: analytically equal to placement-pg per sample, reorganized
  around prefix sums so a sample costs O(n + k) instead of O(n * k).
- pl-rank-2: also credits items never placed in the top K with their
  expected direct reward, trading a higher O(n * k) cost per sample for
  lower variance.

All four have the same expectation (the exact metric gradient); they differ
in variance and cost.  Estimators consume pre-drawn samples so different
estimators can be compared on identical rankings.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kernels import get_backend, numpy_backend
from .metrics import RankWeights, as_ranking_matrix, suffix_rewards
from .sampling import PLScores


class EstimatorKind(str, Enum):
    BASIC_PG = "basic-pg"
    PLACEMENT_PG = "placement-pg"
    PL_RANK_1 = "pl-rank-1"
    PL_RANK_2 = "pl-rank-2"


ESTIMATOR_NAMES = tuple(kind.value for kind in EstimatorKind)


_KERNELS = {
    EstimatorKind.BASIC_PG: "basic_pg_lambdas",
    EstimatorKind.PLACEMENT_PG: "placement_pg_lambdas",
    EstimatorKind.PL_RANK_1: "pl_rank_1_lambdas",
    EstimatorKind.PL_RANK_2: "pl_rank_2_lambdas",
}


@dataclass(frozen=True, eq=False)
class GradientWeights:
    """Per-item gradient weights lambda and the sample count behind them."""

    lam: np.ndarray
    n_samples: int

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lam, dtype=np.float64)
        lam.setflags(write=False)
        if not np.all(np.isfinite(lam)):
            raise FloatingPointError("non-finite gradient weights")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True, eq=False)
class EstimatorWorkspace:
    """Prepared kernel inputs shared by all estimators for one query.

    Holds the stabilized exponentiated scores, the ranking matrix, the rank
    weights truncated to the ranking width, and the per-sample suffix
    rewards.  Building it once and running several estimators on it is what
    makes paired comparisons paired.
    """

    exp_scores: np.ndarray
    rankings: np.ndarray
    relevances: np.ndarray
    theta: np.ndarray
    omegas: np.ndarray

    @classmethod
    def build(cls, scores, relevances, weights: RankWeights, samples) -> "EstimatorWorkspace":
        pl = PLScores.of(scores)
        rho = np.ascontiguousarray(relevances, dtype=np.float64)
        if rho.shape != (pl.n_items,):
            raise ValueError("relevance vector length must match the score vector")
        rankings = as_ranking_matrix(samples)
        if rankings.max() >= pl.n_items:
            raise ValueError("sampled rankings reference items outside the score vector")
        theta = weights.theta(rankings.shape[1])
        omegas = suffix_rewards(rankings, rho, weights)
        return cls(
            exp_scores=pl.exp_scores,
            rankings=rankings,
            relevances=rho,
            theta=theta,
            omegas=np.ascontiguousarray(omegas),
        )

    def kernel_args(self):
        return (self.exp_scores, self.rankings, self.relevances, self.theta, self.omegas)

    def denominators(self, validate: bool = False) -> np.ndarray:
        return numpy_backend.denominators(self.exp_scores, self.rankings, validate)

    @property
    def n_samples(self) -> int:
        return self.rankings.shape[0]


def _estimate(kind, scores, relevances, weights, samples, backend, debug) -> GradientWeights:
    kind = EstimatorKind(kind)
    ws = EstimatorWorkspace.build(scores, relevances, weights, samples)
    if debug:
        # The debug path recomputes every running denominator from scratch
        # and fails loudly on drift, so it always runs the numpy kernels.
        lam = getattr(numpy_backend, _KERNELS[kind])(*ws.kernel_args(), validate=True)
    else:
        lam = getattr(get_backend(backend), _KERNELS[kind])(*ws.kernel_args())
    return GradientWeights(lam=lam, n_samples=ws.n_samples)


def estimate_basic_pg(scores, relevances, weights, samples, backend=None, debug=False):
    return _estimate(EstimatorKind.BASIC_PG, scores, relevances, weights, samples, backend, debug)


def estimate_placement_pg(scores, relevances, weights, samples, backend=None, debug=False):
    return _estimate(EstimatorKind.PLACEMENT_PG, scores, relevances, weights, samples, backend, debug)


def estimate_pl_rank_1(scores, relevances, weights, samples, backend=None, debug=False):
    return _estimate(EstimatorKind.PL_RANK_1, scores, relevances, weights, samples, backend, debug)


def estimate_pl_rank_2(scores, relevances, weights, samples, backend=None, debug=False):
    return _estimate(EstimatorKind.PL_RANK_2, scores, relevances, weights, samples, backend, debug)


def estimate(kind, scores, relevances, weights, samples, backend=None, debug=False):
    """Run the estimator named by kind; see the module docstring for the menu."""
    return _estimate(kind, scores, relevances, weights, samples, backend, debug)


def per_sample_lambdas(kind, scores, relevances, weights, samples) -> np.ndarray:
    """(N, n) per-sample lambda vectors, whose row mean equals the estimate.

    Diagnostic path (numpy only); used for standard errors and variance
    comparisons between estimators.
    """
    kind = EstimatorKind(kind)
    ws = EstimatorWorkspace.build(scores, relevances, weights, samples)
    return numpy_backend.per_sample_lambdas(kind.value, *ws.kernel_args())


__all__ = [
    "ESTIMATOR_NAMES",
    "EstimatorKind",
    "EstimatorWorkspace",
    "GradientWeights",
    "estimate",
    "estimate_basic_pg",
    "estimate_placement_pg",
    "estimate_pl_rank_1",
    "estimate_pl_rank_2",
    "per_sample_lambdas",
]
