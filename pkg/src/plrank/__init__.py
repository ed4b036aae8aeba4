"""Stochastic ranking-model optimization with sample-based gradient weights.

The toolkit trains Plackett-Luce ranking policies for relevance and
exposure-fairness objectives.  Gradients are estimated from sampled
rankings as per-item lambda weights, with four estimators of different
variance and cost, exact enumeration oracles for verification on small
instances, and a CLI for training and benchmarking.
"""

from .data import Dataset, QueryGroup, load_svmlight, parse_svmlight, synth_dataset
from .estimators import (
    ESTIMATOR_NAMES,
    EstimatorKind,
    GradientWeights,
    estimate,
    estimate_basic_pg,
    estimate_pl_rank_1,
    estimate_pl_rank_2,
    estimate_placement_pg,
)
from .fairness import (
    ExposureVector,
    disparity_gradient,
    disparity_metric,
    estimate_exposure,
    fairness_pseudo_relevances,
)
from .kernels import active_backend_name, get_backend, have_compiled
from .metrics import RankingSample, RankWeights, expected_metric, following_rewards, sample_reward
from .model import ModelParams, backward, init_params, score, sgd_step
from .oracle import exact_exposure, exact_gradient, exact_reward
from .sampling import PLScores, placement_prob, ranking_prob, rng_stream, sample_rankings
from .training import TrainConfig, TrainResult, dynamic_n, train

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ESTIMATOR_NAMES",
    "EstimatorKind",
    "ExposureVector",
    "GradientWeights",
    "ModelParams",
    "PLScores",
    "QueryGroup",
    "RankWeights",
    "RankingSample",
    "TrainConfig",
    "TrainResult",
    "active_backend_name",
    "backward",
    "disparity_gradient",
    "disparity_metric",
    "dynamic_n",
    "estimate",
    "estimate_basic_pg",
    "estimate_exposure",
    "estimate_pl_rank_1",
    "estimate_pl_rank_2",
    "estimate_placement_pg",
    "exact_exposure",
    "exact_gradient",
    "exact_reward",
    "expected_metric",
    "fairness_pseudo_relevances",
    "following_rewards",
    "get_backend",
    "have_compiled",
    "init_params",
    "load_svmlight",
    "parse_svmlight",
    "placement_prob",
    "ranking_prob",
    "rng_stream",
    "sample_rankings",
    "sample_reward",
    "score",
    "sgd_step",
    "synth_dataset",
    "train",
    "__version__",
]
