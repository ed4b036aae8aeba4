"""Rank weight vectors and ranking rewards.

A ranking metric is defined by a per-rank weight vector theta: the reward of
a ranking y is sum_k theta_k * rho_{y_k}, where rho is the per-item relevance
vector.  DCG, precision and average-relevant-position are all instances of
this family, so estimators and evaluators only ever see theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRIC_KINDS = ("dcg", "prec", "arp", "custom")


@dataclass(frozen=True, eq=False)
class RankWeights:
    """Per-rank metric weights theta_1..theta_K with a rank cutoff K.

    Ranks beyond the stored vector weigh zero.  ARP weights are negative
    (reward decreases when relevant items sit lower), and are truncated at
    the cutoff like every other metric here.
    """

    weights: np.ndarray
    cutoff: int
    kind: str = "custom"

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.cutoff < 1:
            raise ValueError("cutoff must be positive")
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"kind must be one of {METRIC_KINDS}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def dcg(cls, cutoff: int) -> "RankWeights":
        ks = np.arange(1, cutoff + 1, dtype=np.float64)
        return cls(weights=1.0 / np.log2(ks + 1.0), cutoff=cutoff, kind="dcg")

    @classmethod
    def precision(cls, cutoff: int) -> "RankWeights":
        return cls(weights=np.full(cutoff, 1.0 / cutoff), cutoff=cutoff, kind="prec")

    @classmethod
    def arp(cls, cutoff: int) -> "RankWeights":
        return cls(weights=-np.arange(1.0, cutoff + 1.0), cutoff=cutoff, kind="arp")

    @classmethod
    def of_kind(cls, kind: str, cutoff: int) -> "RankWeights":
        try:
            factory = {"dcg": cls.dcg, "prec": cls.precision, "arp": cls.arp}[kind]
        except KeyError:
            raise ValueError(f"unknown metric kind {kind!r}") from None
        return factory(cutoff)

    def theta(self, n_ranks: int) -> np.ndarray:
        """First n_ranks weights, zero-padded past the stored cutoff."""
        out = np.zeros(n_ranks)
        m = min(n_ranks, self.weights.size)
        out[:m] = self.weights[:m]
        return out


@dataclass(frozen=True, eq=False)
class RankingSample:
    """One sampled top-K ranking: item indices in rank order."""

    ranked_items: np.ndarray
    n_items: int
    rank_of: dict = field(init=False, repr=False)

    def __post_init__(self):
        y = np.ascontiguousarray(self.ranked_items, dtype=np.int64)
        y.setflags(write=False)
        if y.ndim != 1 or y.size == 0:
            raise ValueError("ranked_items must be a nonempty 1-D index vector")
        if y.min() < 0 or y.max() >= self.n_items:
            raise ValueError("ranked item index out of range")
        if np.unique(y).size != y.size:
            raise ValueError("ranked_items contains duplicates")
        object.__setattr__(self, "ranked_items", y)
        # 1-based ranks; unplaced items are simply absent from the map
        object.__setattr__(self, "rank_of", {int(d): k + 1 for k, d in enumerate(y)})

    def __len__(self):
        return self.ranked_items.size


def as_ranking_matrix(samples) -> np.ndarray:
    """Normalize a batch of rankings to an (N, k) int64 matrix.

    Accepts an integer matrix directly, a single RankingSample, or a
    sequence of equal-length RankingSamples.
    """
    if isinstance(samples, np.ndarray):
        mat = np.ascontiguousarray(samples, dtype=np.int64)
        if mat.ndim == 1:
            mat = mat[None, :]
        if mat.ndim != 2:
            raise ValueError("ranking matrix must be 2-D")
        return mat
    if isinstance(samples, RankingSample):
        samples = [samples]
    rows = [np.asarray(s.ranked_items, dtype=np.int64) for s in samples]
    if not rows:
        raise ValueError("no ranking samples given")
    return np.ascontiguousarray(np.stack(rows))


def sample_reward(sample: RankingSample, relevances, weights: RankWeights) -> float:
    """Reward sum_k theta_k * rho_{y_k} of one sampled ranking."""
    rho = np.asarray(relevances, dtype=np.float64)
    y = sample.ranked_items
    if y.max() >= rho.size:
        raise IndexError("ranked item index out of range for relevance vector")
    return float(weights.theta(y.size) @ rho[y])


def following_rewards(sample: RankingSample, relevances, weights: RankWeights) -> np.ndarray:
    """Suffix rewards omega_k = sum_{x>=k} theta_x * rho_{y_x} for one ranking.

    omega_1 equals sample_reward; the reward following the final rank is 0
    by convention (handled by consumers, not stored here).
    """
    rho = np.asarray(relevances, dtype=np.float64)
    y = sample.ranked_items
    if y.max() >= rho.size:
        raise IndexError("ranked item index out of range for relevance vector")
    per_rank = weights.theta(y.size) * rho[y]
    return np.cumsum(per_rank[::-1])[::-1]


def ranking_rewards(rankings: np.ndarray, relevances, weights: RankWeights) -> np.ndarray:
    """Vectorized sample_reward over an (N, k) ranking matrix."""
    rho = np.asarray(relevances, dtype=np.float64)
    return rho[rankings] @ weights.theta(rankings.shape[1])


def suffix_rewards(rankings: np.ndarray, relevances, weights: RankWeights) -> np.ndarray:
    """Vectorized following_rewards: (N, k) matrix of omega values."""
    rho = np.asarray(relevances, dtype=np.float64)
    per_rank = rho[rankings] * weights.theta(rankings.shape[1])
    return np.cumsum(per_rank[:, ::-1], axis=1)[:, ::-1]


def ideal_reward(relevances, weights: RankWeights) -> float:
    """Best achievable reward of any deterministic ranking.

    By the rearrangement inequality the optimum pairs relevances and rank
    weights in matching sorted order, where items left out of the top K
    effectively receive weight 0.  For DCG-style nonnegative decreasing
    weights this reduces to sorting by relevance; it also handles negative
    weights such as ARP, where placing low-relevance items first is optimal.
    """
    rho = np.sort(np.asarray(relevances, dtype=np.float64))[::-1]
    theta_full = np.zeros(rho.size)
    k = min(weights.cutoff, rho.size, weights.weights.size)
    theta_full[:k] = weights.weights[:k]
    return float(np.sort(theta_full)[::-1] @ rho)


def expected_metric(log_scores, relevances, weights: RankWeights, eval_samples: int, rng) -> float:
    """Monte Carlo estimate of the expected metric under the ranking policy.

    Averages sample_reward over eval_samples rankings drawn with the Gumbel
    sampler.  rng may be a numpy Generator or an integer seed.
    """
    from .sampling import sample_ranking_matrix

    if eval_samples < 1:
        raise ValueError("eval_samples must be >= 1")
    rankings = sample_ranking_matrix(log_scores, weights.cutoff, eval_samples, rng)
    return float(ranking_rewards(rankings, relevances, weights).mean())
