"""Brute-force enumeration oracles for small ranking instances.

Everything here enumerates all top-K permutations explicitly, so rewards,
exposures and gradients come out exact rather than estimated.  The table
size n!/(n-K)! is capped at one million entries; the module exists to
verify the samplers and estimators on small instances, never to train.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import RankWeights, ranking_rewards
from .sampling import PLScores

MAX_TABLE_SIZE = 1_000_000


def table_size(n_items: int, cutoff: int) -> int:
    return math.perm(n_items, min(cutoff, n_items))


@dataclass(frozen=True, eq=False)
class EnumerationTable:
    """Every top-K ranking with its exact probability and score gradient.

    score_grads[t] holds d log P(ranking t) / d m, the sum over placements
    of (indicator of the placed item minus the placement probabilities of
    the items still unplaced).
    """

    rankings: np.ndarray
    probs: np.ndarray
    score_grads: np.ndarray

    def __post_init__(self):
        if len(self.rankings) != len(self.probs) or len(self.probs) != len(self.score_grads):
            raise ValueError("table columns disagree on length")
        if len(self.rankings) > MAX_TABLE_SIZE:
            raise ValueError(f"enumeration table exceeds {MAX_TABLE_SIZE} rankings")


def enumerate_rankings(scores, cutoff: int) -> EnumerationTable:
    """Build the full top-K enumeration table for one query's scores.

    Recursive with prefix probability reuse: each node extends a partial
    ranking by one item, multiplying in that placement's probability, so no
    ranking's probability is ever recomputed from scratch.
    """
    pl = PLScores.of(scores)
    n = pl.n_items
    kk = min(cutoff, n)
    size = table_size(n, kk)
    if size > MAX_TABLE_SIZE:
        raise ValueError(
            f"{n} items at cutoff {kk} would enumerate {size} rankings, "
            f"beyond the {MAX_TABLE_SIZE} cap"
        )
    e = pl.exp_scores

    rankings = np.empty((size, kk), dtype=np.int64)
    probs = np.empty(size)
    score_grads = np.empty((size, n))
    prefix = np.empty(kk, dtype=np.int64)
    unplaced = np.ones(n, dtype=bool)
    cursor = 0

    def recurse(depth, prob, grad):
        nonlocal cursor
        if depth == kk:
            rankings[cursor] = prefix
            probs[cursor] = prob
            score_grads[cursor] = grad
            cursor += 1
            return
        pis = np.where(unplaced, e, 0.0)
        pis /= pis.sum()
        for d in range(n):
            if not unplaced[d]:
                continue
            step = grad - pis
            step[d] += 1.0
            prefix[depth] = d
            unplaced[d] = False
            recurse(depth + 1, prob * pis[d], step)
            unplaced[d] = True

    recurse(0, 1.0, np.zeros(n))
    return EnumerationTable(rankings=rankings, probs=probs, score_grads=score_grads)


def exact_reward(scores, relevances, weights: RankWeights) -> float:
    """Exact expected metric: sum over rankings of probability times reward."""
    table = enumerate_rankings(scores, weights.cutoff)
    rewards = ranking_rewards(table.rankings, relevances, weights)
    return float(table.probs @ rewards)


def exact_gradient(scores, relevances, weights: RankWeights) -> np.ndarray:
    """Exact gradient of the expected metric with respect to the log scores."""
    table = enumerate_rankings(scores, weights.cutoff)
    rewards = ranking_rewards(table.rankings, relevances, weights)
    return (table.probs * rewards) @ table.score_grads


def exact_exposure(scores, weights: RankWeights) -> np.ndarray:
    """Exact per-item exposure: expected rank weight received by each item."""
    pl = PLScores.of(scores)
    table = enumerate_rankings(pl, weights.cutoff)
    theta = weights.theta(table.rankings.shape[1])
    exposure = np.zeros(pl.n_items)
    np.add.at(exposure, table.rankings, table.probs[:, None] * theta[None, :])
    return exposure


def central_difference_gradient(f, x, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function at x.

    The default step balances truncation against cancellation error at
    double precision for functions with order-one curvature.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty(x.size)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (f(hi) - f(lo)) / (2.0 * step)
    return grad.reshape(x.shape)
