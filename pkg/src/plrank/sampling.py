"""Plackett-Luce ranking policies: exact probabilities and Gumbel sampling.

A policy over rankings is induced by per-item log scores m(d): rank 1 is
drawn softmax(m), and each later rank renormalizes the softmax over the
items not yet placed.  Sampling a top-K ranking does not require any of
those probabilities explicitly: adding independent Gumbel noise to the log
scores and taking the K largest perturbed scores draws from exactly this
distribution, one sort per sample.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .metrics import RankingSample, as_ranking_matrix

# Uniform draws are clamped away from {0, 1} so -log(-log u) stays finite.
UNIFORM_EPS = 1e-12


def rng_stream(seed: int, *keys) -> np.random.Generator:
    """A counter-based generator for the stream identified by (seed, keys).

    Streams with distinct key tuples are statistically independent, and a
    given tuple always yields the same stream, which is what makes per
    (epoch, query, purpose) sampling reproducible regardless of execution
    order.  String keys are hashed with crc32 so they are stable across
    processes.
    """
    ints = [seed]
    for k in keys:
        ints.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(ints)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng_stream(int(rng))


@dataclass(frozen=True, eq=False)
class PLScores:
    """Log scores of one query's items with a cached stable exponentiation.

    exp_scores holds exp(m - max m), which lies in (0, 1], so sums of
    exponentiated scores never overflow no matter how large the raw model
    outputs get.
    """

    log_scores: np.ndarray
    stabilizer: float = field(init=False)
    exp_scores: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.ascontiguousarray(self.log_scores, dtype=np.float64)
        m.setflags(write=False)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("log_scores must be a nonempty 1-D vector")
        if not np.all(np.isfinite(m)):
            raise ValueError("log_scores must be finite")
        e = np.exp(m - m.max())
        e.setflags(write=False)
        object.__setattr__(self, "log_scores", m)
        object.__setattr__(self, "stabilizer", float(m.max()))
        object.__setattr__(self, "exp_scores", e)

    @classmethod
    def of(cls, scores) -> "PLScores":
        return scores if isinstance(scores, PLScores) else cls(np.asarray(scores))

    @property
    def n_items(self) -> int:
        return self.log_scores.size


def gumbel_perturb(log_scores: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Perturbed scores m + g with g = -log(-log u), u clamped inside (0,1)."""
    u = np.clip(uniforms, UNIFORM_EPS, 1.0 - UNIFORM_EPS)
    return log_scores + -np.log(-np.log(u))


def top_k_rows(values: np.ndarray, k: int) -> np.ndarray:
    """Row-wise indices of the k largest values, ordered descending.

    Ties are broken toward the smaller item index, both inside the
    selection and at the selection boundary.  Uses partial selection, so a
    row costs O(n) on average and O(n log n) at worst.
    """
    n = values.shape[1]
    k = min(k, n)
    if k == n:
        return np.argsort(-values, axis=1, kind="stable")

    sel = np.argpartition(-values, k - 1, axis=1)[:, :k]
    # Order the selected block by value descending; pre-sorting the indices
    # makes the stable sort break value ties by item index.
    sel = np.sort(sel, axis=1)
    vals = np.take_along_axis(values, sel, axis=1)
    order = np.argsort(-vals, axis=1, kind="stable")
    sel = np.take_along_axis(sel, order, axis=1)

    # argpartition picks arbitrarily among values tied with the k-th
    # largest, which can exclude a tied item of smaller index.  Rows where
    # the boundary value also occurs outside the selection get redone with
    # a full stable sort.
    boundary = np.take_along_axis(values, sel[:, -1:], axis=1)
    included = np.sum(np.take_along_axis(values, sel, axis=1) == boundary, axis=1)
    total = np.sum(values == boundary, axis=1)
    bad = total > included
    if np.any(bad):
        sel[bad] = np.argsort(-values[bad], axis=1, kind="stable")[:, :k]
    return sel


def sample_ranking_matrix(scores, cutoff: int, n_samples: int, rng) -> np.ndarray:
    """Draw n_samples top-K rankings, returned as an (N, min(K, n)) matrix."""
    pl = PLScores.of(scores)
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    gen = as_generator(rng)
    uniforms = gen.random((n_samples, pl.n_items))
    perturbed = gumbel_perturb(pl.log_scores, uniforms)
    return np.ascontiguousarray(top_k_rows(perturbed, cutoff).astype(np.int64))


def sample_rankings(scores, cutoff: int, n_samples: int, rng) -> list[RankingSample]:
    """Like sample_ranking_matrix, wrapped as RankingSample objects."""
    pl = PLScores.of(scores)
    mat = sample_ranking_matrix(pl, cutoff, n_samples, rng)
    return [RankingSample(ranked_items=row, n_items=pl.n_items) for row in mat]


def _check_prefix(pl: PLScores, prefix) -> np.ndarray:
    prefix = np.asarray(prefix, dtype=np.int64)
    if prefix.size:
        if prefix.min() < 0 or prefix.max() >= pl.n_items:
            raise IndexError("prefix item out of range")
        if np.unique(prefix).size != prefix.size:
            raise ValueError("prefix contains duplicates")
    return prefix


def placement_probs(scores, prefix=()) -> np.ndarray:
    """Probability of each item taking the next rank after a placed prefix.

    Placed items have probability 0; the rest renormalize the softmax of
    the log scores.  The result sums to 1 whenever any item remains.
    """
    pl = PLScores.of(scores)
    prefix = _check_prefix(pl, prefix)
    e = pl.exp_scores.copy()
    e[prefix] = 0.0
    total = e.sum()
    if total <= 0.0:
        raise ValueError("no unplaced items remain")
    return e / total


def placement_prob(scores, prefix, d: int) -> float:
    """Probability that item d is placed next, given an already-placed prefix."""
    pl = PLScores.of(scores)
    if not 0 <= d < pl.n_items:
        raise IndexError(f"item {d} out of range")
    return float(placement_probs(pl, prefix)[d])


def ranking_prob(scores, sample) -> float:
    """Exact probability of one sampled ranking: the product of its placements."""
    pl = PLScores.of(scores)
    y = sample.ranked_items if isinstance(sample, RankingSample) else np.asarray(sample, dtype=np.int64)
    _check_prefix(pl, y)
    prob = 1.0
    remaining = pl.exp_scores.sum()
    for d in y:
        prob *= pl.exp_scores[d] / remaining
        remaining -= pl.exp_scores[d]
    return float(prob)


__all__ = [
    "PLScores",
    "RankingSample",
    "as_ranking_matrix",
    "gumbel_perturb",
    "placement_prob",
    "placement_probs",
    "ranking_prob",
    "rng_stream",
    "sample_ranking_matrix",
    "sample_rankings",
    "top_k_rows",
]
