"""Vectorized numpy kernels for the per-item gradient weights.

Every kernel shares one signature: stabilized exponentiated scores (n,),
sampled rankings (N, k) of item indices, relevances (n,), rank weights
theta (k,) and per-sample suffix rewards omegas (N, k).  The result is the
lambda vector (n,) averaged over the N samples.

The Plackett-Luce denominators are maintained by subtracting each placed
item's exponentiated score from the running total, which is what makes the
per-sample cost linear instead of quadratic in the cutoff.  Passing
validate=True recomputes every denominator from scratch and raises if the
running values drift beyond 1e-9 relative error; scores whose spread stays
within a few dozen nats are nowhere near that bound.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

DENOM_RTOL = 1e-9


class DenominatorDriftError(FloatingPointError):
    """Running PL denominator disagrees with a from-scratch recomputation."""


def _check_denoms(running: np.ndarray, exact: np.ndarray, rank: int):
    err = np.max(np.abs(running - exact) / np.maximum(np.abs(exact), 1e-300))
    if not err <= DENOM_RTOL:
        raise DenominatorDriftError(
            f"denominator drift {err:.3e} at rank {rank}; the score spread is "
            "too extreme for subtractive renormalization"
        )


def denominators(exp_scores: np.ndarray, rankings: np.ndarray, validate: bool = False) -> np.ndarray:
    """Per-rank choice denominators M'_k for every sample, by subtraction."""
    placed = exp_scores[rankings]
    denoms = np.full(rankings.shape, exp_scores.sum())
    denoms[:, 1:] -= np.cumsum(placed[:, :-1], axis=1)
    if validate:
        n_samples, kk = rankings.shape
        mask = np.ones((n_samples, exp_scores.size), dtype=bool)
        rows = np.arange(n_samples)
        for k in range(kk):
            _check_denoms(denoms[:, k], (exp_scores * mask).sum(axis=1), k)
            mask[rows, rankings[:, k]] = False
    return denoms


def basic_pg_lambdas(exp_scores, rankings, relevances, theta, omegas, validate=False):
    """Score-function estimator weighting every placement by the full reward."""
    n_samples, kk = rankings.shape
    rewards = omegas[:, 0]
    denoms = denominators(exp_scores, rankings, validate)
    lam = np.zeros(exp_scores.size)
    np.add.at(lam, rankings, np.broadcast_to(rewards[:, None], rankings.shape))
    mask = np.ones((n_samples, exp_scores.size), dtype=bool)
    rows = np.arange(n_samples)
    for k in range(kk):
        probs = np.where(mask, exp_scores[None, :], 0.0) / denoms[:, k, None]
        lam -= probs.T @ rewards
        mask[rows, rankings[:, k]] = False
    return lam / n_samples


def placement_pg_lambdas(exp_scores, rankings, relevances, theta, omegas, validate=False):
    """Score-function estimator weighting each rank's placement by its suffix reward."""
    n_samples, kk = rankings.shape
    denoms = denominators(exp_scores, rankings, validate)
    lam = np.zeros(exp_scores.size)
    np.add.at(lam, rankings, omegas)
    mask = np.ones((n_samples, exp_scores.size), dtype=bool)
    rows = np.arange(n_samples)
    for k in range(kk):
        probs = np.where(mask, exp_scores[None, :], 0.0) / denoms[:, k, None]
        lam -= probs.T @ omegas[:, k]
        mask[rows, rankings[:, k]] = False
    return lam / n_samples


def pl_rank_1_lambdas(exp_scores, rankings, relevances, theta, omegas, validate=False):
    """Suffix-reward estimator with the risk term factored into prefix sums.

    For a placed item the weight is its suffix reward minus the accumulated
    placement risk e_d * sum_{j<=rank} omega_j / M'_j; unplaced items carry
    the full K-rank risk sum.  Grouping the sums this way costs O(N(k + n))
    instead of the O(N*k*n) of the literal per-rank form.
    """
    n_samples, kk = rankings.shape
    denoms = denominators(exp_scores, rankings, validate)
    risk = np.cumsum(omegas / denoms, axis=1)
    lam = -exp_scores * risk[:, -1].sum()
    np.add.at(lam, rankings, omegas + exp_scores[rankings] * (risk[:, -1:] - risk))
    return lam / n_samples


def pl_rank_2_lambdas(exp_scores, rankings, relevances, theta, omegas, validate=False):
    """Suffix-reward estimator reformulated to also reward unplaced items.

    Per sample and rank k, the item placed there banks the reward that
    follows it, and every item still unplaced at k receives its placement
    probability times (theta_k * rho_d - omega_k), the expected direct
    reward minus the risk the placement carries.  Cost is O(N*k*n).
    """
    n_samples, kk = rankings.shape
    n = exp_scores.size
    lam = np.zeros(n)
    mask = np.ones((n_samples, n), dtype=bool)
    running = np.full(n_samples, exp_scores.sum())
    rows = np.arange(n_samples)
    for k in range(kk):
        if validate:
            _check_denoms(running, (exp_scores * mask).sum(axis=1), k)
        probs = np.where(mask, exp_scores[None, :], 0.0) / running[:, None]
        lam += theta[k] * relevances * probs.sum(axis=0)
        lam -= probs.T @ omegas[:, k]
        if k + 1 < kk:
            np.add.at(lam, rankings[:, k], omegas[:, k + 1])
        placed_now = rankings[:, k]
        mask[rows, placed_now] = False
        running -= exp_scores[placed_now]
    return lam / n_samples


def per_sample_lambdas(kind, exp_scores, rankings, relevances, theta, omegas):
    """(N, n) matrix of per-sample lambda vectors, for variance diagnostics.

    The row mean reproduces the corresponding kernel's output exactly up to
    summation order.
    """
    n_samples, kk = rankings.shape
    n = exp_scores.size
    rows = np.arange(n_samples)
    out = np.zeros((n_samples, n))

    if kind in ("basic-pg", "placement-pg"):
        denoms = denominators(exp_scores, rankings)
        weight = np.broadcast_to(omegas[:, :1], omegas.shape) if kind == "basic-pg" else omegas
        mask = np.ones((n_samples, n), dtype=bool)
        for k in range(kk):
            probs = np.where(mask, exp_scores[None, :], 0.0) / denoms[:, k, None]
            out -= probs * weight[:, k, None]
            mask[rows, rankings[:, k]] = False
        out[rows[:, None], rankings] += weight
    elif kind == "pl-rank-1":
        denoms = denominators(exp_scores, rankings)
        risk = np.cumsum(omegas / denoms, axis=1)
        out = -exp_scores[None, :] * risk[:, -1:]
        out[rows[:, None], rankings] += omegas + exp_scores[rankings] * (risk[:, -1:] - risk)
    elif kind == "pl-rank-2":
        mask = np.ones((n_samples, n), dtype=bool)
        running = np.full(n_samples, exp_scores.sum())
        for k in range(kk):
            probs = np.where(mask, exp_scores[None, :], 0.0) / running[:, None]
            out += probs * (theta[k] * relevances[None, :] - omegas[:, k, None])
            if k + 1 < kk:
                out[rows, rankings[:, k]] += omegas[:, k + 1]
            placed_now = rankings[:, k]
            mask[rows, placed_now] = False
            running -= exp_scores[placed_now]
    else:
        raise ValueError(f"unknown estimator kind {kind!r}")
    return out
