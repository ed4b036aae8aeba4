"""Compiled kernels for the per-item gradient weights.

Signatures mirror kernels.numpy_backend exactly: stabilized exponentiated
scores (n,), rankings (N, k) int64, relevances (n,), theta (k,), suffix
rewards omegas (N, k), returning the lambda vector (n,) averaged over
samples.  The loops are straight transcriptions of the estimators, which
keeps the per-iteration work trivially auditable; the speed comes from the
types, not from reorganizing the math.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def basic_pg_lambdas(const double[::1] exp_scores, const cnp.int64_t[:, ::1] rankings,
                     const double[::1] relevances, const double[::1] theta,
                     const double[:, ::1] omegas):
    cdef Py_ssize_t n_samples = rankings.shape[0]
    cdef Py_ssize_t kk = rankings.shape[1]
    cdef Py_ssize_t n = exp_scores.shape[0]
    cdef Py_ssize_t i, k, d, d_k
    cdef double reward, running, total

    lam_arr = np.zeros(n)
    cdef double[::1] lam = lam_arr
    cdef unsigned char[::1] placed = np.zeros(n, dtype=np.uint8)

    total = 0.0
    for d in range(n):
        total += exp_scores[d]

    for i in range(n_samples):
        reward = omegas[i, 0]
        running = total
        for k in range(kk):
            d_k = rankings[i, k]
            for d in range(n):
                if not placed[d]:
                    lam[d] -= reward * exp_scores[d] / running
            lam[d_k] += reward
            placed[d_k] = 1
            running -= exp_scores[d_k]
        for k in range(kk):
            placed[rankings[i, k]] = 0

    for d in range(n):
        lam[d] /= n_samples
    return lam_arr


def placement_pg_lambdas(const double[::1] exp_scores, const cnp.int64_t[:, ::1] rankings,
                         const double[::1] relevances, const double[::1] theta,
                         const double[:, ::1] omegas):
    cdef Py_ssize_t n_samples = rankings.shape[0]
    cdef Py_ssize_t kk = rankings.shape[1]
    cdef Py_ssize_t n = exp_scores.shape[0]
    cdef Py_ssize_t i, k, d, d_k
    cdef double omega_k, running, total

    lam_arr = np.zeros(n)
    cdef double[::1] lam = lam_arr
    cdef unsigned char[::1] placed = np.zeros(n, dtype=np.uint8)

    total = 0.0
    for d in range(n):
        total += exp_scores[d]

    for i in range(n_samples):
        running = total
        for k in range(kk):
            d_k = rankings[i, k]
            omega_k = omegas[i, k]
            for d in range(n):
                if not placed[d]:
                    lam[d] -= omega_k * exp_scores[d] / running
            lam[d_k] += omega_k
            placed[d_k] = 1
            running -= exp_scores[d_k]
        for k in range(kk):
            placed[rankings[i, k]] = 0

    for d in range(n):
        lam[d] /= n_samples
    return lam_arr


def pl_rank_1_lambdas(const double[::1] exp_scores, const cnp.int64_t[:, ::1] rankings,
                      const double[::1] relevances, const double[::1] theta,
                      const double[:, ::1] omegas):
    # Placed items get omega at their rank minus the accumulated risk
    # e_d * sum_{j<=rank} omega_j / M'_j; everyone else carries the full
    # risk sum.  One pass builds the prefix sums, one pass spends them, so
    # a sample costs O(n + k) rather than O(n * k).
    cdef Py_ssize_t n_samples = rankings.shape[0]
    cdef Py_ssize_t kk = rankings.shape[1]
    cdef Py_ssize_t n = exp_scores.shape[0]
    cdef Py_ssize_t i, k, d, d_k
    cdef double running, total, acc

    lam_arr = np.zeros(n)
    cdef double[::1] lam = lam_arr
    cdef double[::1] risk_prefix = np.zeros(kk)

    total = 0.0
    for d in range(n):
        total += exp_scores[d]

    for i in range(n_samples):
        running = total
        acc = 0.0
        for k in range(kk):
            acc += omegas[i, k] / running
            risk_prefix[k] = acc
            running -= exp_scores[rankings[i, k]]
        for d in range(n):
            lam[d] -= exp_scores[d] * acc
        for k in range(kk):
            d_k = rankings[i, k]
            lam[d_k] += omegas[i, k] + exp_scores[d_k] * (acc - risk_prefix[k])

    for d in range(n):
        lam[d] /= n_samples
    return lam_arr


def pl_rank_2_lambdas(const double[::1] exp_scores, const cnp.int64_t[:, ::1] rankings,
                      const double[::1] relevances, const double[::1] theta,
                      const double[:, ::1] omegas):
    cdef Py_ssize_t n_samples = rankings.shape[0]
    cdef Py_ssize_t kk = rankings.shape[1]
    cdef Py_ssize_t n = exp_scores.shape[0]
    cdef Py_ssize_t i, k, d, d_k
    cdef double omega_k, theta_k, running, total

    lam_arr = np.zeros(n)
    cdef double[::1] lam = lam_arr
    cdef unsigned char[::1] placed = np.zeros(n, dtype=np.uint8)

    total = 0.0
    for d in range(n):
        total += exp_scores[d]

    for i in range(n_samples):
        running = total
        for k in range(kk):
            omega_k = omegas[i, k]
            theta_k = theta[k]
            for d in range(n):
                if not placed[d]:
                    lam[d] += exp_scores[d] / running * (theta_k * relevances[d] - omega_k)
            d_k = rankings[i, k]
            if k + 1 < kk:
                lam[d_k] += omegas[i, k + 1]
            placed[d_k] = 1
            running -= exp_scores[d_k]
        for k in range(kk):
            placed[rankings[i, k]] = 0

    for d in range(n):
        lam[d] /= n_samples
    return lam_arr
