"""Benchmarks: estimator comparisons, kernel backends, and scaling checks.

Three layers of measurement live here.  Training benchmarks run full
configs and report metric quality and wall time per estimator.  Kernel
benchmarks time the lambda computations on identical pre-drawn samples, so
estimator cost comparisons are paired exactly.  Scaling checks fit log-log
slopes of kernel runtime against one problem dimension at a time.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from .data import grades_to_relevances
from .estimators import ESTIMATOR_NAMES, EstimatorKind, EstimatorWorkspace
from .kernels import get_backend, have_compiled
from .metrics import RankWeights
from .sampling import rng_stream, sample_ranking_matrix
from .training import TrainConfig, resolve_datasets, train

_KERNEL_ATTR = {
    EstimatorKind.BASIC_PG: "basic_pg_lambdas",
    EstimatorKind.PLACEMENT_PG: "placement_pg_lambdas",
    EstimatorKind.PL_RANK_1: "pl_rank_1_lambdas",
    EstimatorKind.PL_RANK_2: "pl_rank_2_lambdas",
}


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            "values": [float(v) for v in values]}


def random_instance(n_items: int, seed: int, score_scale: float = 1.0):
    """Random scores and graded relevances for kernel benchmarks."""
    rng = rng_stream(seed, "bench-instance", n_items)
    scores = score_scale * rng.standard_normal(n_items)
    relevances = grades_to_relevances(rng.integers(0, 5, size=n_items))
    return scores, relevances


def kernel_workspace(n_items: int, cutoff: int, n_samples: int, seed: int) -> EstimatorWorkspace:
    scores, relevances = random_instance(n_items, seed)
    weights = RankWeights.dcg(cutoff)
    rankings = sample_ranking_matrix(scores, cutoff, n_samples, rng_stream(seed, "bench-samples"))
    return EstimatorWorkspace.build(scores, relevances, weights, rankings)


def time_kernel(kind, ws: EstimatorWorkspace, backend=None, repeats: int = 3) -> float:
    """Fastest of several timed kernel calls on a prepared workspace."""
    kind = EstimatorKind(kind)
    fn = getattr(get_backend(backend), _KERNEL_ATTR[kind])
    args = ws.kernel_args()
    fn(*args)  # warm up caches and lazy imports before timing
    best = float("inf")
    for _ in range(max(repeats, 1)):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def runtime_slope(sizes, times) -> float:
    """Slope of log runtime against log size; 1.0 means linear scaling."""
    return float(np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float)), 1)[0])


def scaling_times(kind, axis: str, grid, base: dict, seed: int = 0, backend=None,
                  repeats: int = 3):
    """Kernel runtimes along a grid of one dimension, others held at base.

    axis is one of n_items, cutoff, n_samples; base supplies the fixed
    values.  Returns (sizes, times) ready for runtime_slope.
    """
    if axis not in ("n_items", "cutoff", "n_samples"):
        raise ValueError(f"unknown scaling axis {axis!r}")
    times = []
    for size in grid:
        dims = dict(base)
        dims[axis] = int(size)
        ws = kernel_workspace(dims["n_items"], dims["cutoff"], dims["n_samples"], seed)
        times.append(time_kernel(kind, ws, backend=backend, repeats=repeats))
    return list(grid), times


def compare_kernel_times(estimators, n_items: int, cutoff: int, n_samples: int,
                         seed: int = 0, backend=None, repeats: int = 5) -> dict:
    """Paired kernel timings on one shared sample batch."""
    ws = kernel_workspace(n_items, cutoff, n_samples, seed)
    return {
        str(EstimatorKind(e).value): time_kernel(e, ws, backend=backend, repeats=repeats)
        for e in estimators
    }


def benchmark_backends(n_items: int = 200, cutoff: int = 5, n_samples: int = 200,
                       seed: int = 0, repeats: int = 5) -> dict:
    """Compare the numpy and compiled kernels on identical inputs.

    Reports per-kernel best times for both backends plus the largest
    absolute difference between their lambda vectors; the two must agree to
    floating-point reordering error.
    """
    ws = kernel_workspace(n_items, cutoff, n_samples, seed)
    numpy_mod = get_backend("numpy")
    report = {
        "instance": {"n_items": n_items, "cutoff": cutoff, "n_samples": n_samples},
        "compiled_available": have_compiled(),
        "kernels": {},
    }
    for kind in EstimatorKind:
        attr = _KERNEL_ATTR[kind]
        entry = {"numpy_seconds": time_kernel(kind, ws, backend="numpy", repeats=repeats)}
        if have_compiled():
            entry["compiled_seconds"] = time_kernel(kind, ws, backend="compiled", repeats=repeats)
            entry["speedup"] = entry["numpy_seconds"] / entry["compiled_seconds"]
            lam_np = getattr(numpy_mod, attr)(*ws.kernel_args())
            lam_c = getattr(get_backend("compiled"), attr)(*ws.kernel_args())
            entry["max_abs_diff"] = float(np.max(np.abs(lam_np - lam_c)))
        report["kernels"][kind.value] = entry
    return report


def benchmark_estimators(base: TrainConfig, estimators=None, repeats: int = 3,
                         threshold: float | None = None) -> dict:
    """Train each estimator on the shared dataset and seed set.

    Every estimator sees the same datasets (resolved once from the base
    config) and the same seeds base.seed .. base.seed + repeats - 1.
    Reports final metrics with mean and stddev, per-epoch and per-phase
    times, and the wall time to first reach a validation threshold when one
    is given.
    """
    estimators = list(estimators) if estimators else list(ESTIMATOR_NAMES)
    datasets = resolve_datasets(base)
    report = {
        "repeats": repeats,
        "threshold": threshold,
        "epochs": base.epochs,
        "metric": base.metric,
        "cutoff": base.cutoff,
        "estimators": {},
    }
    for name in estimators:
        finals, tests, epoch_times, estimate_times, totals, to_threshold = [], [], [], [], [], []
        for r in range(repeats):
            config = replace(base, estimator=str(EstimatorKind(name).value), seed=base.seed + r)
            result = train(config, datasets=datasets)
            finals.append(result.records[-1].validation_metric)
            tests.append(result.summary["test_metric"])
            totals.append(result.summary["total_seconds"])
            per_epoch = [
                r2.sample_seconds + r2.estimate_seconds + r2.update_seconds + r2.eval_seconds
                for r2 in result.records
            ]
            epoch_times.append(float(np.mean(per_epoch)))
            estimate_times.append(float(np.mean([r2.estimate_seconds for r2 in result.records])))
            if threshold is not None:
                elapsed = 0.0
                hit = None
                for rec, ep_time in zip(result.records, per_epoch):
                    elapsed += ep_time
                    if rec.validation_metric >= threshold:
                        hit = elapsed
                        break
                to_threshold.append(hit)
        entry = {
            "final_validation_metric": _mean_std(finals),
            "test_metric": _mean_std(tests),
            "epoch_seconds": _mean_std(epoch_times),
            "estimate_seconds_per_epoch": _mean_std(estimate_times),
            "total_seconds": _mean_std(totals),
        }
        if threshold is not None:
            reached = [t for t in to_threshold if t is not None]
            entry["time_to_threshold_seconds"] = {
                "values": to_threshold,
                "reached": len(reached),
                "mean": float(np.mean(reached)) if reached else None,
            }
        report["estimators"][str(EstimatorKind(name).value)] = entry
    return report
