"""Epoch-based training of ranking policies with structured result records.

One epoch scores, samples, estimates and updates once per training query in
a seeded shuffled order, then evaluates the policy on the train and
validation splits.  All randomness flows through named counter-based
streams keyed by (seed, purpose, epoch, query), so a run is reproducible
end to end in single-threaded mode.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import model as scoring
from .data import (
    Dataset,
    feature_stats,
    load_svmlight,
    normalize_features,
    split_by_query,
    synth_dataset,
)
from .estimators import EstimatorKind, estimate
from .fairness import disparity_gradient, disparity_metric, estimate_exposure, fairness_pseudo_relevances
from .metrics import RankWeights, expected_metric
from .sampling import rng_stream, sample_ranking_matrix

DYNAMIC_BASE = 10
DYNAMIC_RAMP = 90
DYNAMIC_SPAN = 40


def dynamic_n(epoch: int) -> int:
    """Sample budget schedule rising from 10 toward 100 over 40 epochs."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return max(DYNAMIC_BASE, int(round(DYNAMIC_BASE + DYNAMIC_RAMP * epoch / DYNAMIC_SPAN)))


@dataclass(frozen=True)
class TrainConfig:
    data_path: str | None = None
    synth: tuple | None = None  # (queries, items_per_query, feature_dim, label_levels)
    estimator: str = "pl-rank-2"
    metric: str = "dcg"
    cutoff: int = 5
    n_samples: int | None = None  # None means the dynamic schedule
    epochs: int = 40
    learning_rate: float = 0.01
    seed: int = 1
    alpha: float = 1.0
    beta: float = 0.0
    eval_samples: int = 100
    model: str = "mlp"
    hidden: tuple = (32, 32)
    exposure_samples: int = 1000
    share_exposure_samples: bool = False
    normalize: bool = True
    threads: int = 1

    def __post_init__(self):
        if (self.data_path is None) == (self.synth is None):
            raise ValueError("exactly one of data_path and synth must be set")
        EstimatorKind(self.estimator)
        if self.metric not in ("dcg", "prec", "arp"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if self.n_samples is not None and self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if self.eval_samples < 1 or self.exposure_samples < 1:
            raise ValueError("sample counts must be >= 1")
        if self.model not in ("mlp", "linear"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.synth is not None:
            object.__setattr__(self, "synth", tuple(self.synth))

    def schedule(self, epoch: int) -> int:
        return self.n_samples if self.n_samples is not None else dynamic_n(epoch)

    @property
    def weights(self) -> RankWeights:
        return RankWeights.of_kind(self.metric, self.cutoff)


@dataclass
class EpochRecord:
    epoch: int
    n_samples: int
    train_metric: float
    validation_metric: float
    disparity: float | None
    sample_seconds: float
    estimate_seconds: float
    update_seconds: float
    eval_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    records: list
    params: scoring.ModelParams
    summary: dict
    config: TrainConfig


class TrainingAborted(RuntimeError):
    """Training hit a non-finite gradient; carries the last good state."""

    def __init__(self, message, epoch, query_id, records, params):
        super().__init__(message)
        self.epoch = epoch
        self.query_id = query_id
        self.records = records
        self.params = params


def resolve_datasets(config: TrainConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Load or synthesize the train/validation/test splits for a config.

    A data path may be a directory holding train.txt, vali.txt and test.txt
    (the usual learning-to-rank layout) or a single file, which is split
    80/10/10 by query with the run seed.  Synthetic specs are generated
    with the run seed and split the same way.
    """
    if config.synth is not None:
        queries, items, feats, levels = config.synth
        full = synth_dataset(queries, items, feats, levels, seed=config.seed)
        train, val, test = split_by_query(full, seed=config.seed)
    elif os.path.isdir(config.data_path):
        names = {"train": "train.txt", "validation": "vali.txt", "test": "test.txt"}
        paths = {split: os.path.join(config.data_path, fn) for split, fn in names.items()}
        missing = [p for p in paths.values() if not os.path.exists(p)]
        if missing:
            raise FileNotFoundError(f"dataset directory lacks {', '.join(sorted(missing))}")
        train = load_svmlight(paths["train"], split="train")
        val = load_svmlight(paths["validation"], split="validation")
        test = load_svmlight(paths["test"], split="test")
    else:
        full = load_svmlight(config.data_path, split="train")
        train, val, test = split_by_query(full, seed=config.seed)
    if config.normalize:
        stats = feature_stats(train)
        train, val, test = (normalize_features(d, stats) for d in (train, val, test))
    return train, val, test


def init_model(config: TrainConfig, feature_dim: int) -> scoring.ModelParams:
    hidden = () if config.model == "linear" else config.hidden
    return scoring.init_params(feature_dim, hidden=hidden, seed=config.seed)


def evaluate_split(params, dataset: Dataset, weights: RankWeights, eval_samples: int,
                   seed: int, tag: str) -> float:
    """Mean expected metric over a split's queries (fresh eval streams)."""
    values = []
    for qi, group in enumerate(dataset.groups):
        m, _ = scoring.score(params, group.features)
        rng = rng_stream(seed, "eval", tag, qi)
        values.append(expected_metric(m, group.relevances, weights, eval_samples, rng))
    return float(np.mean(values))


def mean_disparity(params, dataset: Dataset, weights: RankWeights, exposure_samples: int,
                   seed: int, tag: str) -> float:
    values = []
    for qi, group in enumerate(dataset.groups):
        if group.n_items < 2:
            continue
        m, _ = scoring.score(params, group.features)
        rng = rng_stream(seed, "eval-exposure", tag, qi)
        expo = estimate_exposure(m, weights, exposure_samples, rng)
        values.append(disparity_metric(expo.exposure, group.relevances))
    return float(np.mean(values)) if values else 0.0


def _query_gradient(params, group, config, weights, n_samples, epoch, qi, timers):
    """Scores, samples and estimates one query; returns the parameter gradient."""
    t0 = time.perf_counter()
    m, trace = scoring.score(params, group.features)
    if not np.all(np.isfinite(m)):
        raise scoring.NonFiniteGradientError(
            f"model scores diverged on query {group.query_id!r}"
        )
    rankings = sample_ranking_matrix(
        m, config.cutoff, n_samples, rng_stream(config.seed, "grad", epoch, qi)
    )
    t1 = time.perf_counter()

    rho = group.relevances
    if config.beta != 0.0 and group.n_items >= 2:
        expo = estimate_exposure(
            m, weights, config.exposure_samples,
            rng_stream(config.seed, "exposure", epoch, qi),
            samples=rankings if config.share_exposure_samples else None,
        )
        grad_f = disparity_gradient(expo.exposure, rho)
        rho = fairness_pseudo_relevances(grad_f, rho, config.alpha, config.beta)
    elif config.alpha != 1.0:
        rho = config.alpha * rho
    gw = estimate(config.estimator, m, rho, weights, rankings)
    t2 = time.perf_counter()

    grad = scoring.backward(params, trace, gw.lam)
    t3 = time.perf_counter()

    timers["sample"] += t1 - t0
    timers["estimate"] += t2 - t1
    timers["update"] += t3 - t2
    return grad


def train(config: TrainConfig, datasets=None) -> TrainResult:
    """Run the full training loop and return records, params and a summary.

    With threads > 1, queries are processed in macro-batches of that size
    against a fixed parameter snapshot and their gradients applied as one
    summed update.  That deviates from pure sequential SGD semantics, so
    single-threaded runs remain the reproducibility reference.
    """
    if datasets is None:
        datasets = resolve_datasets(config)
    train_split, val_split, test_split = datasets
    weights = config.weights
    params = init_model(config, train_split.feature_dim)

    records = []
    started = time.perf_counter()
    for epoch in range(config.epochs):
        n_samples = config.schedule(epoch)
        timers = {"sample": 0.0, "estimate": 0.0, "update": 0.0}
        order = rng_stream(config.seed, "shuffle", epoch).permutation(train_split.n_queries)

        try:
            if config.threads == 1:
                for qi in order:
                    group = train_split.groups[qi]
                    grad = _query_gradient(
                        params, group, config, weights, n_samples, epoch, int(qi), timers
                    )
                    t0 = time.perf_counter()
                    params = scoring.sgd_step(params, grad, config.learning_rate)
                    timers["update"] += time.perf_counter() - t0
            else:
                with ThreadPoolExecutor(max_workers=config.threads) as pool:
                    for at in range(0, order.size, config.threads):
                        batch = order[at : at + config.threads]
                        # Each task gets its own timer dict; merging after the
                        # batch keeps the accounting free of write races.
                        snapshot = params
                        task_timers = [
                            {"sample": 0.0, "estimate": 0.0, "update": 0.0} for _ in batch
                        ]
                        tasks = [
                            pool.submit(
                                _query_gradient, snapshot, train_split.groups[qi],
                                config, weights, n_samples, epoch, int(qi), tt,
                            )
                            for qi, tt in zip(batch, task_timers)
                        ]
                        grads = [t.result() for t in tasks]
                        for tt in task_timers:
                            for key in timers:
                                timers[key] += tt[key]
                        t0 = time.perf_counter()
                        total = grads[0]
                        for g in grads[1:]:
                            total = total + g
                        params = scoring.sgd_step(params, total, config.learning_rate)
                        timers["update"] += time.perf_counter() - t0
        except (scoring.NonFiniteGradientError, FloatingPointError) as exc:
            raise TrainingAborted(
                f"aborted in epoch {epoch}: {exc}", epoch, None, records, params
            ) from exc

        t0 = time.perf_counter()
        train_metric = evaluate_split(
            params, train_split, weights, config.eval_samples, config.seed, f"train-{epoch}"
        )
        val_metric = evaluate_split(
            params, val_split, weights, config.eval_samples, config.seed, f"val-{epoch}"
        )
        disparity = None
        if config.beta != 0.0:
            disparity = mean_disparity(
                params, val_split, weights, config.exposure_samples, config.seed, f"val-{epoch}"
            )
        eval_seconds = time.perf_counter() - t0

        records.append(EpochRecord(
            epoch=epoch,
            n_samples=n_samples,
            train_metric=train_metric,
            validation_metric=val_metric,
            disparity=disparity,
            sample_seconds=timers["sample"],
            estimate_seconds=timers["estimate"],
            update_seconds=timers["update"],
            eval_seconds=eval_seconds,
        ))

    test_metric = evaluate_split(
        params, test_split, weights, config.eval_samples, config.seed, "test-final"
    )
    summary = {
        "epochs": config.epochs,
        "estimator": config.estimator,
        "metric": config.metric,
        "cutoff": config.cutoff,
        "final_train_metric": records[-1].train_metric,
        "final_validation_metric": records[-1].validation_metric,
        "test_metric": test_metric,
        "final_disparity": records[-1].disparity,
        "total_seconds": time.perf_counter() - started,
        "sample_seconds": sum(r.sample_seconds for r in records),
        "estimate_seconds": sum(r.estimate_seconds for r in records),
        "update_seconds": sum(r.update_seconds for r in records),
        "eval_seconds": sum(r.eval_seconds for r in records),
        "seed": config.seed,
        "threads": config.threads,
    }
    return TrainResult(records=records, params=params, summary=summary, config=config)


def oracle_optimal_metric(dataset: Dataset, weights: RankWeights) -> float:
    """Mean best-achievable metric over a split (true-relevance sort)."""
    from .metrics import ideal_reward

    return float(np.mean([ideal_reward(g.relevances, weights) for g in dataset.groups]))
