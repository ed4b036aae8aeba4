import contextlib

import numpy as np
import pytest

from plrank.metrics import RankWeights
from plrank.sampling import PLScores, rng_stream


@pytest.fixture
def two_item_scores():
    """The two-item instance used in the worked examples: m = (0, 0)."""
    return PLScores.of([0.0, 0.0])


@pytest.fixture
def two_item_relevances():
    return np.array([1.0, 0.0])


@pytest.fixture
def unit_weights():
    """theta = (1,) at cutoff 1."""
    return RankWeights(weights=np.array([1.0]), cutoff=1, kind="custom")


def random_instance(rng, n_items, max_cutoff=3):
    scores = rng.normal(size=n_items)
    rho = rng.integers(0, 5, size=n_items).astype(float)
    cutoff = int(rng.integers(1, min(max_cutoff, n_items) + 1))
    return PLScores.of(scores), rho, cutoff


@pytest.fixture
def bench_rng():
    return rng_stream(20240901, "tests")


@pytest.fixture
def announce(capsys):
    """Print one PASS/FAIL line per acceptance criterion, capture or not."""

    @contextlib.contextmanager
    def run(name):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"FAIL {name}")
            raise
        else:
            with capsys.disabled():
                print(f"PASS {name}")

    return run
