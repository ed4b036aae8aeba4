import numpy as np
import pytest
from numpy.testing import assert_allclose

from plrank import kernels
from plrank.estimators import ESTIMATOR_NAMES, EstimatorWorkspace
from plrank.kernels import KERNEL_NAMES, get_backend, have_compiled, numpy_backend
from plrank.kernels.numpy_backend import DenominatorDriftError, denominators
from plrank.metrics import RankWeights
from plrank.sampling import PLScores, rng_stream, sample_ranking_matrix

needs_compiled = pytest.mark.skipif(not have_compiled(), reason="compiled backend not built")


def _workspace(seed, n_items=12, cutoff=4, n_samples=25):
    rng = rng_stream(seed, "kernel-ws")
    m = rng.normal(size=n_items)
    rho = rng.integers(0, 5, size=n_items).astype(float)
    w = RankWeights.dcg(cutoff)
    rankings = sample_ranking_matrix(m, cutoff, n_samples, rng)
    return EstimatorWorkspace.build(m, rho, w, rankings)


def test_backend_registry():
    assert numpy_backend.NAME == "numpy"
    assert get_backend("numpy") is numpy_backend
    for name in KERNEL_NAMES:
        assert callable(getattr(numpy_backend, name))
    with pytest.raises(ValueError, match="unknown backend"):
        get_backend("fortran")


def test_backend_env_override(monkeypatch):
    monkeypatch.setenv("PLRANK_BACKEND", "numpy")
    assert kernels.active_backend_name() == "numpy"
    monkeypatch.setenv("PLRANK_BACKEND", "auto")
    expected = "compiled" if have_compiled() else "numpy"
    assert kernels.active_backend_name() == expected


@needs_compiled
def test_compiled_backend_exports_all_kernels():
    compiled = get_backend("compiled")
    assert compiled.NAME == "compiled"
    for name in KERNEL_NAMES:
        assert callable(getattr(compiled, name))


def test_forcing_missing_compiled_backend_raises(monkeypatch):
    monkeypatch.delenv("PLRANK_BACKEND", raising=False)
    monkeypatch.setattr(kernels, "compiled_backend", None)
    assert not kernels.have_compiled()
    with pytest.raises(RuntimeError, match="not built"):
        kernels.get_backend("compiled")
    assert kernels.get_backend(None) is numpy_backend


def test_denominators_by_subtraction_match_direct_sums():
    ws = _workspace(0)
    denoms = denominators(ws.exp_scores, ws.rankings)
    n_samples, kk = ws.rankings.shape
    for i in range(n_samples):
        remaining = ws.exp_scores.sum()
        for k in range(kk):
            assert_allclose(denoms[i, k], remaining, rtol=1e-12)
            remaining -= ws.exp_scores[ws.rankings[i, k]]


def test_denominators_validate_passes_on_benign_scores():
    ws = _workspace(1)
    a = denominators(ws.exp_scores, ws.rankings, validate=False)
    b = denominators(ws.exp_scores, ws.rankings, validate=True)
    assert_allclose(a, b)


def test_denominators_validate_detects_cancellation():
    pl = PLScores.of([0.0, -40.0, -40.0])
    rankings = np.array([[0, 1]])
    with pytest.raises(DenominatorDriftError, match="rank 1"):
        denominators(pl.exp_scores, rankings, validate=True)


@pytest.mark.parametrize("kind, kernel", list(zip(ESTIMATOR_NAMES, KERNEL_NAMES)))
@needs_compiled
def test_backends_agree_bitwise_tightly(kind, kernel):
    for seed in range(6):
        ws = _workspace(seed, n_items=30, cutoff=5, n_samples=40)
        lam_np = getattr(numpy_backend, kernel)(*ws.kernel_args())
        lam_c = getattr(get_backend("compiled"), kernel)(*ws.kernel_args())
        scale = np.max(np.abs(lam_np)) + 1e-12
        assert np.max(np.abs(lam_np - lam_c)) / scale < 1e-12, f"{kind} seed {seed}"


@needs_compiled
def test_compiled_kernels_accept_read_only_inputs():
    """Workspace arrays are frozen; the extension must take const views."""
    ws = _workspace(2)
    assert not ws.exp_scores.flags.writeable
    compiled = get_backend("compiled")
    for kernel in KERNEL_NAMES:
        out = getattr(compiled, kernel)(*ws.kernel_args())
        assert np.all(np.isfinite(out))


def test_kernel_outputs_are_fresh_arrays():
    ws = _workspace(3)
    a = numpy_backend.basic_pg_lambdas(*ws.kernel_args())
    b = numpy_backend.basic_pg_lambdas(*ws.kernel_args())
    assert a is not b
    assert_allclose(a, b)
    b[:] = 0.0
    assert not np.allclose(a, 0.0)
