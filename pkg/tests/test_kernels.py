import os
import subprocess
import sys

import numpy as np
import pytest

from otabyz import _kernels, model
from otabyz.data import synth_classify

needs_compiled = pytest.mark.skipif(_kernels.compiled is None, reason="extension not built")


def test_backend_name():
    assert _kernels.BACKEND in ("cython", "python")
    if _kernels.compiled is not None and not os.environ.get("OTABYZ_PURE_PYTHON"):
        assert _kernels.BACKEND == "cython"


def test_pure_python_override():
    env = dict(os.environ, OTABYZ_PURE_PYTHON="1")
    proc = subprocess.run([sys.executable, "-c", "import otabyz; print(otabyz.BACKEND)"],
                          env=env, capture_output=True, text=True, check=True)
    assert proc.stdout.strip() == "python"


def test_smoothed_objective(kernels):
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    # first point is within eps of z: r^2/(2 eps) + eps/2 with r = 0
    assert kernels.smoothed_objective(pts, np.zeros(2), 0.1) == pytest.approx(0.05 + 5.0)


def test_local_sgd_kernel_matches_model(kernels, rng):
    ds = synth_classify(50, 3, 4, 0.3, seed=0)
    w0 = rng.normal(size=model.num_params(ds))
    batches = rng.integers(0, len(ds), size=(5, 7))
    w, saved = w0.copy(), w0.copy()
    for b in batches:
        w -= 0.1 * model.stochastic_gradient(w, ds, b, 0.01)
    got = kernels.local_sgd_logistic(ds.features, ds.labels.astype(np.int64), w0, batches,
                                     0.1, 0.01, 4)
    np.testing.assert_allclose(got, w, atol=1e-13)
    assert np.array_equal(w0, saved)


@needs_compiled
def test_backends_agree(rng):
    py, cy = _kernels.python, _kernels.compiled
    pts = rng.normal(size=(20, 8))
    z0 = np.median(pts, axis=0)
    zp, ip, cp = py.weiszfeld(pts, z0, 1e-4, 1e-10, 300)
    zc, ic, cc = cy.weiszfeld(pts, z0, 1e-4, 1e-10, 300)
    np.testing.assert_allclose(zp, zc, atol=1e-12)
    assert (ip, cp) == (ic, cc)
    assert py.smoothed_objective(pts, z0, 1e-4) == pytest.approx(
        cy.smoothed_objective(pts, z0, 1e-4), rel=1e-14)

    ds = synth_classify(200, 5, 10, 0.3, seed=2)
    w0 = np.zeros(model.num_params(ds))
    batches = rng.integers(0, len(ds), size=(12, 50))
    args = (ds.features, ds.labels.astype(np.int64), w0, batches, 0.05, 0.0, 10)
    np.testing.assert_allclose(py.local_sgd_logistic(*args), cy.local_sgd_logistic(*args),
                               atol=1e-13)


def test_weiszfeld_does_not_mutate_inputs(kernels, rng):
    pts = rng.normal(size=(6, 3))
    z0 = np.median(pts, axis=0)
    before = (pts.copy(), z0.copy())
    kernels.weiszfeld(pts, z0, 1e-4, 1e-9, 50)
    assert np.array_equal(pts, before[0]) and np.array_equal(z0, before[1])


def test_large_models_use_numpy_sgd(rng):
    ds = synth_classify(80, 200, 10, 0.3, seed=1)
    w0 = np.zeros(model.num_params(ds))
    assert w0.size > _kernels.SGD_COMPILED_MAX_PARAMS
    batches = rng.integers(0, len(ds), size=(3, 8))
    args = (ds.features, ds.labels.astype(np.int64), w0, batches, 0.05, 0.0, 10)
    assert _kernels.local_sgd_logistic(*args).tobytes() == \
        _kernels.python.local_sgd_logistic(*args).tobytes()
