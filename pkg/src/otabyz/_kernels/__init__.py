"""Kernel backend selection.

The compiled extension is used when importable; set ``OTABYZ_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active implementation and
both are always reachable as ``compiled`` (possibly None) and ``python``.

Local SGD only uses the compiled loop for small models: past roughly a
thousand parameters numpy's BLAS-backed batch products are faster (see
``benchmarks/bench_kernels.py``).
"""
import os

from . import _pykernels as python

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and not os.environ.get("OTABYZ_PURE_PYTHON"):
    active = compiled
    BACKEND = "cython"
else:
    active = python
    BACKEND = "python"

SGD_COMPILED_MAX_PARAMS = 1024

weiszfeld = active.weiszfeld
smoothed_objective = active.smoothed_objective


def local_sgd_logistic(X, y, w0, batches, eta, lam, C):
    impl = active if len(w0) <= SGD_COMPILED_MAX_PARAMS else python
    return impl.local_sgd_logistic(X, y, w0, batches, eta, lam, C)


__all__ = ["BACKEND", "SGD_COMPILED_MAX_PARAMS", "compiled", "python", "weiszfeld",
           "smoothed_objective", "local_sgd_logistic"]
