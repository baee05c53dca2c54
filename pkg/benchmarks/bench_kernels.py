"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from otabyz import _kernels
from otabyz.data import synth_classify


def cases():
    rng = np.random.default_rng(0)
    # 20 group updates of a 7850-parameter model: one aggregation in the default setup
    pts = rng.normal(size=(20, 7850))
    z0 = np.median(pts, axis=0)
    yield "weiszfeld 20x7850", lambda k: k.weiszfeld(pts, z0, 1e-4, 1e-12, 100)

    # one client's local SGD (600 samples, H=12 steps of b=50) at two model sizes
    for d, C in ((20, 10), (784, 10)):
        ds = synth_classify(600, d, C, 0.3, seed=0)
        w0 = np.zeros(C * ds.dim)
        batches = rng.integers(0, len(ds), size=(12, 50))
        labels = ds.labels.astype(np.int64)
        yield f"local_sgd {C}x{ds.dim} params", (
            lambda k, ds=ds, w0=w0, b=batches, y=labels, C=C:
            k.local_sgd_logistic(ds.features, y, w0, b, 0.01, 0.0, C))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels.compiled is None:
        print("compiled extension not built; only the numpy fallback is available")
    backends = {"python": _kernels.python}
    if _kernels.compiled is not None:
        backends["cython"] = _kernels.compiled
    print(f"local SGD uses the compiled loop up to {_kernels.SGD_COMPILED_MAX_PARAMS} parameters")
    print(f"{'case':<28}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, fn in cases():
        best = {}
        for label, mod in backends.items():
            runs = timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)
            best[label] = min(runs)
        line = f"{name:<28}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        if "cython" in best:
            line += f"  {best['python'] / best['cython']:>8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
