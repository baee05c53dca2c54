"""Independent reference computations used by several test modules."""
import itertools

import numpy as np
from scipy.optimize import minimize

from otabyz import aggregate, theory


def sum_of_distances(z, points):
    diff = points - z
    return float(np.sqrt(np.einsum("ij,ij->i", diff, diff)).sum())


def brute_force_geomed(points, grid_per_dim=None):
    """Grid search seeded with data-derived candidates, then Powell refinement.

    Low dimensions get a full grid over the bounding box; higher dimensions
    use the points themselves, pairwise midpoints and the centroid as the
    coarse candidate set.
    """
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    lo, hi = points.min(axis=0), points.max(axis=0)
    candidates = [points.mean(axis=0), *points]
    candidates += [(a + b) / 2 for a, b in itertools.combinations(points, 2)]
    if grid_per_dim is None:
        grid_per_dim = {1: 400, 2: 60, 3: 16}.get(d, 0)
    if grid_per_dim:
        axes = [np.linspace(l, h, grid_per_dim) for l, h in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        dist = np.linalg.norm(grid[:, None, :] - points[None], axis=2).sum(axis=1)
        candidates.append(grid[np.argmin(dist)])
    candidates.sort(key=lambda z: sum_of_distances(z, points))
    best = candidates[0]
    for start in candidates[:2]:
        z = refine(start, points)
        if sum_of_distances(z, points) < sum_of_distances(best, points):
            best = z
    return best, sum_of_distances(best, points)


def refine(z, points, rounds=20):
    """Alternate Powell and adaptive Nelder-Mead until neither improves."""
    f = sum_of_distances(z, points)
    for _ in range(rounds):
        improved = False
        for method, opts in (("Powell", {"xtol": 1e-10, "ftol": 1e-13, "maxiter": 40000}),
                             ("Nelder-Mead", {"xatol": 1e-9, "fatol": 1e-13, "adaptive": True,
                                              "maxiter": 5000})):
            res = minimize(sum_of_distances, z, args=(points,), method=method, options=opts)
            if res.fun < f - 1e-10 * f:
                z, f, improved = res.x, res.fun, True
        if not improved:
            break
    return z


def lemma_trial(rng, G, n_bad, p=5, honest_scale=1.0, bad_scale=50.0):
    """One draw of the contamination lemma: returns (||geomed||^2, honest mean square norm)."""
    honest = rng.normal(0.0, honest_scale, size=(G - n_bad, p)) + rng.normal(0.0, 0.5, size=p)
    bad = rng.normal(0.0, bad_scale, size=(n_bad, p)) + bad_scale
    pts = np.vstack([honest, bad]) if n_bad else honest
    z = aggregate.geomed(pts)
    return float(z @ z), float(np.mean(np.sum(honest ** 2, axis=1)))


def lemma_check(n_bad, trials=1000, G=20, seed=0):
    """Return (mean ||geomed||^2, right-hand side) over ``trials`` draws."""
    rng = np.random.default_rng([seed, n_bad])
    lhs, rhs = zip(*(lemma_trial(rng, G, n_bad) for _ in range(trials)))
    return float(np.mean(lhs)), theory.c_alpha(n_bad, G) ** 2 * float(np.mean(rhs))
