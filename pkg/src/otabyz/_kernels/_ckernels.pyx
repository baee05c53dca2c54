# cython: language_level=3
"""Compiled hot loops: smoothed Weiszfeld and logistic-regression local SGD.

Signatures mirror ``otabyz._kernels._pykernels`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp

cnp.import_array()


cdef double _dist(const double[:, ::1] pts, Py_ssize_t i, const double[::1] z) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0, diff
    for j in range(pts.shape[1]):
        diff = z[j] - pts[i, j]
        acc += diff * diff
    return sqrt(acc)


def smoothed_objective(const double[:, ::1] points, const double[::1] z, double eps):
    cdef Py_ssize_t i
    cdef double d, total = 0.0
    with nogil:
        for i in range(points.shape[0]):
            d = _dist(points, i, z)
            if d <= eps:
                total += d * d / (2.0 * eps) + eps / 2.0
            else:
                total += d
    return total


def weiszfeld(const double[:, ::1] points, const double[::1] z0, double eps,
              double tol, int max_iters):
    """Return ``(z, iterations, converged)``."""
    cdef Py_ssize_t n = points.shape[0], p = points.shape[1]
    cdef Py_ssize_t i, j
    cdef int k, iters = 0
    cdef bint converged = False
    cdef double wsum, wi, d, step
    z_arr = np.array(z0, dtype=np.float64, copy=True)
    nz_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef double[::1] nz = nz_arr
    cdef double[::1] tmp
    with nogil:
        for k in range(max_iters):
            wsum = 0.0
            for j in range(p):
                nz[j] = 0.0
            for i in range(n):
                d = _dist(points, i, z)
                wi = 1.0 / (d if d > eps else eps)
                wsum += wi
                for j in range(p):
                    nz[j] += wi * points[i, j]
            step = 0.0
            for j in range(p):
                nz[j] /= wsum
                d = nz[j] - z[j]
                step += d * d
            tmp = z
            z = nz
            nz = tmp
            iters = k + 1
            if sqrt(step) <= tol:
                converged = True
                break
    return np.asarray(z).copy(), iters, converged


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    # four independent partial sums let the compiler pipeline without -ffast-math
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t j = 0
    while j + 4 <= n:
        s0 += a[j] * b[j]
        s1 += a[j + 1] * b[j + 1]
        s2 += a[j + 2] * b[j + 2]
        s3 += a[j + 3] * b[j + 3]
        j += 4
    while j < n:
        s0 += a[j] * b[j]
        j += 1
    return (s0 + s1) + (s2 + s3)


def local_sgd_logistic(const double[:, ::1] X, const cnp.int64_t[::1] y,
                       const double[::1] w0, const cnp.int64_t[:, ::1] batches,
                       double eta, double lam, int C):
    """Run ``batches.shape[0]`` minibatch steps; return the final weights.

    Weights are class-major: ``w[c * D + j]``.
    """
    cdef Py_ssize_t D = X.shape[1]
    cdef Py_ssize_t H = batches.shape[0], b = batches.shape[1]
    cdef Py_ssize_t s, r, c, j, idx
    cdef double mx, total, coeff, inv_b = 1.0 / b
    cdef const double* xr
    cdef double* gc
    w_arr = np.array(w0, dtype=np.float64, copy=True)
    g_arr = np.empty(C * D, dtype=np.float64)
    p_arr = np.empty(C, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef double[::1] g = g_arr
    cdef double[::1] prob = p_arr
    if C * D == 0:
        return w_arr
    with nogil:
        for s in range(H):
            for j in range(C * D):
                g[j] = 0.0
            for r in range(b):
                idx = batches[s, r]
                xr = &X[idx, 0]
                mx = -1e300
                for c in range(C):
                    prob[c] = _dot(&w[c * D], xr, D)
                    if prob[c] > mx:
                        mx = prob[c]
                total = 0.0
                for c in range(C):
                    prob[c] = exp(prob[c] - mx)
                    total += prob[c]
                for c in range(C):
                    coeff = prob[c] / total
                    if c == y[idx]:
                        coeff -= 1.0
                    coeff *= inv_b
                    gc = &g[c * D]
                    for j in range(D):
                        gc[j] += coeff * xr[j]
            for j in range(C * D):
                w[j] -= eta * (g[j] + lam * w[j])
    return w_arr
