# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Mirrors ``_pykernels`` exactly (same traces, same stopping rule); only the
summation order differs, so results agree to round-off.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def em_decode(dens, grid, int max_iters, double tol):
    """See ``_pykernels.em_decode``; identical contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] dens_arr = \
        np.ascontiguousarray(dens, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] grid_arr = \
        np.ascontiguousarray(grid, dtype=np.float64)
    if dens_arr.ndim != 2 or dens_arr.shape[0] < 1 or dens_arr.shape[1] != grid_arr.shape[0]:
        raise ValueError("dens must be (m, B) with B matching the grid")

    cdef Py_ssize_t m = dens_arr.shape[0]
    cdef Py_ssize_t nb = dens_arr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] pi = np.full(nb, 1.0 / nb)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] new_pi = np.empty(nb)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] pseudo = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] loglik = np.empty(max_iters + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] wsums = np.empty(max_iters + 1)

    cdef double[:, ::1] f = dens_arr
    cdef double[::1] v = grid_arr
    cdef double[::1] cur = pi
    cdef double[::1] nxt = new_pi
    cdef double denom, ll, s, delta, d, w, inv
    cdef Py_ssize_t it, j, b, steps = 0

    for it in range(max_iters):
        ll = 0.0
        s = 0.0
        for b in range(nb):
            s += cur[b]
            nxt[b] = 0.0
        for j in range(m):
            denom = 0.0
            for b in range(nb):
                denom += cur[b] * f[j, b]
            ll += log(denom)
            inv = 1.0 / denom
            for b in range(nb):
                nxt[b] += cur[b] * f[j, b] * inv
        loglik[steps] = ll
        wsums[steps] = s
        steps += 1
        delta = 0.0
        for b in range(nb):
            nxt[b] /= m
            d = nxt[b] - cur[b]
            if d < 0.0:
                d = -d
            if d > delta:
                delta = d
            cur[b] = nxt[b]
        if delta < tol:
            break

    # Final pass with the returned weights: log-likelihood, weight sum and
    # posterior-mean pseudo-samples.
    ll = 0.0
    s = 0.0
    for b in range(nb):
        s += cur[b]
    for j in range(m):
        denom = 0.0
        for b in range(nb):
            denom += cur[b] * f[j, b]
        ll += log(denom)
        inv = 1.0 / denom
        w = 0.0
        for b in range(nb):
            w += cur[b] * f[j, b] * inv * v[b]
        pseudo[j] = w
    loglik[steps] = ll
    wsums[steps] = s
    return pi, pseudo, loglik[: steps + 1].copy(), wsums[: steps + 1].copy()


def kde_grid_eval(samples, double bandwidth, grid):
    """See ``_pykernels.kde_grid_eval``; identical contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] z_arr = \
        np.ascontiguousarray(samples, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] g_arr = \
        np.ascontiguousarray(grid, dtype=np.float64)
    if z_arr.shape[0] == 0:
        raise ValueError("samples must be non-empty")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")

    cdef Py_ssize_t m = z_arr.shape[0]
    cdef Py_ssize_t ng = g_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] out = np.empty(ng)
    cdef double[::1] z = z_arr
    cdef double[::1] g = g_arr
    cdef double[::1] o = out
    cdef double c = 1.0 / (2.0 * bandwidth * bandwidth)
    cdef double scale = 1.0 / (m * bandwidth)
    cdef double acc, d
    cdef Py_ssize_t i, j

    for i in range(ng):
        acc = 0.0
        for j in range(m):
            d = g[i] - z[j]
            acc += exp(-(d * d) * c)
        o[i] = acc * scale
    return out
