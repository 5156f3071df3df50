"""NumPy reference implementations of the hot kernels."""

from __future__ import annotations

import numpy as np

__all__ = ["em_decode", "kde_grid_eval"]


def em_decode(dens, grid, max_iters: int, tol: float):
    """Mixture-weight EM over a fixed component-density matrix.

    Args:
        dens: (m, B) density of observation j under component b, all > 0.
        grid: (B,) component locations.
        max_iters: iteration cap.
        tol: stop once the max absolute weight change falls below this.

    Returns:
        (weights, pseudo, loglik, weight_sums) where ``weights`` is the
        final mixture pmf, ``pseudo`` the posterior-mean pseudo-sample per
        observation, and the traces hold one entry per started iteration
        plus a final entry for the returned state.
    """
    dens = np.ascontiguousarray(dens, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    if dens.ndim != 2 or dens.shape[0] < 1 or dens.shape[1] != grid.size:
        raise ValueError("dens must be (m, B) with B matching the grid")
    m, b = dens.shape
    pi = np.full(b, 1.0 / b)
    loglik = []
    weight_sums = []
    for _ in range(int(max_iters)):
        weighted = dens * pi
        denom = weighted.sum(axis=1)
        loglik.append(float(np.log(denom).sum()))
        weight_sums.append(float(pi.sum()))
        new_pi = (weighted / denom[:, None]).mean(axis=0)
        delta = float(np.abs(new_pi - pi).max())
        pi = new_pi
        if delta < tol:
            break
    weighted = dens * pi
    denom = weighted.sum(axis=1)
    loglik.append(float(np.log(denom).sum()))
    weight_sums.append(float(pi.sum()))
    resp = weighted / denom[:, None]
    pseudo = resp @ grid
    return pi, pseudo, np.asarray(loglik), np.asarray(weight_sums)


def kde_grid_eval(samples, bandwidth: float, grid) -> np.ndarray:
    """Evaluate the Gaussian-kernel density estimate on a grid.

    Uses the plain exp(-(x - z)^2 / (2 h^2)) kernel scaled by 1 / (m h);
    no Gaussian normalizing constant, which leaves the argmax unchanged.
    """
    z = np.ascontiguousarray(samples, dtype=np.float64)
    g = np.ascontiguousarray(grid, dtype=np.float64)
    if z.size == 0:
        raise ValueError("samples must be non-empty")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    diff = g[:, None] - z[None, :]
    out = np.exp(-(diff * diff) / (2.0 * bandwidth * bandwidth)).sum(axis=1)
    return out / (z.size * bandwidth)
