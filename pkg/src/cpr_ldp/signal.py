"""Value-level series primitives shared by every pipeline stage.

All functions are pure, operate on 1-D float64 arrays and never touch an
RNG, so they are safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_series",
    "normalize",
    "period_loss",
    "mirror_pad",
    "tile_crop",
    "cosine_distance",
    "resample_linear",
]


def as_series(values, name: str = "series") -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 array.

    Raises ValueError for empty input, non-1-D shapes or NaN/Inf elements.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def normalize(values) -> np.ndarray:
    """Affinely map a raw series onto [0, 1].

    The minimum maps to 0 and the maximum to 1.  A constant series has no
    usable range and maps to 0.5 everywhere, which keeps downstream
    perturbation well-defined mid-domain.
    """
    x = as_series(values)
    lo = float(x.min())
    hi = float(x.max())
    if hi == lo:
        return np.full_like(x, 0.5)
    return (x - lo) / (hi - lo)


def period_loss(values, period: int) -> float:
    """Mean squared discrepancy between the series and itself shifted by ``period``.

    Zero iff the series repeats exactly with that lag.
    """
    x = as_series(values)
    period = int(period)
    if not 1 <= period < x.size:
        raise ValueError(f"period must be in [1, {x.size - 1}], got {period}")
    d = x[:-period] - x[period:]
    return float(np.mean(d * d))


def mirror_pad(values, pad: int) -> np.ndarray:
    """Reflect ``pad`` samples on both ends, excluding the boundary sample.

    ``[1, 2, 3, 4]`` with ``pad=2`` becomes ``[3, 2, 1, 2, 3, 4, 3, 2]``.
    """
    x = as_series(values)
    pad = int(pad)
    if pad < 0:
        raise ValueError("pad must be non-negative")
    if pad > x.size - 1:
        raise ValueError(f"pad must be at most n-1 = {x.size - 1}, got {pad}")
    if pad == 0:
        return x.copy()
    return np.pad(x, pad, mode="reflect")


def tile_crop(template, length: int) -> np.ndarray:
    """Tile a cycle template and crop the result to ``length`` samples."""
    r = as_series(template, name="template")
    length = int(length)
    if length < 1:
        raise ValueError("length must be positive")
    reps = -(-length // r.size)
    return np.tile(r, reps)[:length].copy()


def cosine_distance(a, b) -> float:
    """1 minus the cosine similarity of two equal-length vectors.

    Computed on the vectors as given (no de-meaning), so the result is
    invariant to positive rescaling but not to offsets.
    """
    va = as_series(a, name="a")
    vb = as_series(b, name="b")
    if va.size != vb.size:
        raise ValueError(f"length mismatch: {va.size} vs {vb.size}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance is undefined for a zero vector")
    return float(1.0 - float(va @ vb) / (na * nb))


def resample_linear(values, count: int) -> np.ndarray:
    """Linearly resample a series at ``count`` equispaced positions.

    The positions span the original index range, so both endpoints are
    preserved exactly and ``count == len(values)`` is an identity.
    """
    x = as_series(values)
    count = int(count)
    if x.size < 2 or count < 2:
        raise ValueError("resampling needs at least two input and output points")
    positions = np.linspace(0.0, x.size - 1, count)
    return np.interp(positions, np.arange(x.size), x)
