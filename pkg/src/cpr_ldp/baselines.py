"""Comparison methods: direct/smoothed square-wave, Laplace, and an
adaptive-budget publisher.

Every baseline maps (raw series, epsilon, window, rng) to a reconstruction
of the same length under the same w-event accounting as the main pipeline:
per-event mechanisms spend epsilon/window per release, the adaptive
publisher keeps an explicit spend ledger capped at epsilon per window.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mechanisms import as_generator, laplace_perturb_series, split_budget, sw_perturb_series
from .signal import mirror_pad, normalize

__all__ = [
    "BaselineConfig",
    "LbdRun",
    "moving_average",
    "gaussian_smooth",
    "baseline_sw_direct",
    "baseline_sw_moving",
    "baseline_sw_filter",
    "baseline_laplace_smooth",
    "baseline_lbd",
    "lbd_publish",
]


@dataclass(frozen=True)
class BaselineConfig:
    moving_window: int = 9
    filter_sigma: float = 2.0
    laplace_smooth_window: int = 9
    lbd_threshold_frac: float = 0.5

    def __post_init__(self):
        for name in ("moving_window", "laplace_smooth_window"):
            value = getattr(self, name)
            if value < 1 or value % 2 == 0:
                raise ValueError(f"{name} must be an odd positive integer")
        if self.filter_sigma <= 0:
            raise ValueError("filter_sigma must be positive")
        if not 0.0 < self.lbd_threshold_frac < 1.0:
            raise ValueError("lbd_threshold_frac must lie in (0, 1)")


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average with mirror-reflected edges."""
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be an odd positive integer")
    if window == 1:
        return np.asarray(values, dtype=np.float64).copy()
    radius = window // 2
    padded = mirror_pad(values, radius)
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


def gaussian_smooth(values, sigma: float) -> np.ndarray:
    """Gaussian convolution truncated at 4 sigma, mirror edges, unit-sum kernel."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(round(4.0 * sigma))
    if radius == 0:
        return np.asarray(values, dtype=np.float64).copy()
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    padded = mirror_pad(values, radius)
    return np.convolve(padded, kernel, mode="valid")


def baseline_sw_direct(raw, epsilon: float, window: int, rng) -> np.ndarray:
    """Perturbed stream taken as the reconstruction."""
    budget = split_budget(epsilon, window)
    return sw_perturb_series(normalize(raw), budget, rng)


def baseline_sw_moving(raw, epsilon: float, window: int, cfg: BaselineConfig, rng) -> np.ndarray:
    """Square-wave perturbation followed by moving-average smoothing."""
    return moving_average(baseline_sw_direct(raw, epsilon, window, rng), cfg.moving_window)


def baseline_sw_filter(raw, epsilon: float, window: int, cfg: BaselineConfig, rng) -> np.ndarray:
    """Square-wave perturbation followed by Gaussian-filter smoothing."""
    return gaussian_smooth(baseline_sw_direct(raw, epsilon, window, rng), cfg.filter_sigma)


def baseline_laplace_smooth(raw, epsilon: float, window: int, cfg: BaselineConfig, rng) -> np.ndarray:
    """Per-event Laplace noise, moving-average smoothing, then clipping."""
    budget = split_budget(epsilon, window)
    noisy = laplace_perturb_series(normalize(raw), budget, rng)
    return np.clip(moving_average(noisy, cfg.laplace_smooth_window), 0.0, 1.0)


class LbdRun(NamedTuple):
    """Published stream plus the spend ledger needed for budget audits."""

    values: np.ndarray
    probe_spend: float
    publish_spends: np.ndarray


def _laplace_var(eps: float) -> float:
    return 2.0 / (eps * eps) if eps > 0 else math.inf


def lbd_publish(unit_series, epsilon: float, window: int, cfg: BaselineConfig, rng) -> LbdRun:
    """Adaptive-budget publisher over a normalized stream.

    Half the window budget pays for a constant per-step Laplace probe that
    estimates how far the stream has drifted from the last published value;
    the other half is a bank for publications.  A step publishes (spending
    half the remaining bank) only when the debiased squared change exceeds
    ``lbd_threshold_frac`` of the combined probe + publication error
    variance; otherwise the previous value is republished for free.  By
    construction the spends inside any length-``window`` stretch never
    exceed epsilon.
    """
    x = np.asarray(unit_series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a non-empty 1-D sequence")
    epsilon = float(epsilon)
    window = int(window)
    if epsilon <= 0 or window < 1:
        raise ValueError("need positive epsilon and window")
    gen = as_generator(rng)

    probe_eps = epsilon / (2.0 * window)
    probe_var = _laplace_var(probe_eps)
    bank = epsilon / 2.0
    recent: deque[float] = deque(maxlen=window - 1) if window > 1 else deque(maxlen=0)

    out = np.empty(x.size)
    spends = np.zeros(x.size)
    last = 0.0
    for t in range(x.size):
        probe = x[t] + gen.laplace(0.0, 1.0 / probe_eps)
        remaining = bank - sum(recent)
        publish_eps = remaining / 2.0 if remaining > 0 else 0.0
        if t == 0:
            publish = publish_eps > 0
        else:
            drift = max((probe - last) ** 2 - probe_var, 0.0)
            threshold = cfg.lbd_threshold_frac * (probe_var + _laplace_var(publish_eps))
            publish = publish_eps > 0 and drift > threshold
        if publish:
            last = x[t] + gen.laplace(0.0, 1.0 / publish_eps)
            spends[t] = publish_eps
            recent.append(publish_eps)
        else:
            recent.append(0.0)
        out[t] = last
    return LbdRun(values=out, probe_spend=probe_eps, publish_spends=spends)


def baseline_lbd(raw, epsilon: float, window: int, cfg: BaselineConfig, rng) -> np.ndarray:
    """Adaptive-budget publisher baseline, clipped to the unit range."""
    run = lbd_publish(normalize(raw), epsilon, window, cfg, rng)
    return np.clip(run.values, 0.0, 1.0)
