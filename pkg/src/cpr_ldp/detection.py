"""Dominant-period detection on a privatized stream.

Pipeline: slide half-overlapping windows at several probing scales, pull
period candidates out of each window's zero-padded power spectrum, validate
them in the time domain with a repeatability score, aggregate per scale
with medians, then pick the period supported across scales by a
tolerance-based consensus vote.

Everything here is deterministic: given the same series and config the
same period comes back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import PeriodDetectionError
from .signal import as_series

__all__ = [
    "DetectionConfig",
    "WindowEstimate",
    "ScaleEstimate",
    "default_detection_config",
    "window_slices",
    "preprocess_window",
    "fft_index_to_period",
    "spectral_candidates",
    "repeatability",
    "best_window_candidate",
    "scale_estimate",
    "consensus_vote",
    "detect_period",
]


@dataclass(frozen=True)
class DetectionConfig:
    """Knobs for the multi-scale detector.

    ``scales`` are window lengths (each at least twice ``t_min`` so a
    window can hold two repeats of the shortest admissible period),
    ``peak_count`` the number of spectral peaks probed per window and
    ``tolerance`` the relative period tolerance used by the consensus vote.
    """

    scales: tuple[int, ...]
    t_min: int
    t_max: int
    peak_count: int = 5
    tolerance: float = 0.1
    hann: bool = True

    def __post_init__(self):
        scales = tuple(sorted(int(s) for s in self.scales))
        object.__setattr__(self, "scales", scales)
        if not scales:
            raise ValueError("at least one probing scale is required")
        if not 2 <= self.t_min <= self.t_max:
            raise ValueError("need 2 <= t_min <= t_max")
        if any(s < 2 * self.t_min for s in scales):
            raise ValueError("every scale must be at least 2 * t_min")
        if self.peak_count < 1:
            raise ValueError("peak_count must be positive")
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")


def default_detection_config(n: int, t_min: int = 2) -> DetectionConfig:
    """Config derived from the series length.

    Scales n/8, n/4 and n/2 (clamped to at least 4*t_min), admissible
    periods up to n/3.
    """
    n = int(n)
    if n < 8 * t_min:
        raise ValueError(f"series too short for detection: n={n}")
    floor = 4 * t_min
    scales = tuple(sorted({max(n // 8, floor), max(n // 4, floor), max(n // 2, floor)}))
    return DetectionConfig(scales=scales, t_min=t_min, t_max=n // 3)


class WindowEstimate(NamedTuple):
    period: int
    score: float


class ScaleEstimate(NamedTuple):
    scale: int
    period: int
    score: float


def window_slices(values, scale: int) -> list[np.ndarray]:
    """Length-``scale`` views sliding with hop scale//2; always at least one."""
    x = as_series(values)
    scale = int(scale)
    if scale < 2:
        raise ValueError("scale must be at least 2")
    if scale > x.size:
        raise ValueError(f"scale {scale} exceeds series length {x.size}")
    hop = scale // 2
    return [x[start : start + scale] for start in range(0, x.size - scale + 1, hop)]


def preprocess_window(window, hann: bool) -> np.ndarray:
    """De-mean, then optionally taper with a Hann window."""
    z = np.asarray(window, dtype=np.float64)
    out = z - z.mean()
    if hann:
        out = out * np.hanning(z.size)
    return out


def fft_index_to_period(k: int, n_fft: int) -> int:
    """Nominal period (in samples) of positive-frequency bin ``k``."""
    return int(round(n_fft / k))


def _bin_periods(k: int, n_fft: int, t_min: int, t_max: int) -> list[int]:
    """Integer periods whose nearest bin on an ``n_fft`` grid is ``k``.

    A single bin covers the frequency band [k-1/2, k+1/2], i.e. the period
    range [n_fft/(k+1/2), n_fft/(k-1/2)].  Returning the whole covered
    range (nominal period first, then outward) lets the time-domain
    validation pick periods the round() mapping alone would quantize away.
    """
    lo = max(math.ceil(n_fft / (k + 0.5)), t_min)
    hi = min(math.floor(n_fft / (k - 0.5)), t_max)
    if lo > hi:
        return []
    nominal = fft_index_to_period(k, n_fft)
    return sorted(range(lo, hi + 1), key=lambda t: (abs(t - nominal), t))


def spectral_candidates(window, config: DetectionConfig) -> list[int]:
    """Admissible period candidates from the window's top spectral peaks.

    The (already preprocessed) window is zero-padded to the next power of
    two; non-DC bins with non-zero power are ranked by squared magnitude
    (ties to the lower bin) and the top ``peak_count`` are inverted to
    period candidates, deduplicated in rank order.
    """
    z = np.asarray(window, dtype=np.float64)
    if z.size < 2:
        raise ValueError("window must hold at least two samples")
    n_fft = 1 << (z.size - 1).bit_length()
    power = np.abs(np.fft.rfft(z, n=n_fft)) ** 2
    power = power[1 : n_fft // 2 + 1]
    order = np.argsort(-power, kind="stable")
    candidates: list[int] = []
    seen: set[int] = set()
    picked = 0
    for idx in order:
        if picked >= config.peak_count or power[idx] <= 0.0:
            break
        picked += 1
        for t in _bin_periods(int(idx) + 1, n_fft, config.t_min, config.t_max):
            if t not in seen:
                seen.add(t)
                candidates.append(t)
    return candidates


def repeatability(window, period: int) -> Optional[float]:
    """Mean adjacent cosine similarity of de-meaned consecutive segments.

    Takes the first min(3, s//period) length-``period`` segments from the
    window start.  Returns None when fewer than two segments fit.  A
    zero-variance segment carries no evidence of repetition, so its pair
    contributes similarity 0.
    """
    z = np.asarray(window, dtype=np.float64)
    period = int(period)
    if period < 1:
        raise ValueError("period must be positive")
    reps = z.size // period
    if reps < 2:
        return None
    m_seg = min(3, reps)
    segments = [z[i * period : (i + 1) * period] for i in range(m_seg)]
    segments = [s - s.mean() for s in segments]
    norms = [float(np.linalg.norm(s)) for s in segments]
    sims = []
    for a, b, na, nb in zip(segments, segments[1:], norms, norms[1:]):
        if na == 0.0 or nb == 0.0:
            sims.append(0.0)
        else:
            # rounding can push the ratio a hair past 1; keep the score in
            # its contractual [-1, 1] range so exact repeats tie exactly
            sims.append(min(1.0, max(-1.0, float(a @ b) / (na * nb))))
    return float(np.mean(sims))


def best_window_candidate(
    window, candidates: Sequence[int], config: DetectionConfig
) -> Optional[WindowEstimate]:
    """Highest-repeatability candidate; ties go to the smaller period."""
    best: Optional[WindowEstimate] = None
    for t in candidates:
        score = repeatability(window, t)
        if score is None:
            continue
        if best is None or score > best.score or (score == best.score and t < best.period):
            best = WindowEstimate(period=int(t), score=score)
    return best


def _lower_median(values: Sequence[int]) -> int:
    """Median that stays integral: the lower-middle element of an even count."""
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def scale_estimate(values, scale: int, config: DetectionConfig) -> Optional[ScaleEstimate]:
    """Median window-level period and repeatability at one probing scale.

    Windows whose candidates all fail validation contribute to neither
    median.  Returns None when no window produced an estimate.
    """
    periods: list[int] = []
    scores: list[float] = []
    for window in window_slices(values, scale):
        cands = spectral_candidates(preprocess_window(window, config.hann), config)
        est = best_window_candidate(window, cands, config)
        if est is not None:
            periods.append(est.period)
            scores.append(est.score)
    if not periods:
        return None
    return ScaleEstimate(scale=int(scale), period=_lower_median(periods), score=float(np.median(scores)))


def consensus_vote(estimates: Sequence[ScaleEstimate], config: DetectionConfig) -> int:
    """Tolerance-based vote across the per-scale period estimates.

    Candidates are the reported per-scale periods.  A scale supports
    candidate T when its estimate lies within max(1, ceil(tolerance*T)).
    Eligible candidates need a supporter on both sides of the scale-median
    split (the median scale counts as short); if none qualifies the vote
    falls back to plain maximal support.  Ties break by higher mean
    supporter repeatability, then by centrality (smaller total distance to
    the supporters, so mutually-supporting near-agreeing scales resolve to
    their middle rather than their smallest value), then by the smaller
    period.
    """
    estimates = list(estimates)
    if not estimates:
        raise ValueError("need at least one scale estimate")
    split = float(np.median([e.scale for e in estimates]))
    rows = []
    for t in sorted({e.period for e in estimates}):
        delta = max(1, math.ceil(config.tolerance * t))
        supporters = [e for e in estimates if abs(e.period - t) <= delta]
        mean_score = sum(e.score for e in supporters) / len(supporters)
        spread = sum(abs(e.period - t) for e in supporters)
        both_sides = any(e.scale <= split for e in supporters) and any(
            e.scale > split for e in supporters
        )
        rows.append((t, len(supporters), mean_score, spread, both_sides))
    eligible = [r for r in rows if r[4]]
    pool = eligible if eligible else rows
    winner = min(pool, key=lambda r: (-r[1], -r[2], r[3], r[0]))
    return winner[0]


def detect_period(values, config: DetectionConfig) -> int:
    """Full detector: per-scale estimates, then cross-scale consensus.

    Raises PeriodDetectionError when no scale yields an estimate (for
    example on a constant series); callers treat that as an incorrect
    trial rather than a crash.
    """
    x = as_series(values)
    if x.size < max(config.scales):
        raise ValueError(
            f"series length {x.size} is shorter than the largest scale {max(config.scales)}"
        )
    estimates = []
    for s in config.scales:
        est = scale_estimate(x, s, config)
        if est is not None:
            estimates.append(est)
    if not estimates:
        raise PeriodDetectionError("no probing scale produced a period estimate")
    return consensus_vote(estimates, config)
