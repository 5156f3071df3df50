"""Phase recovery: per-phase pooling, EM decoding, KDE-mode summarization.

Given a detected period T, the privatized stream is mirror-padded by T-1 on
both sides so every within-cycle phase collects the same number of repeats,
each phase group is decoded with an EM tailored to the square-wave channel,
and the decoded pseudo-samples are summarized by the mode of a 1-D KDE.
Tiling the resulting template reconstructs the stream.

All of this is post-processing: it only ever sees the privatized series,
so it consumes no additional privacy budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import em_decode, kde_grid_eval
from .detection import DetectionConfig, default_detection_config, detect_period
from .mechanisms import (
    BudgetSplit,
    SwParams,
    split_budget,
    sw_params,
    sw_perturb_series,
)
from .signal import as_series, mirror_pad, normalize, tile_crop

__all__ = [
    "EmConfig",
    "EmResult",
    "PhaseGroups",
    "em_grid",
    "sw_cell_channel",
    "phase_groups",
    "em_sw_decode",
    "kde_density",
    "kde_mode",
    "silverman_bandwidth",
    "reconstruct_template",
    "cpr_recover",
    "cpr_reconstruct",
]


@dataclass(frozen=True)
class EmConfig:
    """EM decoding knobs: grid resolution and iteration control.

    The iteration cap doubles as regularization: phase pools hold only a
    few dozen samples, and running the mixture EM to full convergence on
    so little data overfits the pmf to sampling noise, which measurably
    hurts the reconstructed templates.  Twenty iterations keeps
    concentrated (informative) pools sharp while leaving weakly-informed
    pools close to their smooth early iterates.
    """

    grid_size: int = 256
    max_iters: int = 20
    tol: float = 1e-6

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class EmResult:
    """Final pmf, posterior-mean pseudo-samples and per-iteration traces."""

    pmf: np.ndarray
    pseudo_samples: np.ndarray
    loglik: np.ndarray
    pmf_sums: np.ndarray

    @property
    def iterations(self) -> int:
        return self.loglik.size - 1


@dataclass(frozen=True)
class PhaseGroups:
    """Per-phase pools of privatized values, each with ``repeats`` entries."""

    period: int
    repeats: int
    groups: list = field(repr=False)


def em_grid(grid_size: int) -> np.ndarray:
    """Cell midpoints (b - 1/2) / B of the latent grid on [0, 1]."""
    b = int(grid_size)
    return (np.arange(1, b + 1) - 0.5) / b


def sw_cell_channel(params: SwParams, observations: np.ndarray, grid_size: int) -> np.ndarray:
    """Two-level channel averaged over each observation's grid cell.

    Entry (j, b) is the mean of the conditional density y -> f(y | v_b)
    over the width-1/B cell containing observation j.  For intervals much
    wider than a cell this matches evaluating the density at the midpoint;
    when the high-probability interval is narrower than a cell (large
    eps0), midpoint evaluation almost surely misses it and would leave
    every observation uninformative, while the cell average keeps the
    concentrated mass visible to the decoder.  The common rescaling factor
    still cancels in the EM responsibilities.
    """
    b = int(grid_size)
    cell_width = 1.0 / b
    grid = em_grid(b)
    half = params.half_width
    width = 2.0 * half
    lo = np.clip(grid - half, 0.0, 1.0 - width)
    hi = lo + width
    cells = np.minimum((observations * b).astype(np.int64), b - 1)
    cell_lo = cells * cell_width
    cell_hi = cell_lo + cell_width
    # overlap = width minus the parts cut off by the cell edges; phrasing it
    # this way keeps a width far below one ulp of the coordinates from
    # cancelling away.
    cut_left = np.maximum(0.0, cell_lo[:, None] - lo[None, :])
    cut_right = np.maximum(0.0, hi[None, :] - cell_hi[:, None])
    overlap = np.maximum(0.0, width - cut_left - cut_right)
    return params.level_low + (params.level_high - params.level_low) * (overlap / cell_width)


def phase_groups(values, period: int) -> PhaseGroups:
    """Pool the padded stream by within-cycle phase.

    Mirror-pads by period-1 on both sides, then phase i collects padded
    positions i, i+T, ... for repeats = floor(padded_length / T) cycles.
    The groups partition the first repeats*T padded positions exactly.
    """
    x = as_series(values)
    period = int(period)
    if not 1 <= period <= x.size:
        raise ValueError(f"period must be in [1, {x.size}], got {period}")
    padded = mirror_pad(x, period - 1)
    repeats = padded.size // period
    groups = [padded[i : i + repeats * period : period].copy() for i in range(period)]
    return PhaseGroups(period=period, repeats=repeats, groups=groups)


def em_sw_decode(observations, params: SwParams, config: EmConfig) -> EmResult:
    """Decode square-wave outputs into a latent pmf and pseudo-samples.

    Starts from a uniform pmf on the grid midpoints and iterates the
    standard responsibility/mean updates until the pmf moves less than
    ``tol`` or ``max_iters`` is reached.  The common density rescaling
    cancels inside the responsibilities, so decoding is unaffected by it.
    """
    y = as_series(observations, name="observations")
    if y.min() < 0.0 or y.max() > 1.0:
        raise ValueError("observations must lie in [0, 1]")
    grid = em_grid(config.grid_size)
    dens = sw_cell_channel(params, y, config.grid_size)
    pmf, pseudo, loglik, sums = em_decode(dens, grid, config.max_iters, config.tol)
    return EmResult(pmf=pmf, pseudo_samples=pseudo, loglik=loglik, pmf_sums=sums)


def kde_density(samples, bandwidth: float, x) -> float | np.ndarray:
    """Gaussian-kernel density estimate at ``x`` (scalar or array).

    Plain exp(-(x-z)^2 / (2 h^2)) kernel scaled by 1/(m h); the missing
    Gaussian constant rescales uniformly and cannot move the mode.
    """
    z = as_series(samples, name="samples")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    pts = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = kde_grid_eval(z, float(bandwidth), pts)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def silverman_bandwidth(samples) -> float:
    """1.06 * std * m^(-1/5); zero when the samples are all identical."""
    z = as_series(samples, name="samples")
    return float(1.06 * np.std(z) * z.size ** (-0.2))


def kde_mode(
    samples,
    grid_size: int = 512,
    bandwidth: float | None = None,
    bandwidth_floor: float | None = None,
) -> float:
    """Argmax of the KDE over a dense grid on [0, 1]; ties to the smaller x.

    Bandwidth defaults to Silverman's rule floored at ``bandwidth_floor``
    (1/1024 unless given), which keeps the dense-grid search meaningful
    when the samples are degenerate or nearly so.
    """
    z = as_series(samples, name="samples")
    if bandwidth is None:
        floor = 1.0 / 1024.0 if bandwidth_floor is None else float(bandwidth_floor)
        bandwidth = max(silverman_bandwidth(z), floor)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(0.0, 1.0, int(grid_size))
    density = kde_grid_eval(z, float(bandwidth), grid)
    return float(grid[int(np.argmax(density))])


def reconstruct_template(pg: PhaseGroups, params: SwParams, config: EmConfig) -> np.ndarray:
    """Per-phase EM decode followed by KDE-mode summarization.

    Groups are indexed on the padded stream, whose left pad is period-1
    samples long, so group i holds the samples one within-cycle position
    ahead of original phase i; the assembled template is rotated one slot
    so entry i lines up with original phase i when tiled back.
    """
    floor = 1.0 / (4.0 * config.grid_size)
    values = np.empty(pg.period)
    for i, group in enumerate(pg.groups):
        decoded = em_sw_decode(group, params, config)
        values[i] = kde_mode(decoded.pseudo_samples, bandwidth_floor=floor)
    return np.roll(values, 1)


def cpr_recover(
    privatized,
    params: SwParams,
    detection: DetectionConfig,
    em: EmConfig,
) -> tuple[np.ndarray, int]:
    """Server-side recovery from a privatized stream only.

    Detects the dominant period, reconstructs the cycle template and tiles
    it back to the stream length.  Raises PeriodDetectionError when
    detection fails outright.
    """
    x_priv = as_series(privatized, name="privatized")
    period = detect_period(x_priv, detection)
    pg = phase_groups(x_priv, period)
    template = reconstruct_template(pg, params, em)
    return tile_crop(template, x_priv.size), period


def cpr_reconstruct(
    raw,
    epsilon: float,
    window: int,
    detection: DetectionConfig | None = None,
    em: EmConfig | None = None,
    rng=None,
) -> tuple[np.ndarray, int]:
    """End-to-end pipeline from a raw series to its reconstruction.

    Device side: normalize and perturb each sample with the square-wave
    randomizer at eps0 = epsilon / window.  Server side: cpr_recover on the
    privatized stream alone.  The raw series is never read past the
    perturbation step.
    """
    x = normalize(raw)
    budget: BudgetSplit = split_budget(epsilon, window)
    params = sw_params(budget.eps0)
    x_priv = sw_perturb_series(x, budget, rng)
    det = detection if detection is not None else default_detection_config(x.size)
    em_cfg = em if em is not None else EmConfig()
    return cpr_recover(x_priv, params, det, em_cfg)
