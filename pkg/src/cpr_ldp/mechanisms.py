"""Local randomizers and streaming privacy-budget accounting.

The square-wave (SW) randomizer emits a value from a two-level density on
[0, 1]: a high level on an interval near the true value and a low level
elsewhere.  With the interval clipped to stay inside [0, 1], the textbook
(b, p, q) closed forms integrate to slightly less than one, so both levels
are rescaled by a common ``norm_factor``.  The common factor preserves the
high/low ratio exp(eps0) - the quantity the per-event guarantee and the EM
decoder depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BudgetSplit",
    "SwParams",
    "as_generator",
    "split_budget",
    "sw_params",
    "sw_interval",
    "sw_density",
    "sw_density_matrix",
    "sw_perturb",
    "sw_perturb_series",
    "laplace_perturb_series",
]


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class BudgetSplit:
    """Even split of a window budget into per-event shares.

    Releasing each event with an eps0-LDP randomizer makes every length-w
    window of releases (w * eps0)-LDP by sequential composition, so
    eps0 = epsilon / w meets the window target exactly.
    """

    epsilon: float
    window: int
    eps0: float


def split_budget(epsilon: float, window: int) -> BudgetSplit:
    epsilon = float(epsilon)
    window = int(window)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if window < 1:
        raise ValueError("window must be a positive integer")
    return BudgetSplit(epsilon=epsilon, window=window, eps0=epsilon / window)


@dataclass(frozen=True)
class SwParams:
    """Square-wave randomizer parameters for a per-event budget eps0.

    ``half_width`` is the half-width of the high-probability interval,
    ``density_high``/``density_low`` are the raw two-level densities and
    ``norm_factor`` the common rescaling that makes the clipped density
    integrate to one.
    """

    eps0: float
    half_width: float
    density_high: float
    density_low: float
    norm_factor: float

    @property
    def level_high(self) -> float:
        return self.density_high * self.norm_factor

    @property
    def level_low(self) -> float:
        return self.density_low * self.norm_factor

    @property
    def inside_mass(self) -> float:
        """Probability that a perturbed value lands inside the interval."""
        return 2.0 * self.half_width * self.level_high


def sw_params(eps0: float) -> SwParams:
    """Closed-form square-wave parameters for a per-event budget."""
    eps0 = float(eps0)
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    e = math.exp(eps0)
    # expm1 keeps the small-eps0 cancellations accurate.
    num = eps0 * e - math.expm1(eps0)
    den = 2.0 * e * (math.expm1(eps0) - eps0)
    b = num / den
    q = 1.0 / (2.0 * b * e + 1.0)
    p = e * q
    total_mass = 2.0 * b * p + (1.0 - 2.0 * b) * q
    norm = 1.0 / total_mass
    if not (0.0 < b <= 0.5 and p > q > 0.0):
        raise ValueError(f"square-wave parameters degenerate at eps0={eps0}")
    return SwParams(eps0=eps0, half_width=b, density_high=p, density_low=q, norm_factor=norm)


def sw_interval(params: SwParams, x: float) -> tuple[float, float]:
    """High-probability interval for true value ``x``, shifted to fit [0, 1]."""
    b = params.half_width
    if x < b:
        return 0.0, 2.0 * b
    if x > 1.0 - b:
        return 1.0 - 2.0 * b, 1.0
    return x - b, x + b


def _interval_bounds(params: SwParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = params.half_width
    lo = np.clip(x - b, 0.0, 1.0 - 2.0 * b)
    return lo, lo + 2.0 * b


def _check_unit(value: np.ndarray | float, name: str) -> None:
    arr = np.asarray(value, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")


def sw_density(params: SwParams, y: float, x: float) -> float:
    """Normalized conditional density of output ``y`` given true value ``x``."""
    _check_unit(y, "y")
    _check_unit(x, "x")
    lo, hi = sw_interval(params, float(x))
    return params.level_high if lo <= y <= hi else params.level_low


def sw_density_matrix(params: SwParams, y, x) -> np.ndarray:
    """Density of each output in ``y`` (rows) against each true value in ``x`` (columns)."""
    ya = np.asarray(y, dtype=np.float64).reshape(-1)
    xa = np.asarray(x, dtype=np.float64).reshape(-1)
    _check_unit(ya, "y")
    _check_unit(xa, "x")
    lo, hi = _interval_bounds(params, xa)
    inside = (ya[:, None] >= lo[None, :]) & (ya[:, None] <= hi[None, :])
    return np.where(inside, params.level_high, params.level_low)


def sw_perturb(params: SwParams, x: float, rng) -> float:
    """Draw one square-wave output for true value ``x``.

    Consumes exactly two uniforms (branch, position), so a scalar loop and
    the vectorized series version produce identical streams.
    """
    x = float(x)
    _check_unit(x, "x")
    gen = as_generator(rng)
    u = gen.random(2)
    lo, hi = sw_interval(params, x)
    width = hi - lo
    if u[0] < params.inside_mass:
        return float(lo + u[1] * width)
    t = u[1] * (1.0 - width)
    return float(t if t < lo else t + width)


def sw_perturb_series(values, budget: BudgetSplit, rng) -> np.ndarray:
    """Apply the square-wave randomizer independently at every position."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a non-empty 1-D sequence")
    _check_unit(x, "series")
    params = sw_params(budget.eps0)
    gen = as_generator(rng)
    u = gen.random((x.size, 2))
    lo, hi = _interval_bounds(params, x)
    width = hi - lo
    inside = lo + u[:, 1] * width
    t = u[:, 1] * (1.0 - width)
    outside = np.where(t < lo, t, t + width)
    return np.where(u[:, 0] < params.inside_mass, inside, outside)


def laplace_perturb_series(values, budget: BudgetSplit, rng) -> np.ndarray:
    """Add per-event Laplace noise with sensitivity 1 on the unit domain.

    The output is intentionally not clipped; clipping before smoothing
    would bias the mean, so baselines clip after their smoothing step.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a non-empty 1-D sequence")
    _check_unit(x, "series")
    gen = as_generator(rng)
    return x + gen.laplace(0.0, 1.0 / budget.eps0, size=x.size)
