"""Riskless and risky asset construction.

The risky price is built in its exponential closed form
Y_t = Y_0 exp(nu t + I_t) with I the left-point running integral of sigma
against the modulator; the direct Euler recursion on the price SDE exists
only as a refinement consistency check. The stored I is reused verbatim by
the strategy layer so that self-financing residuals measure trading
discretization, not price reconstruction drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .calculus import stieltjes_integral
from .errors import DomainError, GridMismatchError, InvariantError, NumericOverflowError
from .paths import ConvergenceReport, Partition, SamplePath
from .volatility import VolPath

__all__ = [
    "MarketParams",
    "MarketPaths",
    "riskless_path",
    "price_path",
    "discretized_sde_consistency",
]


@dataclass(frozen=True)
class MarketParams:
    """Drift nu, riskless rate r, initial price y0 and horizon."""

    nu: float
    r: float
    y0: float
    horizon: float

    def __post_init__(self):
        if self.y0 <= 0:
            raise DomainError(f"y0 must be > 0, got {self.y0}")
        if self.horizon <= 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")


@dataclass(frozen=True)
class MarketPaths:
    """All market columns on one shared grid."""

    riskless: SamplePath
    risky: SamplePath
    log_integral: SamplePath
    modulator: SamplePath
    vol: VolPath
    params: MarketParams

    def __post_init__(self):
        for other in (self.risky, self.log_integral, self.modulator, self.vol.path):
            if not np.array_equal(self.riskless.times, other.times):
                raise GridMismatchError("market columns live on different grids")
        if not np.all(self.risky.values > 0):
            raise InvariantError("risky prices must be strictly positive")

    @property
    def times(self) -> np.ndarray:
        return self.riskless.times


def riskless_path(params: MarketParams, grid: Partition) -> SamplePath:
    """X_t = exp(r t) at every grid point."""
    return SamplePath(grid.times, np.exp(params.r * grid.times))


def price_path(params: MarketParams, vol: VolPath, z: SamplePath) -> MarketPaths:
    """Build Y_t = y0 exp(nu t + I_t), I = running left-point sum of sigma dZ.

    Positivity is structural (exponential form). A non-finite exponent is
    reported with the first offending grid time.
    """
    vol.path.require_same_grid(z)
    integral = stieltjes_integral(vol.path, z)
    exponent = params.nu * z.times + integral.values
    bad = ~np.isfinite(exponent)
    if np.any(bad):
        t_bad = z.times[np.argmax(bad)]
        raise NumericOverflowError(
            f"price exponent is non-finite starting at t={t_bad}"
        )
    with np.errstate(over="ignore"):
        risky_values = params.y0 * np.exp(exponent)
    bad = ~np.isfinite(risky_values)
    if np.any(bad):
        t_bad = z.times[np.argmax(bad)]
        raise NumericOverflowError(f"price overflowed at t={t_bad}")
    grid = Partition(z.times)
    return MarketPaths(
        riskless=riskless_path(params, grid),
        risky=SamplePath(z.times, risky_values),
        log_integral=integral,
        modulator=z,
        vol=vol,
        params=params,
    )


def _dyadic_strides(num_intervals: int, levels: Optional[Sequence[int]]):
    if levels is None:
        max_level = int(np.log2(num_intervals))
        if 2**max_level != num_intervals:
            raise InvariantError(
                "default levels need a power-of-two fine grid; pass levels explicitly"
            )
        levels = list(range(max(2, max_level - 6), max_level + 1))
    out = []
    for level in levels:
        n = 2**level
        if n > num_intervals or num_intervals % n != 0:
            raise InvariantError(f"level {level} does not nest in the fine grid")
        out.append((level, num_intervals // n))
    return out


def discretized_sde_consistency(
    paths: MarketPaths, levels: Optional[Sequence[int]] = None
) -> ConvergenceReport:
    """Exponential-form price against the direct Euler recursion per level.

    For each dyadic level the fine sigma and Z are subsampled and the
    recursion Y_{i+1} = Y_i (1 + nu dt + sigma_i dZ_i) is compared with the
    closed form at that level's times; the report carries the max relative
    gap per level. An Euler path hitting <= 0 (possible on coarse grids
    with large dZ) records an infinite gap for that level, not a crash.
    """
    n_fine = paths.risky.num_intervals
    params = paths.params
    sizes, residuals = [], []
    for level, stride in _dyadic_strides(n_fine, levels):
        z = paths.modulator.subsample(stride)
        sigma = paths.vol.path.subsample(stride)
        exact = paths.risky.subsample(stride)
        dt = np.diff(z.times)
        euler, first_nonpos = _kernels.euler_price(
            params.y0, params.nu, dt, sigma.values[:-1], z.increments()
        )
        if first_nonpos >= 0:
            gap = np.inf
        else:
            gap = float(np.max(np.abs(euler - exact.values) / exact.values))
        sizes.append(2**level)
        residuals.append(gap)
    return ConvergenceReport.from_residuals(sizes, residuals)
