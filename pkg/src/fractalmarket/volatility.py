"""Volatility process simulation.

Two admissible families: continuous semimartingales driven by an
independent Brownian motion (constant, CIR-variance, lognormal-variance,
mean-reverting OU) and pointwise functions of the modulator itself.
Discretization is Euler-Maruyama at the market grid, except the lognormal
variance which steps its geometric Brownian motion exactly in log space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels
from .calculus import PhiFunction
from .errors import ConfigError, DomainError
from .paths import Partition, SamplePath

__all__ = [
    "ConstantVol",
    "HestonVol",
    "HullWhiteVol",
    "SteinSteinVol",
    "FunctionOfModulatorVol",
    "VolatilityModel",
    "VolPath",
    "simulate_volatility",
    "integrability_check",
]


@dataclass(frozen=True)
class ConstantVol:
    level: float

    def __post_init__(self):
        if self.level < 0:
            raise DomainError(f"constant volatility level must be >= 0, got {self.level}")


@dataclass(frozen=True)
class HestonVol:
    """CIR variance dv = kappa(theta - v)dt + xi sqrt(v) dB, sigma = sqrt(v+)."""

    v0: float
    kappa: float
    theta: float
    xi: float

    def __post_init__(self):
        if self.v0 <= 0:
            raise DomainError(f"v0 must be > 0, got {self.v0}")
        for name in ("kappa", "theta", "xi"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class HullWhiteVol:
    """Lognormal variance dV = V(mu dt + nu_vol dB), sigma = sqrt(V)."""

    sigma0: float
    mu: float
    nu_vol: float

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise DomainError(f"sigma0 must be > 0, got {self.sigma0}")
        if self.nu_vol < 0:
            raise DomainError(f"nu_vol must be >= 0, got {self.nu_vol}")


@dataclass(frozen=True)
class SteinSteinVol:
    """OU volatility dsigma = kappa(theta - sigma)dt + beta dB."""

    sigma0: float
    kappa: float
    theta: float
    beta: float

    def __post_init__(self):
        if self.kappa < 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class FunctionOfModulatorVol:
    """sigma_t = phi(Z_t), a pointwise C^1 function of the modulator."""

    phi: PhiFunction


VolatilityModel = Union[
    ConstantVol, HestonVol, HullWhiteVol, SteinSteinVol, FunctionOfModulatorVol
]


@dataclass(frozen=True)
class VolPath:
    """A simulated volatility path plus recorded SDE diagnostics.

    drift_abs_integral and diffusion_sq_integral accumulate
    sum |mu_W| dt and sum sigma_W^2 dt at left endpoints during
    simulation (both zero for non-SDE kinds); `state` carries the raw
    driven state (variance for the CIR/lognormal kinds).
    """

    path: SamplePath
    driver_seed: object
    model: VolatilityModel
    drift_abs_integral: float = 0.0
    diffusion_sq_integral: float = 0.0
    state: Optional[np.ndarray] = None

    def subsample(self, stride: int) -> "VolPath":
        """Coarse view of the same path; integrals stay those of the
        generation grid."""
        return VolPath(
            path=self.path.subsample(stride),
            driver_seed=self.driver_seed,
            model=self.model,
            drift_abs_integral=self.drift_abs_integral,
            diffusion_sq_integral=self.diffusion_sq_integral,
        )


def _brownian_increments(grid: Partition, rng) -> np.ndarray:
    return rng.standard_normal(grid.num_intervals) * np.sqrt(np.diff(grid.times))


def simulate_volatility(
    model: VolatilityModel,
    grid: Partition,
    seed,
    z_path: Optional[SamplePath] = None,
) -> VolPath:
    """Simulate sigma on the grid.

    SDE kinds draw their own Brownian driver from `seed`; independence from
    the modulator is the caller's responsibility (distinct substreams).
    Function-of-modulator kind requires `z_path` on the same grid and
    ignores the seed entirely.
    """
    if isinstance(model, FunctionOfModulatorVol):
        if z_path is None:
            raise ConfigError(
                "function-of-modulator volatility requires z_path on the market grid"
            )
        if not np.array_equal(z_path.times, grid.times):
            raise ConfigError("z_path grid does not match the requested grid")
        values = np.asarray(model.phi.phi(z_path.values), dtype=np.float64)
        return VolPath(
            path=SamplePath(grid.times, values), driver_seed=None, model=model
        )
    if z_path is not None:
        raise ConfigError("z_path is only accepted for function-of-modulator volatility")

    times = grid.times
    n = grid.num_intervals
    dt = np.diff(times)
    rng = np.random.default_rng(seed)

    if isinstance(model, ConstantVol):
        values = np.full(n + 1, model.level, dtype=np.float64)
        return VolPath(path=SamplePath(times, values), driver_seed=seed, model=model)

    db = _brownian_increments(grid, rng)
    if isinstance(model, HestonVol):
        v, drift_abs, diff_sq = _kernels.heston_full_truncation(
            model.v0, model.kappa, model.theta, model.xi, dt, db
        )
        sigma = np.sqrt(np.maximum(v, 0.0))
        return VolPath(
            path=SamplePath(times, sigma),
            driver_seed=seed,
            model=model,
            drift_abs_integral=drift_abs,
            diffusion_sq_integral=diff_sq,
            state=v,
        )
    if isinstance(model, HullWhiteVol):
        # Exact geometric-Brownian step on V = sigma^2; no Euler error here.
        v0 = model.sigma0**2
        log_steps = (model.mu - 0.5 * model.nu_vol**2) * dt + model.nu_vol * db
        v = np.empty(n + 1, dtype=np.float64)
        v[0] = v0
        v[1:] = v0 * np.exp(np.cumsum(log_steps))
        left = v[:-1]
        drift_abs = float(np.sum(np.abs(model.mu * left) * dt))
        diff_sq = float(np.sum((model.nu_vol * left) ** 2 * dt))
        return VolPath(
            path=SamplePath(times, np.sqrt(v)),
            driver_seed=seed,
            model=model,
            drift_abs_integral=drift_abs,
            diffusion_sq_integral=diff_sq,
            state=v,
        )
    if isinstance(model, SteinSteinVol):
        sigma, drift_abs, diff_sq = _kernels.ou_euler(
            model.sigma0, model.kappa, model.theta, model.beta, dt, db
        )
        return VolPath(
            path=SamplePath(times, sigma),
            driver_seed=seed,
            model=model,
            drift_abs_integral=drift_abs,
            diffusion_sq_integral=diff_sq,
        )
    raise ConfigError(f"unknown volatility model {type(model).__name__}")


def integrability_check(vol: VolPath, mu_bound: float, sigma2_bound: float) -> bool:
    """True when the recorded discrete drift/diffusion integrals are finite
    and below the supplied bounds; a non-finite path value also fails."""
    if not np.all(np.isfinite(vol.path.values)):
        return False
    drift = vol.drift_abs_integral
    diff = vol.diffusion_sq_integral
    if not (np.isfinite(drift) and np.isfinite(diff)):
        return False
    return drift <= mu_bound and diff <= sigma2_bound
