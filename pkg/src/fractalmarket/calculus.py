"""Left-point Stieltjes sums and the pathwise-calculus verifiers.

Every integral here is the running left-point sum
I_{t_k} = sum_{i<k} Y_{t_i} (X_{t_{i+1}} - X_{t_i}); the continuous-time
statements (chain rule without a second-order term, integration by parts,
vanishing quadratic variation of the integral) are checked as residuals
that must shrink under mesh refinement of exactly these sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erf

from . import _kernels
from .errors import DomainError, InvariantError, NumericDomainError
from .paths import ConvergenceReport, Partition, SamplePath

__all__ = [
    "ScalarField",
    "SCALAR_FIELDS",
    "PhiFunction",
    "PHI_FUNCTIONS",
    "affine_phi",
    "stieltjes_integral",
    "quadratic_variation",
    "cross_quadratic_sum",
    "ito_formula_residual",
    "integration_by_parts_residual",
    "abel_identity_gap",
    "integral_qv_residual",
    "function_of_z_integral",
    "FunctionOfPathIntegral",
]


@dataclass(frozen=True)
class ScalarField:
    """F(t, z) with analytically supplied partial derivatives."""

    name: str
    f: Callable
    df_dt: Callable
    df_dz: Callable


SCALAR_FIELDS = {
    "z": ScalarField(
        "z",
        lambda t, z: z,
        lambda t, z: np.zeros_like(t),
        lambda t, z: np.ones_like(z),
    ),
    "t": ScalarField(
        "t",
        lambda t, z: t,
        lambda t, z: np.ones_like(t),
        lambda t, z: np.zeros_like(z),
    ),
    "z_squared": ScalarField(
        "z_squared",
        lambda t, z: z**2,
        lambda t, z: np.zeros_like(t),
        lambda t, z: 2.0 * z,
    ),
    "tz": ScalarField(
        "tz",
        lambda t, z: t * z,
        lambda t, z: z,
        lambda t, z: t,
    ),
    "exp_z": ScalarField(
        "exp_z",
        lambda t, z: np.exp(z),
        lambda t, z: np.zeros_like(t),
        lambda t, z: np.exp(z),
    ),
    "t2_plus_sin_z": ScalarField(
        "t2_plus_sin_z",
        lambda t, z: t**2 + np.sin(z),
        lambda t, z: 2.0 * t,
        lambda t, z: np.cos(z),
    ),
}


@dataclass(frozen=True)
class PhiFunction:
    """A C^1 integrand phi with derivative and optional antiderivative."""

    name: str
    phi: Callable
    derivative: Callable
    antiderivative: Optional[Callable] = None


def affine_phi(a: float, b: float) -> PhiFunction:
    return PhiFunction(
        f"affine({a},{b})",
        lambda x: a * x + b,
        lambda x: np.full_like(np.asarray(x, dtype=np.float64), a),
        lambda x: 0.5 * a * x**2 + b * x,
    )


_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)

PHI_FUNCTIONS = {
    "identity": PhiFunction(
        "identity",
        lambda x: x,
        lambda x: np.ones_like(np.asarray(x, dtype=np.float64)),
        lambda x: 0.5 * x**2,
    ),
    "cos": PhiFunction("cos", np.cos, lambda x: -np.sin(x), np.sin),
    "exp_bounded": PhiFunction(
        "exp_bounded",
        lambda x: np.exp(-0.5 * x**2),
        lambda x: -x * np.exp(-0.5 * x**2),
        lambda x: _SQRT_HALF_PI * erf(x / math.sqrt(2.0)),
    ),
}


def stieltjes_integral(integrand: SamplePath, integrator: SamplePath) -> SamplePath:
    """Running left-point sum of integrand against integrator increments.

    Both paths must share the grid exactly; no resampling is attempted.
    """
    integrand.require_same_grid(integrator)
    values = _kernels.stieltjes_running(integrand.values, integrator.values)
    return SamplePath(integrand.times, values)


def quadratic_variation(path: SamplePath) -> float:
    """sum (dZ)^2 over the path's own grid (one refinement-sequence term)."""
    if len(path) < 2:
        raise DomainError("quadratic variation needs at least 2 grid points")
    return float(_kernels.sum_squared_increments(path.values))


def cross_quadratic_sum(w_path: SamplePath, z_path: SamplePath) -> float:
    """sum dW dZ over the shared grid."""
    w_path.require_same_grid(z_path)
    return float(_kernels.cross_increment_sum(w_path.values, z_path.values))


def _finite_or_raise(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericDomainError(f"{what} evaluated to a non-finite value")
    return arr


def ito_formula_residual(field: ScalarField, z_path: SamplePath) -> float:
    """Gap in the chain rule without second-order term for F(t, Z_t).

    |F(T,Z_T) - F(0,Z_0) - sum d1F(t_i,Z_i) dt_i - sum d2F(t_i,Z_i) dZ_i|
    with both sums evaluated at left points. For zero-QV integrators this
    must vanish under refinement with no (1/2) d22F correction.
    """
    t = z_path.times
    z = z_path.values
    left_t, left_z = t[:-1], z[:-1]
    drift = _finite_or_raise(
        np.asarray(field.df_dt(left_t, left_z), dtype=np.float64), "df_dt"
    )
    diffusion = _finite_or_raise(
        np.asarray(field.df_dz(left_t, left_z), dtype=np.float64), "df_dz"
    )
    total = float(field.f(t[-1], z[-1])) - float(field.f(t[0], z[0]))
    drift_sum = float(np.sum(drift * np.diff(t)))
    diffusion_sum = float(np.sum(diffusion * np.diff(z)))
    return abs(total - drift_sum - diffusion_sum)


def integration_by_parts_residual(w_path: SamplePath, z_path: SamplePath) -> float:
    """|int W dZ + int Z dW - (Z_T W_T - Z_0 W_0)| at the paths' grid."""
    w_path.require_same_grid(z_path)
    w_dz = stieltjes_integral(w_path, z_path).terminal
    z_dw = stieltjes_integral(z_path, w_path).terminal
    boundary = (
        z_path.values[-1] * w_path.values[-1] - z_path.values[0] * w_path.values[0]
    )
    return abs(w_dz + z_dw - boundary)


def abel_identity_gap(w_path: SamplePath, z_path: SamplePath) -> float:
    """Violation of the exact discrete summation-by-parts identity.

    int W dZ + int Z dW + sum dW dZ = Z_T W_T - Z_0 W_0 holds exactly for
    finite sums; the returned gap is pure floating-point noise. The
    integration-by-parts statement proper is then the refinement decay of
    the cross term sum dW dZ.
    """
    w_path.require_same_grid(z_path)
    w_dz = stieltjes_integral(w_path, z_path).terminal
    z_dw = stieltjes_integral(z_path, w_path).terminal
    cross = cross_quadratic_sum(w_path, z_path)
    boundary = (
        z_path.values[-1] * w_path.values[-1] - z_path.values[0] * w_path.values[0]
    )
    return abs(w_dz + z_dw + cross - boundary)


def _read_at_partition(path: SamplePath, partition: Partition) -> SamplePath:
    idx = np.searchsorted(path.times, partition.times)
    if idx[-1] >= len(path.times) or not np.all(path.times[idx] == partition.times):
        raise InvariantError("partition is not nested in the path's grid")
    return SamplePath(partition.times, path.values[idx])


def integral_qv_residual(
    sigma_path: SamplePath,
    z_path: SamplePath,
    refinements: Sequence[Partition],
) -> ConvergenceReport:
    """QV of the running integral int sigma dZ read on each refinement.

    The integral is built once at the finest grid (sigma and z's own),
    then read at each partition's times. Partitions must be nested, coarse
    to fine, each inside the next and all inside the carrier grid. The
    residual sequence should decrease: the limiting integral has zero QV.
    """
    sigma_path.require_same_grid(z_path)
    if len(refinements) == 0:
        raise InvariantError("at least one refinement partition is required")
    sizes = [p.num_intervals for p in refinements]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvariantError("refinements must be ordered coarse to fine")
    for coarse, fine in zip(refinements, refinements[1:]):
        if not coarse.is_nested_in(fine):
            raise InvariantError("refinements are not nested")
    integral = stieltjes_integral(sigma_path, z_path)
    residuals = []
    for partition in refinements:
        restricted = _read_at_partition(integral, partition)
        residuals.append(quadratic_variation(restricted))
    return ConvergenceReport.from_residuals(sizes, residuals)


@dataclass(frozen=True)
class FunctionOfPathIntegral:
    """Left-point sums of phi(Z) dZ with, optionally, the closed form.

    closed_form holds int_0^{Z_t} phi(x) dx = Phi(Z_t) - Phi(0) when an
    antiderivative is available, for residual testing against the sums.
    """

    integral: SamplePath
    closed_form: Optional[SamplePath]


def function_of_z_integral(
    phi: PhiFunction, z_path: SamplePath
) -> FunctionOfPathIntegral:
    """Running sums sum phi(Z_{t_i}) dZ_i, plus the closed form if Phi given."""
    z = z_path.values
    phi_values = _finite_or_raise(
        np.asarray(phi.phi(z), dtype=np.float64), f"phi {phi.name}"
    )
    integrand = z_path.with_values(phi_values)
    integral = stieltjes_integral(integrand, z_path)
    closed = None
    if phi.antiderivative is not None:
        anti = np.asarray(phi.antiderivative(z), dtype=np.float64)
        anti0 = float(phi.antiderivative(0.0))
        closed = z_path.with_values(anti - anti0)
    return FunctionOfPathIntegral(integral=integral, closed_form=closed)
