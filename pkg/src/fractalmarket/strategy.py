"""The explicit arbitrage portfolio, its value process and certificates.

Holdings at time t are a function of the observed price alone:

    theta0 = (c/Y0) (Y0^2 - (e^{-rt} Y_t)^2)
    theta1 = (2c/Y0) (Y_t e^{-rt} - Y0)

No Hurst parameter, volatility value or drift enters: the modulator's
memory matters only through the price path itself. With the price in its
exponential form the same holdings rewrite in terms of the running
integral exponent, and the value process collapses to the manifestly
nonnegative c Y0 e^{rt} (e^{(nu-r)t + I_t} - 1)^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InternalConsistencyError, NumericOverflowError
from .market import MarketParams, MarketPaths
from .paths import Partition

__all__ = [
    "StrategyParams",
    "PortfolioTrajectory",
    "ArbitrageCertificate",
    "holdings",
    "exponent_form_holdings",
    "representation_gap",
    "portfolio_value",
    "self_financing_residuals",
    "arbitrage_certificate",
]

# Agreement tolerances for algebraically identical columns, measured
# relative to the portfolio's natural scale (see _scale_gap): a strictly
# pointwise-relative comparison is ill-posed at the exact zeros the
# strategy passes through.
VALUE_AGREEMENT_RTOL = 1e-10
HOLDINGS_AGREEMENT_RTOL = 1e-12


@dataclass(frozen=True)
class StrategyParams:
    """Portfolio scale c > 0."""

    c: float

    def __post_init__(self):
        if self.c <= 0:
            raise DomainError(f"strategy scale c must be > 0, got {self.c}")


def holdings(t, y_t, market: MarketParams, strategy: StrategyParams):
    """Units of (riskless, risky) held at time t given the observed price.

    Consumes only (t, Y_t, Y0, r, c); accepts scalars or arrays.
    """
    t = np.asarray(t, dtype=np.float64)
    y_t = np.asarray(y_t, dtype=np.float64)
    if np.any(y_t <= 0):
        raise DomainError("price must be strictly positive")
    y0, r, c = market.y0, market.r, strategy.c
    discounted = np.exp(-r * t) * y_t
    theta0 = (c / y0) * (y0**2 - discounted**2)
    theta1 = (2.0 * c / y0) * (discounted - y0)
    return theta0, theta1


def exponent_form_holdings(t, running_integral, market: MarketParams,
                           strategy: StrategyParams):
    """Same holdings written through the exponent x = (nu - r)t + I_t.

    Evaluated with expm1 so both components vanish exactly at x = 0.
    """
    t = np.asarray(t, dtype=np.float64)
    i_t = np.asarray(running_integral, dtype=np.float64)
    x = (market.nu - market.r) * t + i_t
    with np.errstate(over="raise"):
        try:
            theta0 = -market.y0 * strategy.c * np.expm1(2.0 * x)
            theta1 = 2.0 * strategy.c * np.expm1(x)
        except FloatingPointError as exc:
            raise NumericOverflowError(f"holdings exponent overflow: {exc}") from exc
    if not (np.all(np.isfinite(theta0)) and np.all(np.isfinite(theta1))):
        raise NumericOverflowError("holdings exponent overflow")
    return theta0, theta1


def representation_gap(paths: MarketPaths, market: MarketParams,
                       strategy: StrategyParams):
    """Worst scaled gaps between the price-form and exponent-form holdings.

    The two are algebraically identical once Y_t = Y0 exp(nu t + I_t);
    gaps are measured against the natural scales c*Y0 (riskless units) and
    c (risky units) and should sit at floating-point noise.
    """
    t = paths.times
    theta0_price, theta1_price = holdings(t, paths.risky.values, market, strategy)
    theta0_exp, theta1_exp = exponent_form_holdings(
        t, paths.log_integral.values, market, strategy
    )
    scale0 = strategy.c * market.y0
    scale1 = strategy.c
    gap0 = _scale_gap(theta0_price, theta0_exp, np.full_like(theta0_exp, scale0))
    gap1 = _scale_gap(theta1_price, theta1_exp, np.full_like(theta1_exp, scale1))
    return gap0, gap1


@dataclass(frozen=True)
class PortfolioTrajectory:
    """Holdings, ledger value, closed-form value and self-financing gaps."""

    grid: Partition
    theta0: np.ndarray
    theta1: np.ndarray
    value: np.ndarray
    closed_form_value: np.ndarray
    sf_residuals: np.ndarray
    exponent: np.ndarray

    @property
    def terminal_value(self) -> float:
        return float(self.value[-1])

    @property
    def terminal_exponent(self) -> float:
        return float(self.exponent[-1])

    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.sf_residuals)))

    def sum_abs_residual(self) -> float:
        return float(np.sum(np.abs(self.sf_residuals)))


def _scale_gap(a: np.ndarray, b: np.ndarray, scale: np.ndarray) -> float:
    """Worst |a-b| / (scale + |b|)."""
    return float(np.max(np.abs(a - b) / (scale + np.abs(b))))


def portfolio_value(paths: MarketPaths, market: MarketParams,
                    strategy: StrategyParams) -> PortfolioTrajectory:
    """Fill the trajectory from market paths and cross-check the two value forms.

    value = theta0 X + theta1 Y from the price-form holdings must match the
    closed form c Y0 e^{rt} (e^{x_t} - 1)^2 built from the stored running
    integral; disagreement beyond tolerance signals an algebra bug, not a
    statistical event.
    """
    t = paths.times
    x_path = paths.riskless.values
    y_path = paths.risky.values
    theta0, theta1 = holdings(t, y_path, market, strategy)
    value = theta0 * x_path + theta1 * y_path

    exponent = (market.nu - market.r) * t + paths.log_integral.values
    growth = np.expm1(exponent)
    closed = strategy.c * market.y0 * x_path * growth**2

    scale = strategy.c * market.y0 * x_path
    gap = _scale_gap(value, closed, scale)
    if gap > VALUE_AGREEMENT_RTOL:
        raise InternalConsistencyError(
            f"portfolio value disagrees with its closed form: scaled gap {gap:.3e} "
            f"> {VALUE_AGREEMENT_RTOL}"
        )
    if value[0] != 0.0 or closed[0] != 0.0:
        raise InternalConsistencyError("initial portfolio value is not exactly 0")

    residuals = _per_step_residuals(theta0, theta1, value, x_path, y_path)
    return PortfolioTrajectory(
        grid=Partition(t),
        theta0=theta0,
        theta1=theta1,
        value=value,
        closed_form_value=closed,
        sf_residuals=residuals,
        exponent=exponent,
    )


def _per_step_residuals(theta0, theta1, value, x_path, y_path) -> np.ndarray:
    return np.diff(value) - (
        theta0[:-1] * np.diff(x_path) + theta1[:-1] * np.diff(y_path)
    )


def self_financing_residuals(traj: PortfolioTrajectory,
                             paths: MarketPaths) -> np.ndarray:
    """Per-step gap (P_{i+1} - P_i) - [theta0_i dX_i + theta1_i dY_i].

    Zero in the continuous-trading limit for this portfolio; at finite mesh
    it equals the rebalancing cost paid at each right endpoint.
    """
    return _per_step_residuals(
        traj.theta0, traj.theta1, traj.value,
        paths.riskless.values, paths.risky.values,
    )


@dataclass(frozen=True)
class ArbitrageCertificate:
    """Outcome of the zero-capital/nonnegative/terminal-gain checks."""

    passed: bool
    null_gain: bool
    terminal_coincidence: bool
    initial_value: float
    terminal_value: float
    terminal_exponent: float
    positive_fraction: float
    violation_time: Optional[float]
    message: str


def arbitrage_certificate(traj: PortfolioTrajectory) -> ArbitrageCertificate:
    """Assert P_0 = 0 exactly, P >= 0 everywhere (exact on the squared
    closed form) and P_T > 0 whenever the terminal exponent is nonzero.

    An exactly-zero terminal exponent is flagged, not failed: it is the
    null-arbitrage degenerate case when the whole path is zero, and a
    measure-zero coincidence otherwise.
    """
    closed = traj.closed_form_value
    times = traj.grid.times
    x_terminal = traj.terminal_exponent
    p_terminal = float(closed[-1])
    positive_fraction = float(np.mean(closed[1:] > 0)) if len(closed) > 1 else 0.0

    if closed[0] != 0.0 or traj.value[0] != 0.0:
        return ArbitrageCertificate(
            False, False, False, float(closed[0]), p_terminal, x_terminal,
            positive_fraction, float(times[0]),
            "initial capital is not exactly zero",
        )
    negative = closed < 0
    if np.any(negative):
        t_bad = float(times[np.argmax(negative)])
        return ArbitrageCertificate(
            False, False, False, 0.0, p_terminal, x_terminal,
            positive_fraction, t_bad,
            f"portfolio value negative at t={t_bad}",
        )
    if x_terminal != 0.0 and p_terminal <= 0.0:
        return ArbitrageCertificate(
            False, False, False, 0.0, p_terminal, x_terminal,
            positive_fraction, float(times[-1]),
            f"terminal value {p_terminal} not positive despite exponent "
            f"{x_terminal}",
        )
    null_gain = x_terminal == 0.0 and not np.any(closed > 0)
    coincidence = x_terminal == 0.0 and not null_gain
    if null_gain:
        message = "null arbitrage: zero gain, no loss (degenerate exponent)"
    elif coincidence:
        message = (
            "terminal exponent exactly zero (measure-zero coincidence); "
            "interior value was positive"
        )
    else:
        message = (
            f"arbitrage realized: P_T={p_terminal:.6g} with terminal exponent "
            f"magnitude {abs(x_terminal):.6g}"
        )
    return ArbitrageCertificate(
        True, null_gain, coincidence, 0.0, p_terminal, x_terminal,
        positive_fraction, None, message,
    )
