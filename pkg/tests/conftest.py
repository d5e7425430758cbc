import numpy as np
import pytest

from fractalmarket import (
    FbmSpec,
    HestonVol,
    MarketParams,
    Partition,
    StrategyParams,
    generate_fbm,
    price_path,
    simulate_volatility,
)

MARKET = MarketParams(nu=0.1, r=0.05, y0=100.0, horizon=1.0)
STRATEGY = StrategyParams(c=1.0)
HESTON = HestonVol(v0=0.04, kappa=1.5, theta=0.04, xi=0.3)


@pytest.fixture
def market_params():
    return MARKET


@pytest.fixture
def strategy_params():
    return STRATEGY


def make_fbm(hurst=0.7, horizon=1.0, num_steps=256, seed=0):
    return generate_fbm(FbmSpec(hurst, horizon, num_steps, seed))


def make_heston_market(num_steps=256, seed=0, market=MARKET):
    z = make_fbm(num_steps=num_steps, seed=seed, horizon=market.horizon)
    grid = Partition(z.times)
    vol = simulate_volatility(HESTON, grid, seed=seed + 10_000)
    return price_path(market, vol, z)


def ensemble_seeds(n):
    return range(n)


def rng_array(shape, seed=1234, scale=1.0):
    return np.random.default_rng(seed).standard_normal(shape) * scale
