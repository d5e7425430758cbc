"""Fractal-modulated Black-Scholes market simulation.

Exact fractional-Brownian modulators (plain or time-changed), stochastic
volatility processes, left-point pathwise integration, the explicit
zero-capital arbitrage portfolio, and a seeded experiment harness that
verifies the construction's properties under mesh refinement.
"""

__version__ = "0.1.0"

from .calculus import (
    PHI_FUNCTIONS,
    SCALAR_FIELDS,
    PhiFunction,
    ScalarField,
    affine_phi,
    function_of_z_integral,
    integral_qv_residual,
    integration_by_parts_residual,
    ito_formula_residual,
    quadratic_variation,
    stieltjes_integral,
)
from .config import ExperimentConfig, Thresholds, load_config, parse_config
from .errors import (
    ConfigError,
    DomainError,
    EmbeddingError,
    FactorizationError,
    FractalMarketError,
    GridMismatchError,
    InternalConsistencyError,
    InvariantError,
    NumericDomainError,
    NumericOverflowError,
)
from .fbm import (
    FbmSpec,
    TimeChange,
    fgn_autocovariance,
    generate_fbm,
    generate_fbm_on_grid,
    time_change_compose,
)
from .harness import RunReport, run_calculus_suite, run_experiment, write_report
from .market import (
    MarketParams,
    MarketPaths,
    discretized_sde_consistency,
    price_path,
    riskless_path,
)
from .paths import ConvergenceReport, Partition, SamplePath
from .strategy import (
    ArbitrageCertificate,
    PortfolioTrajectory,
    StrategyParams,
    arbitrage_certificate,
    exponent_form_holdings,
    holdings,
    portfolio_value,
    representation_gap,
    self_financing_residuals,
)
from .volatility import (
    ConstantVol,
    FunctionOfModulatorVol,
    HestonVol,
    HullWhiteVol,
    SteinSteinVol,
    VolPath,
    integrability_check,
    simulate_volatility,
)
