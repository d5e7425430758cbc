"""Exception hierarchy.

Every library-raised error derives from FractalMarketError so callers can
catch the whole family at the harness boundary.
"""


class FractalMarketError(Exception):
    pass


class DomainError(FractalMarketError, ValueError):
    """A parameter lies outside its mathematical domain (e.g. Hurst not in (0,1))."""


class InvariantError(FractalMarketError, ValueError):
    """Structured data violates a declared invariant (e.g. decreasing time change)."""


class GridMismatchError(FractalMarketError, ValueError):
    """Two paths were combined without sharing the same time grid."""


class EmbeddingError(FractalMarketError, RuntimeError):
    """Spectral (circulant) embedding produced a materially negative eigenvalue."""


class FactorizationError(FractalMarketError, RuntimeError):
    """Covariance factorization failed even after the jitter retry policy."""


class NumericDomainError(FractalMarketError, ArithmeticError):
    """A user-supplied function evaluated to a non-finite value."""


class NumericOverflowError(FractalMarketError, ArithmeticError):
    """An exponent or price overflowed; the offending grid time is reported."""


class InternalConsistencyError(FractalMarketError, RuntimeError):
    """Two algebraically identical computations disagreed beyond tolerance."""


class ConfigError(FractalMarketError, ValueError):
    """Invalid experiment configuration; carries every violation found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
