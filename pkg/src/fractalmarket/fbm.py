"""Exact sampling of fractional Brownian motion.

Three samplers, all exact in law:

* uniform grids — spectral synthesis via circulant embedding of the
  fractional Gaussian noise autocovariance (FFT, O(n log n));
* arbitrary grids — Cholesky factorization of the full path covariance
  cov(B_s, B_t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2, with a diagonal
  jitter retry policy on numerical PD failure;
* time-changed paths B_{A_t} — joint Gaussian sampling at the
  (deduplicated) clock values.

Exactness matters: downstream covariance and quadratic-variation tests are
then hypotheses about the sampler, not about discretization bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, EmbeddingError, FactorizationError, InvariantError
from .paths import SamplePath

__all__ = [
    "FbmSpec",
    "TimeChange",
    "fgn_autocovariance",
    "generate_fbm",
    "generate_fbm_on_grid",
    "time_change_compose",
]

# Relative floor below which embedding eigenvalues are treated as rounding noise.
_EIGENVALUE_TOLERANCE = 1e-9
# Grids this small skip the FFT machinery and use the dense factorization.
_SMALL_GRID_THRESHOLD = 4

_JITTER_INITIAL = 1e-12
_JITTER_MAX_RETRIES = 3


def _check_hurst(hurst: float) -> float:
    hurst = float(hurst)
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"hurst must lie in (0, 1), got {hurst}")
    return hurst


@dataclass(frozen=True)
class FbmSpec:
    """Parameters for one fractional Brownian path on a uniform grid."""

    hurst: float
    horizon: float
    num_steps: int
    seed: int

    def __post_init__(self):
        _check_hurst(self.hurst)
        if self.horizon <= 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if self.num_steps < 1:
            raise DomainError(f"num_steps must be >= 1, got {self.num_steps}")
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise DomainError("seed must fit in an unsigned 64-bit integer")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.num_steps + 1)


@dataclass(frozen=True)
class TimeChange:
    """A nondecreasing clock A_t >= 0 with A_0 = 0, given on a grid."""

    grid_values: SamplePath

    def __post_init__(self):
        a = self.grid_values.values
        if a[0] != 0.0:
            raise InvariantError(f"time change must start at 0, got {a[0]!r}")
        if np.any(np.diff(a) < 0):
            raise InvariantError("time change values must be nondecreasing")

    @property
    def times(self) -> np.ndarray:
        return self.grid_values.times

    @property
    def values(self) -> np.ndarray:
        return self.grid_values.values

    @classmethod
    def identity(cls, times) -> "TimeChange":
        arr = np.asarray(times, dtype=np.float64)
        return cls(SamplePath(arr, arr.copy()))

    @classmethod
    def power(cls, times, exponent: float) -> "TimeChange":
        if exponent <= 0:
            raise DomainError(f"power exponent must be > 0, got {exponent}")
        arr = np.asarray(times, dtype=np.float64)
        return cls(SamplePath(arr, arr**exponent))


def fgn_autocovariance(lag: int, hurst: float) -> float:
    """Autocovariance of unit-spacing fractional Gaussian noise at integer lag.

    gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2, the stationary
    increment covariance implied by cov(B_s, B_t); gamma(0) = 1 for every H.
    """
    hurst = _check_hurst(hurst)
    if lag < 0:
        raise DomainError(f"lag must be >= 0, got {lag}")
    k = float(lag)
    two_h = 2.0 * hurst
    return 0.5 * (abs(k + 1) ** two_h - 2.0 * abs(k) ** two_h + abs(k - 1) ** two_h)


def _fgn_autocovariance_vector(n: int, hurst: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=np.float64)
    two_h = 2.0 * hurst
    return 0.5 * (
        np.abs(k + 1) ** two_h - 2.0 * np.abs(k) ** two_h + np.abs(k - 1) ** two_h
    )


@lru_cache(maxsize=16)
def _embedding_sqrt_eigenvalues(num_steps: int, hurst: float) -> np.ndarray:
    """sqrt of the 2n-circulant eigenvalues of the fGn autocovariance.

    The first circulant row is [g(0)..g(n-1), g(n), g(n-1)..g(1)]; its
    eigenvalues come out of a real FFT and are nonnegative for fGn. A
    materially negative eigenvalue is a consistency failure, reported with
    a pointer at the dense-factorization fallback.
    """
    n = num_steps
    gamma = _fgn_autocovariance_vector(n, hurst)
    row = np.empty(2 * n, dtype=np.float64)
    row[: n + 1] = gamma
    row[n + 1 :] = gamma[1:n][::-1]
    eigenvalues = np.fft.rfft(row).real
    floor = -_EIGENVALUE_TOLERANCE * max(eigenvalues.max(), 1.0)
    if eigenvalues.min() < floor:
        raise EmbeddingError(
            f"circulant embedding for H={hurst}, n={n} has eigenvalue "
            f"{eigenvalues.min():.3e} < 0; sample via generate_fbm_on_grid "
            "(exact covariance factorization) instead"
        )
    np.maximum(eigenvalues, 0.0, out=eigenvalues)
    result = np.sqrt(eigenvalues)
    result.setflags(write=False)
    return result


def _unit_fgn(num_steps: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    """One exact draw of n unit-spacing fGn values via spectral synthesis.

    Draw layout (fixed for reproducibility): 2n standard normals, the first
    two feeding the real DC/Nyquist modes, the rest split into real and
    imaginary interior parts.
    """
    n = num_steps
    sqrt_eig = _embedding_sqrt_eigenvalues(n, hurst)
    z = rng.standard_normal(2 * n)
    spectrum = np.empty(n + 1, dtype=np.complex128)
    spectrum[0] = z[0]
    spectrum[n] = z[1]
    if n > 1:
        spectrum[1:n] = (z[2 : n + 1] + 1j * z[n + 1 : 2 * n]) / np.sqrt(2.0)
    spectrum *= sqrt_eig * np.sqrt(2.0 * n)
    return np.fft.irfft(spectrum, 2 * n)[:n]


def generate_fbm(spec: FbmSpec, seed=None) -> SamplePath:
    """Exact fBm sample on the uniform grid of `spec`.

    Spectral circulant-embedding sampling; grids below the small-grid
    threshold use the dense covariance factorization. Deterministic and
    bit-identical given (spec, seed); `seed` defaults to `spec.seed` and
    also accepts a numpy SeedSequence for substream composition.
    """
    if seed is None:
        seed = spec.seed
    rng = np.random.default_rng(seed)
    times = spec.times
    n = spec.num_steps
    if n < _SMALL_GRID_THRESHOLD:
        values, meta = _sample_at_positive_times(times[1:], spec.hurst, rng)
        path_values = np.concatenate(([0.0], values))
        meta = dict(meta, method="cholesky")
        return SamplePath(times, path_values, meta=meta)
    dt = spec.horizon / n
    increments = _unit_fgn(n, spec.hurst, rng) * dt**spec.hurst
    values = np.empty(n + 1, dtype=np.float64)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    if not np.all(np.isfinite(values)):
        raise EmbeddingError("spectral sampler produced non-finite values")
    return SamplePath(times, values, meta={"method": "circulant"})


def _fbm_covariance_matrix(times: np.ndarray, hurst: float) -> np.ndarray:
    t = times[:, None]
    s = times[None, :]
    two_h = 2.0 * hurst
    return 0.5 * (t**two_h + s**two_h - np.abs(t - s) ** two_h)


class _CholeskyCache:
    """Tiny LRU keyed by (hurst, grid bytes); factors can be large."""

    def __init__(self, maxsize: int = 3):
        self.maxsize = maxsize
        self._store: dict = {}

    def get_or_compute(self, times: np.ndarray, hurst: float):
        key = (hurst, times.tobytes())
        hit = self._store.pop(key, None)
        if hit is not None:
            self._store[key] = hit
            return hit
        cov = _fbm_covariance_matrix(times, hurst)
        factor, retries, jitter = _cholesky_with_jitter(cov)
        entry = (factor, retries, jitter)
        self._store[key] = entry
        while len(self._store) > self.maxsize:
            self._store.pop(next(iter(self._store)))
        return entry


_cholesky_cache = _CholeskyCache()


def _cholesky_with_jitter(cov: np.ndarray):
    """Cholesky with the retry policy: jitter 1e-12, doubling, max 3 retries."""
    try:
        return np.linalg.cholesky(cov), 0, 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = _JITTER_INITIAL
    eye = np.eye(len(cov))
    for retry in range(1, _JITTER_MAX_RETRIES + 1):
        try:
            return np.linalg.cholesky(cov + jitter * eye), retry, jitter
        except np.linalg.LinAlgError:
            jitter *= 2.0
    raise FactorizationError(
        f"covariance matrix ({len(cov)} points) is not numerically positive "
        f"definite after {_JITTER_MAX_RETRIES} jitter retries up to {jitter / 2:.1e}"
    )


def _sample_at_positive_times(times: np.ndarray, hurst: float, rng):
    """Joint exact Gaussian draw of B^H at strictly positive, increasing times."""
    if len(times) == 0:
        return np.empty(0, dtype=np.float64), {}
    factor, retries, jitter = _cholesky_cache.get_or_compute(
        np.ascontiguousarray(times), hurst
    )
    values = factor @ rng.standard_normal(len(times))
    meta = {}
    if retries:
        meta["jitter_retries"] = retries
        meta["jitter"] = jitter
    return values, meta


def generate_fbm_on_grid(times, hurst: float, seed) -> SamplePath:
    """Exact fBm sample at the given times via dense covariance factorization.

    The grid must be strictly increasing and start at 0 (B_0 = 0 is pinned
    there, keeping the factored matrix nonsingular). Jitter retries, if any,
    are reported in the returned path's meta.
    """
    hurst = _check_hurst(hurst)
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or len(times) == 0:
        raise DomainError("times must be a nonempty 1-D array")
    if times[0] != 0.0:
        raise DomainError(f"grid must start at 0, got {times[0]!r}")
    if np.any(np.diff(times) <= 0):
        raise DomainError("times must be strictly increasing")
    rng = np.random.default_rng(seed)
    values = np.zeros(len(times), dtype=np.float64)
    inner, meta = _sample_at_positive_times(times[1:], hurst, rng)
    values[1:] = inner
    meta = dict(meta, method="cholesky")
    return SamplePath(times, values, meta=meta)


def time_change_compose(tc: TimeChange, hurst: float, seed) -> SamplePath:
    """Sample Z_t = B^H_{A_t} on the clock's grid.

    The fBm is drawn jointly and exactly at the deduplicated clock values
    (ties are exact, A being grid data), so equal A-values yield exactly
    equal Z-values and Z is constant wherever A is.
    """
    hurst = _check_hurst(hurst)
    rng = np.random.default_rng(seed)
    unique_values, inverse = np.unique(tc.values, return_inverse=True)
    b_at_unique = np.zeros(len(unique_values), dtype=np.float64)
    # unique_values[0] == 0 always (A_0 = 0 and A nondecreasing); B_0 stays 0.
    sampled, meta = _sample_at_positive_times(unique_values[1:], hurst, rng)
    b_at_unique[1:] = sampled
    z_values = b_at_unique[inverse]
    meta = dict(meta, method="time_change")
    return SamplePath(tc.times, z_values, meta=meta)
