"""Carrier types shared across the library.

SamplePath is the universal (times, values) container used for the
modulator, volatility, prices, running integrals and portfolio values.
Partition and ConvergenceReport support the mesh-refinement studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GridMismatchError, InvariantError


def _as_float_array(x) -> np.ndarray:
    # Contiguity matters: the compiled kernels take C-contiguous views.
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvariantError(f"expected a 1-D array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A path sampled on a strictly increasing grid starting at t=0.

    `meta` carries generation diagnostics (sampling method, jitter retries);
    it never participates in numeric comparisons.
    """

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = _as_float_array(self.times)
        values = _as_float_array(self.values)
        if len(times) != len(values):
            raise InvariantError(
                f"times and values lengths differ: {len(times)} vs {len(values)}"
            )
        if len(times) == 0:
            raise InvariantError("a path needs at least one grid point")
        if times[0] != 0.0:
            raise InvariantError(f"grid must start at 0, got {times[0]!r}")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise InvariantError("grid times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def num_intervals(self) -> int:
        return len(self.times) - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def time_steps(self) -> np.ndarray:
        return np.diff(self.times)

    def with_values(self, values) -> "SamplePath":
        """Same grid, new values."""
        return SamplePath(self.times, values)

    def subsample(self, stride: int) -> "SamplePath":
        """Keep every stride-th point; the interval count must divide evenly."""
        if stride < 1:
            raise DomainError(f"stride must be >= 1, got {stride}")
        if self.num_intervals % stride != 0:
            raise InvariantError(
                f"stride {stride} does not divide {self.num_intervals} intervals"
            )
        return SamplePath(self.times[::stride], self.values[::stride])

    def require_same_grid(self, other: "SamplePath") -> None:
        if not np.array_equal(self.times, other.times):
            raise GridMismatchError(
                "paths live on different grids; no implicit resampling is done"
            )


@dataclass(frozen=True, eq=False)
class Partition:
    """A strictly increasing grid on [0, T] with its mesh (max adjacent gap)."""

    times: np.ndarray
    mesh: float = field(init=False)

    def __post_init__(self):
        times = _as_float_array(self.times)
        if len(times) < 2:
            raise InvariantError("a partition needs at least two points")
        if times[0] != 0.0:
            raise InvariantError("partitions start at 0")
        gaps = np.diff(times)
        if not np.all(gaps > 0):
            raise InvariantError("partition times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "mesh", float(gaps.max()))

    @classmethod
    def uniform(cls, horizon: float, num_steps: int) -> "Partition":
        if horizon <= 0:
            raise DomainError(f"horizon must be > 0, got {horizon}")
        if num_steps < 1:
            raise DomainError(f"num_steps must be >= 1, got {num_steps}")
        return cls(np.linspace(0.0, horizon, num_steps + 1))

    @classmethod
    def dyadic(cls, level: int, horizon: float = 1.0) -> "Partition":
        return cls.uniform(horizon, 2**level)

    @property
    def num_intervals(self) -> int:
        return len(self.times) - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def is_nested_in(self, finer: "Partition") -> bool:
        """True when every time of self occurs exactly in `finer`."""
        idx = np.searchsorted(finer.times, self.times)
        if idx[-1] >= len(finer.times):
            return False
        return bool(np.all(finer.times[idx] == self.times))


def loglog_slope(grid_sizes: Sequence[int], residuals: Sequence[float]) -> float:
    """Least-squares slope of log(residual) against log(n).

    Nonpositive or non-finite residuals are dropped; fewer than two usable
    points yields nan.
    """
    ns = np.asarray(grid_sizes, dtype=np.float64)
    rs = np.asarray(residuals, dtype=np.float64)
    keep = np.isfinite(rs) & (rs > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ns[keep]), np.log(rs[keep]), 1)[0])


def count_increases(values: Sequence[float]) -> int:
    """Number of adjacent transitions that fail to strictly decrease."""
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) < 2:
        return 0
    return int(np.sum(np.diff(arr) >= 0))


@dataclass(frozen=True)
class ConvergenceReport:
    """Residuals of one quantity across a refinement sequence."""

    grid_sizes: list
    residuals: list
    slope: float

    def __post_init__(self):
        if len(self.grid_sizes) != len(self.residuals):
            raise InvariantError("grid_sizes and residuals lengths differ")
        sizes = list(self.grid_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvariantError("grid_sizes must be strictly increasing")

    @classmethod
    def from_residuals(cls, grid_sizes, residuals) -> "ConvergenceReport":
        sizes = [int(n) for n in grid_sizes]
        res = [float(r) for r in residuals]
        return cls(sizes, res, loglog_slope(sizes, res))

    def num_increases(self) -> int:
        return count_increases(self.residuals)
