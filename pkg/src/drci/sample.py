"""Sample container shared by every estimator in the package."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError


def as_column_matrix(a, name: str) -> np.ndarray:
    """Coerce ``a`` to an (n, d) float64 matrix; 1-D input becomes one column."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise DataError(f"{name} must be a vector or 2-D matrix, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class Sample:
    """Aligned observations of the three variable groups.

    ``x``, ``y`` and ``z`` are (n, d) matrices with the same number of rows;
    every entry must be finite and n must be at least 2.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, as_column_matrix(getattr(self, name), name))
        n = self.x.shape[0]
        if self.y.shape[0] != n or self.z.shape[0] != n:
            raise DataError(
                "x, y, z must have the same number of rows, got "
                f"{self.x.shape[0]}, {self.y.shape[0]}, {self.z.shape[0]}"
            )
        if n < 2:
            raise DataError(f"need at least 2 observations, got {n}")
        for name in ("x", "y", "z"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataError(f"{name} contains NaN or infinite entries")

    @property
    def n(self) -> int:
        return self.x.shape[0]


def lagged_triples(response, driver, lag: int = 1) -> Sample:
    """Build the lag-``lag`` test triple from two scalar series.

    Tests whether past values of ``driver`` carry information about
    ``response`` beyond the response's own past: the sample pairs
    ``y = response[t]`` with ``x = driver[t - lag]`` and conditions on
    ``z = response[t - lag]``.
    """
    if lag < 1:
        raise ConfigurationError(f"lag must be >= 1, got {lag}")
    a = np.asarray(response, dtype=float).reshape(-1)
    b = np.asarray(driver, dtype=float).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise DataError("both series must have the same length")
    if a.shape[0] <= lag + 1:
        raise DataError(f"series of length {a.shape[0]} too short for lag {lag}")
    return Sample(x=b[:-lag], y=a[lag:], z=a[:-lag])
