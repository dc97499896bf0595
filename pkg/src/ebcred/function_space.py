"""Curves on [0, 1] from coefficient sequences, via the cosine SVD basis.

The signal-side singular functions of the integration operator are
e_i(x) = sqrt(2) * cos((i - 1/2) * pi * x), the basis in which the
sequence model lives.  Reconstruction maps a coefficient slice back to a
curve for plotting and for sup-norm diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequence_model import CoefficientSequence

__all__ = [
    "FunctionGrid",
    "PLOT_GRID_POINTS",
    "SUP_GRID_POINTS",
    "uniform_grid",
    "basis_eval",
    "reconstruct",
    "sup_distance",
]

PLOT_GRID_POINTS = 512
SUP_GRID_POINTS = 2048

# Coefficient chunk width in reconstruct; bounds the basis matrix at
# roughly grid_points * 2048 * 8 bytes.
_CHUNK = 2048


def _valid_grid(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if np.any(xs < 0) or np.any(xs > 1):
        raise ValueError("grid points must lie in [0, 1]")
    if xs.size > 1 and np.any(np.diff(xs) <= 0):
        raise ValueError("grid points must be strictly increasing")
    return xs


@dataclass
class FunctionGrid:
    """A curve sampled on a fixed grid in [0, 1]."""

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.xs = _valid_grid(self.xs)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.xs.shape:
            raise ValueError("xs and values must share length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")


def uniform_grid(points: int = PLOT_GRID_POINTS) -> np.ndarray:
    """Uniform grid on [0, 1] including both endpoints."""
    if points < 2:
        raise ValueError("a grid needs at least 2 points")
    return np.linspace(0.0, 1.0, points)


def basis_eval(i: int, x):
    """Basis function e_i(x) = sqrt(2) * cos((i - 1/2) * pi * x)."""
    if i < 1:
        raise ValueError("basis index must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("x must lie in [0, 1]")
    out = np.sqrt(2.0) * np.cos((i - 0.5) * np.pi * x)
    return float(out) if out.ndim == 0 else out


def reconstruct(theta: CoefficientSequence, xs) -> FunctionGrid:
    """Partial sum f(x) = sum_i theta_i e_i(x) over the stored coefficients.

    Basis columns are materialised in chunks so large i_max never builds
    the full (grid x i_max) matrix.
    """
    xs = _valid_grid(xs)
    values = np.zeros(xs.size)
    coef = theta.values
    for start in range(0, coef.size, _CHUNK):
        stop = min(start + _CHUNK, coef.size)
        freq = (np.arange(start + 1, stop + 1, dtype=np.float64) - 0.5) * np.pi
        block = np.sqrt(2.0) * np.cos(np.outer(xs, freq))
        values += block @ coef[start:stop]
    return FunctionGrid(xs=xs, values=values)


def sup_distance(a: FunctionGrid, b: FunctionGrid) -> float:
    """Grid maximum of |a - b|; a lower-bound surrogate for the true sup norm."""
    if not np.array_equal(a.xs, b.xs):
        raise ValueError("grids must coincide")
    return float(np.max(np.abs(a.values - b.values)))
