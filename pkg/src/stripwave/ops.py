"""Shared pseudospectral building blocks (derivatives, dealiased products)."""

from __future__ import annotations

import numpy as np

from .grids import FrequencyGrid


def xi_multipliers(grid: FrequencyGrid):
    """2*pi*i*xi factors per horizontal axis, broadcastable over freq_shape."""
    ax = grid.xi_axis()
    if grid.dim_h == 1:
        return (2j * np.pi * ax,)
    return (2j * np.pi * ax[:, None], 2j * np.pi * ax[None, :])


def horiz_deriv(coeffs: np.ndarray, grid: FrequencyGrid, axis: int) -> np.ndarray:
    """Spectral d/dx'_axis on coefficient arrays with leading component axis."""
    mult = xi_multipliers(grid)[axis]
    shape = [1] * coeffs.ndim
    for k in range(mult.ndim):
        shape[1 + k] = mult.shape[k]
    return coeffs * mult.reshape(shape)


def to_phys(coeffs: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    axes = tuple(range(1, 1 + grid.dim_h))
    return np.real(np.fft.ifftn(coeffs, axes=axes)) * grid.modes ** grid.dim_h


def to_coeff(phys: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    axes = tuple(range(1, 1 + grid.dim_h))
    return np.fft.fftn(phys, axes=axes) / grid.modes ** grid.dim_h


def dealias(coeffs: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """Zero coefficients beyond the 2/3 cutoff (per horizontal axis)."""
    mask = grid.dealias_mask()
    shape = [1] * coeffs.ndim
    for k in range(mask.ndim):
        shape[1 + k] = mask.shape[k]
    return coeffs * mask.reshape(shape)


def dealias_tail_fraction(coeffs: np.ndarray, grid: FrequencyGrid) -> float:
    """Fraction of spectral energy sitting beyond the 2/3 cutoff."""
    mask = grid.dealias_mask()
    shape = [1] * coeffs.ndim
    for k in range(mask.ndim):
        shape[1 + k] = mask.shape[k]
    mask = mask.reshape(shape)
    power = np.abs(coeffs) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    tail = float((power * ~mask).sum())
    return tail / total
