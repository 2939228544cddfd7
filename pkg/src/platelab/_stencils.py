"""Periodic centered finite-difference kernels on raw sample arrays.

Shared by the grid norms and the operator module so that both sides use
literally the same stencils. All kernels assume a uniform periodic grid
with spacing ``h`` along every axis; arrays are indexed row-major with one
axis per spatial dimension.
"""

from __future__ import annotations

import numpy as np


def shift_plus(a: np.ndarray, axis: int) -> np.ndarray:
    """Sample at i+1 along ``axis`` (periodic)."""
    return np.roll(a, -1, axis=axis)


def shift_minus(a: np.ndarray, axis: int) -> np.ndarray:
    """Sample at i-1 along ``axis`` (periodic)."""
    return np.roll(a, 1, axis=axis)


def centered_diff(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """(a_{i+1} - a_{i-1}) / (2h) along ``axis``."""
    return (shift_plus(a, axis) - shift_minus(a, axis)) / (2.0 * h)


def grad_components(a: np.ndarray, h: float) -> list[np.ndarray]:
    """Centered gradient, one component per axis."""
    return [centered_diff(a, h, axis) for axis in range(a.ndim)]


def laplacian(a: np.ndarray, h: float) -> np.ndarray:
    """Standard 3-point (per axis) periodic Laplacian."""
    out = np.zeros_like(a)
    for axis in range(a.ndim):
        out += shift_plus(a, axis) - 2.0 * a + shift_minus(a, axis)
    return out / (h * h)


def face_coefficients(coeff: np.ndarray, axis: int) -> np.ndarray:
    """Arithmetic face average: entry i holds (c_i + c_{i+1}) / 2."""
    return 0.5 * (coeff + shift_plus(coeff, axis))


def div_coeff_grad(a: np.ndarray, face_coeffs: list[np.ndarray], h: float) -> np.ndarray:
    """Divergence-form operator with precomputed per-axis face coefficients.

    Per axis: [c_{i+1/2} (a_{i+1} - a_i) - c_{i-1/2} (a_i - a_{i-1})] / h^2.
    Symmetric and negative semidefinite for nonnegative coefficients.
    """
    out = np.zeros_like(a)
    for axis, cp in enumerate(face_coeffs):
        flux = cp * (shift_plus(a, axis) - a)
        out += flux - shift_minus(flux, axis)
    return out / (h * h)


def face_quadratic(a: np.ndarray, face_coeffs: list[np.ndarray], h: float, cell_volume: float) -> float:
    """sum over faces of c_{i+1/2} ((a_{i+1} - a_i)/h)^2, rectangle weighted.

    Equals the negative pairing -<div(c grad a), a> of :func:`div_coeff_grad`
    exactly (summation by parts on the periodic grid).
    """
    total = 0.0
    for axis, cp in enumerate(face_coeffs):
        d = shift_plus(a, axis) - a
        total += float(np.sum(cp * d * d))
    return total * cell_volume / (h * h)
