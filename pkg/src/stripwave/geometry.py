"""Flattening map of the wavy layer onto the fixed strip, plus surface geometry.

For a surface displacement eta with max|eta| < b/2, the layer 0 < y_n <
b + eta(y') pulls back to the strip 0 < x_n < b through
F_eta(x) = (x', x_n (1 + eta(x')/b)).  The derived fields are

    J   = 1 + eta/b                      (Jacobian determinant)
    A   = [[ I , -x_n grad'eta/(b+eta) ],
           [ 0 ,  b/(b+eta)            ]]   (inverse-transpose Jacobian)

stored pointwise on the collocation grid.  A twists every derivative of the
flattened system: d_i^A = A_ij d_j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SurfaceTooLarge
from .fields import SurfaceSpectral, transform_forward
from .grids import FrequencyGrid, VerticalGrid
from .ops import dealias, horiz_deriv, to_coeff, to_phys


@dataclass
class FlatteningFields:
    """Pointwise flattening data on the strip collocation grid."""

    a_field: np.ndarray      # (n, n) + phys_shape + (Nz,)
    j_field: np.ndarray      # phys_shape (vertically constant)
    eta_bound: float
    eta_phys: np.ndarray     # phys_shape
    grad_eta_phys: np.ndarray  # (dim_h,) + phys_shape


def _eta_physical(eta: SurfaceSpectral):
    grad = np.stack([to_phys(horiz_deriv(eta.data, eta.grid, ax), eta.grid)[0]
                     for ax in range(eta.grid.dim_h)])
    return to_phys(eta.data, eta.grid)[0], grad


def build_flattening(eta: SurfaceSpectral, grid: FrequencyGrid,
                     vgrid: VerticalGrid) -> FlatteningFields:
    b = vgrid.depth
    n = grid.dim_h + 1
    eta_p, grad_p = _eta_physical(eta)
    bound = float(np.abs(eta_p).max())
    if bound >= b / 2:
        raise SurfaceTooLarge(f"max|eta| = {bound:.3g} >= b/2 = {b / 2:.3g}")

    phys = grid.phys_shape
    nz = vgrid.count
    A = np.zeros((n, n) + phys + (nz,))
    for i in range(grid.dim_h):
        A[i, i] = 1.0
        A[i, n - 1] = -vgrid.nodes * (grad_p[i] / (b + eta_p))[..., None]
    A[n - 1, n - 1] = (b / (b + eta_p))[..., None]
    J = 1.0 + eta_p / b
    return FlatteningFields(a_field=A, j_field=J, eta_bound=bound,
                            eta_phys=eta_p, grad_eta_phys=grad_p)


def flattening_points(ff: FlatteningFields, grid: FrequencyGrid,
                      vgrid: VerticalGrid) -> np.ndarray:
    """Images F_eta(x) of the strip collocation points, shape phys+(Nz, n)."""
    pts_h = grid.phys_points()
    nz = vgrid.count
    out = np.zeros(grid.phys_shape + (nz, grid.dim_h + 1))
    for i in range(grid.dim_h):
        out[..., i] = pts_h[..., i][..., None]
    out[..., -1] = vgrid.nodes[None] * (1.0 + ff.eta_phys / vgrid.depth)[..., None]
    return out


def mean_curvature(eta: SurfaceSpectral) -> SurfaceSpectral:
    """div'( grad'eta / sqrt(1+|grad'eta|^2) ), dealiased pseudospectral."""
    grid = eta.grid
    grad = [to_phys(dealias(horiz_deriv(eta.data, grid, ax), grid), grid)[0]
            for ax in range(grid.dim_h)]
    norm2 = sum(g * g for g in grad)
    scale = 1.0 / np.sqrt(1.0 + norm2)
    out = np.zeros(grid.freq_shape, dtype=complex)
    for ax, g in enumerate(grad):
        flux = to_coeff((g * scale)[None], grid)
        out += dealias(horiz_deriv(flux, grid, ax), grid)[0]
    result = SurfaceSpectral(grid, out[None], real_flag=True)
    result.enforce_real()
    return result


def surface_normal(eta: SurfaceSpectral) -> SurfaceSpectral:
    """Unnormalized upward normal (-grad'eta, 1) in spectral form."""
    grid = eta.grid
    n = grid.dim_h + 1
    data = np.zeros((n,) + grid.freq_shape, dtype=complex)
    for ax in range(grid.dim_h):
        data[ax] = -horiz_deriv(eta.data, grid, ax)[0]
    zero = (0,) * grid.dim_h
    data[(n - 1,) + zero] = 1.0
    return SurfaceSpectral(grid, data, real_flag=True)


def inverse_vertical(eta_at: np.ndarray, y_n: np.ndarray, b: float) -> np.ndarray:
    """Closed-form vertical component of F_eta^{-1}: x_n = y_n b/(b+eta(y'))."""
    return y_n * b / (b + eta_at)


def eval_surface(eta: SurfaceSpectral, points: np.ndarray) -> np.ndarray:
    """Evaluate a surface field at arbitrary horizontal points (slow direct sum)."""
    grid = eta.grid
    vecs = grid.xi_vectors().reshape(-1, grid.dim_h)
    coeffs = eta.data.reshape(eta.comps, -1)
    phases = np.exp(2j * np.pi * points @ vecs.T)
    vals = phases @ coeffs.T
    if eta.real_flag:
        vals = np.real(vals)
    return np.moveaxis(vals, -1, 0) if eta.comps > 1 else vals[..., 0]
