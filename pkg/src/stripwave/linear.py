"""The linearized operator about the flat quiescent state, and its inverse.

Forward map (all derivatives spectral horizontally, collocation vertically):

    f = -gamma d1 u + grad p - mu (lap u + grad div u) + grav (grad' eta, 0)
    g = div u
    l = -gamma d1 psi - kappa lap psi
    k = (p I - mu D u) e_n + (sigma1 grad' psi, sigma0 lap' eta)   on the top
    h = u_n + gamma d1 eta                                         on the top
    m = kappa dn psi                                               on the top

The inverse runs in two stages that never form a coupled global system.
First the free surface: the data pair against the adjoint response symbols,

    pairing(xi) = int_0^b fhat . conj(om_v) - ghat conj(om_q)
                  + lhat conj(om_temp) dx_n
                  - khat . conj(om_v|top) + mhat conj(om_temp|top) + hhat,

and etahat = pairing/rho away from the zero mode.  Second, the surface terms are
subtracted from the data and the remaining transported Stokes-heat problem
(transport speed -gamma, temperature-to-stress coupling sigma1 in the
tangential stress row) is solved frequency by frequency through the
six-component boundary value problem.  The vertical-velocity trace condition
is never imposed; it is recovered through the compatibility identity, which
is the content of the surjectivity construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResidualTooLarge, RhoVanishing
from .fields import SpectralField, SurfaceSpectral, YData
from .grids import FrequencyGrid, VerticalGrid
from .norms import sobolev_norm, x_norm, ydata_norm
from .odesystem import (DEFAULT_COND_LIMIT, DEFAULT_SPLIT, FrequencySolver,
                        SymbolTable, solve_transverse)
from .ops import horiz_deriv, xi_multipliers
from .params import PhysicalParams


@dataclass
class LinearState:
    """Solution tuple (u, psi, p, eta) in spectral representation."""

    u: SpectralField
    psi: SpectralField
    pres: SpectralField
    eta: SurfaceSpectral

    @property
    def grid(self) -> FrequencyGrid:
        return self.u.grid

    @property
    def vgrid(self) -> VerticalGrid:
        return self.u.vgrid

    @classmethod
    def zeros(cls, grid, vgrid):
        n = grid.dim_h + 1
        return cls(SpectralField.zeros(grid, vgrid, n),
                   SpectralField.zeros(grid, vgrid, 1),
                   SpectralField.zeros(grid, vgrid, 1),
                   SurfaceSpectral.zeros(grid, 1))

    def copy(self):
        return LinearState(self.u.copy(), self.psi.copy(), self.pres.copy(),
                           self.eta.copy())

    def axpy(self, a: float, other: "LinearState"):
        self.u.data += a * other.u.data
        self.psi.data += a * other.psi.data
        self.pres.data += a * other.pres.data
        self.eta.data += a * other.eta.data
        return self

    def bottom_trace_defect(self) -> float:
        return float(max(np.abs(self.u.data[..., 0]).max(),
                         np.abs(self.psi.data[..., 0]).max()))

    def enforce_real(self):
        for f in (self.u, self.psi, self.pres):
            f.enforce_real()
        self.eta.enforce_real()
        self.eta.zero_mean()
        return self


def state_norm(state: LinearState, s: int = 0) -> float:
    """Graph norm: bulk orders s+2, s+2, s+1 and the anisotropic surface norm."""
    pieces = [
        sobolev_norm(state.u, s + 2),
        sobolev_norm(state.psi, s + 2),
        sobolev_norm(state.pres, s + 1),
        x_norm(state.eta, s + 2.5),
    ]
    return float(np.sqrt(sum(p * p for p in pieces)))


# ---------------------------------------------------------------------------
# Forward application
# ---------------------------------------------------------------------------

def _unit_xi(grid: FrequencyGrid):
    """xi/|xi| per lattice point (zero vector at xi = 0)."""
    vecs = grid.xi_vectors()
    mag = np.sqrt((vecs ** 2).sum(axis=-1))
    unit = np.zeros_like(vecs)
    nz = mag > 0
    for j in range(grid.dim_h):
        unit[..., j][nz] = vecs[..., j][nz] / mag[nz]
    return unit, mag


def apply_linear_operator(state: LinearState, p: PhysicalParams) -> YData:
    grid, vgrid = state.grid, state.vgrid
    n = grid.dim_h + 1
    u, psi, pres, eta = state.u.data, state.psi.data, state.pres.data, state.eta.data
    mults = xi_multipliers(grid)

    def dh(arr, ax):
        return horiz_deriv(arr, grid, ax)

    du_n = vgrid.differentiate(u)
    g = du_n[n - 1:n].copy()
    for ax in range(grid.dim_h):
        g = g + dh(u[ax:ax + 1], ax)

    lap_u = vgrid.differentiate(du_n)
    xi2 = sum(np.abs(m.reshape(m.shape + (1,) * (u.ndim - 1 - m.ndim))) ** 2
              for m in mults)
    lap_u = lap_u - xi2 * u

    grad_g = np.concatenate([dh(g, ax) for ax in range(grid.dim_h)]
                            + [vgrid.differentiate(g)], axis=0)

    grad_p = np.concatenate([dh(pres, ax) for ax in range(grid.dim_h)]
                            + [vgrid.differentiate(pres)], axis=0)

    f = -p.gamma * dh(u, 0) + grad_p - p.mu * (lap_u + grad_g)
    for ax in range(grid.dim_h):
        f[ax] = f[ax] + p.grav * dh(eta, ax)[0][..., None]

    dpsi_n = vgrid.differentiate(psi)
    lap_psi = vgrid.differentiate(dpsi_n) - xi2 * psi
    l = -p.gamma * dh(psi, 0) - p.kappa * lap_psi

    # surface rows (top node is the last one)
    k = np.zeros((n,) + grid.freq_shape, dtype=complex)
    for ax in range(grid.dim_h):
        k[ax] = (-p.mu * (du_n[ax, ..., -1] + dh(u[n - 1:n], ax)[0, ..., -1])
                 + p.sigma1 * dh(psi, ax)[0, ..., -1])
    lap_eta = sum(dh(dh(eta, ax), ax) for ax in range(grid.dim_h))[0]
    k[n - 1] = (pres[0, ..., -1] - 2.0 * p.mu * du_n[n - 1, ..., -1]
                + p.sigma0 * lap_eta)

    h = u[n - 1:n, ..., -1] + p.gamma * dh(eta, 0)
    m = p.kappa * dpsi_n[0:1, ..., -1]

    return YData(
        f=SpectralField(grid, vgrid, f, True),
        g=SpectralField(grid, vgrid, g, True),
        l=SpectralField(grid, vgrid, l, True),
        k=SurfaceSpectral(grid, k, True),
        h=SurfaceSpectral(grid, h, True),
        m=SurfaceSpectral(grid, np.asarray(m), True),
    )


# ---------------------------------------------------------------------------
# Compatibility functional and the multiplier solve
# ---------------------------------------------------------------------------

def _profile_lattice(table: SymbolTable, row: int) -> np.ndarray:
    grid, vgrid = table.grid, table.vgrid
    out = np.zeros(grid.freq_shape + (vgrid.count,), dtype=complex)
    for idx, e in table.entries.items():
        out[idx] = e.y[row]
    return out


def _long_amplitude(vec: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """Contract the horizontal part of an n-vector field with i xi/|xi|."""
    unit, _ = _unit_xi(grid)
    out = np.zeros(vec.shape[1:], dtype=complex)
    for j in range(grid.dim_h):
        uj = unit[..., j]
        out = out + 1j * uj.reshape(uj.shape + (1,) * (vec.ndim - 1 - uj.ndim)) * vec[j]
    return out


def compatibility_functional(data: YData, table: SymbolTable) -> SurfaceSpectral:
    """Per-frequency pairing of the data against the adjoint response symbols."""
    grid, vgrid = data.grid, data.vgrid
    n = grid.dim_h + 1
    w = vgrid.weights
    y_long = np.conj(_profile_lattice(table, 0))
    y_vn = np.conj(_profile_lattice(table, 1))
    y_temp = np.conj(_profile_lattice(table, 2))
    y_q = np.conj(_profile_lattice(table, 3))

    f_long = _long_amplitude(data.f.data, grid)
    bulk = (f_long * y_long + data.f.data[n - 1] * y_vn
            - data.g.data[0] * y_q + data.l.data[0] * y_temp)
    xi_val = bulk @ w

    k_long = _long_amplitude(data.k.data, grid)
    xi_val -= k_long * y_long[..., -1] + data.k.data[n - 1] * y_vn[..., -1]
    xi_val += data.m.data[0] * y_temp[..., -1]
    xi_val += data.h.data[0]
    return SurfaceSpectral(grid, xi_val[None], real_flag=data.f.real_flag)


def solve_surface(pairing: SurfaceSpectral, table: SymbolTable,
              rho_floor: float = 1e-13) -> SurfaceSpectral:
    """etahat = pairing/rho off the zero mode; the zero mode stays zero.

    The zero-mode magnitude of the pairing is an incompatibility diagnostic
    available directly from its coefficients.  Raises RhoVanishing when |rho|
    is smaller than rho_floor times its certified lower-bound scale, which
    signals mis-assembled symbols.
    """
    grid = pairing.grid
    p = table.params
    rho = table.rho_lattice()
    vecs = grid.xi_vectors()
    mag2 = (vecs ** 2).sum(axis=-1)
    scale = p.grav + p.sigma0 * 4.0 * np.pi ** 2 * mag2 \
        + 2.0 * np.pi * np.abs(p.gamma * vecs[..., 0])
    bad = (np.abs(rho) <= rho_floor * scale) & (mag2 > 0)
    if np.any(bad):
        worst = np.argwhere(bad)[0]
        raise RhoVanishing(f"|rho| ~ 0 at lattice index {tuple(worst)}")
    eta = np.zeros(grid.freq_shape, dtype=complex)
    nz = mag2 > 0
    eta[nz] = pairing.data[0][nz] / rho[nz]
    out = SurfaceSpectral(grid, eta[None], real_flag=pairing.real_flag)
    return out


# ---------------------------------------------------------------------------
# Full inverse
# ---------------------------------------------------------------------------

class LinearInverter:
    """Caches the per-frequency machinery for repeated inversions."""

    def __init__(self, table: SymbolTable, split: float = DEFAULT_SPLIT,
                 cond_limit: float = DEFAULT_COND_LIMIT):
        self.table = table
        p = table.params
        self.solver = FrequencySolver(p, table.vgrid, -p.gamma, p.sigma1, 0.0,
                                      split=split, cond_limit=cond_limit,
                                      reuse=True)
        self._zero_mode_ops = None

    # zero-frequency scalar two-point problems, assembled once
    def _zero_ops(self):
        if self._zero_mode_ops is None:
            p = self.table.params
            vgrid = self.table.vgrid
            D = vgrid.diff
            nz = vgrid.count
            visc = -p.mu * (D @ D)
            visc[0] = 0.0
            visc[0, 0] = 1.0
            visc[-1] = -p.mu * D[-1]
            heat = -p.kappa * (D @ D)
            heat[0] = 0.0
            heat[0, 0] = 1.0
            heat[-1] = p.kappa * D[-1]
            integ = D.astype(float).copy()
            integ[0] = 0.0
            integ[0, 0] = 1.0
            anti = D.astype(float).copy()
            anti[-1] = 0.0
            anti[-1, -1] = 1.0
            self._zero_mode_ops = {
                "visc": np.linalg.inv(visc),
                "heat": np.linalg.inv(heat),
                "integ": np.linalg.inv(integ),
                "anti": np.linalg.inv(anti),
            }
        return self._zero_mode_ops

    def _solve_zero_mode(self, data: YData, out: LinearState):
        p = self.table.params
        vgrid = self.table.vgrid
        grid = data.grid
        n = grid.dim_h + 1
        zero = (0,) * grid.dim_h
        ops = self._zero_ops()

        for i in range(grid.dim_h):
            rhs = data.f.data[(i,) + zero].copy()
            rhs[0] = 0.0
            rhs[-1] = data.k.data[(i,) + zero]
            out.u.data[(i,) + zero] = ops["visc"] @ rhs

        rhs = data.g.data[(0,) + zero].copy()
        rhs[0] = 0.0
        wn = ops["integ"] @ rhs
        out.u.data[(n - 1,) + zero] = wn

        rhs = data.l.data[(0,) + zero].copy()
        rhs[0] = 0.0
        rhs[-1] = data.m.data[(0,) + zero]
        out.psi.data[(0,) + zero] = ops["heat"] @ rhs

        gz = data.g.data[(0,) + zero]
        rhs = data.f.data[(n - 1,) + zero] + 2.0 * p.mu * vgrid.differentiate(gz)
        rhs = rhs.copy()
        rhs[-1] = data.k.data[(n - 1,) + zero] + 2.0 * p.mu * gz[-1]
        out.pres.data[(0,) + zero] = ops["anti"] @ rhs

    def invert(self, data: YData, residual_tol: float | None = None) -> LinearState:
        table = self.table
        p = table.params
        grid, vgrid = data.grid, data.vgrid
        n = grid.dim_h + 1
        modes = grid.modes

        pairing = compatibility_functional(data, table)
        eta = solve_surface(pairing, table)

        # subtract the surface terms from the data
        fd = data.f.data.copy()
        for ax in range(grid.dim_h):
            fd[ax] = fd[ax] - p.grav * horiz_deriv(eta.data, grid, ax)[0][..., None]
        kd = data.k.data.copy()
        lap_eta = sum(horiz_deriv(horiz_deriv(eta.data, grid, ax), grid, ax)
                      for ax in range(grid.dim_h))[0]
        kd[n - 1] = kd[n - 1] - p.sigma0 * lap_eta

        unit, _ = _unit_xi(grid)
        f_long = _long_amplitude(fd, grid)
        k_long = _long_amplitude(kd, grid)

        out = LinearState.zeros(grid, vgrid)
        out.eta = eta
        vecs = grid.xi_vectors()

        for idx in np.ndindex(grid.freq_shape):
            signed = tuple(i if i <= modes // 2 else i - modes for i in idx)
            if all(s == 0 for s in signed):
                continue
            if not next((s > 0 for s in signed if s != 0), True):
                continue
            xi = vecs[idx]
            m2pi = 2.0 * np.pi * float(np.linalg.norm(xi))
            G = data.g.data[(0,) + idx]
            # momentum contains mu grad(div u): F1 = f_long - 2 pi mu |xi| g,
            # F2 = f_n + mu dn g, and the z template adds another mu dn G
            z = np.zeros((6, vgrid.count), dtype=complex)
            z[1] = G
            z[3] = fd[(n - 1,) + idx] + 2.0 * p.mu * vgrid.differentiate(G)
            z[4] = -f_long[idx] / p.mu + m2pi * G
            z[5] = -data.l.data[(0,) + idx] / p.kappa
            d = np.zeros(6, dtype=complex)
            d[3] = k_long[idx]
            d[4] = kd[(n - 1,) + idx] + 2.0 * p.mu * G[-1]
            d[5] = data.m.data[(0,) + idx]
            Y, _, _ = self.solver.solve(xi, z, d)
            u_here = np.zeros((n, vgrid.count), dtype=complex)
            for j in range(grid.dim_h):
                u_here[j] = -1j * Y[0] * unit[idx + (j,)]
            u_here[n - 1] = Y[1]
            if grid.dim_h == 2:
                perp = np.array([-unit[idx + (1,)], unit[idx + (0,)]])
                f_perp = perp[0] * fd[0][idx] + perp[1] * fd[1][idx]
                k_perp = perp[0] * kd[0][idx] + perp[1] * kd[1][idx]
                if np.abs(f_perp).max() > 0 or abs(k_perp) > 0:
                    beta = solve_transverse(xi, p, vgrid, -p.gamma,
                                            f_transverse=f_perp,
                                            k_transverse=k_perp)
                    u_here[0] += beta * perp[0]
                    u_here[1] += beta * perp[1]
            out.u.data[(slice(None),) + idx] = u_here
            out.psi.data[(0,) + idx] = Y[2]
            out.pres.data[(0,) + idx] = Y[3]
            neg = grid.negate_index(idx)
            if neg != idx:
                out.u.data[(slice(None),) + neg] = np.conj(u_here)
                out.psi.data[(0,) + neg] = np.conj(Y[2])
                out.pres.data[(0,) + neg] = np.conj(Y[3])

        self._solve_zero_mode(data, out)

        if residual_tol is not None:
            back = apply_linear_operator(out, p)
            back.axpy(-1.0, data)
            denom = ydata_norm(data)
            misfit = ydata_norm(back) / denom if denom > 0 else ydata_norm(back)
            if misfit > residual_tol:
                raise ResidualTooLarge(
                    f"round-trip misfit {misfit:.3e} > {residual_tol:.3e}")
        return out


def invert_linear_operator(data: YData, p: PhysicalParams, table: SymbolTable,
                   inverter: LinearInverter | None = None,
                   residual_tol: float | None = None) -> LinearState:
    """Solve the linearized problem for the given data tuple."""
    if inverter is None:
        inverter = LinearInverter(table)
    return inverter.invert(data, residual_tol=residual_tol)


def make_random_state(grid: FrequencyGrid, vgrid: VerticalGrid, seed: int = 0,
                      mode_decay: float = 0.7, kmax: int = 6,
                      jmax: int | None = None,
                      eta_scale: float = 1.0) -> LinearState:
    """Smooth random admissible state: bottom traces vanish, eta mean-zero."""
    rng = np.random.default_rng(seed)
    if jmax is None:
        jmax = min(grid.modes // 4, 8)
    st = LinearState.zeros(grid, vgrid)
    z = vgrid.nodes / vgrid.depth
    basis0 = np.stack([np.sin((k + 0.5) * np.pi * z) for k in range(kmax)])
    basisf = np.stack([np.cos(k * np.pi * z) for k in range(kmax)])

    def modes_iter():
        if grid.dim_h == 1:
            for j in range(1, jmax + 1):
                yield (j,), j
        else:
            for j1 in range(0, jmax + 1):
                for j2 in range(-jmax, jmax + 1):
                    if j1 == 0 and j2 <= 0:
                        continue
                    yield (j1, j2 % grid.modes), np.hypot(j1, j2)

    def fill(arr, comps, basis):
        for c in range(comps):
            for idx, jm in modes_iter():
                for k in range(kmax):
                    amp = (rng.standard_normal() + 1j * rng.standard_normal())
                    amp *= np.exp(-mode_decay * jm - 0.5 * k)
                    arr[(c,) + idx] += amp * basis[k]

    fill(st.u.data, grid.dim_h + 1, basis0)
    fill(st.psi.data, 1, basis0)
    fill(st.pres.data, 1, basisf)
    for idx, jm in modes_iter():
        st.eta.data[(0,) + idx] = eta_scale * np.exp(-mode_decay * jm) * (
            rng.standard_normal() + 1j * rng.standard_normal())
    st.enforce_real()
    return st
