import warnings

import numpy as np
import pytest

from stripwave.errors import AliasingWarning, ConfigError, PointOutsideDomain
from stripwave.fields import transform_forward
from stripwave.grids import FrequencyGrid, VerticalGrid
from stripwave.linear import (LinearState, LinearInverter, apply_linear_operator,
                              make_random_state, state_norm)
from stripwave.nonlinear import (ForcingData, eulerian_grid_samples,
                                 make_forcing_preset, nonlinear_residual,
                                 picard_solve, pushforward_eulerian,
                                 suggested_amplitude_cap)
from stripwave.norms import ydata_norm
from stripwave.odesystem import SymbolTable
from stripwave.params import PhysicalParams, make_constitutive

P1 = PhysicalParams(1, 1, 1, 1, 1, 1, 0.1, 2)
GRID = FrequencyGrid(1, 2 * np.pi * 10, 96)
VG = VerticalGrid(1.0, 40)
C_SMOOTH = make_constitutive(P1, visc="tempdep", heat="tempdep", sigma="smooth")
C_NEWT = make_constitutive(P1, visc="newtonian", heat="fourier", sigma="smooth")


@pytest.fixture(scope="module")
def table():
    return SymbolTable.build(GRID, VG, P1)


@pytest.fixture(scope="module")
def inverter(table):
    return LinearInverter(table)


def _scaled(state, eps):
    out = state.copy()
    out.u.data *= eps
    out.psi.data *= eps
    out.pres.data *= eps
    out.eta.data *= eps
    return out


def test_residual_zero_state_zero_forcing():
    st = LinearState.zeros(GRID, VG)
    r = nonlinear_residual(st, ForcingData(), P1, C_SMOOTH)
    assert ydata_norm(r) == 0.0


def test_derivative_at_zero_is_linear_operator():
    st = make_random_state(GRID, VG, seed=5, jmax=5, eta_scale=0.5)
    lin = apply_linear_operator(st, P1)
    denom = ydata_norm(lin)
    errs = []
    for eps in (1e-3, 1e-4, 1e-5):
        r = nonlinear_residual(_scaled(st, eps), ForcingData(), P1, C_SMOOTH)
        r.scale(1.0 / eps)
        r.axpy(-1.0, lin)
        errs.append(ydata_norm(r) / denom)
    assert errs[0] / errs[1] == pytest.approx(10.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(10.0, rel=0.1)


def test_flat_surface_newtonian_bulk_term():
    # with eta = 0 and the Newtonian closure the bulk slot reduces to
    # -gamma d1 u + u.grad u + grad p - mu(lap u + grad div u) - forcing,
    # checked against an independently coded pseudospectral evaluation
    st = make_random_state(GRID, VG, seed=11, jmax=4)
    st.eta.data[:] = 0.0
    for f in (st.u, st.psi, st.pres):
        f.data *= 1e-2
    r = nonlinear_residual(st, ForcingData(), P1, C_NEWT)

    xi = GRID.xi_axis()
    tw = (2j * np.pi * xi)[None, :, None]
    D = VG.diff

    def phys(cf):
        # expects a leading component axis; transforms the mode axis
        return np.real(np.fft.ifft(cf, axis=1)) * GRID.modes

    def coeff(ph):
        return np.fft.fft(ph, axis=1) / GRID.modes

    u = st.u.data
    du1 = tw * u
    dun = u @ D.T
    lap = tw * du1 + dun @ D.T
    div = du1[0:1] + dun[1:2]
    grad_div = np.concatenate([tw * div, div @ D.T], axis=0)
    grad_p = np.concatenate([tw * st.pres.data, st.pres.data @ D.T], axis=0)
    up, d1p, dnp = phys(u), phys(du1), phys(dun)
    conv = np.stack([up[0] * d1p[c] + up[1] * dnp[c] for c in range(2)])
    oracle = (-P1.gamma * du1 + coeff(conv) + grad_p
              - P1.mu * (lap + grad_div))
    # compare on the dealiased band
    mask = GRID.dealias_mask()[None, :, None]
    diff = np.abs((r.f.data - oracle) * mask).max()
    assert diff < 1e-12 * max(1.0, np.abs(oracle).max())


def test_residual_catches_large_surface():
    from stripwave.errors import SurfaceTooLarge
    st = LinearState.zeros(GRID, VG)
    st.eta.data[0, 0] = 0.6
    with pytest.raises(SurfaceTooLarge):
        nonlinear_residual(st, ForcingData(), P1, C_SMOOTH)


def test_aliasing_warning_on_rough_state():
    st = LinearState.zeros(GRID, VG)
    # energy right at the cutoff boundary produces a visible tail after products
    j = GRID.modes // 3 + 4
    st.eta.data[0, j] = 0.05
    st.eta.data[0, -j] = 0.05
    st.u.data[0, j, :] = 0.5
    st.u.data[0, -j, :] = 0.5
    with pytest.warns(AliasingWarning):
        nonlinear_residual(st, ForcingData(), P1, C_SMOOTH)


def test_forcing_validation():
    sharp = ForcingData(h_flat=lambda xp: np.sign(np.cos(xp[..., 0])),
                        amplitude=1e-3)
    with pytest.raises(ConfigError):
        sharp.validate(GRID)
    make_forcing_preset("heat-only", 1e-3, GRID, 1.0).validate(GRID)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        make_forcing_preset("volcano", 1e-3, GRID, 1.0)


def test_picard_zero_forcing(table, inverter):
    tr = picard_solve(ForcingData(), P1, C_SMOOTH, GRID, VG,
                      table=table, inverter=inverter)
    assert tr.converged
    assert tr.iterations == 0
    assert state_norm(tr.state) == 0.0


def test_picard_heat_driven(table, inverter):
    amp = 1e-3
    forcing = make_forcing_preset("heat-only", amp, GRID, 1.0, mode_index=3)
    tr = picard_solve(forcing, P1, C_SMOOTH, GRID, VG,
                      table=table, inverter=inverter)
    assert tr.converged
    assert tr.residuals[-1] <= 1e-9
    assert max(tr.contraction) <= 0.5
    # the wave is real and its surface amplitude matches the linear response
    e = table.entry((3,))
    linear_amp = abs(np.conj(e.om_temp_surf) * (amp / 2) / e.rho)
    got = abs(tr.state.eta.data[0, 3])
    assert got == pytest.approx(linear_amp, rel=1e-3)
    assert got > 0


def test_picard_amplitude_scaling(table, inverter):
    # final state norm halves to within O(amplitude^2) when forcing halves
    forcing_a = make_forcing_preset("heat-only", 1e-3, GRID, 1.0)
    forcing_b = make_forcing_preset("heat-only", 5e-4, GRID, 1.0)
    tr_a = picard_solve(forcing_a, P1, C_SMOOTH, GRID, VG,
                        table=table, inverter=inverter)
    tr_b = picard_solve(forcing_b, P1, C_SMOOTH, GRID, VG,
                        table=table, inverter=inverter)
    na, nb = state_norm(tr_a.state), state_norm(tr_b.state)
    assert abs(na - 2 * nb) <= 50.0 * na * na


def test_picard_translation_symmetry(table, inverter):
    # shifting the forcing shifts the solution by the same phase
    amp, j0 = 1e-3, 3
    xi0 = j0 / GRID.box_len
    shift = GRID.box_len / 8

    forcing = make_forcing_preset("heat-only", amp, GRID, 1.0, mode_index=j0)
    shifted = ForcingData(
        h_flat=lambda xp: np.cos(2 * np.pi * xi0 * (xp[..., 0] - shift)),
        amplitude=amp)
    tr = picard_solve(forcing, P1, C_SMOOTH, GRID, VG,
                      table=table, inverter=inverter)
    tr_s = picard_solve(shifted, P1, C_SMOOTH, GRID, VG,
                        table=table, inverter=inverter)
    xi = GRID.xi_axis()
    phase = np.exp(-2j * np.pi * xi * shift)
    moved = tr.state.copy()
    moved.u.data *= phase[None, :, None]
    moved.psi.data *= phase[None, :, None]
    moved.pres.data *= phase[None, :, None]
    moved.eta.data *= phase[None, :]
    moved.axpy(-1.0, tr_s.state)
    assert state_norm(moved) <= 1e-9 + 1e-6 * state_norm(tr.state)


def test_picard_reflection_symmetry():
    # gamma -> -gamma with reflected forcing gives the reflected solution
    amp, j0 = 1e-3, 3
    p_minus = PhysicalParams(1, 1, 1, 1, -1, 1, 0.1, 2)
    forcing = make_forcing_preset("heat-only", amp, GRID, 1.0, mode_index=j0)
    tr_plus = picard_solve(forcing, P1, C_SMOOTH, GRID, VG)
    tr_minus = picard_solve(forcing, p_minus, C_SMOOTH, GRID, VG)
    # reflection x1 -> -x1 conjugates coefficients (cosine forcing is even)
    for fplus, fminus, sgn in (
        (tr_plus.state.eta, tr_minus.state.eta, 1.0),
        (tr_plus.state.psi, tr_minus.state.psi, 1.0),
        (tr_plus.state.pres, tr_minus.state.pres, 1.0),
    ):
        refl = np.conj(fplus.data)
        assert np.abs(refl - fminus.data).max() <= 1e-9
    # horizontal velocity flips sign under reflection, vertical does not
    assert np.abs(-np.conj(tr_plus.state.u.data[0]) - tr_minus.state.u.data[0]).max() <= 1e-9
    assert np.abs(np.conj(tr_plus.state.u.data[1]) - tr_minus.state.u.data[1]).max() <= 1e-9


def test_amplitude_cap_heuristic():
    assert suggested_amplitude_cap(P1) == pytest.approx(1e-3)
    p = PhysicalParams(0.5, 2.0, 1, 0.25, 1, 1, 0.1, 2)
    assert suggested_amplitude_cap(p) == pytest.approx(1e-3 * 0.25)


def test_pushforward_flat_identity(table, inverter):
    st = make_random_state(GRID, VG, seed=2, jmax=4)
    st.eta.data[:] = 0.0
    pts = np.stack([np.linspace(0, GRID.box_len, 9, endpoint=False),
                    np.full(9, 0.375)], axis=-1)
    out = pushforward_eulerian(st, pts)
    # with a flat surface this is plain evaluation of the flattened fields
    from stripwave.geometry import eval_surface
    from stripwave.fields import SurfaceSpectral
    prof = SurfaceSpectral(GRID, st.psi.data[..., 0] * 0 +
                           np.array([VG.interpolate(st.psi.data[0, k, :], 0.375)
                                     for k in range(GRID.modes)])[None],
                           real_flag=True)
    expect = eval_surface(prof, pts[:, :1])
    assert np.abs(out["temperature"] - expect).max() < 1e-10


def test_pushforward_vertical_stretch():
    # constant-in-x' profile maps to itself with stretched vertical coordinate
    st = LinearState.zeros(GRID, VG)
    st.eta.data[0, 0] = 0.25
    st.psi.data[0, 0, :] = np.sin(2.0 * VG.nodes)
    yn = 0.8
    pts = np.array([[1.0, yn], [3.0, yn]])
    out = pushforward_eulerian(st, pts)
    xn = yn * 1.0 / 1.25
    assert np.abs(out["temperature"] - np.sin(2.0 * xn)).max() < 1e-12


def test_pushforward_rejects_outside():
    st = LinearState.zeros(GRID, VG)
    with pytest.raises(PointOutsideDomain):
        pushforward_eulerian(st, np.array([[0.0, 1.5]]))


def test_pushforward_pullback_roundtrip(table, inverter):
    # push forward, then pull values back through the flattening map
    amp = 1e-3
    forcing = make_forcing_preset("heat-only", amp, GRID, 1.0)
    tr = picard_solve(forcing, P1, C_SMOOTH, GRID, VG,
                      table=table, inverter=inverter)
    st = tr.state
    from stripwave.geometry import eval_surface
    xs = np.linspace(0, GRID.box_len, 11, endpoint=False)
    eta_at = eval_surface(st.eta, xs[:, None])
    frac = 0.6
    pts = np.stack([xs, frac * (1.0 + eta_at)], axis=-1)
    out = pushforward_eulerian(st, pts)
    # pullback: the flattened temperature at x_n = frac * b
    prof = np.array([VG.interpolate(st.psi.data[0, k, :], frac * VG.depth)
                     for k in range(GRID.modes)])
    from stripwave.fields import SurfaceSpectral
    expect = eval_surface(SurfaceSpectral(GRID, prof[None], True), xs[:, None])
    assert np.abs(out["temperature"] - expect).max() < 1e-8


def test_eulerian_grid_sampler(table, inverter):
    st = make_random_state(GRID, VG, seed=6, jmax=3, eta_scale=0.1)
    out = eulerian_grid_samples(st, nx=8, nlevel=3)
    assert out["points"].shape[0] == 24
    assert out["velocity"].shape == (2, 24)
