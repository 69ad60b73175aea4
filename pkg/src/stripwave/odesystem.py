"""Per-frequency two-point boundary value problems on the strip's fiber.

After a horizontal Fourier transform and a longitudinal/transverse split of
the horizontal velocity, each frequency xi carries a first-order system for
y = (phi, psi, delta, q, dn phi, dn delta):

    dn y = A(xi) y + z     in (0, b),       M y(0) + N y(b) = d,

where phi is the longitudinal velocity amplitude Fhat(w') . i xi/|xi|, psi
the vertical velocity, delta the temperature, q the pressure.  z is built
from bulk forcing (F1, F2, G, L) and d from boundary data (K1, K2, M_heat).
The general transport speed gamma_tilde and the coupling placement
(alpha1, alpha2) select the forward problem (-gamma, alpha1, 0) or the
adjoint/normal-stress problem (+gamma, 0, alpha2).

Two backends solve the system and validate each other:

* ``matexp``: the variation-of-constants representation
  y(x) = exp(xA) B^{-1} (d - N int_0^b exp((b-t)A) z dt) + int_0^x exp((x-t)A) z dt,
  B = M + N exp(bA), evaluated by forward marching with per-interval
  exponentials and composite Gauss-Legendre panels (an exact regrouping of
  the same integrals).  It degrades once exp(2 pi |xi| b) eats the floating
  point headroom, so it is gated by a configurable split.

* ``collocation``: direct Chebyshev collocation of the first-order system,
  a dense linear solve per frequency, valid at all frequencies.

The homogeneous solve with d = (0,0,0,0,1,0) yields the response symbols to
a unit normal stress on the top boundary; their top traces assemble the
surface multiplier rho(xi) = (sigma0 4 pi^2 |xi|^2 + grav) conj(psi(b))
+ 2 pi i gamma xi_1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg import lapack as _lapack

from .errors import IllConditionedCollocation, NumericallySingular
from .grids import VerticalGrid, barycentric_weights_lobatto
from .params import PhysicalParams

DEFAULT_SPLIT = 30.0
SYMBOL_SPLIT = 10.0
DEFAULT_COND_LIMIT = 1e12
_GL_NODES, _GL_WEIGHTS = leggauss(8)


# ---------------------------------------------------------------------------
# Matrix assembly
# ---------------------------------------------------------------------------

def assemble_bulk_matrix(xi, p: PhysicalParams, gamma_tilde: float) -> np.ndarray:
    """The 6x6 coefficient matrix A(xi) of the first-order system."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m = 2.0 * np.pi * float(np.linalg.norm(xi))
    t = 2j * np.pi * gamma_tilde * xi[0]
    mu, kappa = p.mu, p.kappa
    A = np.zeros((6, 6), dtype=complex)
    A[0, 4] = 1.0
    A[1, 0] = -m
    A[2, 5] = 1.0
    A[3, 1] = -mu * m * m - t
    A[3, 4] = -mu * m
    A[4, 0] = m * m + t / mu
    A[4, 3] = -m / mu
    A[5, 2] = m * m + t / kappa
    return A


def assemble_boundary(xi, p: PhysicalParams, alpha1: float, alpha2: float):
    """Boundary matrices (M, N) with M y(0) + N y(b) = d.

    Row 1 is the tangential stress (alpha1 couples the temperature into it),
    row 2 the normal stress, row 3 the heat flux (alpha2 couples the
    longitudinal velocity).  At (alpha1, alpha2) = (0, sigma1) this is the
    adjoint/normal-stress problem; at (sigma1, 0) the forward one.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m = 2.0 * np.pi * float(np.linalg.norm(xi))
    mu, kappa = p.mu, p.kappa
    Mmat = np.zeros((6, 6), dtype=complex)
    Mmat[:3, :3] = np.eye(3)
    N1 = np.array([
        [0.0, mu * m, -alpha1 * m],
        [2.0 * mu * m, 0.0, 0.0],
        [alpha2 * m, 0.0, 0.0],
    ], dtype=complex)
    N2 = np.array([
        [0.0, -mu, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, kappa],
    ], dtype=complex)
    Nmat = np.zeros((6, 6), dtype=complex)
    Nmat[3:, :3] = N1
    Nmat[3:, 3:] = N2
    return Mmat, Nmat


def assemble_B(xi, p: PhysicalParams, gamma_tilde: float, alpha1: float,
               alpha2: float, depth: float, cond_limit: float = DEFAULT_COND_LIMIT):
    """B = M + N exp(bA), its inverse, and a condition estimate."""
    A = assemble_bulk_matrix(xi, p, gamma_tilde)
    Mmat, Nmat = assemble_boundary(xi, p, alpha1, alpha2)
    expb = matrix_exponential(A, depth)
    B = Mmat + Nmat @ expb
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > cond_limit:
        raise NumericallySingular(
            f"cond(B) = {cond:.3g} beyond {cond_limit:.3g} at 2pi|xi|b = "
            f"{2 * np.pi * np.linalg.norm(xi) * depth:.3g}")
    return B, np.linalg.inv(B), cond


# ---------------------------------------------------------------------------
# Matrix exponential (scaling and squaring with diagonal Pade approximants)
# ---------------------------------------------------------------------------

_PADE_B = {
    3: [120.0, 60.0, 12.0, 1.0],
    5: [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
    7: [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
    9: [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0],
    13: [64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0],
}
_PADE_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
               7: 9.504178996162932e-1, 9: 2.097847961257068e0,
               13: 5.371920351148152e0}


def _pade_uv(A, order):
    b = _PADE_B[order]
    n = A.shape[0]
    I = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    if order == 13:
        A4 = A2 @ A2
        A6 = A2 @ A4
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I)
        return U, V
    powers = {0: I, 2: A2}
    top = order - 1
    k = 4
    while k <= top:
        powers[k] = powers[k - 2] @ A2
        k += 2
    U = np.zeros_like(A)
    V = np.zeros_like(A)
    for k in range(0, order + 1, 2):
        V = V + b[k] * powers[k]
    for k in range(1, order + 1, 2):
        U = U + b[k] * powers[k - 1]
    U = A @ U
    return U, V


def matrix_exponential(M: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(t M) by scaling and squaring with diagonal Pade approximants."""
    A = t * np.asarray(M, dtype=complex)
    nrm = float(np.linalg.norm(A, 1))
    if not np.isfinite(nrm):
        raise NumericallySingular("non-finite matrix handed to the exponential")
    for order in (3, 5, 7, 9):
        if nrm <= _PADE_THETA[order]:
            U, V = _pade_uv(A, order)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(nrm / _PADE_THETA[13]))))
    U, V = _pade_uv(A / 2.0 ** s, 13)
    X = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        X = X @ X
    if not np.all(np.isfinite(X)):
        raise NumericallySingular("matrix exponential overflowed")
    return X


# ---------------------------------------------------------------------------
# Forced boundary value problems
# ---------------------------------------------------------------------------

@dataclass
class BVPSpec:
    """One per-frequency problem: coefficients plus forcing."""

    xi: np.ndarray
    gamma_tilde: float
    alpha1: float
    alpha2: float
    z_profile: np.ndarray          # (6, Nz); rows 1 and 3 identically zero
    d_vec: np.ndarray              # (6,)

    @classmethod
    def from_rhs(cls, xi, p: PhysicalParams, vgrid: VerticalGrid,
                 gamma_tilde: float, alpha1: float, alpha2: float,
                 F1=None, F2=None, G=None, L=None, K1=0.0, K2=0.0, M_heat=0.0):
        """Assemble z = (0, G, 0, F2 + mu dG, -F1/mu, -L/kappa) and
        d = (0, 0, 0, K1, K2 + 2 mu G(b), M_heat)."""
        nz = vgrid.count
        zero = np.zeros(nz, dtype=complex)
        F1 = zero if F1 is None else np.asarray(F1, dtype=complex)
        F2 = zero if F2 is None else np.asarray(F2, dtype=complex)
        G = zero if G is None else np.asarray(G, dtype=complex)
        L = zero if L is None else np.asarray(L, dtype=complex)
        dG = vgrid.differentiate(G)
        z = np.zeros((6, nz), dtype=complex)
        z[1] = G
        z[3] = F2 + p.mu * dG
        z[4] = -F1 / p.mu
        z[5] = -L / p.kappa
        d = np.zeros(6, dtype=complex)
        d[3] = K1
        d[4] = K2 + 2.0 * p.mu * G[-1]
        d[5] = M_heat
        return cls(np.atleast_1d(np.asarray(xi, dtype=float)), gamma_tilde,
                   alpha1, alpha2, z, d)


@dataclass
class _MatexpPrep:
    A: np.ndarray
    step_exp: list                 # exp(h_j A) per interval
    Binv: np.ndarray
    Nmat: np.ndarray
    cond: float
    quad_exp: list | None = None   # per interval: (8, 6, 6) weighted exponentials
    quad_interp: list | None = None  # per interval: (8, Nz) interpolation weights

    def ensure_quad(self, vgrid: VerticalGrid):
        if self.quad_exp is not None:
            return
        nodes = vgrid.nodes
        lam = barycentric_weights_lobatto(vgrid.count - 1)
        quad_exp, quad_interp = [], []
        for j in range(vgrid.count - 1):
            a, c = nodes[j], nodes[j + 1]
            h = c - a
            tq = 0.5 * (c + a) + 0.5 * h * _GL_NODES
            wq = 0.5 * h * _GL_WEIGHTS
            exps = np.stack([wq[q] * matrix_exponential(self.A, c - tq[q])
                             for q in range(len(tq))])
            interp = np.empty((len(tq), vgrid.count))
            for q in range(len(tq)):
                diffs = tq[q] - nodes
                w = lam / diffs
                interp[q] = w / w.sum()
            quad_exp.append(exps)
            quad_interp.append(interp)
        self.quad_exp = quad_exp
        self.quad_interp = quad_interp


@dataclass
class _CollocationPrep:
    lu: tuple
    rows_replaced: tuple
    Nmat: np.ndarray
    cond_estimate: float


class FrequencySolver:
    """Per-frequency solver with cached preparations.

    Fixed coefficients (params, transport speed gamma_tilde, coupling
    placement alpha1/alpha2, vertical grid); the backend is chosen per
    frequency by the size of 2 pi |xi| b against ``split``.
    """

    def __init__(self, p: PhysicalParams, vgrid: VerticalGrid,
                 gamma_tilde: float, alpha1: float, alpha2: float,
                 split: float = DEFAULT_SPLIT,
                 cond_limit: float = DEFAULT_COND_LIMIT,
                 reuse: bool = True):
        self.p = p
        self.vgrid = vgrid
        self.gamma_tilde = gamma_tilde
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.split = split
        self.cond_limit = cond_limit
        self.reuse = reuse
        self._matexp_cache = {}
        self._coll_cache = {}

    # -- backend selection ---------------------------------------------------

    def backend_for(self, xi) -> str:
        scale = 2.0 * np.pi * float(np.linalg.norm(xi)) * self.vgrid.depth
        return "matexp" if scale <= self.split else "collocation"

    def _key(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return tuple(np.round(xi, 12))

    # -- matexp backend -------------------------------------------------------

    def _prep_matexp(self, xi) -> _MatexpPrep:
        key = self._key(xi)
        if self.reuse and key in self._matexp_cache:
            return self._matexp_cache[key]
        p, vgrid = self.p, self.vgrid
        A = assemble_bulk_matrix(xi, p, self.gamma_tilde)
        _, Binv, cond = assemble_B(xi, p, self.gamma_tilde, self.alpha1,
                                   self.alpha2, vgrid.depth, self.cond_limit)
        _, Nmat = assemble_boundary(xi, p, self.alpha1, self.alpha2)
        nodes = vgrid.nodes
        step_exp = [matrix_exponential(A, nodes[j + 1] - nodes[j])
                    for j in range(vgrid.count - 1)]
        prep = _MatexpPrep(A, step_exp, Binv, Nmat, cond)
        if self.reuse:
            self._matexp_cache[key] = prep
        return prep

    def _solve_matexp(self, xi, z_profile, d_vec):
        prep = self._prep_matexp(xi)
        vgrid = self.vgrid
        nz = vgrid.count
        homogeneous = z_profile is None or not np.any(z_profile)
        local = []
        if not homogeneous:
            prep.ensure_quad(vgrid)
            for j in range(nz - 1):
                zq = z_profile @ prep.quad_interp[j].T        # (6, 8)
                local.append(np.einsum("qij,jq->i", prep.quad_exp[j], zq))
        else:
            local = [np.zeros(6, dtype=complex)] * (nz - 1)
        integral = np.zeros(6, dtype=complex)
        for j in range(nz - 1):
            integral = prep.step_exp[j] @ integral + local[j]
        y0 = prep.Binv @ (np.asarray(d_vec, dtype=complex) - prep.Nmat @ integral)
        Y = np.empty((6, nz), dtype=complex)
        Y[:, 0] = y0
        for j in range(nz - 1):
            Y[:, j + 1] = prep.step_exp[j] @ Y[:, j] + local[j]
        return Y, prep.cond

    # -- collocation backend ---------------------------------------------------

    def _prep_collocation(self, xi) -> _CollocationPrep:
        key = self._key(xi)
        if self.reuse and key in self._coll_cache:
            return self._coll_cache[key]
        p, vgrid = self.p, self.vgrid
        nz = vgrid.count
        A = assemble_bulk_matrix(xi, p, self.gamma_tilde)
        _, Nmat = assemble_boundary(xi, p, self.alpha1, self.alpha2)
        D = vgrid.diff
        sys = np.kron(np.eye(6, dtype=complex), D) - np.kron(A, np.eye(nz))
        bottom_rows = tuple(c * nz for c in range(3))
        top_rows = tuple((3 + r) * nz + (nz - 1) for r in range(3))
        for c, row in enumerate(bottom_rows):
            sys[row] = 0.0
            sys[row, c * nz] = 1.0
        for r, row in enumerate(top_rows):
            sys[row] = 0.0
            for c in range(3):
                sys[row, c * nz + (nz - 1)] = Nmat[3 + r, c]
                sys[row, (3 + c) * nz + (nz - 1)] = Nmat[3 + r, 3 + c]
        anorm = float(np.linalg.norm(sys, 1))
        lu = lu_factor(sys)
        gecon = _lapack.zgecon if sys.dtype == np.complex128 else _lapack.cgecon
        rcond, _ = gecon(lu[0], anorm)
        cond_estimate = 1.0 / max(rcond, np.finfo(float).tiny)
        if cond_estimate > self.cond_limit:
            raise IllConditionedCollocation(
                f"collocation condition estimate {cond_estimate:.3g} beyond "
                f"{self.cond_limit:.3g}", cond_estimate=cond_estimate)
        prep = _CollocationPrep(lu, bottom_rows + top_rows, Nmat, cond_estimate)
        if self.reuse:
            self._coll_cache[key] = prep
        return prep

    def _solve_collocation(self, xi, z_profile, d_vec):
        prep = self._prep_collocation(xi)
        nz = self.vgrid.count
        rhs = np.zeros(6 * nz, dtype=complex) if z_profile is None \
            else np.asarray(z_profile, dtype=complex).reshape(6 * nz).copy()
        d = np.asarray(d_vec, dtype=complex)
        for c, row in enumerate(prep.rows_replaced[:3]):
            rhs[row] = d[c]
        for r, row in enumerate(prep.rows_replaced[3:]):
            rhs[row] = d[3 + r]
        Y = lu_solve(prep.lu, rhs).reshape(6, nz)
        return Y, prep.cond_estimate

    # -- public entry ----------------------------------------------------------

    def solve(self, xi, z_profile, d_vec, backend: str | None = None):
        """Solve one forced problem; returns (Y, backend_used, cond_estimate)."""
        choice = backend or self.backend_for(xi)
        if choice == "matexp":
            try:
                Y, cond = self._solve_matexp(xi, z_profile, d_vec)
                return Y, "matexp", cond
            except NumericallySingular:
                if backend == "matexp":
                    raise
                choice = "collocation"
        Y, cond = self._solve_collocation(xi, z_profile, d_vec)
        return Y, "collocation", cond


def solve_forced_bvp(spec: BVPSpec, p: PhysicalParams, vgrid: VerticalGrid,
                     backend: str = "auto", split: float = DEFAULT_SPLIT,
                     cond_limit: float = DEFAULT_COND_LIMIT) -> np.ndarray:
    """One-shot forced solve; returns the (6, Nz) state profile."""
    solver = FrequencySolver(p, vgrid, spec.gamma_tilde, spec.alpha1,
                             spec.alpha2, split=split, cond_limit=cond_limit,
                             reuse=False)
    Y, _, _ = solver.solve(spec.xi, spec.z_profile, spec.d_vec,
                           backend=None if backend == "auto" else backend)
    return Y


def solve_transverse(xi, p: PhysicalParams, vgrid: VerticalGrid,
                     gamma_tilde: float, f_transverse=None, k_transverse=0.0,
                     cond_limit: float = DEFAULT_COND_LIMIT) -> np.ndarray:
    """Scalar transverse velocity problem (horizontal dimension two only).

    gamma_tilde 2 pi i xi_1 beta - mu (dn^2 - 4 pi^2 |xi|^2) beta = f,
    beta(0) = 0, -mu dn beta(b) = k.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.size != 2:
        raise ValueError("transverse problems only arise for dim_h = 2")
    nz = vgrid.count
    m = 2.0 * np.pi * float(np.linalg.norm(xi))
    t = 2j * np.pi * gamma_tilde * xi[0]
    D = vgrid.diff
    L = t * np.eye(nz) - p.mu * (D @ D - m * m * np.eye(nz))
    L = L.astype(complex)
    rhs = np.zeros(nz, dtype=complex) if f_transverse is None \
        else np.asarray(f_transverse, dtype=complex).copy()
    L[0] = 0.0
    L[0, 0] = 1.0
    rhs[0] = 0.0
    L[-1] = -p.mu * D[-1]
    rhs[-1] = k_transverse
    cond = float(abs(np.linalg.cond(L, 1)))
    if cond > cond_limit:
        raise IllConditionedCollocation("transverse system ill-conditioned",
                                        cond_estimate=cond)
    return np.linalg.solve(L, rhs)


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------

@dataclass
class SymbolEntry:
    """Response profiles to a unit normal stress at one frequency."""

    xi: np.ndarray
    y: np.ndarray                  # (6, Nz)
    rho: complex
    backend: str
    cond: float

    @property
    def om_long(self) -> np.ndarray:
        """Longitudinal velocity amplitude profile (phi)."""
        return self.y[0]

    @property
    def om_vn(self) -> np.ndarray:
        return self.y[1]

    @property
    def om_temp(self) -> np.ndarray:
        return self.y[2]

    @property
    def om_q(self) -> np.ndarray:
        return self.y[3]

    @property
    def om_vn_surf(self) -> complex:
        return complex(self.y[1, -1])

    @property
    def om_temp_surf(self) -> complex:
        return complex(self.y[2, -1])

    @property
    def om_long_surf(self) -> complex:
        return complex(self.y[0, -1])

    def om_v_surf(self) -> np.ndarray:
        """n-component velocity trace (longitudinal direction restored)."""
        xi = self.xi
        mag = np.linalg.norm(xi)
        out = np.zeros(xi.size + 1, dtype=complex)
        if mag > 0:
            out[:-1] = -1j * self.y[0, -1] * xi / mag
        out[-1] = self.y[1, -1]
        return out

    def conjugated(self, xi_new) -> "SymbolEntry":
        return SymbolEntry(np.atleast_1d(np.asarray(xi_new, dtype=float)),
                           np.conj(self.y), np.conj(self.rho), self.backend,
                           self.cond)


def rho_of(p: PhysicalParams, xi, om_vn_surf: complex) -> complex:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    mag2 = float(xi @ xi)
    return ((p.sigma0 * 4.0 * np.pi ** 2 * mag2 + p.grav) * np.conj(om_vn_surf)
            + 2j * np.pi * p.gamma * xi[0])


def solve_symbol(xi, p: PhysicalParams, vgrid: VerticalGrid,
                 solver: FrequencySolver | None = None,
                 backend: str | None = None,
                 split: float = SYMBOL_SPLIT,
                 cond_limit: float = DEFAULT_COND_LIMIT) -> SymbolEntry:
    """Homogeneous adjoint solve with unit normal stress; populates a table row.

    xi = 0 is closed form: the pressure symbol is identically one and every
    other response vanishes, so rho(0) = 0.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    nz = vgrid.count
    if float(np.linalg.norm(xi)) == 0.0:
        y = np.zeros((6, nz), dtype=complex)
        y[3] = 1.0
        return SymbolEntry(xi, y, 0.0 + 0.0j, "closed-form", 1.0)
    if solver is None:
        solver = FrequencySolver(p, vgrid, p.gamma, 0.0, p.sigma1,
                                 split=split, cond_limit=cond_limit, reuse=False)
    d = np.zeros(6, dtype=complex)
    d[4] = 1.0
    Y, used, cond = solver.solve(xi, None, d, backend=backend)
    return SymbolEntry(xi, Y, rho_of(p, xi, Y[1, -1]), used, cond)


class SymbolTable:
    """Symbol entries over a frequency lattice, conjugate-mirrored."""

    def __init__(self, grid, vgrid, p: PhysicalParams, entries: dict):
        self.grid = grid
        self.vgrid = vgrid
        self.params = p
        self.entries = entries

    @classmethod
    def build(cls, grid, vgrid, p: PhysicalParams,
              split: float = SYMBOL_SPLIT,
              cond_limit: float = DEFAULT_COND_LIMIT) -> "SymbolTable":
        solver = FrequencySolver(p, vgrid, p.gamma, 0.0, p.sigma1,
                                 split=split, cond_limit=cond_limit, reuse=False)
        modes = grid.modes
        vecs = grid.xi_vectors()
        entries = {}
        for idx in np.ndindex(grid.freq_shape):
            if idx in entries:
                continue
            signed = tuple(i if i <= modes // 2 else i - modes for i in idx)
            canonical = signed == tuple(0 for _ in signed) or \
                next((s > 0 for s in signed if s != 0), True)
            if not canonical:
                continue
            xi = vecs[idx]
            entry = solve_symbol(xi, p, vgrid, solver=solver)
            entries[idx] = entry
            neg = grid.negate_index(idx)
            if neg not in entries:
                entries[neg] = entry.conjugated(vecs[neg])
        return cls(grid, vgrid, p, entries)

    def entry(self, idx) -> SymbolEntry:
        return self.entries[tuple(idx)]

    def rho_lattice(self) -> np.ndarray:
        out = np.zeros(self.grid.freq_shape, dtype=complex)
        for idx, e in self.entries.items():
            out[idx] = e.rho
        return out

    def surface_lattice(self, which: str) -> np.ndarray:
        """Lattice array of one surface trace: vn, temp, long or q."""
        row = {"vn": 1, "temp": 2, "long": 0, "q": 3}[which]
        out = np.zeros(self.grid.freq_shape, dtype=complex)
        for idx, e in self.entries.items():
            out[idx] = e.y[row, -1]
        return out
