"""Spectral field containers and transforms.

``SpectralField`` holds Fourier coefficients indexed (component, xi..., node);
``SurfaceSpectral`` drops the vertical index.  Coefficients follow the series
convention f(x) = sum_xi fhat(xi, x_n) exp(2 pi i xi . x'), so a forward
transform of samples on the collocation grid is fftn/modes^dim_h.  Real
fields carry conjugate symmetry fhat(-xi) = conj(fhat(xi)); the Nyquist
column is forced to zero for real fields so the symmetry is exact on the
lattice.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .grids import FrequencyGrid, VerticalGrid

HERMITIAN_TOL = 1e-12


def _haxes(dim_h: int, offset: int = 1) -> tuple:
    return tuple(range(offset, offset + dim_h))


def _nyquist_slices(grid: FrequencyGrid):
    half = grid.modes // 2
    if grid.dim_h == 1:
        yield (slice(None), half)
    else:
        yield (slice(None), half, slice(None))
        yield (slice(None), slice(None), half)


@dataclass
class SpectralField:
    """Bulk field: complex coefficients, shape (comps,) + freq_shape + (Nz,)."""

    grid: FrequencyGrid
    vgrid: VerticalGrid
    data: np.ndarray
    real_flag: bool = True

    def __post_init__(self):
        expect = self.grid.freq_shape + (self.vgrid.count,)
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim == len(expect):
            self.data = self.data[None]
        if self.data.shape[1:] != expect:
            raise ValueError(f"data shape {self.data.shape} does not match grids {expect}")

    @property
    def comps(self) -> int:
        return self.data.shape[0]

    @classmethod
    def zeros(cls, grid, vgrid, comps=1, real_flag=True):
        shape = (comps,) + grid.freq_shape + (vgrid.count,)
        return cls(grid, vgrid, np.zeros(shape, dtype=complex), real_flag)

    def copy(self):
        return SpectralField(self.grid, self.vgrid, self.data.copy(), self.real_flag)

    def hermitian_defect(self) -> float:
        """max |fhat(-xi) - conj(fhat(xi))| over the lattice."""
        flipped = self.data
        for ax in _haxes(self.grid.dim_h):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        return float(np.abs(flipped - np.conj(self.data)).max())

    def check_real(self, tol: float = HERMITIAN_TOL):
        if self.real_flag and self.hermitian_defect() > tol:
            raise ValueError("real_flag set but coefficients are not Hermitian-symmetric")

    def enforce_real(self):
        """Project onto Hermitian symmetry and zero the Nyquist column."""
        flipped = self.data
        for ax in _haxes(self.grid.dim_h):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        self.data = 0.5 * (self.data + np.conj(flipped))
        for sl in _nyquist_slices(self.grid):
            self.data[sl] = 0.0
        self.real_flag = True
        return self


@dataclass
class SurfaceSpectral:
    """Surface field: complex coefficients, shape (comps,) + freq_shape."""

    grid: FrequencyGrid
    data: np.ndarray
    real_flag: bool = True

    def __post_init__(self):
        expect = self.grid.freq_shape
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim == len(expect):
            self.data = self.data[None]
        if self.data.shape[1:] != expect:
            raise ValueError(f"data shape {self.data.shape} does not match grid {expect}")

    @property
    def comps(self) -> int:
        return self.data.shape[0]

    @classmethod
    def zeros(cls, grid, comps=1, real_flag=True):
        return cls(grid, np.zeros((comps,) + grid.freq_shape, dtype=complex), real_flag)

    def copy(self):
        return SurfaceSpectral(self.grid, self.data.copy(), self.real_flag)

    def hermitian_defect(self) -> float:
        flipped = self.data
        for ax in _haxes(self.grid.dim_h):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        return float(np.abs(flipped - np.conj(self.data)).max())

    def check_real(self, tol: float = HERMITIAN_TOL):
        if self.real_flag and self.hermitian_defect() > tol:
            raise ValueError("real_flag set but coefficients are not Hermitian-symmetric")

    def enforce_real(self):
        flipped = self.data
        for ax in _haxes(self.grid.dim_h):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        self.data = 0.5 * (self.data + np.conj(flipped))
        half = self.grid.modes // 2
        if self.grid.dim_h == 1:
            self.data[:, half] = 0.0
        else:
            self.data[:, half, :] = 0.0
            self.data[:, :, half] = 0.0
        self.real_flag = True
        return self

    def zero_mean(self):
        zero = (0,) * self.grid.dim_h
        self.data[(slice(None),) + zero] = 0.0
        return self


def transform_forward(phys: np.ndarray, grid: FrequencyGrid, vgrid: VerticalGrid | None = None,
                      real_flag: bool = True):
    """Collocation samples -> spectral coefficients.

    ``phys`` has shape (comps,) + phys_shape (+ (Nz,) for bulk fields).
    """
    phys = np.asarray(phys)
    if vgrid is not None:
        expect = grid.phys_shape + (vgrid.count,)
    else:
        expect = grid.phys_shape
    if phys.ndim == len(expect):
        phys = phys[None]
    if phys.shape[1:] != expect:
        raise ValueError(f"physical shape {phys.shape} does not match grids {expect}")
    coeff = np.fft.fftn(phys, axes=_haxes(grid.dim_h)) / grid.modes ** grid.dim_h
    if vgrid is not None:
        return SpectralField(grid, vgrid, coeff, real_flag)
    return SurfaceSpectral(grid, coeff, real_flag)


def transform_inverse(field) -> np.ndarray:
    """Spectral coefficients -> collocation samples (real array for real fields)."""
    grid = field.grid
    phys = np.fft.ifftn(field.data, axes=_haxes(grid.dim_h)) * grid.modes ** grid.dim_h
    if field.real_flag:
        return np.real(phys)
    return phys


@dataclass
class YData:
    """Right-hand-side tuple (f, g, l, k, h, m) in spectral form.

    f: bulk n-vector, g and l bulk scalars, k surface n-vector, h and m
    surface scalars.  All carry real_flag.
    """

    f: SpectralField
    g: SpectralField
    l: SpectralField
    k: SurfaceSpectral
    h: SurfaceSpectral
    m: SurfaceSpectral

    def __post_init__(self):
        n = self.grid.dim_h + 1
        if self.f.comps != n or self.k.comps != n:
            raise ValueError("f and k must have n components")
        for part in (self.g, self.l, self.h, self.m):
            if part.comps != 1:
                raise ValueError("g, l, h, m must be scalar")

    @property
    def grid(self) -> FrequencyGrid:
        return self.f.grid

    @property
    def vgrid(self) -> VerticalGrid:
        return self.f.vgrid

    @classmethod
    def zeros(cls, grid, vgrid):
        n = grid.dim_h + 1
        return cls(
            f=SpectralField.zeros(grid, vgrid, n),
            g=SpectralField.zeros(grid, vgrid, 1),
            l=SpectralField.zeros(grid, vgrid, 1),
            k=SurfaceSpectral.zeros(grid, n),
            h=SurfaceSpectral.zeros(grid, 1),
            m=SurfaceSpectral.zeros(grid, 1),
        )

    def copy(self):
        return YData(self.f.copy(), self.g.copy(), self.l.copy(),
                     self.k.copy(), self.h.copy(), self.m.copy())

    def axpy(self, a: float, other: "YData"):
        for mine, theirs in zip(self.parts(), other.parts()):
            mine.data += a * theirs.data
        return self

    def scale(self, a: float):
        for part in self.parts():
            part.data *= a
        return self

    def parts(self):
        return (self.f, self.g, self.l, self.k, self.h, self.m)


# ---------------------------------------------------------------------------
# CSV + JSON sidecar import/export
# ---------------------------------------------------------------------------

def _grid_meta(grid: FrequencyGrid, vgrid: VerticalGrid | None):
    meta = {"dim_h": grid.dim_h, "box_len": grid.box_len, "modes": grid.modes}
    if vgrid is not None:
        meta["depth"] = vgrid.depth
        meta["nz"] = vgrid.count
    return meta


def write_field_csv(path, field, sidecar_path=None):
    """One row per (component, xi indices, node index) with re/im columns."""
    grid = field.grid
    bulk = isinstance(field, SpectralField)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        idx_cols = [f"k{i+1}" for i in range(grid.dim_h)]
        header = ["comp"] + idx_cols + (["node"] if bulk else []) + ["re", "im"]
        w.writerow(header)
        it = np.ndindex(field.data.shape)
        for idx in it:
            val = field.data[idx]
            row = [idx[0]] + list(idx[1:1 + grid.dim_h])
            if bulk:
                row.append(idx[-1])
            row += [format(val.real, ".17g"), format(val.imag, ".17g")]
            w.writerow(row)
    meta = _grid_meta(grid, field.vgrid if bulk else None)
    meta["comps"] = field.comps
    meta["real_flag"] = bool(field.real_flag)
    meta["kind"] = "bulk" if bulk else "surface"
    if sidecar_path is None:
        sidecar_path = str(path) + ".json"
    with open(sidecar_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_ydata_csv(dirpath, data: YData):
    import os
    os.makedirs(dirpath, exist_ok=True)
    for name in ("f", "g", "l", "k", "h", "m"):
        write_field_csv(os.path.join(dirpath, f"{name}.csv"), getattr(data, name))


def read_ydata_csv(dirpath) -> YData:
    import os
    parts = {name: read_field_csv(os.path.join(dirpath, f"{name}.csv"))
             for name in ("f", "g", "l", "k", "h", "m")}
    return YData(**parts)


def read_field_csv(path, sidecar_path=None):
    if sidecar_path is None:
        sidecar_path = str(path) + ".json"
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    grid = FrequencyGrid(meta["dim_h"], meta["box_len"], meta["modes"])
    bulk = meta["kind"] == "bulk"
    vgrid = VerticalGrid(meta["depth"], meta["nz"]) if bulk else None
    shape = (meta["comps"],) + grid.freq_shape + ((vgrid.count,) if bulk else ())
    data = np.zeros(shape, dtype=complex)
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        for row in rd:
            comp = int(row[0])
            kidx = tuple(int(v) for v in row[1:1 + grid.dim_h])
            pos = 1 + grid.dim_h
            if bulk:
                node = int(row[pos])
                pos += 1
                data[(comp,) + kidx + (node,)] = float(row[pos]) + 1j * float(row[pos + 1])
            else:
                data[(comp,) + kidx] = float(row[pos]) + 1j * float(row[pos + 1])
    if bulk:
        return SpectralField(grid, vgrid, data, meta["real_flag"])
    return SurfaceSpectral(grid, data, meta["real_flag"])
