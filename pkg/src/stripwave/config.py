"""Run configuration: JSON file with strictly validated keys."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .grids import FrequencyGrid, VerticalGrid
from .params import PhysicalParams, make_constitutive

MODES = ("symbols", "asym-check", "linear-solve", "nonlinear-solve",
         "roundtrip-test", "norms")

_DEFAULTS = {
    "mode": "symbols",
    "params": {"mu": 1.0, "kappa": 1.0, "grav": 1.0, "depth": 1.0,
               "gamma": 1.0, "sigma0": 1.0, "sigma1": 0.1, "dim": 2},
    "closure": {"visc": "newtonian", "heat": "fourier", "sigma": "smooth"},
    "grid": {"box_len": 2.0 * math.pi * 10.0, "modes": 256, "nz": 48},
    "backend": {"split": 30.0, "symbol_split": 10.0, "cond_limit": 1e12},
    "tol": {"picard": 1e-9, "roundtrip": 1e-6, "fit_rel": 0.01,
            "stability": 0.10},
    "forcing": {"preset": "heat-only", "amplitude": 1e-3, "mode_index": 3},
    "roundtrip": {"count": 5},
    "fit": {"xi_seq": [1e-2, 5e-3, 2.5e-3], "refine": True},
    "input": None,
    "out": "out",
    "seed": 0,
    "threads": 1,
    "maxiter": 50,
}


def _merge_strict(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(f"section {path or 'top level'} must be an object")
    out = {}
    for key, base in defaults.items():
        if key in given:
            val = given[key]
            if isinstance(base, dict) and base:
                out[key] = _merge_strict(base, val, f"{path}{key}.")
            else:
                out[key] = val
        else:
            out[key] = json.loads(json.dumps(base)) if isinstance(base, dict) else base
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(path + k for k in unknown)}")
    return out


@dataclass
class RunConfig:
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, given: dict) -> "RunConfig":
        merged = _merge_strict(_DEFAULTS, given or {})
        cfg = cls(raw=merged)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                given = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(given)

    def validate(self):
        r = self.raw
        if r["mode"] not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {r['mode']!r}")
        g = r["grid"]
        if g["modes"] % 2 or g["modes"] < 4:
            raise ConfigError("grid.modes must be even and >= 4")
        if g["nz"] < 4:
            raise ConfigError("grid.nz must be at least 4")
        if r["forcing"]["preset"] not in ("heat-only", "stress-only",
                                          "bulk-force", "mixed"):
            raise ConfigError(f"unknown forcing preset {r['forcing']['preset']!r}")
        self.params()  # raises on bad closure names indirectly

    # -- constructors for the working objects ---------------------------------

    def params(self) -> PhysicalParams:
        return PhysicalParams(**self.raw["params"])

    def constitutive(self):
        cl = self.raw["closure"]
        return make_constitutive(self.params(), visc=cl["visc"],
                                 heat=cl["heat"], sigma=cl["sigma"])

    def frequency_grid(self) -> FrequencyGrid:
        p = self.params()
        g = self.raw["grid"]
        return FrequencyGrid(p.dim_h, g["box_len"], g["modes"])

    def vertical_grid(self) -> VerticalGrid:
        return VerticalGrid(self.raw["params"]["depth"], self.raw["grid"]["nz"])

    def manifest(self) -> dict:
        return json.loads(json.dumps(self.raw))
