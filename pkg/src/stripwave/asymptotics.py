"""Numerical certification of symbol asymptotics and multiplier bounds.

Three families of claims are checked:

* low-frequency expansions of the response symbols, whose leading |xi|^2
  coefficients have closed forms (Richardson-extrapolated fits, one order
  beyond the fitted term since the remainders are cubic);
* two-sided lower bounds for the surface multiplier,
  xi_1^2 + |xi|^4 <~ |rho|^2 below |xi| = 1 and 1 + |xi|^2 <~ |rho|^2 above;
* high-frequency decay of the symbol profiles and traces.

The "<~" claims carry unknown constants, so they are certified as bounded
sampled ratios whose extrema are stable under lattice refinement, never as
proofs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergent
from .grids import VerticalGrid
from .odesystem import SYMBOL_SPLIT, FrequencySolver, SymbolTable, solve_symbol
from .params import PhysicalParams


# ---------------------------------------------------------------------------
# Richardson fits of the low-frequency coefficients
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    value: float
    error_bar: float
    samples: list
    table_tail: list


def richardson_limit(values, ratios) -> FitResult:
    """Extrapolate a sequence s(xi_i) = c + c1 xi + c2 xi^2 + ... to xi -> 0.

    ``values`` are ordered from the largest xi down; ``ratios`` are
    xi_i/xi_{i+1} (usually all 2).  Raises NonConvergent when successive
    differences grow instead of shrinking.
    """
    col = [complex(v) for v in values]
    if len(col) < 2:
        raise ValueError("need at least two samples")
    ratios = np.atleast_1d(np.asarray(ratios, dtype=float))
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("sample sequence must be geometric")
    diffs = []
    level = 1
    while len(col) > 1:
        r = float(np.mean(ratios)) ** level
        col = [(r * col[i + 1] - col[i]) / (r - 1.0) for i in range(len(col) - 1)]
        diffs.append(abs(col[-1] - col[0]) if len(col) > 1 else None)
        level += 1
    # error bar: spread of the last two extrapolation levels
    meaningful = [d for d in diffs if d is not None]
    err = meaningful[-1] if meaningful else abs(values[-1] - values[0])
    floor = 1e-10 * max(abs(v) for v in values)
    if len(meaningful) >= 2 and meaningful[-1] > 2.0 * meaningful[-2] \
            and meaningful[-1] > floor:
        raise NonConvergent("Richardson level spreads are growing")
    return FitResult(value=float(np.real(col[0])), error_bar=float(err),
                     samples=[complex(v) for v in values], table_tail=col)


SELECTORS = {
    "vn_surf": lambda e, vg, x: e.om_vn_surf,
    "temp_surf": lambda e, vg, x: e.om_temp_surf,
    "q_minus_1_at": lambda e, vg, x: vg.interpolate(e.y[3], x) - 1.0,
    "vn_at": lambda e, vg, x: vg.interpolate(e.y[1], x),
    "temp_at": lambda e, vg, x: vg.interpolate(e.y[2], x),
    "long_sq_at": lambda e, vg, x: abs(vg.interpolate(e.y[0], x)) ** 2,
}


def predicted_coefficient(selector: str, p: PhysicalParams, x: float | None = None) -> float:
    b, mu, kappa, s1 = p.depth, p.mu, p.kappa, p.sigma1
    pi2 = np.pi ** 2
    if selector == "vn_surf":
        return -4.0 * pi2 * b ** 3 / (3.0 * mu)
    if selector == "temp_surf":
        return -2.0 * s1 * pi2 * b ** 3 / (mu * kappa)
    if selector == "q_minus_1_at":
        return -2.0 * b * b * pi2 - 4.0 * b * pi2 * x + 2.0 * pi2 * x * x
    if selector == "vn_at":
        return -2.0 * (-x + 3.0 * b) * x * x * pi2 / (3.0 * mu)
    if selector == "temp_at":
        return -2.0 * pi2 * b * b * s1 * x / (kappa * mu)
    if selector == "long_sq_at":
        return 4.0 * pi2 * (b - x / 2.0) ** 2 * x * x / mu ** 2
    raise KeyError(selector)


def fit_lf_coefficient(selector: str, p: PhysicalParams, vgrid: VerticalGrid,
                       xi_seq=(1e-2, 5e-3, 2.5e-3), x: float | None = None,
                       solver: FrequencySolver | None = None) -> FitResult:
    """Richardson-extrapolated limit of selector(xi)/|xi|^2 along xi_seq."""
    xi_seq = np.asarray(xi_seq, dtype=float)
    if np.any(np.diff(xi_seq) >= 0):
        raise ValueError("xi_seq must decrease")
    ratios = xi_seq[:-1] / xi_seq[1:]
    sel = SELECTORS[selector]
    vals = []
    for ximag in xi_seq:
        xi = np.zeros(p.dim_h)
        xi[0] = ximag
        entry = solve_symbol(xi, p, vgrid, solver=solver)
        vals.append(sel(entry, vgrid, x) / ximag ** 2)
    return richardson_limit(vals, ratios)


# ---------------------------------------------------------------------------
# Claim rows and the report container
# ---------------------------------------------------------------------------

@dataclass
class ClaimRow:
    claim: str
    predicted: float | None
    fitted: float
    margin: float
    verdict: str
    detail: dict = field(default_factory=dict)


@dataclass
class AsymptoticReport:
    rows: list

    def passed(self) -> bool:
        return all(r.verdict == "pass" for r in self.rows)

    def to_json(self) -> str:
        payload = [
            {"claim": r.claim, "predicted": r.predicted, "fitted": r.fitted,
             "margin": r.margin, "verdict": r.verdict, "detail": r.detail}
            for r in self.rows
        ]
        return json.dumps(payload, indent=2, sort_keys=True)


def theorem_fit_rows(p: PhysicalParams, vgrid: VerticalGrid,
                     xi_seq=(1e-2, 5e-3, 2.5e-3), rel_tol: float = 0.01,
                     split: float = SYMBOL_SPLIT) -> list:
    """Fit every closed-form low-frequency coefficient and compare."""
    solver = FrequencySolver(p, vgrid, p.gamma, 0.0, p.sigma1,
                             split=split, reuse=True)
    b = p.depth
    jobs = [("vn_surf", None), ("temp_surf", None)]
    jobs += [("q_minus_1_at", x) for x in (b / 4, b / 2, b)]
    jobs += [("long_sq_at", x) for x in (b / 4, b / 2)]
    jobs += [("vn_at", b / 2), ("temp_at", b / 2)]
    rows = []
    for selector, x in jobs:
        fit = fit_lf_coefficient(selector, p, vgrid, xi_seq, x=x, solver=solver)
        pred = predicted_coefficient(selector, p, x)
        scale = max(abs(pred), 1e-12)
        rel = abs(fit.value - pred) / scale
        name = selector if x is None else f"{selector[:-3]}_x={x:.4g}"
        rows.append(ClaimRow(
            claim=f"lf-coefficient {name}",
            predicted=pred, fitted=fit.value, margin=rel,
            verdict="pass" if rel <= rel_tol else "fail",
            detail={"rel_tol": rel_tol, "error_bar": fit.error_bar,
                    "xi_seq": list(np.asarray(xi_seq, float))},
        ))
    return rows


def check_rho_bounds(table: SymbolTable, refined: SymbolTable | None = None,
                     stability_tol: float = 0.10) -> list:
    """Infima of |rho|^2 over its two lower-bound envelopes."""

    def infima(t):
        vecs = t.grid.xi_vectors()
        mag2 = (vecs ** 2).sum(axis=-1)
        rho2 = np.abs(t.rho_lattice()) ** 2
        low = (mag2 > 0) & (mag2 <= 1.0)
        high = mag2 > 1.0
        env_low = vecs[..., 0] ** 2 + mag2 ** 2
        env_high = 1.0 + mag2
        inf_low = float((rho2[low] / env_low[low]).min()) if low.any() else np.nan
        inf_high = float((rho2[high] / env_high[high]).min()) if high.any() else np.nan
        return inf_low, inf_high

    inf_low, inf_high = infima(table)
    rows = []
    for name, val in (("rho lower bound |xi|<=1", inf_low),
                      ("rho lower bound |xi|>1", inf_high)):
        row = ClaimRow(claim=name, predicted=None, fitted=val,
                       margin=val, verdict="pass" if val > 0 else "fail",
                       detail={})
        if np.isnan(val):
            row.detail["note"] = "no lattice points in this regime; enlarge the grid"
        rows.append(row)
    if refined is not None:
        r_low, r_high = infima(refined)
        for row, coarse, fine in ((rows[0], inf_low, r_low),
                                  (rows[1], inf_high, r_high)):
            drift = abs(fine - coarse) / max(abs(coarse), 1e-300)
            row.detail["refined"] = fine
            row.detail["drift"] = drift
            if not (np.isfinite(drift) and drift <= stability_tol and fine > 0):
                row.verdict = "fail"
    return rows


_DECAY_CHECKS = (
    ("int |om_v|^2 * |xi|^3",
     lambda e, w, m2: float((np.abs(e.y[0]) ** 2 + np.abs(e.y[1]) ** 2) @ w
                            * np.sqrt(m2) ** 3)),
    ("|om_vn_surf| * |xi|",
     lambda e, w, m2: float(abs(e.om_vn_surf) * np.sqrt(m2))),
    ("int |om_temp|^2 * |xi|^3",
     lambda e, w, m2: float((np.abs(e.y[2]) ** 2 @ w) * np.sqrt(m2) ** 3)),
    ("|om_temp_surf| * (1+|xi|^2)^(1/2)",
     lambda e, w, m2: float(abs(e.om_temp_surf) * np.sqrt(1.0 + m2))),
    ("int |om_q|^2 * (1+|xi|^2)^(1/2)",
     lambda e, w, m2: float((np.abs(e.y[3]) ** 2 @ w) * np.sqrt(1.0 + m2))),
)


def check_highfreq_decay(table: SymbolTable, refined: SymbolTable | None = None,
                         stability_tol: float = 0.10) -> list:
    """Suprema of the five decay ratios over 1 < |xi| <= xi_max."""

    def suprema(t):
        w = t.vgrid.weights
        sups = np.zeros(len(_DECAY_CHECKS))
        hits = 0
        for idx, e in t.entries.items():
            m2 = float(e.xi @ e.xi)
            if m2 <= 1.0:
                continue
            hits += 1
            for i, (_, fn) in enumerate(_DECAY_CHECKS):
                sups[i] = max(sups[i], fn(e, w, m2))
        return sups, hits

    sups, hits = suprema(table)
    rows = []
    for i, (name, _) in enumerate(_DECAY_CHECKS):
        row = ClaimRow(claim=f"hf-decay {name}", predicted=None,
                       fitted=float(sups[i]), margin=float(sups[i]),
                       verdict="pass" if hits and np.isfinite(sups[i]) and sups[i] > 0 else "fail",
                       detail={})
        if not hits:
            row.detail["note"] = "no lattice points above |xi| = 1; enlarge the grid"
        rows.append(row)
    if refined is not None:
        rsups, _ = suprema(refined)
        for i, row in enumerate(rows):
            drift = abs(rsups[i] - sups[i]) / max(abs(sups[i]), 1e-300)
            row.detail["refined"] = float(rsups[i])
            row.detail["drift"] = drift
            if not (drift <= stability_tol):
                row.verdict = "fail"
    return rows


def full_report(p: PhysicalParams, grid, vgrid, refine: bool = True,
                xi_seq=(1e-2, 5e-3, 2.5e-3), rel_tol: float = 0.01,
                stability_tol: float = 0.10) -> AsymptoticReport:
    from .grids import FrequencyGrid
    rows = theorem_fit_rows(p, vgrid, xi_seq=xi_seq, rel_tol=rel_tol)
    table = SymbolTable.build(grid, vgrid, p)
    refined = None
    if refine:
        fine_grid = FrequencyGrid(grid.dim_h, 2.0 * grid.box_len, 2 * grid.modes)
        refined = SymbolTable.build(fine_grid, vgrid, p)
    rows += check_rho_bounds(table, refined, stability_tol)
    rows += check_highfreq_decay(table, refined, stability_tol)
    return AsymptoticReport(rows)
