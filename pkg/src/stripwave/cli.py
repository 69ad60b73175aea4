"""Command line entry point: run one verification or solve mode.

Every run writes a manifest echoing the fully resolved configuration next to
its data artifacts.  Exit code 0 means all checks in the mode passed, 1 a
numerical failure, 2 a configuration problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .asymptotics import full_report
from .config import RunConfig
from .errors import ConfigError, SolverFailure, StripwaveError
from .fields import read_ydata_csv, write_field_csv
from .grids import FrequencyGrid
from .linear import (LinearInverter, apply_linear_operator, make_random_state,
                     state_norm)
from .nonlinear import eulerian_grid_samples, make_forcing_preset, picard_solve
from .norms import check_divergence_trace, ydata_norm
from .odesystem import SymbolTable
from .params import estimate_q_norms, check_parameter_gate, validate_params


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _write_state(outdir, state):
    for name, fieldval in (("u", state.u), ("psi", state.psi),
                           ("pres", state.pres), ("eta", state.eta)):
        write_field_csv(os.path.join(outdir, f"{name}.csv"), fieldval)


def run(config: RunConfig) -> int:
    r = config.raw
    outdir = r["out"]
    os.makedirs(outdir, exist_ok=True)
    p = config.params()
    bad = validate_params(p)
    if bad:
        raise ConfigError("; ".join(bad))
    summary = {"mode": r["mode"], "ok": True}
    try:
        return _dispatch(config, summary)
    except Exception as exc:
        summary["ok"] = False
        summary["error"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        _write_json(os.path.join(outdir, "manifest.json"),
                    {"config": config.manifest(), "summary": summary})


def _dispatch(config: RunConfig, summary: dict) -> int:
    r = config.raw
    outdir = r["out"]
    p = config.params()
    grid = config.frequency_grid()
    vgrid = config.vertical_grid()
    mode = r["mode"]

    if mode == "symbols":
        table = SymbolTable.build(grid, vgrid, p,
                                  split=r["backend"]["symbol_split"],
                                  cond_limit=r["backend"]["cond_limit"])
        path = os.path.join(outdir, "symbols.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = [f"xi{i+1}" for i in range(grid.dim_h)]
            w.writerow(head + ["re_om_vn_surf", "im_om_vn_surf",
                               "re_om_temp_surf", "im_om_temp_surf",
                               "re_om_q_surf", "im_om_q_surf",
                               "re_rho", "im_rho", "backend", "cond"])
            for idx in sorted(table.entries):
                e = table.entries[idx]
                row = [_fmt(v) for v in e.xi]
                for val in (e.om_vn_surf, e.om_temp_surf, complex(e.y[3, -1]), e.rho):
                    row += [_fmt(val.real), _fmt(val.imag)]
                row += [e.backend, _fmt(e.cond)]
                w.writerow(row)
        neg = [e for e in table.entries.values()
               if float(np.linalg.norm(e.xi)) > 0 and e.om_vn_surf.real >= 0]
        summary["rows"] = len(table.entries)
        summary["re_om_vn_negative"] = not neg
        summary["ok"] = not neg

    elif mode == "asym-check":
        report = full_report(p, grid, vgrid, refine=r["fit"]["refine"],
                             xi_seq=tuple(r["fit"]["xi_seq"]),
                             rel_tol=r["tol"]["fit_rel"],
                             stability_tol=r["tol"]["stability"])
        with open(os.path.join(outdir, "asym_report.json"), "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        summary["claims"] = len(report.rows)
        summary["ok"] = report.passed()

    elif mode == "linear-solve":
        if not r["input"]:
            raise ConfigError("linear-solve requires input: directory of data CSVs")
        data = read_ydata_csv(r["input"])
        table = SymbolTable.build(data.grid, data.vgrid, p,
                                  split=r["backend"]["symbol_split"])
        inv = LinearInverter(table, split=r["backend"]["split"])
        state = inv.invert(data)
        back = apply_linear_operator(state, p)
        back.axpy(-1.0, data)
        misfit = ydata_norm(back) / max(ydata_norm(data), 1e-300)
        _write_state(outdir, state)
        dt = check_divergence_trace(data)
        _write_json(os.path.join(outdir, "linear_report.json"), {
            "roundtrip_misfit": misfit,
            "state_norm": state_norm(state),
            "data_norm": ydata_norm(data),
            "divergence_trace_residual": dt.residual_hneg1,
            "divergence_trace_zero_mode": dt.zero_mode_abs,
        })
        summary["roundtrip_misfit"] = misfit
        summary["ok"] = misfit <= r["tol"]["roundtrip"]

    elif mode == "nonlinear-solve":
        c = config.constitutive()
        est = estimate_q_norms(vgrid, [0.25, 0.5, 1.0, 2.0, 4.0], dim=p.dim)
        ok_gate, margin = check_parameter_gate(p, est)
        if not ok_gate:
            raise ConfigError(f"parameter gate failed (margin {margin:.3e})")
        forcing = make_forcing_preset(r["forcing"]["preset"],
                                      r["forcing"]["amplitude"], grid,
                                      p.depth, r["forcing"]["mode_index"])
        trace = picard_solve(forcing, p, c, grid, vgrid,
                             tol=r["tol"]["picard"], maxiter=r["maxiter"])
        _write_json(os.path.join(outdir, "solve_trace.json"), trace.to_jsonable())
        _write_state(outdir, trace.state)
        samples = eulerian_grid_samples(trace.state)
        with open(os.path.join(outdir, "eulerian.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            n = grid.dim_h + 1
            w.writerow([f"y{i+1}" for i in range(n)] + ["eta"]
                       + [f"w{i+1}" for i in range(n)] + ["temperature", "pressure"])
            for i in range(samples["points"].shape[0]):
                row = [_fmt(v) for v in samples["points"][i]]
                row.append(_fmt(samples["eta"][i]))
                row += [_fmt(v) for v in samples["velocity"][:, i]]
                row += [_fmt(samples["temperature"][i]), _fmt(samples["pressure"][i])]
                w.writerow(row)
        summary["iterations"] = trace.iterations
        summary["final_residual"] = trace.residuals[-1]
        summary["ok"] = trace.converged

    elif mode == "roundtrip-test":
        table = SymbolTable.build(grid, vgrid, p,
                                  split=r["backend"]["symbol_split"])
        inv = LinearInverter(table, split=r["backend"]["split"])
        rng_seed = r["seed"]
        worst_data, worst_state = 0.0, 0.0
        for trial in range(r["roundtrip"]["count"]):
            st = make_random_state(grid, vgrid, seed=rng_seed + trial)
            data = apply_linear_operator(st, p)
            st2 = inv.invert(data)
            back = apply_linear_operator(st2, p)
            back.axpy(-1.0, data)
            worst_data = max(worst_data, ydata_norm(back) / ydata_norm(data))
            st2.axpy(-1.0, st)
            worst_state = max(worst_state, state_norm(st2) / state_norm(st))
        _write_json(os.path.join(outdir, "roundtrip_report.json"), {
            "count": r["roundtrip"]["count"],
            "max_data_misfit": worst_data,
            "max_state_misfit": worst_state,
            "tolerance": r["tol"]["roundtrip"],
        })
        summary["max_data_misfit"] = worst_data
        summary["max_state_misfit"] = worst_state
        summary["ok"] = max(worst_data, worst_state) <= r["tol"]["roundtrip"]

    elif mode == "norms":
        if not r["input"]:
            raise ConfigError("norms mode requires input: directory of data CSVs")
        data = read_ydata_csv(r["input"])
        dt = check_divergence_trace(data)
        _write_json(os.path.join(outdir, "norms_report.json"), {
            "ydata_norm": ydata_norm(data),
            "divergence_trace_residual": dt.residual_hneg1,
            "divergence_trace_zero_mode": dt.zero_mode_abs,
        })

    return 0 if summary["ok"] else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stripwave",
                                 description="spectral traveling-wave solver "
                                             "and verification suite")
    ap.add_argument("--config", help="path to a JSON config file")
    ap.add_argument("--mode", help="override the config mode")
    ap.add_argument("--out", help="override the output directory")
    ap.add_argument("--threads", type=int, help="worker thread count (recorded)")
    ap.add_argument("--seed", type=int, help="seed for randomized suites")
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig.from_dict({})
        overrides = {}
        if args.mode:
            overrides["mode"] = args.mode
        if args.out:
            overrides["out"] = args.out
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            merged = cfg.manifest()
            merged.update(overrides)
            cfg = RunConfig.from_dict(merged)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverFailure, StripwaveError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
