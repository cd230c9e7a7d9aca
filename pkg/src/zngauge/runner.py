"""Scan scheduling, persistence, and the analysis pipeline.

A scan walks the (m, L) grid of a config, solving each point with ED or
DMRG per the engine rule (ED when the sector dimension C(2L, L) stays under
the configured threshold).  Completed rows are written to CSV immediately
together with a run manifest, so interrupted scans resume without
recomputing and finished scans are never solved twice.  Tables from a
different config or code version are refused rather than silently merged.

In serial mode the m grid is swept in order and each DMRG run warm-starts
from the previous mass point, which is where most of the speedup at scan
scale comes from.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

import zngauge
from zngauge.basis import ChainGeometry, build_basis, candidate_sectors
from zngauge.config import config_hash, validate_config
from zngauge.continuum import (REFERENCE_CRITICAL_LINE, extrapolate_large_n,
                               fit_critical_line)
from zngauge.criticality import collapse_fit, crossover_diagnostics
from zngauge.dmrg import SweepPolicy, excited_states, ground_state
from zngauge.ed import lowest_eigenpairs
from zngauge.hamiltonian import ModelParams, build_sparse
from zngauge.observables import EdState, gaps as gaps_of, measure
from zngauge.validation import SCAN_COLUMNS

__all__ = ["run_scan", "run_pipeline", "load_table", "fixture_table", "RunManifest"]


def fixture_table(n: int) -> pd.DataFrame:
    """Shipped critical-mass table (t, m_c, sigma) for one n."""
    ref = resources.files("zngauge").joinpath(f"data/critical_mass/mc_n{n}.csv")
    with resources.as_file(ref) as path:
        return pd.read_csv(path)


class RunManifest:
    """Reproducibility record of one scan directory."""

    def __init__(self, config: dict, path: Path):
        self.path = path
        self.data = {
            "config": config,
            "config_hash": config_hash(config),
            "code_version": zngauge.__version__,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "rows": {},
        }

    @classmethod
    def load(cls, config: dict, path: Path) -> "RunManifest":
        manifest = cls(config, path)
        if path.exists():
            stored = json.loads(path.read_text())
            if stored.get("config_hash") != manifest.data["config_hash"]:
                raise ValueError(
                    f"{path} belongs to a different config "
                    f"(hash {stored.get('config_hash')!r}); refusing to merge")
            if stored.get("code_version") != zngauge.__version__:
                raise ValueError(
                    f"{path} was produced by code version "
                    f"{stored.get('code_version')!r}, current is "
                    f"{zngauge.__version__!r}; refusing to merge")
            manifest.data = stored
        return manifest

    @property
    def run_id(self) -> str:
        return self.data["config_hash"][:12]

    def record(self, key: str, entry: dict) -> None:
        self.data["rows"][key] = entry

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _row_key(n, t, phi, L, chi, m) -> str:
    return f"n{n}_t{t:.6f}_phi{phi:.6f}_L{L}_chi{chi}_m{m:.6f}"


def _engine_for(L: int, solver: dict) -> str:
    if solver["engine"] != "auto":
        return solver["engine"]
    return "ed" if math.comb(2 * L, L) <= solver["ed_threshold"] else "dmrg"


def _sectors_to_try(n: int, phi: float, sector) -> list:
    if sector != "auto":
        return [int(sector)]
    cands = candidate_sectors(n, phi)
    tilde = np.arange(n) - (n - 1) / 2.0 + phi
    best = abs(tilde[cands[0]])
    return [k for k in cands if abs(abs(tilde[k]) - best) < 1e-12]


def solve_point(model: dict, solver: dict, L: int, m: float, warm=None):
    """Solve one (m, L) grid point; returns (row, record, mps_or_None)."""
    n, t, phi = model["n"], model["t"], model["phi"]
    geometry = ChainGeometry(int(L))
    engine = _engine_for(int(L), solver)
    want_gaps = "gaps" in solver["measure"]
    want_profile = "entropy_profile" in solver["measure"]
    policy = SweepPolicy(max_sweeps=solver["max_sweeps"],
                         energy_tol=solver["energy_tol"],
                         svd_cutoff=solver["svd_cutoff"])
    t0 = time.time()
    best = None
    for k0 in _sectors_to_try(n, phi, model["sector"]):
        params = ModelParams(n=n, t=t, m=m, phi=phi, geometry=geometry, k0=k0)
        if engine == "ed":
            basis = build_basis(geometry, n, k0)
            H = build_sparse(params, basis)
            spec = lowest_eigenpairs(H, k=3 if want_gaps else 1,
                                     tol=solver["ed_tol"], seed=solver["seed"])
            state = EdState(spec.eigenvectors[:, 0], basis)
            cand = {
                "energy": spec.ground_energy, "params": params, "state": state,
                "spectrum": spec if want_gaps else None, "mps": None,
                "converged": bool(np.all(spec.converged)), "trunc": 0.0,
                "record": {"engine": "ed", "k0": k0, "dim": len(basis),
                           "iterations": int(spec.iterations),
                           "residuals": [float(r) for r in spec.residual_norms],
                           "method": spec.method, "seed": spec.seed},
            }
        else:
            init = warm if (warm is not None and warm.k0 == k0
                            and warm.L == L and warm.n == n) else None
            res, mps = ground_state(params, chi=solver["chi"], policy=policy,
                                    seed=solver["seed"], initial=init)
            spectrum = None
            results = [res]
            if want_gaps:
                results, states = excited_states(
                    params, chi=solver["chi"], count=2, policy=policy,
                    seed=solver["seed"], ground=(res, mps))
                spectrum = np.array([r.energy for r in results])
            cand = {
                "energy": res.energy, "params": params, "state": mps,
                "spectrum": spectrum, "mps": mps,
                "converged": all(r.converged for r in results),
                "trunc": max(r.max_truncation_error for r in results),
                "record": {"engine": "dmrg", "k0": k0,
                           "sweeps": [r.sweeps for r in results],
                           "sweep_energies": [r.sweep_energies for r in results],
                           "chi_max": max(r.chi_max for r in results),
                           "leakage": max(r.leakage for r in results),
                           "seed": solver["seed"], "warm": init is not None},
            }
        if best is None or cand["energy"] < best["energy"]:
            best = cand

    params, state = best["params"], best["state"]
    obs = measure(state, params)
    delta = gamma = np.nan
    if want_gaps and best["spectrum"] is not None:
        delta, gamma = gaps_of(best["spectrum"])
    row = {
        "n": n, "t": t, "phi": phi, "L": int(L), "chi": int(solver["chi"]),
        "m": float(m), "sigma": obs.sigma, "delta": delta, "gamma": gamma,
        "entropy_mid": obs.mid_cut_entropy, "trunc_err": best["trunc"],
        "converged": bool(best["converged"]),
    }
    if want_profile:
        row["entropy_profile"] = ";".join(f"{s:.8f}" for s in obs.entropy_profile)
    best["record"]["energy"] = float(best["energy"])
    best["record"]["wall_seconds"] = round(time.time() - t0, 3)
    return row, best["record"], best["mps"]


def _solve_point_star(args):
    model, solver, L, m = args
    row, record, _ = solve_point(model, solver, L, m, warm=None)
    return row, record


def run_scan(config: dict, echo=None):
    """Execute (or resume) the scan of a config; returns (table, manifest)."""
    cfg = validate_config(config)
    model, grid, solver = cfg["model"], cfg["grid"], cfg["solver"]
    outdir = Path(cfg["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.load(cfg, outdir / "manifest.json")
    table_path = outdir / "table.csv"
    rows = []
    if table_path.exists():
        rows = pd.read_csv(table_path).to_dict("records")
    done = {_row_key(model["n"], model["t"], model["phi"], r["L"], r["chi"], r["m"])
            for r in rows}

    todo = []
    for L in grid["L_values"]:
        for m in grid["m_values"]:
            key = _row_key(model["n"], model["t"], model["phi"], int(L),
                           solver["chi"], float(m))
            if key not in done:
                todo.append((int(L), float(m), key))

    def flush():
        df = pd.DataFrame(rows)
        for col in SCAN_COLUMNS:
            if col not in df.columns:
                df[col] = np.nan
        df["run_id"] = manifest.run_id
        ordered = [c for c in SCAN_COLUMNS if c in df.columns]
        extras = [c for c in df.columns if c not in ordered]
        df = df[ordered + extras]
        df.to_csv(table_path, index=False)
        manifest.save()
        return df

    if not todo:
        df = flush() if rows else pd.DataFrame(columns=SCAN_COLUMNS)
        return df, manifest

    if solver["workers"] > 1:
        jobs = [(model, solver, L, m) for (L, m, _) in todo]
        with ProcessPoolExecutor(max_workers=solver["workers"]) as pool:
            for (L, m, key), (row, record) in zip(todo, pool.map(_solve_point_star, jobs)):
                rows.append(row)
                manifest.record(key, record)
                if echo:
                    echo(f"  [{record['engine']}] L={L} m={m:+.4f} done")
        flush()
    else:
        warms: dict = {}
        for (L, m, key) in todo:
            row, record, mps = solve_point(model, solver, L, m, warm=warms.get(L))
            if mps is not None:
                warms[L] = mps
            rows.append(row)
            manifest.record(key, record)
            flush()
            if echo:
                echo(f"  [{record['engine']}] L={L} m={m:+.4f} "
                     f"sigma={row['sigma']:+.4f} ({record['wall_seconds']}s)")
    df = flush()
    return df, manifest


def load_table(directory) -> pd.DataFrame:
    path = Path(directory) / "table.csv"
    if not path.exists():
        raise FileNotFoundError(
            f"no scan table at {path}; run the scan step that generates it first")
    return pd.read_csv(path)


def run_pipeline(config: dict, echo=None):
    """Chain scan -> analysis steps; returns {step: artifact} and writes reports."""
    cfg = validate_config(config)
    analysis = cfg["analysis"]
    outdir = Path(cfg["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts: dict = {}

    needs_scan = not analysis["steps"] or any(
        s in ("collapse", "crossover") for s in analysis["steps"])
    table = None
    if needs_scan:
        table, manifest = run_scan(cfg, echo=echo)
        artifacts["scan"] = table
        bad = table[~table["converged"].astype(bool)]
        if len(bad) and echo:
            echo(f"warning: {len(bad)} unconverged rows")

    for step in analysis["steps"]:
        if step == "collapse":
            result = collapse_fit(table, beta=analysis["beta"], nu=analysis["nu"],
                                  window=analysis["window"])
            (outdir / "collapse.json").write_text(json.dumps({
                "m_c": result.m_c, "m_c_err": result.m_c_err,
                "beta": result.beta, "nu": result.nu,
                "objective": result.objective, "window": list(result.window),
                "sizes": list(result.sizes), "run_id": config_hash(cfg)[:12],
            }, indent=2) + "\n")
            result.rescaled_frame().to_csv(outdir / "collapsed_curves.csv", index=False)
            artifacts["collapse"] = result
        elif step == "crossover":
            baseline = None
            if analysis["baseline"]:
                baseline = load_table(analysis["baseline"])
            report = crossover_diagnostics(table, baseline_table=baseline)
            (outdir / "crossover.json").write_text(json.dumps({
                "collapse_objective": report.collapse_objective,
                "baseline_objective": report.baseline_objective,
                "objective_ratio": report.objective_ratio,
                "min_gap_by_size": report.min_gap_by_size,
                "gap_non_closing": report.gap_non_closing,
                "entropy_flatness": report.entropy_flatness,
                "sigma_crossings": report.sigma_crossings,
                "m_star": report.m_star,
            }, indent=2) + "\n")
            artifacts["crossover"] = report
        elif step == "critical_line":
            source = analysis["critical_line_csv"]
            if source is None:
                raise ValueError(
                    "analysis.critical_line_csv is not set; point it at a "
                    "(t, m_c, sigma) CSV or 'builtin:<n>' to use the shipped fixtures")
            ns = (range(2, 9) if source == "builtin:all"
                  else [int(source.split(":", 1)[1])] if source.startswith("builtin:")
                  else [None])
            report = {}
            for n in ns:
                frame = (fixture_table(n) if n is not None
                         else pd.read_csv(source))
                res = fit_critical_line(frame.to_numpy(), fix_m0=analysis["fix_m0"])
                label = f"n{n}" if n is not None else "data"
                report[label] = {k: [res[k], res.error(k)]
                                 for k in ("m0", "alpha", "beta")}
            (outdir / "critical_line.json").write_text(
                json.dumps(report, indent=2) + "\n")
            artifacts["critical_line"] = report
        elif step == "continuum":
            alphas = analysis["alphas"]
            if alphas == "reference":
                parity_rows = {
                    "odd": [(n, *REFERENCE_CRITICAL_LINE[n]["alpha"]) for n in (3, 5, 7)],
                    "even": [(n, *REFERENCE_CRITICAL_LINE[n]["alpha"]) for n in (4, 6, 8)],
                }
            else:
                want = analysis["parity"]
                parity_rows = {want: [tuple(r) for r in alphas]}
            report = {}
            for parity, rows in parity_rows.items():
                res = extrapolate_large_n(rows, parity)
                report[parity] = {
                    "b": [res["b"], res.error("b")],
                    "d": [res["d"], res.error("d")],
                    "continuum_mc": [res.extra["continuum_mc"],
                                     res.extra["continuum_mc_err"]],
                }
            (outdir / "continuum.json").write_text(json.dumps(report, indent=2) + "\n")
            artifacts["continuum"] = report
    return artifacts
