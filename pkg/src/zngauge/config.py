"""Declarative experiment configs: a single JSON key-value tree per run.

Every field has a recorded default; validation errors name the offending
key path.  Configs round-trip exactly (parse -> serialize -> parse is the
identity) and hash canonically, so output tables can be tied to the exact
configuration that produced them.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = [
    "DEFAULT_CONFIG",
    "canonical_json",
    "config_hash",
    "load_config",
    "merge_defaults",
    "preset",
    "save_config",
    "validate_config",
]

DEFAULT_CONFIG = {
    "model": {
        "n": 3,
        "t": 2 * np.pi / 3,
        "phi": 0.0,
        "sector": "auto",  # "auto" or an explicit integer k0
    },
    "grid": {
        "m_values": [],
        "L_values": [],
    },
    "solver": {
        "engine": "auto",        # auto | ed | dmrg
        "ed_threshold": 200000,  # auto picks ED when C(2L, L) <= threshold
        "chi": 128,
        "svd_cutoff": 1e-10,
        "energy_tol": 1e-9,
        "max_sweeps": 16,
        "ed_tol": 1e-10,
        "seed": 7,
        "workers": 1,
        "measure": ["sigma", "entropy_mid"],  # + "gaps", "entropy_profile"
    },
    "analysis": {
        "steps": [],             # collapse | crossover | critical_line | continuum
        "beta": 0.125,
        "nu": 1.0,
        "window": None,
        "baseline": None,        # output dir of a phi = 0 scan, for crossover
        "critical_line_csv": None,  # path or "builtin:<n>" appendix fixture
        "alphas": None,          # rows [n, alpha, sigma] for the continuum step
        "parity": "odd",
        "fix_m0": None,
    },
    "output": {
        "directory": "runs/scan",
        "formats": ["csv", "json"],
    },
}

_VALID = {
    "solver.engine": ("auto", "ed", "dmrg"),
    "analysis.parity": ("odd", "even"),
}
_MEASURES = ("sigma", "entropy_mid", "gaps", "entropy_profile")
_STEPS = ("collapse", "crossover", "critical_line", "continuum")


def merge_defaults(config: dict) -> dict:
    """Overlay a partial config on the defaults (two levels deep)."""
    out = copy.deepcopy(DEFAULT_CONFIG)
    for section, values in (config or {}).items():
        if section not in out:
            raise ValueError(f"unknown config section {section!r}")
        if not isinstance(values, dict):
            raise ValueError(f"config section {section!r} must be a mapping")
        for key, val in values.items():
            if key not in out[section]:
                raise ValueError(f"unknown config key {section}.{key}")
            out[section][key] = val
    return out


def _fail(path: str, msg: str):
    raise ValueError(f"invalid config at {path}: {msg}")


def validate_config(config: dict) -> dict:
    """Full validation; returns the config merged over defaults."""
    cfg = merge_defaults(config)
    model, grid, solver, analysis = (cfg["model"], cfg["grid"], cfg["solver"],
                                     cfg["analysis"])
    if int(model["n"]) != model["n"] or model["n"] < 2:
        _fail("model.n", f"need an integer >= 2, got {model['n']!r}")
    if model["t"] < 0:
        _fail("model.t", f"need t >= 0, got {model['t']!r}")
    sector = model["sector"]
    if sector != "auto" and (int(sector) != sector or not 0 <= sector < model["n"]):
        _fail("model.sector", f"need 'auto' or a label in Z_{model['n']}, got {sector!r}")
    needs_grid = not cfg["analysis"]["steps"] or any(
        s in ("collapse", "crossover") for s in cfg["analysis"]["steps"])
    if needs_grid and cfg["analysis"]["critical_line_csv"] is None \
            and cfg["analysis"]["alphas"] is None:
        if not grid["m_values"]:
            _fail("grid.m_values", "empty m grid")
        if not grid["L_values"]:
            _fail("grid.L_values", "empty L grid")
    if len(set(grid["m_values"])) != len(grid["m_values"]):
        _fail("grid.m_values", "duplicate m values")
    for L in grid["L_values"]:
        if int(L) != L or L < 1:
            _fail("grid.L_values", f"sizes must be integers >= 1, got {L!r}")
    if solver["engine"] not in _VALID["solver.engine"]:
        _fail("solver.engine", f"must be one of {_VALID['solver.engine']}")
    if solver["chi"] < 8:
        _fail("solver.chi", f"need chi >= 8, got {solver['chi']!r}")
    if solver["workers"] < 1:
        _fail("solver.workers", "need at least one worker")
    for meas in solver["measure"]:
        if meas not in _MEASURES:
            _fail("solver.measure", f"unknown observable {meas!r} (valid: {_MEASURES})")
    for step in analysis["steps"]:
        if step not in _STEPS:
            _fail("analysis.steps", f"unknown step {step!r} (valid: {_STEPS})")
    if analysis["parity"] not in _VALID["analysis.parity"]:
        _fail("analysis.parity", "parity must be 'odd' or 'even'")
    if not cfg["output"]["directory"]:
        _fail("output.directory", "empty output directory")
    return cfg


def canonical_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def load_config(path) -> dict:
    with open(path) as fh:
        return validate_config(json.load(fh))


def save_config(config: dict, path) -> None:
    Path(path).write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def preset(name: str) -> dict:
    """Built-in experiment presets."""
    if name == "paper-n3":
        return validate_config({
            "model": {"n": 3, "t": 2 * np.pi / 3, "phi": 0.0},
            "grid": {"m_values": [round(m, 3) for m in np.linspace(-2.6, -1.2, 15)],
                     "L_values": [8, 12, 16, 20]},
            "analysis": {"steps": ["collapse"]},
            "output": {"directory": "runs/paper-n3"},
        })
    if name == "crossover-n3":
        return validate_config({
            "model": {"n": 3, "t": 2 * np.pi / 3, "phi": 1.0 / 3.0},
            "grid": {"m_values": [round(m, 3) for m in np.linspace(-0.65, -0.05, 9)],
                     "L_values": [12, 16, 20]},
            "solver": {"measure": ["sigma", "entropy_mid", "gaps", "entropy_profile"]},
            "analysis": {"steps": ["crossover"]},
            "output": {"directory": "runs/crossover-n3"},
        })
    if name == "table1":
        return validate_config({
            "analysis": {"steps": ["critical_line"], "critical_line_csv": "builtin:all"},
            "output": {"directory": "runs/table1"},
        })
    if name == "continuum":
        return validate_config({
            "analysis": {"steps": ["continuum"], "alphas": "reference"},
            "output": {"directory": "runs/continuum"},
        })
    raise ValueError(f"unknown preset {name!r} "
                     "(available: paper-n3, crossover-n3, table1, continuum)")
