"""Command-line entry point: scan, analyze, pipeline, validate-config, show-manifest."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from zngauge.config import load_config, preset, save_config, validate_config
from zngauge.runner import run_pipeline, run_scan

__all__ = ["main"]


def _load(args) -> dict:
    if args.preset:
        cfg = preset(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        raise SystemExit("either --config PATH or --preset NAME is required")
    if getattr(args, "output", None):
        cfg["output"]["directory"] = args.output
    if getattr(args, "workers", None):
        cfg["solver"]["workers"] = args.workers
    if getattr(args, "engine", None):
        cfg["solver"]["engine"] = args.engine
    return validate_config(cfg)


def _echo(msg: str) -> None:
    print(msg, flush=True)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON experiment config")
    p.add_argument("--preset", help="built-in preset name "
                                    "(paper-n3, crossover-n3, table1, continuum)")
    p.add_argument("--output", help="override output.directory")
    p.add_argument("--workers", type=int, help="override solver.workers")
    p.add_argument("--engine", choices=("auto", "ed", "dmrg"),
                   help="override solver.engine")
    p.add_argument("--dry-run", action="store_true",
                   help="validate and list planned work, solve nothing")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zngauge",
        description="Z_n gauge chains: scans, criticality fits, continuum limit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="run (or resume) the (m, L) grid of a config")
    _add_common(p_scan)
    p_an = sub.add_parser("analyze", help="run only the analysis steps of a config")
    _add_common(p_an)
    p_pipe = sub.add_parser("pipeline", help="scan plus analysis steps")
    _add_common(p_pipe)
    p_val = sub.add_parser("validate-config", help="check a config and echo it "
                                                   "with defaults filled in")
    p_val.add_argument("--config")
    p_val.add_argument("--preset")
    p_val.add_argument("--save", help="write the merged config to this path")
    p_man = sub.add_parser("show-manifest", help="pretty-print a scan manifest")
    p_man.add_argument("directory", help="scan output directory")

    args = parser.parse_args(argv)

    if args.command == "validate-config":
        cfg = _load(args)
        print(json.dumps(cfg, indent=2, sort_keys=True))
        if args.save:
            save_config(cfg, args.save)
        return 0

    if args.command == "show-manifest":
        path = Path(args.directory) / "manifest.json"
        if not path.exists():
            print(f"no manifest at {path}", file=sys.stderr)
            return 2
        print(json.dumps(json.loads(path.read_text()), indent=2, sort_keys=True))
        return 0

    cfg = _load(args)
    if args.dry_run:
        points = [(L, m) for L in cfg["grid"]["L_values"]
                  for m in cfg["grid"]["m_values"]]
        print(f"config valid; would solve {len(points)} grid points into "
              f"{cfg['output']['directory']} and run steps "
              f"{cfg['analysis']['steps']}")
        return 0

    if args.command == "scan":
        table, _ = run_scan(cfg, echo=_echo)
        bad = table[~table["converged"].astype(bool)] if len(table) else table
        print(f"scan complete: {len(table)} rows, {len(bad)} unconverged")
        return 0 if len(bad) == 0 else 1

    if args.command == "analyze":
        if not cfg["analysis"]["steps"]:
            print("config requests no analysis steps", file=sys.stderr)
            return 2
        # analysis may require an existing table; scan() inside pipeline will
        # reuse it without solving when all rows are complete
        artifacts = run_pipeline(cfg, echo=_echo)
    else:
        artifacts = run_pipeline(cfg, echo=_echo)
    print(f"pipeline artifacts: {sorted(artifacts)}")
    table = artifacts.get("scan")
    if table is not None and len(table):
        bad = table[~table["converged"].astype(bool)]
        return 0 if len(bad) == 0 else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
