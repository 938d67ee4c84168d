"""Command-line front door: simulate, study, verify, render-data.

Exit codes: 0 success, 1 validation error, 2 solver/check failure, 3 study
completed with failed rows.  The only environment variable honored is
SWSG_THREADS (compute thread count).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .runio import ConfigError, RunConfig, load_config, load_manifest, read_snapshot_table

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_PARTIAL = 3


def _apply_threads():
    v = os.environ.get("SWSG_THREADS")
    if v:
        try:
            import numba
            numba.set_num_threads(max(1, int(v)))
        except (ImportError, ValueError):
            pass


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=str, default=None,
                   help="config file (INI); flags override file values")
    for f_ in fields(RunConfig):
        flag = "--" + f_.name.replace("_", "-")
        if f_.type in ("bool", bool):
            p.add_argument(flag, type=str, choices=["true", "false"], default=None)
        elif f_.type in ("int", int):
            p.add_argument(flag, type=int, default=None)
        elif f_.type in ("float", float):
            p.add_argument(flag, type=float, default=None)
        else:
            p.add_argument(flag, type=str, default=None)


def _build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for f_ in fields(RunConfig):
        v = getattr(args, f_.name, None)
        if v is not None:
            if f_.type in ("bool", bool):
                v = v == "true"
            setattr(cfg, f_.name, v)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    from .studies import simulate_to_dir

    try:
        cfg = _build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out, completed = simulate_to_dir(cfg)
    print(f"run directory: {out}")
    if not completed:
        print("run truncated by a solver failure; see manifest.json",
              file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _write_rows(path: Path, rows: list[dict], comments: list[str]) -> None:
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    from .studies import write_table
    write_table(path, keys, [[r.get(k, "") for k in keys] for r in rows],
                comments)


def cmd_study(args) -> int:
    from . import studies

    try:
        if args.kind in ("energy", "ageostrophic"):
            if not args.run_dir:
                print("error: --run-dir required for this study kind",
                      file=sys.stderr)
                return EXIT_VALIDATION
            fn = (studies.energy_study if args.kind == "energy"
                  else studies.ageostrophic_study)
            rows = fn(args.run_dir)
            out = Path(args.out) if args.out else Path(args.run_dir) / f"{args.kind}.txt"
            _write_rows(out, rows, [f"study: {args.kind}"])
            print(f"study table: {out}")
            return EXIT_PARTIAL if any(r.get("failed") for r in rows) else EXIT_OK

        cfg = _build_config(args)
        eps_list = [float(x) for x in args.eps_list.split(",")]
        if args.kind == "eps_convergence":
            res = studies.eps_convergence_study(cfg, eps_list, fine_n=args.fine_n)
        elif args.kind == "pseudoconvergence":
            times = [float(x) for x in args.times.split(",")]
            res = studies.pseudoconvergence_study(cfg, eps_list, args.ref_eps,
                                                  times)
        else:
            print(f"error: unknown study kind {args.kind!r}", file=sys.stderr)
            return EXIT_VALIDATION
        out = Path(args.out) if args.out else Path(f"{args.kind}.txt")
        comments = [f"study: {args.kind}",
                    "slopes: " + json.dumps(res["slopes"])]
        _write_rows(out, res["rows"], comments)
        print(f"study table: {out}")
        return (EXIT_PARTIAL if any(r.get("failed") for r in res["rows"])
                else EXIT_OK)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def cmd_verify(_args) -> int:
    from .oracles import verify_checks

    checks = verify_checks()
    for c in checks:
        print(json.dumps(c))
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_SOLVER


def cmd_render_data(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "manifest.json").exists():
        print(f"error: no manifest in {run_dir}", file=sys.stderr)
        return EXIT_VALIDATION
    man = load_manifest(run_dir)
    bundle = {"config": man["config"], "completed": man["completed"],
              "step_log": man["step_log"], "snapshots": []}
    for entry in man["snapshots"]:
        rec = {"t": entry["t"], "step_index": entry["step_index"],
               "iterations": entry["iterations"]}
        for name in entry["files"]:
            path = run_dir / name
            if name.startswith("snap_") and name.endswith(".txt"):
                tab = read_snapshot_table(path)
                for k in ("x1", "x2", "weight", "psi", "psi_sym", "vx", "vy",
                          "px", "py"):
                    rec[k] = [None if np.isnan(v) else v for v in tab[k]]
            elif name.startswith("pots_"):
                tab = read_snapshot_table(path)
                rec["grid_x1"] = list(tab["x1"])
                rec["grid_x2"] = list(tab["x2"])
                rec["phi"] = list(tab["phi"])
                rec["h"] = [None if np.isnan(v) else v for v in tab["h"]]
            elif name.startswith("residuals_"):
                data = np.loadtxt(path, ndmin=2)
                rec["residuals"] = [[int(r[0]), int(r[1]), float(r[2])]
                                    for r in data]
        bundle["snapshots"].append(rec)
    for study in ("energy", "ageostrophic", "eps_convergence",
                  "pseudoconvergence"):
        path = run_dir / f"{study}.txt"
        if path.exists():
            bundle[f"study_{study}"] = path.read_text()
    out = Path(args.out) if args.out else run_dir / "viz_bundle.json"
    out.write_text(json.dumps(bundle))
    print(f"viz bundle: {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _apply_threads()
    parser = argparse.ArgumentParser(
        prog="swsg",
        description="entropic transport solvers and particle dynamics for "
                    "semigeostrophic shallow water")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a simulation to a run directory")
    _add_config_flags(p_sim)
    p_sim.set_defaults(fn=cmd_simulate)

    p_study = sub.add_parser("study", help="run a diagnostic study")
    p_study.add_argument("kind", choices=["eps_convergence", "pseudoconvergence",
                                          "energy", "ageostrophic"])
    p_study.add_argument("--run-dir", type=str, default=None)
    p_study.add_argument("--out", type=str, default=None)
    p_study.add_argument("--eps-list", type=str, default="0.08,0.04,0.02")
    p_study.add_argument("--fine-n", type=int, default=64)
    p_study.add_argument("--ref-eps", type=float, default=0.02)
    p_study.add_argument("--times", type=str, default="1.0")
    _add_config_flags(p_study)
    p_study.set_defaults(fn=cmd_study)

    p_verify = sub.add_parser("verify", help="run the small-instance oracle suite")
    p_verify.set_defaults(fn=cmd_verify)

    p_render = sub.add_parser("render-data", help="export a viz-ready JSON bundle")
    p_render.add_argument("--run-dir", type=str, required=True)
    p_render.add_argument("--out", type=str, default=None)
    p_render.set_defaults(fn=cmd_render_data)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
