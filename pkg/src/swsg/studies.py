"""Study drivers: run orchestration, energy and ageostrophic traces from run
directories, and the ε-convergence studies with log-log slope fits.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from .diagnostics import (
    GridField,
    ageostrophic_ratio,
    cloud_error,
    debiased_height,
    energy_report,
    fit_loglog_slope,
    height_error,
    l2_height_error,
    phase_space_error,
)
from .dynamics import RunResult, run, velocity_field
from .geometry import DiscreteMeasure, Domain, Grid
from .runio import RunConfig, load_manifest, read_snapshot_table, write_run
from .saddle import saddle_sinkhorn
from .scenarios import initial_sigma, scenario_height_fn
from .sinkhorn import height_from_phi


def _snapshot_height(cfg: RunConfig, snap, grid_measure, domain) -> np.ndarray | None:
    """Grid height for one snapshot, per the configured bias mode."""
    params = cfg.physical_params()
    if snap.pots is None:
        return None
    if cfg.mode == "biased":
        return height_from_phi(snap.pots, params)
    sigma = DiscreteMeasure(snap.points, snap.weights)
    if cfg.mode == "saddle":
        sol = saddle_sinkhorn(grid_measure, sigma, params, cfg.eps, cfg.tol,
                              cfg.max_iters, domain=domain)
        return sol.h
    return debiased_height(grid_measure, sigma, params, cfg.eps, cfg.tol,
                           cfg.max_iters, domain)


def simulate(cfg: RunConfig, domain: Domain = Domain()
             ) -> tuple[RunResult, list[np.ndarray | None], Grid]:
    """Run the configured simulation; returns the result, per-snapshot grid
    heights, and the grid."""
    cfg.validate()
    grid = cfg.grid(domain)
    params = cfg.physical_params()
    height_fn = scenario_height_fn(cfg.scenario, cfg.jet_params(),
                                   cfg.bump_params(), domain)
    sigma0 = initial_sigma(grid, height_fn, params)
    gm = grid.measure()
    result = run(sigma0, cfg.stepper_kind(), cfg.horizon, gm, params,
                 cfg.solver_config(), snapshot_every=cfg.snapshot_every,
                 domain=domain, debiased=(cfg.mode != "biased"))
    heights = [_snapshot_height(cfg, s, gm, domain) for s in result.snapshots]
    return result, heights, grid


def simulate_to_dir(cfg: RunConfig, domain: Domain = Domain()) -> tuple[Path, bool]:
    """simulate + persist; returns (run directory, completed flag)."""
    result, heights, grid = simulate(cfg, domain)
    out = write_run(cfg.outdir, cfg, result, heights, grid)
    return out, result.completed


def write_table(path: str | Path, columns: list[str], rows: list[list],
                comments: list[str] | None = None) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for c in comments or []:
            fh.write(f"# {c}\n")
        fh.write("# columns: " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return path


def _load_run(run_dir: str | Path):
    man = load_manifest(run_dir)
    cfg = RunConfig(**man["config"])
    snaps = []
    for entry in man["snapshots"]:
        rec = {"t": entry["t"], "step_index": entry["step_index"]}
        for name in entry["files"]:
            if name.startswith("snap_") and name.endswith(".txt"):
                rec["particles"] = read_snapshot_table(Path(run_dir) / name)
            elif name.startswith("pots_"):
                rec["pots"] = read_snapshot_table(Path(run_dir) / name)
        snaps.append(rec)
    return man, cfg, snaps


def energy_study(run_dir: str | Path, domain: Domain = Domain()) -> list[dict]:
    """Energy trace of a persisted run: one row per snapshot."""
    man, cfg, snaps = _load_run(run_dir)
    params = cfg.physical_params()
    grid = cfg.grid(domain)
    gm = grid.measure()
    rows: list[dict] = []
    baseline = None
    for rec in snaps:
        if "pots" not in rec or "particles" not in rec:
            rows.append({"t": rec["t"], "failed": True})
            continue
        h = rec["pots"]["h"]
        part = rec["particles"]
        sigma = DiscreteMeasure(np.column_stack([part["x1"], part["x2"]]),
                                part["weight"])
        rep = energy_report(h, gm, sigma, params, cfg.eps,
                            debiased=(cfg.mode != "biased"),
                            baseline=baseline, domain=domain)
        if baseline is None:
            baseline = rep
        rows.append({"t": rec["t"], "kinetic": rep.kinetic,
                     "potential": rep.potential, "total": rep.total,
                     "normalized_error": rep.normalized_error, "failed": False})
    return rows


def ageostrophic_study(run_dir: str | Path, domain: Domain = Domain()) -> list[dict]:
    """Ageostrophic-to-geostrophic velocity norm ratio at every interior
    snapshot time of a persisted run."""
    man, cfg, snaps = _load_run(run_dir)
    rows: list[dict] = []
    for prev, mid, nxt in zip(snaps, snaps[1:], snaps[2:]):
        try:
            pp = np.column_stack([prev["particles"]["px"], prev["particles"]["py"]])
            pn = np.column_stack([nxt["particles"]["px"], nxt["particles"]["py"]])
            vg = np.column_stack([mid["particles"]["vx"], mid["particles"]["vy"]])
            w = mid["particles"]["weight"]
            dt = 0.5 * (nxt["t"] - prev["t"])
            ratio = ageostrophic_ratio(pp, pn, vg, w, dt, domain)
            rows.append({"t": mid["t"], "ratio": ratio, "failed": False})
        except (KeyError, ValueError) as exc:
            rows.append({"t": mid["t"], "failed": True, "error": str(exc)})
    return rows


def eps_convergence_study(base: RunConfig, eps_list: list[float],
                          fine_n: int = 64, modes: tuple[str, ...] = ("debiased", "biased"),
                          domain: Domain = Domain()) -> dict:
    """t=0 convergence of the height and phase-space errors in ε, with the
    grid tied to ε through N = 1/ε² (side = round(1/ε)).

    The reference is analytic: the scenario height on a fine grid, and the
    pushforward cloud with its exact geostrophic velocity.
    """
    params = base.physical_params()
    height_fn = scenario_height_fn(base.scenario, base.jet_params(),
                                   base.bump_params(), domain)
    fine_grid = Grid(fine_n, fine_n, domain)
    h_ref = GridField(height_fn(fine_grid.points())[0], fine_grid)
    # reference phase-space cloud: analytic pushforward + geostrophic velocity
    Xf = fine_grid.points()
    hf, gradf = height_fn(Xf)
    geff = params.g / params.f**2
    Yf = Xf + geff * gradf
    from .dynamics import rotate
    Uf = params.f * rotate(geff * gradf)
    wf = hf / fine_grid.size

    rows: list[dict] = []
    for eps in eps_list:
        n = int(round(1.0 / eps))
        grid = Grid(n, n, domain)
        gm = grid.measure()
        sigma = initial_sigma(grid, height_fn, params)
        for mode in modes:
            cfg = replace(base, n1=n, n2=n, eps=eps, mode=mode)
            try:
                v, pots, _ = velocity_field(sigma.points, sigma.weights, gm,
                                            params, cfg.solver_config(), domain,
                                            debiased=(mode != "biased"))
                h = (height_from_phi(pots, params) if mode == "biased" else
                     debiased_height(gm, sigma, params, eps, cfg.tol,
                                     domain=domain))
                eh = height_error(GridField(h, grid), h_ref, domain=domain)
                eh_l2 = l2_height_error(GridField(h, grid), h_ref)
                eu = phase_space_error(sigma.points, v, sigma.weights,
                                       Yf, Uf, wf, domain=domain)
                rows.append({"eps": eps, "n": n * n, "mode": mode, "e_h": eh,
                             "e_h_l2": eh_l2, "e_u": eu, "failed": False})
            except Exception as exc:  # any failed cell is flagged, study continues
                rows.append({"eps": eps, "n": n * n, "mode": mode,
                             "failed": True, "error": str(exc)})

    slopes = {}
    for mode in modes:
        ok = [r for r in rows if r["mode"] == mode and not r["failed"]]
        if len(ok) >= 2:
            es = [r["eps"] for r in ok]
            slopes[mode] = {
                "e_h": fit_loglog_slope(es, [r["e_h"] for r in ok]),
                "e_h_l2": fit_loglog_slope(es, [r["e_h_l2"] for r in ok]),
                "e_u": fit_loglog_slope(es, [r["e_u"] for r in ok]),
            }
    return {"rows": rows, "slopes": slopes}


def pseudoconvergence_study(base: RunConfig, eps_list: list[float],
                            ref_eps: float, times: list[float],
                            domain: Domain = Domain()) -> dict:
    """Short-horizon pseudoconvergence: run each (ε, N=1/ε²) pair to the
    requested times and measure cloud and height errors against the finest
    run (ε = ref_eps), which plays the role of the unavailable exact solution."""
    if sorted(eps_list, reverse=True) != list(eps_list):
        raise ValueError("eps_list must be descending")
    if ref_eps >= min(eps_list):
        raise ValueError("reference eps must be finer than every study eps")

    horizon = max(times)
    cadence = min(np.diff([0.0] + sorted(times))) if times else base.dt

    def run_one(eps: float):
        n = int(round(1.0 / eps))
        cfg = replace(base, n1=n, n2=n, eps=eps, horizon=horizon,
                      snapshot_every=float(cadence))
        result, heights, grid = simulate(cfg, domain)
        return cfg, result, heights, grid

    ref_cfg, ref_res, ref_heights, ref_grid = run_one(ref_eps)
    if not ref_res.completed:
        raise RuntimeError(f"reference run failed: {ref_res.error}")

    def at_time(result, t):
        for i, s in enumerate(result.snapshots):
            if abs(s.t - t) < 1e-9:
                return i
        return None

    rows: list[dict] = []
    for eps in eps_list:
        try:
            cfg, res, heights, grid = run_one(eps)
        except Exception as exc:
            for t in times:
                rows.append({"eps": eps, "t": t, "failed": True, "error": str(exc)})
            continue
        for t in times:
            i, j = at_time(res, t), at_time(ref_res, t)
            if i is None or j is None:
                rows.append({"eps": eps, "t": t, "failed": True,
                             "error": "snapshot missing"})
                continue
            s, r = res.snapshots[i], ref_res.snapshots[j]
            e_sigma = cloud_error(DiscreteMeasure(s.points, s.weights),
                                  DiscreteMeasure(r.points, r.weights),
                                  domain=domain)
            e_h = height_error(GridField(heights[i], grid),
                               GridField(ref_heights[j], ref_grid),
                               domain=domain)
            e_h_l2 = l2_height_error(GridField(heights[i], grid),
                                     GridField(ref_heights[j], ref_grid))
            rows.append({"eps": eps, "t": t, "n": grid.size,
                         "e_sigma": e_sigma, "e_h": e_h, "e_h_l2": e_h_l2,
                         "failed": False})

    slopes = {}
    for t in times:
        ok = [r for r in rows if r["t"] == t and not r["failed"]]
        if len(ok) >= 2:
            es = [r["eps"] for r in ok]
            slopes[t] = {k: fit_loglog_slope(es, [r[k] for r in ok])
                         for k in ("e_sigma", "e_h", "e_h_l2")}
    return {"rows": rows, "slopes": slopes, "ref_eps": ref_eps}
