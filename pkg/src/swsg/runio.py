"""Run configuration, snapshot persistence, and the run manifest.

A run directory contains a config echo, per-snapshot particle and potential
tables (text, optional compact binary twin), residual traces, and a JSON
manifest listing every file written.
"""

from __future__ import annotations

import configparser
import datetime
import io
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .dynamics import RunResult, Snapshot, StepperKind
from .geometry import Domain, Grid
from .scenarios import SCENARIOS, BumpParams, JetParams
from .sinkhorn import PhysicalParams, SolverConfig

CODE_VERSION = "0.1.0"
MODES = ("biased", "debiased", "saddle")


class ConfigError(ValueError):
    """Invalid run configuration; message lists the offending fields."""


@dataclass
class RunConfig:
    scenario: str = "jet"
    jet_a: float = 0.1
    jet_b: float = 10.0
    jet_c: float = 0.5
    jet_d: float = 1.0
    bump_mu1: float = 0.5
    bump_mu2: float = 0.3
    bump_sigma0: float = 0.1
    bump_alpha: float = 0.001
    f: float = 1.0
    g: float = 0.1
    n1: int = 32
    n2: int = 32
    # entropic regularization of the half-squared-distance cost; the Gibbs
    # kernel is exp(-|x-y|^2 / (2 eps)), so a kernel bandwidth quoted as
    # exp(-|x-y|^2 / E) corresponds to eps = E / 2 (desk scale E = 0.03)
    eps: float = 0.015
    tol: float = 1e-11
    max_iters: int = 50_000
    warm_start: bool = True
    stepper: str = "heun"
    dt: float = 0.1
    horizon: float = 10.0
    snapshot_every: float = 0.5
    mode: str = "debiased"
    outdir: str = "runs/out"
    seed: int = 0
    binary_snapshots: bool = False

    def validate(self) -> None:
        errs = []
        if self.scenario not in SCENARIOS:
            errs.append(f"scenario: {self.scenario!r} not in {SCENARIOS}")
        if not self.jet_d - abs(self.jet_a) > 0:
            errs.append("jet_a/jet_d: height d - |a| must stay positive")
        if not self.bump_sigma0 > 0:
            errs.append("bump_sigma0: must be positive")
        if not (self.f > 0 and self.g > 0):
            errs.append("f/g: must be positive")
        if self.n1 < 1 or self.n2 < 1:
            errs.append("n1/n2: must be >= 1")
        if not self.eps > 0:
            errs.append("eps: must be positive")
        if not self.tol > 0:
            errs.append("tol: must be positive")
        if self.max_iters < 1:
            errs.append("max_iters: must be >= 1")
        if self.stepper not in ("euler", "heun", "rk4"):
            errs.append(f"stepper: {self.stepper!r} not in euler/heun/rk4")
        if not self.dt > 0:
            errs.append("dt: must be positive")
        if self.horizon < 0:
            errs.append("horizon: must be >= 0")
        if not self.snapshot_every > 0:
            errs.append("snapshot_every: must be positive")
        if self.mode not in MODES:
            errs.append(f"mode: {self.mode!r} not in {MODES}")
        if errs:
            raise ConfigError("invalid config: " + "; ".join(errs))

    # component builders ---------------------------------------------------
    def jet_params(self) -> JetParams:
        b = self.jet_b
        if self.scenario == "shallow_jet" and b == 10.0:
            b = 5.0  # scenario default unless overridden
        return JetParams(a=self.jet_a, b=b, c=self.jet_c, d=self.jet_d)

    def bump_params(self) -> BumpParams:
        return BumpParams(mu1=self.bump_mu1, mu2=self.bump_mu2,
                          sigma0=self.bump_sigma0, alpha=self.bump_alpha)

    def physical_params(self) -> PhysicalParams:
        return PhysicalParams(f=self.f, g=self.g)

    def grid(self, domain: Domain = Domain()) -> Grid:
        return Grid(self.n1, self.n2, domain)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(eps=self.eps, tol=self.tol,
                            max_iters=self.max_iters,
                            warm_start=self.warm_start)

    def stepper_kind(self) -> StepperKind:
        return StepperKind(self.stepper, self.dt)


_SECTION_OF = {
    "scenario": "scenario", "jet_a": "scenario", "jet_b": "scenario",
    "jet_c": "scenario", "jet_d": "scenario", "bump_mu1": "scenario",
    "bump_mu2": "scenario", "bump_sigma0": "scenario", "bump_alpha": "scenario",
    "f": "physics", "g": "physics",
    "n1": "grid", "n2": "grid",
    "eps": "solver", "tol": "solver", "max_iters": "solver",
    "warm_start": "solver",
    "stepper": "stepper", "dt": "stepper",
    "horizon": "run", "snapshot_every": "run", "mode": "run",
    "outdir": "run", "seed": "run", "binary_snapshots": "run",
}


def config_to_text(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser()
    for f_ in fields(RunConfig):
        sec = _SECTION_OF[f_.name]
        if not parser.has_section(sec):
            parser.add_section(sec)
        parser.set(sec, f_.name, repr(getattr(cfg, f_.name)))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_from_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    kwargs = {}
    types = {f_.name: f_.type for f_ in fields(RunConfig)}
    for sec in parser.sections():
        for key, raw in parser.items(sec):
            if key not in types:
                raise ConfigError(f"unknown config key {key!r} in [{sec}]")
            t = types[key]
            if t in ("bool", bool):
                kwargs[key] = raw.strip() in ("True", "true", "1", "yes")
            elif t in ("int", int):
                kwargs[key] = int(raw)
            elif t in ("float", float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = raw.strip().strip("'\"")
    return RunConfig(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    return config_from_text(Path(path).read_text())


# snapshot persistence ----------------------------------------------------

SNAP_COLUMNS = ["x1", "x2", "weight", "psi", "psi_sym", "vx", "vy", "px", "py"]
POTS_COLUMNS = ["x1", "x2", "weight", "phi", "h"]


def _snapshot_table(snap: Snapshot) -> np.ndarray:
    n = snap.points.shape[0]
    def col(a, default=np.nan):
        return np.full(n, default) if a is None else np.asarray(a, dtype=float)
    psi = col(snap.pots.psi if snap.pots is not None else None)
    psi_sym = col(snap.pots.psi_sym if snap.pots is not None else None)
    v = snap.velocity if snap.velocity is not None else np.full((n, 2), np.nan)
    p = snap.phys if snap.phys is not None else np.full((n, 2), np.nan)
    return np.column_stack([snap.points[:, 0], snap.points[:, 1], snap.weights,
                            psi, psi_sym, v[:, 0], v[:, 1], p[:, 0], p[:, 1]])


def write_snapshot(directory: Path, index: int, snap: Snapshot,
                   height: np.ndarray | None, grid_points: np.ndarray | None,
                   grid_weights: np.ndarray | None,
                   binary: bool = False) -> list[str]:
    """Write the particle table (and grid potential table when available);
    returns the file names written."""
    names = []
    table = _snapshot_table(snap)
    name = f"snap_{index:06d}.txt"
    header = (f"t = {snap.t!r}\nstep_index = {snap.step_index}\n"
              f"columns: {' '.join(SNAP_COLUMNS)}")
    np.savetxt(directory / name, table, header=header, fmt="%.17g")
    names.append(name)
    if snap.pots is not None and grid_points is not None:
        ptab = np.column_stack([grid_points[:, 0], grid_points[:, 1],
                                grid_weights, snap.pots.phi,
                                height if height is not None
                                else np.full(len(grid_points), np.nan)])
        pname = f"pots_{index:06d}.txt"
        pheader = (f"t = {snap.t!r}\nstep_index = {snap.step_index}\n"
                   f"columns: {' '.join(POTS_COLUMNS)}")
        np.savetxt(directory / pname, ptab, header=pheader, fmt="%.17g")
        names.append(pname)
    if snap.stats:
        rname = f"residuals_{index:06d}.txt"
        with open(directory / rname, "w") as fh:
            fh.write("# columns: solve iteration residual\n")
            for si, st in enumerate(snap.stats):
                for it, r in enumerate(st.residual_history):
                    fh.write(f"{si} {it + 1} {r:.17g}\n")
        names.append(rname)
    if binary:
        bname = f"snap_{index:06d}.npz"
        arrays = {c: table[:, j] for j, c in enumerate(SNAP_COLUMNS)}
        np.savez_compressed(directory / bname, t=snap.t,
                            step_index=snap.step_index, **arrays)
        names.append(bname)
    return names


def read_snapshot_table(path: str | Path) -> dict:
    """Read a particle snapshot table into a dict of named columns plus t
    and step_index from the header."""
    path = Path(path)
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("t ="):
                meta["t"] = float(body.split("=", 1)[1])
            elif body.startswith("step_index ="):
                meta["step_index"] = int(body.split("=", 1)[1])
    data = np.loadtxt(path, ndmin=2)
    cols = SNAP_COLUMNS if data.shape[1] == len(SNAP_COLUMNS) else POTS_COLUMNS
    out = {c: data[:, j] for j, c in enumerate(cols)}
    out.update(meta)
    return out


def write_run(outdir: str | Path, cfg: RunConfig, result: RunResult,
              heights: list[np.ndarray | None], grid: Grid) -> Path:
    """Persist a completed (or truncated) run and its manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    files = ["config.ini"]
    (outdir / "config.ini").write_text(config_to_text(cfg))

    gp = grid.points()
    gw = grid.measure().weights
    index = []
    for i, snap in enumerate(result.snapshots):
        h = heights[i] if i < len(heights) else None
        names = write_snapshot(outdir, i, snap, h, gp, gw,
                               binary=cfg.binary_snapshots)
        files.extend(names)
        index.append({"index": i, "t": snap.t, "step_index": snap.step_index,
                      "files": names,
                      "iterations": [s.iterations for s in snap.stats],
                      "final_residuals": [s.final_residual for s in snap.stats]})

    manifest = {
        "code_version": CODE_VERSION,
        "config": asdict(cfg),
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "completed": result.completed,
        "error": result.error,
        "snapshots": index,
        "step_log": result.step_log,
        "files": files + ["manifest.json"],
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return outdir


def load_manifest(run_dir: str | Path) -> dict:
    return json.loads((Path(run_dir) / "manifest.json").read_text())
