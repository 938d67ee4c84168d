"""Lagrangian particle integration of the geostrophic dynamics.

Particles carry fixed weights and move with the rotated displacement field
derived from the transport potentials.  Every Runge-Kutta stage re-solves the
potentials at the stage positions, warm-started from the previous stage.
Stage arithmetic works on unwrapped coordinates; x1 is remapped once per
completed step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import DiscreteMeasure, Domain, remap_periodic
from .saddle import SolverError
from .sinkhorn import (
    DualPotentials,
    PhysicalParams,
    SolveStats,
    SolverConfig,
    barycentric_map,
    debiased_gradient,
    solve_swsg_dual,
    symmetric_sinkhorn,
)

# explicit Runge-Kutta tableaus: rows of stage coefficients, then the weights
_TABLEAUS = {
    "euler": ([[]], [1.0]),
    "heun": ([[], [1.0]], [0.5, 0.5]),
    "rk4": ([[], [0.5], [0.0, 0.5], [0.0, 0.0, 1.0]],
            [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]),
}


@dataclass(frozen=True)
class StepperKind:
    name: str = "heun"
    dt: float = 0.1

    def __post_init__(self):
        if self.name not in _TABLEAUS:
            raise ValueError(f"unknown stepper {self.name!r}; expected one of "
                             f"{sorted(_TABLEAUS)}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass
class SimulationState:
    t: float
    particles: DiscreteMeasure
    pots: DualPotentials | None = None
    step_index: int = 0


def rotate(v: np.ndarray) -> np.ndarray:
    """The rotation (a, b) -> (b, -a) applied along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def velocity_field(points: np.ndarray, weights: np.ndarray,
                   grid_measure: DiscreteMeasure, params: PhysicalParams,
                   cfg: SolverConfig, domain: Domain = Domain(),
                   debiased: bool = True, init: DualPotentials | None = None,
                   ) -> tuple[np.ndarray, DualPotentials, list[SolveStats]]:
    """Per-particle velocity f*J*grad(psi - psi_sym) (or f*J*grad psi when
    biased) at the given positions, solving the potentials internally.

    Returns (velocities, converged potentials incl. psi_sym, solve stats).
    """
    sigma = DiscreteMeasure(remap_periodic(points, domain), weights)
    pots, stats = solve_swsg_dual(grid_measure, sigma, params, cfg,
                                  init=init, domain=domain)
    all_stats = [stats]
    if not stats.converged:
        raise SolverError(
            f"coupled solve failed to converge (residual {stats.final_residual:.3e} "
            f"after {stats.iterations} iterations)")
    if debiased:
        sym_init = init.psi_sym if init is not None else None
        psi_s, sym_stats = symmetric_sinkhorn(sigma, cfg.eps, cfg.tol,
                                              cfg.max_iters, init=sym_init,
                                              domain=domain)
        all_stats.append(sym_stats)
        if not sym_stats.converged:
            raise SolverError(
                f"symmetric solve failed to converge (residual "
                f"{sym_stats.final_residual:.3e})")
        pots = pots.with_psi_sym(psi_s)
        grad = debiased_gradient(pots, grid_measure, sigma, cfg.eps, domain)
    else:
        b = barycentric_map(pots, grid_measure, sigma, cfg.eps, domain)
        grad = sigma.points - b  # grad psi = Y - b
    return params.f * rotate(grad), pots, all_stats


def reconstruct_physical_positions(pots: DualPotentials,
                                   grid_measure: DiscreteMeasure,
                                   sigma: DiscreteMeasure, eps: float,
                                   domain: Domain = Domain(),
                                   debiased: bool = True) -> DiscreteMeasure:
    """Diagnostic physical-space cloud: the barycentric image of each particle
    (with the self-transport image subtracted off in debiased mode), carrying
    the fixed particle weights.  Never feeds back into the dynamics."""
    b = barycentric_map(pots, grid_measure, sigma, eps, domain)
    if debiased:
        if pots.psi_sym is None:
            raise ValueError("reconstruct_physical_positions: psi_sym missing")
        from .sinkhorn import self_barycentric_map
        b_sym = self_barycentric_map(pots.psi_sym, sigma, eps, domain)
        x = sigma.points + b - b_sym
    else:
        x = b
    return DiscreteMeasure(remap_periodic(x, domain), sigma.weights)


def _default_velocity_fn(grid_measure, params, cfg, domain, debiased):
    def fn(points, weights, init):
        return velocity_field(points, weights, grid_measure, params, cfg,
                              domain, debiased, init)
    return fn


def step(state: SimulationState, stepper: StepperKind,
         grid_measure: DiscreteMeasure | None = None,
         params: PhysicalParams | None = None,
         cfg: SolverConfig | None = None, domain: Domain = Domain(),
         debiased: bool = True, velocity_fn=None,
         ) -> tuple[SimulationState, np.ndarray, DualPotentials | None, list[SolveStats]]:
    """Advance one explicit Runge-Kutta step.

    Returns (new state, stage-1 velocity, stage-1 potentials, all stage stats);
    the stage-1 pair belongs to the *incoming* state and is what a snapshot of
    that state should record.  On any stage failure the incoming state is left
    untouched and the error propagates with time context.
    """
    if velocity_fn is None:
        velocity_fn = _default_velocity_fn(grid_measure, params, cfg, domain, debiased)
    a_rows, b_weights = _TABLEAUS[stepper.name]
    dt = stepper.dt
    y0 = state.particles.points
    w = state.particles.weights

    ks: list[np.ndarray] = []
    pots = state.pots
    start_v: np.ndarray | None = None
    start_pots: DualPotentials | None = None
    all_stats: list[SolveStats] = []
    try:
        for a in a_rows:
            y = y0
            for aij, k in zip(a, ks):
                if aij != 0.0:
                    y = y + dt * aij * k
            v, pots, stats = velocity_fn(y, w, pots)
            all_stats.extend(stats)
            ks.append(v)
            if start_v is None:
                start_v, start_pots = v, pots
    except SolverError as exc:
        raise SolverError(f"step {state.step_index} (t={state.t:g}) failed: {exc}") from exc

    y1 = y0.copy()
    for bw, k in zip(b_weights, ks):
        y1 = y1 + dt * bw * k
    particles = DiscreteMeasure(remap_periodic(y1, domain), w)
    new_state = SimulationState(t=state.t + dt, particles=particles,
                                pots=pots, step_index=state.step_index + 1)
    return new_state, start_v, start_pots, all_stats


@dataclass
class Snapshot:
    t: float
    step_index: int
    points: np.ndarray
    weights: np.ndarray
    velocity: np.ndarray | None
    pots: DualPotentials | None
    phys: np.ndarray | None
    stats: list[SolveStats] = field(default_factory=list)


@dataclass
class RunResult:
    snapshots: list[Snapshot]
    completed: bool
    error: str | None = None
    # one record per attempted step: (step_index, t, iterations of every solve)
    step_log: list[dict] = field(default_factory=list)


def _make_snapshot(state: SimulationState, v, pots, stats, grid_measure, cfg,
                   domain, debiased) -> Snapshot:
    phys = None
    if pots is not None and grid_measure is not None:
        sigma = DiscreteMeasure(remap_periodic(state.particles.points, domain),
                                state.particles.weights)
        phys = reconstruct_physical_positions(
            pots, grid_measure, sigma, cfg.eps, domain, debiased).points
    return Snapshot(t=state.t, step_index=state.step_index,
                    points=remap_periodic(state.particles.points, domain),
                    weights=state.particles.weights, velocity=v, pots=pots,
                    phys=phys, stats=list(stats))


def run(initial: DiscreteMeasure, stepper: StepperKind,
        horizon: float, grid_measure: DiscreteMeasure | None = None,
        params: PhysicalParams | None = None, cfg: SolverConfig | None = None,
        snapshot_every: float | None = None, domain: Domain = Domain(),
        debiased: bool = True, velocity_fn=None) -> RunResult:
    """Integrate from t=0 to the horizon, snapshotting at the requested cadence.

    Snapshots always include t=0 and the final state; a failed step terminates
    the run but keeps everything produced so far.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if velocity_fn is None:
        velocity_fn = _default_velocity_fn(grid_measure, params, cfg, domain, debiased)
    dt = stepper.dt
    n_steps = int(round(horizon / dt))
    every = 1 if snapshot_every is None else max(1, int(round(snapshot_every / dt)))

    state = SimulationState(t=0.0, particles=initial)
    snaps: list[Snapshot] = []
    step_log: list[dict] = []
    try:
        for k in range(n_steps):
            new_state, v, pots, stats = step(state, stepper, grid_measure,
                                             params, cfg, domain, debiased,
                                             velocity_fn)
            step_log.append({"step_index": state.step_index, "t": state.t,
                             "iterations": [s.iterations for s in stats]})
            if k % every == 0:
                st = replace(state, pots=pots)
                snaps.append(_make_snapshot(st, v, pots, stats, grid_measure,
                                            cfg, domain, debiased))
            state = new_state
        # closing snapshot at the final positions
        v, pots, stats = velocity_fn(state.particles.points,
                                     state.particles.weights, state.pots)
        st = replace(state, pots=pots)
        snaps.append(_make_snapshot(st, v, pots, stats, grid_measure, cfg,
                                    domain, debiased))
    except SolverError as exc:
        return RunResult(snapshots=snaps, completed=False, error=str(exc),
                         step_log=step_log)
    return RunResult(snapshots=snaps, completed=True, step_log=step_log)
