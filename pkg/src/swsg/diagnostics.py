"""Quantitative measurements: energies, ageostrophic ratio, transport losses
between height fields and phase-space clouds, and the convergence studies.

All Sinkhorn-divergence losses run at loss_eps = 0.01 with tolerance 1e-9:
the loss is a measurement, not a state, so it is solved looser than the
dynamics.  Masses are normalized to match before any divergence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import DiscreteMeasure, Domain, Grid, transport_cost_matrix
from .sinkhorn import (
    PhysicalParams,
    divergence_from_costs,
    ot_eps_value,
    sinkhorn_divergence,
)

LOSS_EPS = 0.01
LOSS_TOL = 1e-9


@dataclass(frozen=True)
class GridField:
    """Scalar field sampled at the grid nodes (flat, node order)."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.size,):
            raise ValueError(f"field size {v.shape} does not match grid {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    normalized_error: float


def _height_cloud(h: np.ndarray, grid_measure: DiscreteMeasure,
                  target_mass: float | None = None) -> DiscreteMeasure:
    w = np.asarray(h, dtype=float) * grid_measure.weights
    if target_mass is not None:
        w = w * (target_mass / float(w.sum()))
    return DiscreteMeasure(grid_measure.points, w)


def energy_report(h: np.ndarray, grid_measure: DiscreteMeasure,
                  sigma: DiscreteMeasure, params: PhysicalParams, eps: float,
                  debiased: bool = True, baseline: EnergyReport | None = None,
                  loss_tol: float = LOSS_TOL,
                  domain: Domain = Domain()) -> EnergyReport:
    """Kinetic + potential energy of a state and its normalized drift.

    Kinetic energy is f^2 times the entropic transport cost between the
    height-weighted grid measure and the particle cloud (the debiased
    divergence by default).  Potential energy is (g/2) the mean of h^2.  The
    normalized error compares against the baseline report, scaled by the gap
    between the baseline energy and the energy of the motionless uniform
    state with the same mean height.
    """
    h = np.asarray(h, dtype=float)
    mass = float(np.sum(sigma.weights))
    hmu = _height_cloud(h, grid_measure, target_mass=mass)
    if debiased:
        kin = params.f**2 * sinkhorn_divergence(hmu, sigma, eps, loss_tol,
                                                domain=domain)
    else:
        kin = params.f**2 * ot_eps_value(hmu, sigma, eps, loss_tol,
                                         domain=domain)
    pot = 0.5 * params.g * float((h * h) @ grid_measure.weights)
    total = kin + pot
    if baseline is None:
        norm = 0.0
    else:
        hbar = float(h @ grid_measure.weights)
        floor = 0.5 * params.g * hbar**2
        norm = (total - baseline.total) / (baseline.total - floor)
    return EnergyReport(kinetic=kin, potential=pot, total=total,
                        normalized_error=norm)


def debiased_height(grid_measure: DiscreteMeasure, sigma: DiscreteMeasure,
                    params: PhysicalParams, eps: float, tol: float = 1e-11,
                    max_iters: int = 100_000, domain: Domain = Domain(),
                    from_potentials: bool = False) -> np.ndarray:
    """Debiased height on the grid via the coupled saddle problem.

    The self-transport correction of the grid-side marginal cannot be solved
    independently (it is coupled to the height), so the debiased height comes
    from the saddle solver: directly as its height variable, or equivalently
    (to solver tolerance) as -(f^2/g) (phi - eps log u) when
    from_potentials=True.
    """
    from .saddle import saddle_sinkhorn

    sol = saddle_sinkhorn(grid_measure, sigma, params, eps, tol, max_iters,
                          domain=domain)
    if from_potentials:
        return -(params.f**2 / params.g) * (sol.phi - eps * np.log(sol.u))
    return sol.h


def _periodic_diff(a: np.ndarray, b: np.ndarray, domain: Domain) -> np.ndarray:
    """a - b with the x1 component wrapped to the nearest periodic image."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    p = domain.x1_period
    d = d.copy()
    d[..., 0] = np.mod(d[..., 0] + 0.5 * p, p) - 0.5 * p
    return d


def weighted_l2(v: np.ndarray, w: np.ndarray) -> float:
    """sqrt(sum_i w_i |v_i|^2) over rows of v."""
    return float(np.sqrt(np.sum(np.asarray(w) * np.sum(np.asarray(v)**2, axis=-1))))


def ageostrophic_ratio(phys_prev: np.ndarray, phys_next: np.ndarray,
                       vel_g: np.ndarray, weights: np.ndarray, dt: float,
                       domain: Domain = Domain()) -> float:
    """Weighted norm ratio |U - U_g| / |U_g| with U the central difference of
    the reconstructed physical positions (periodic-aware in x1)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    disp = _periodic_diff(phys_next, phys_prev, domain)
    U = disp / (2.0 * dt)
    denom = weighted_l2(vel_g, weights)
    if denom == 0.0:
        raise ValueError("ageostrophic_ratio: geostrophic velocity vanishes")
    return weighted_l2(U - vel_g, weights) / denom


def ageostrophic_ratio_from_snapshots(snap_prev, snap_mid, snap_next,
                                      domain: Domain = Domain()) -> float:
    """Ratio from three consecutive snapshots (see dynamics.Snapshot)."""
    for s in (snap_prev, snap_mid, snap_next):
        if s.phys is None:
            raise ValueError("snapshot lacks reconstructed physical positions")
    if snap_mid.velocity is None:
        raise ValueError("middle snapshot lacks velocities")
    dt = 0.5 * (snap_next.t - snap_prev.t)
    return ageostrophic_ratio(snap_prev.phys, snap_next.phys,
                              snap_mid.velocity, snap_mid.weights, dt, domain)


def _clamped(h: np.ndarray, label: str) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        warnings.warn(f"{label}: clamping {int(np.sum(h < 0))} negative height "
                      "values to zero before the transport loss")
        h = np.maximum(h, 0.0)
    return h


def height_error(h_solver: GridField, h_ref: GridField,
                 loss_eps: float = LOSS_EPS, loss_tol: float = LOSS_TOL,
                 domain: Domain = Domain()) -> float:
    """Transport height loss: sqrt of the Sinkhorn divergence between the two
    height-weighted node clouds, masses normalized to one."""
    hs = _clamped(h_solver.values, "height_error solver field")
    hr = _clamped(h_ref.values, "height_error reference field")
    a = _height_cloud(hs, h_solver.grid.measure(), target_mass=1.0)
    b = _height_cloud(hr, h_ref.grid.measure(), target_mass=1.0)
    val = sinkhorn_divergence(a, b, loss_eps, loss_tol, domain=domain)
    return float(np.sqrt(max(val, 0.0)))


def interpolate_to_grid(h_fine: GridField, grid: Grid) -> np.ndarray:
    """Bilinear restriction of a fine cell-centered field to a coarser grid
    (periodic in x1, clamped in x2)."""
    from scipy.interpolate import RegularGridInterpolator

    gf = h_fine.grid
    vals = h_fine.values.reshape(gf.n2, gf.n1)
    p = gf.domain.x1_period
    # pad the periodic axis with one wrapped column on each side
    x1 = gf.axis1()
    x1p = np.concatenate([[x1[-1] - p], x1, [x1[0] + p]])
    vp = np.concatenate([vals[:, -1:], vals, vals[:, :1]], axis=1)
    itp = RegularGridInterpolator((gf.axis2(), x1p), vp, method="linear",
                                  bounds_error=False, fill_value=None)
    pts = grid.points()
    return itp(np.column_stack([pts[:, 1], pts[:, 0]]))


def l2_height_error(h_solver: GridField, h_ref: GridField) -> float:
    """Interpolation-based height loss: root mean square difference against
    the bilinear restriction of the reference."""
    restricted = interpolate_to_grid(h_ref, h_solver.grid)
    return float(np.sqrt(np.mean((h_solver.values - restricted)**2)))


def phase_space_error(pos_a: np.ndarray, vel_a: np.ndarray, w_a: np.ndarray,
                      pos_b: np.ndarray, vel_b: np.ndarray, w_b: np.ndarray,
                      loss_eps: float = LOSS_EPS, loss_tol: float = LOSS_TOL,
                      domain: Domain = Domain()) -> float:
    """4D phase-space loss: sqrt of the Sinkhorn divergence under the cost
    (half periodic squared distance on positions) + (half squared Euclidean on
    velocities); masses normalized to one."""
    def vel_cost(u, v):
        d = u[:, None, :] - v[None, :, :]
        return 0.5 * np.sum(d * d, axis=-1)

    Caa = transport_cost_matrix(pos_a, pos_a, domain) + vel_cost(vel_a, vel_a)
    Cbb = transport_cost_matrix(pos_b, pos_b, domain) + vel_cost(vel_b, vel_b)
    Cab = transport_cost_matrix(pos_a, pos_b, domain) + vel_cost(vel_a, vel_b)
    wa = np.asarray(w_a, dtype=float)
    wb = np.asarray(w_b, dtype=float)
    wa = wa / wa.sum()
    wb = wb / wb.sum()
    val = divergence_from_costs(Caa, Cbb, Cab, wa, wb, loss_eps, loss_tol)
    return float(np.sqrt(max(val, 0.0)))


def cloud_error(a: DiscreteMeasure, b: DiscreteMeasure,
                loss_eps: float = LOSS_EPS, loss_tol: float = LOSS_TOL,
                domain: Domain = Domain()) -> float:
    """Transport loss between two particle clouds, masses normalized to one."""
    an = DiscreteMeasure(a.points, a.weights / a.weights.sum())
    bn = DiscreteMeasure(b.points, b.weights / b.weights.sum())
    val = sinkhorn_divergence(an, bn, loss_eps, loss_tol, domain=domain)
    return float(np.sqrt(max(val, 0.0)))


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("fit_loglog_slope needs positive data")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
