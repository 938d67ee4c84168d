"""Entropic optimal-transport solvers for the rotating shallow-water system.

Contains the height-coupled Sinkhorn solver (log update on the particle side,
Lambert-W update on the grid side), the symmetric self-transport iteration,
plain two-marginal entropic OT and the Sinkhorn divergence built from it, and
the barycentric maps used to turn potentials into displacements.

All kernel algebra is done in log domain; e^{-c/eps} matrices are never formed
in the solver hot path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    DiscreteMeasure,
    Domain,
    transport_cost_matrix,
    nearest_image_x1,
    total_mass,
)
from .numerics import lambert_w0_of_log, log_weights, lse_rows


@dataclass(frozen=True)
class PhysicalParams:
    """Nondimensional Coriolis and gravity constants."""

    f: float = 1.0
    g: float = 0.1

    def __post_init__(self):
        if not (self.f > 0 and self.g > 0):
            raise ValueError(f"f and g must be positive, got f={self.f}, g={self.g}")

    @property
    def geff(self) -> float:
        """g / f^2, the only combination the dual problem depends on."""
        return self.g / self.f**2


@dataclass(frozen=True)
class SolverConfig:
    eps: float = 0.01
    tol: float = 1e-11
    max_iters: int = 50_000
    warm_start: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class DualPotentials:
    """Kantorovich potentials: phi on grid nodes, psi on particles.

    psi_sym holds the self-transport potential of the particle cloud when it
    has been computed; u the positive auxiliary of the debiased saddle solver.
    """

    phi: np.ndarray
    psi: np.ndarray
    psi_sym: np.ndarray | None = None
    u: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(self.psi))):
            raise ValueError("potentials must be finite")
        if self.u is not None:
            u = np.asarray(self.u, dtype=float)
            object.__setattr__(self, "u", u)
            if np.any(u <= 0) or not np.all(np.isfinite(u)):
                raise ValueError("auxiliary u must be strictly positive and finite")

    def with_psi_sym(self, psi_sym: np.ndarray) -> "DualPotentials":
        return replace(self, psi_sym=np.asarray(psi_sym, dtype=float))


@dataclass
class SolveStats:
    iterations: int
    final_residual: float
    residual_history: list = field(default_factory=list)
    converged: bool = True


class _SwsgKernel:
    """Precomputed log-kernel data for one (grid, particles) pair."""

    def __init__(self, grid_measure: DiscreteMeasure, sigma: DiscreteMeasure,
                 eps: float, domain: Domain):
        if len(grid_measure) == 0 or len(sigma) == 0:
            raise ValueError("measures must be nonempty")
        self.eps = eps
        self.logmu = log_weights(grid_measure)
        self.logsig = log_weights(sigma)
        C = transport_cost_matrix(grid_measure.points, sigma.points, domain) / eps
        self.C = np.ascontiguousarray(C)        # (N, M), rows = grid
        self.CT = np.ascontiguousarray(C.T)     # (M, N), rows = particles

    def psi_update(self, phi: np.ndarray) -> np.ndarray:
        # psi(Y_j) = -eps log sum_i e^{phi_i/eps} K_ij mu_i
        return -self.eps * lse_rows(self.CT, phi / self.eps + self.logmu)

    def phi_log_arg(self, psi: np.ndarray, log_g_over_eps: float,
                    log_u: np.ndarray | float = 0.0) -> np.ndarray:
        # log of the Lambert argument (g/(eps f^2)) u e^{kernel integral}
        return log_g_over_eps + log_u + lse_rows(self.C, psi / self.eps + self.logsig)


def _swsg_sweep(kern: _SwsgKernel, phi: np.ndarray, params: PhysicalParams,
                log_u: np.ndarray | float = 0.0, eps_log_u: np.ndarray | float = 0.0):
    """One full update sweep; returns (phi_new, psi_new)."""
    eps = kern.eps
    psi_new = kern.psi_update(phi)
    log_arg = kern.phi_log_arg(psi_new, math.log(params.geff / eps), log_u)
    phi_new = eps_log_u - eps * lambert_w0_of_log(log_arg)
    return phi_new, psi_new


def swsg_sinkhorn_step(pots: DualPotentials, grid_measure: DiscreteMeasure,
                       sigma: DiscreteMeasure, params: PhysicalParams,
                       cfg: SolverConfig, domain: Domain = Domain()) -> DualPotentials:
    """One relaxation sweep of the coupled optimality system: psi log-update,
    then phi Lambert-update."""
    kern = _SwsgKernel(grid_measure, sigma, cfg.eps, domain)
    phi_new, psi_new = _swsg_sweep(kern, pots.phi, params)
    return replace(pots, phi=phi_new, psi=psi_new)


def solve_swsg_dual(grid_measure: DiscreteMeasure, sigma: DiscreteMeasure,
                    params: PhysicalParams, cfg: SolverConfig,
                    init: DualPotentials | None = None,
                    domain: Domain = Domain()) -> tuple[DualPotentials, SolveStats]:
    """Iterate the coupled Sinkhorn sweep to a fixed point.

    Stops when max(sup|dphi|, sup|dpsi|) < cfg.tol; a run that hits max_iters
    comes back with stats.converged = False.
    """
    kern = _SwsgKernel(grid_measure, sigma, cfg.eps, domain)
    if init is not None and cfg.warm_start:
        phi = np.array(init.phi, dtype=float, copy=True)
        psi = np.array(init.psi, dtype=float, copy=True)
    else:
        phi = np.zeros(len(grid_measure))
        psi = np.zeros(len(sigma))

    history: list[float] = []
    residual = np.inf
    for it in range(1, cfg.max_iters + 1):
        phi_new, psi_new = _swsg_sweep(kern, phi, params)
        residual = max(
            float(np.max(np.abs(phi_new - phi))),
            float(np.max(np.abs(psi_new - psi))),
        )
        history.append(residual)
        phi, psi = phi_new, psi_new
        if residual < cfg.tol:
            break

    stats = SolveStats(iterations=len(history), final_residual=residual,
                       residual_history=history, converged=residual < cfg.tol)
    pots = DualPotentials(phi=phi, psi=psi,
                          psi_sym=init.psi_sym if init is not None else None)
    return pots, stats


def height_from_phi(pots: DualPotentials, params: PhysicalParams) -> np.ndarray:
    """Water height on the grid nodes: h_i = -(f^2/g) phi_i."""
    return -(params.f**2 / params.g) * pots.phi


def symmetric_sinkhorn(sigma: DiscreteMeasure, eps: float, tol: float = 1e-11,
                       max_iters: int = 50_000, init: np.ndarray | None = None,
                       domain: Domain = Domain()) -> tuple[np.ndarray, SolveStats]:
    """Self-transport potential of sigma: fixed point of the symmetric
    log-update, relaxed with the standard half-step averaging."""
    if len(sigma) == 0:
        raise ValueError("symmetric_sinkhorn: empty measure")
    C = np.ascontiguousarray(transport_cost_matrix(sigma.points, sigma.points, domain) / eps)
    logsig = log_weights(sigma)
    psi = np.zeros(len(sigma)) if init is None else np.array(init, dtype=float, copy=True)

    history: list[float] = []
    residual = np.inf
    for it in range(1, max_iters + 1):
        target = -eps * lse_rows(C, psi / eps + logsig)
        psi_new = 0.5 * (psi + target)
        residual = float(np.max(np.abs(psi_new - psi)))
        history.append(residual)
        psi = psi_new
        if residual < tol:
            break

    stats = SolveStats(iterations=len(history), final_residual=residual,
                       residual_history=history, converged=residual < tol)
    return psi, stats


def _dual_value(phi, psi, loga, logb, C_over_eps, eps, mass_a, mass_b) -> float:
    # dual objective including the (vanishing at convergence) entropy slack
    lp = (phi / eps + loga)[:, None] + (psi / eps + logb)[None, :] - C_over_eps
    plan_mass = float(np.sum(np.exp(lp)))
    return (float(np.sum(phi * np.exp(loga))) + float(np.sum(psi * np.exp(logb)))
            - eps * (plan_mass - mass_a * mass_b))


def ot_eps_value(mu_a: DiscreteMeasure, mu_b: DiscreteMeasure, eps: float,
                 tol: float = 1e-9, max_iters: int = 50_000,
                 domain: Domain = Domain(),
                 init: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """Entropic OT cost between two equal-mass measures via its dual value."""
    ma, mb = total_mass(mu_a), total_mass(mu_b)
    if abs(ma - mb) > 1e-12 * max(1.0, ma, mb):
        raise ValueError(f"ot_eps_value: mass mismatch {ma} vs {mb}")
    phi, psi, C = _sinkhorn_balanced(mu_a, mu_b, eps, tol, max_iters, domain, init)
    return _dual_value(phi, psi, log_weights(mu_a), log_weights(mu_b), C, eps, ma, mb)


def _sinkhorn_balanced(mu_a, mu_b, eps, tol, max_iters, domain, init=None):
    """Standard two-potential log-domain Sinkhorn; returns (phi, psi, C/eps)."""
    loga, logb = log_weights(mu_a), log_weights(mu_b)
    C = np.ascontiguousarray(transport_cost_matrix(mu_a.points, mu_b.points, domain) / eps)
    phi, psi = _sinkhorn_core(C, loga, logb, eps, tol, max_iters, init)
    return phi, psi, C


def _sinkhorn_core(C_over_eps, loga, logb, eps, tol, max_iters, init=None):
    """Log-domain Sinkhorn on an explicit cost matrix (already divided by eps)."""
    C = C_over_eps
    CT = np.ascontiguousarray(C.T)
    if init is not None:
        phi, psi = (np.array(v, dtype=float, copy=True) for v in init)
    else:
        phi, psi = np.zeros(C.shape[0]), np.zeros(C.shape[1])
    for _ in range(max_iters):
        phi_new = -eps * lse_rows(C, psi / eps + logb)
        psi_new = -eps * lse_rows(CT, phi_new / eps + loga)
        residual = max(float(np.max(np.abs(phi_new - phi))),
                       float(np.max(np.abs(psi_new - psi))))
        phi, psi = phi_new, psi_new
        if residual < tol:
            break
    return phi, psi


def _symmetric_core(C_over_eps, logw, eps, tol, max_iters, init=None):
    """Symmetric Sinkhorn on an explicit self-cost matrix, half-step averaged."""
    C = np.ascontiguousarray(C_over_eps)
    psi = np.zeros(C.shape[0]) if init is None else np.array(init, dtype=float, copy=True)
    for _ in range(max_iters):
        target = -eps * lse_rows(C, psi / eps + logw)
        psi_new = 0.5 * (psi + target)
        residual = float(np.max(np.abs(psi_new - psi)))
        psi = psi_new
        if residual < tol:
            break
    return psi


def divergence_from_costs(Caa, Cbb, Cab, wa, wb, eps, tol=1e-9,
                          max_iters: int = 50_000) -> float:
    """Sinkhorn divergence for explicit cost matrices (raw, not divided by eps).

    Used when the ground cost is not the planar periodic distance, e.g. the
    4D phase-space cost mixing periodic positions with Euclidean velocities.
    """
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    ma, mb = float(wa.sum()), float(wb.sum())
    if abs(ma - mb) > 1e-12 * max(1.0, ma, mb):
        raise ValueError(f"divergence_from_costs: mass mismatch {ma} vs {mb}")
    with np.errstate(divide="ignore"):
        loga, logb = np.log(wa), np.log(wb)
    Caa = np.ascontiguousarray(np.asarray(Caa, dtype=float) / eps)
    Cbb = np.ascontiguousarray(np.asarray(Cbb, dtype=float) / eps)
    Cab = np.ascontiguousarray(np.asarray(Cab, dtype=float) / eps)
    psi_a = _symmetric_core(Caa, loga, eps, tol, max_iters)
    psi_b = _symmetric_core(Cbb, logb, eps, tol, max_iters)
    ot_aa = _dual_value(psi_a, psi_a, loga, loga, Caa, eps, ma, ma)
    ot_bb = _dual_value(psi_b, psi_b, logb, logb, Cbb, eps, mb, mb)
    phi, psi = _sinkhorn_core(Cab, loga, logb, eps, tol, max_iters,
                              init=(psi_a, psi_b))
    ot_ab = _dual_value(phi, psi, loga, logb, Cab, eps, ma, mb)
    return ot_ab - 0.5 * (ot_aa + ot_bb)


def _symmetric_dual_value(sigma: DiscreteMeasure, eps, tol, max_iters, domain) -> float:
    psi_s, _ = symmetric_sinkhorn(sigma, eps, tol, max_iters, domain=domain)
    logb = log_weights(sigma)
    C = np.ascontiguousarray(transport_cost_matrix(sigma.points, sigma.points, domain) / eps)
    m = total_mass(sigma)
    return _dual_value(psi_s, psi_s, logb, logb, C, eps, m, m)


def sinkhorn_divergence(mu_a: DiscreteMeasure, mu_b: DiscreteMeasure, eps: float,
                        tol: float = 1e-9, max_iters: int = 50_000,
                        domain: Domain = Domain()) -> float:
    """Debiased entropic cost OT_eps(a,b) - (OT_eps(a,a) + OT_eps(b,b)) / 2."""
    psi_a, _ = symmetric_sinkhorn(mu_a, eps, tol, max_iters, domain=domain)
    psi_b, _ = symmetric_sinkhorn(mu_b, eps, tol, max_iters, domain=domain)
    loga, logb = log_weights(mu_a), log_weights(mu_b)
    ma, mb = total_mass(mu_a), total_mass(mu_b)
    if abs(ma - mb) > 1e-12 * max(1.0, ma, mb):
        raise ValueError(f"sinkhorn_divergence: mass mismatch {ma} vs {mb}")

    Caa = np.ascontiguousarray(transport_cost_matrix(mu_a.points, mu_a.points, domain) / eps)
    Cbb = np.ascontiguousarray(transport_cost_matrix(mu_b.points, mu_b.points, domain) / eps)
    ot_aa = _dual_value(psi_a, psi_a, loga, loga, Caa, eps, ma, ma)
    ot_bb = _dual_value(psi_b, psi_b, logb, logb, Cbb, eps, mb, mb)
    # the symmetric potentials are a strong warm start for the cross problem
    phi, psi, Cab = _sinkhorn_balanced(mu_a, mu_b, eps, tol, max_iters, domain,
                                       init=(psi_a, psi_b))
    ot_ab = _dual_value(phi, psi, loga, logb, Cab, eps, ma, mb)
    return ot_ab - 0.5 * (ot_aa + ot_bb)


def barycentric_targets(source_points: np.ndarray, source_log_terms: np.ndarray,
                        target_points: np.ndarray, eps: float,
                        domain: Domain = Domain()) -> np.ndarray:
    """Conditional mean of the coupling for each target.

    source_log_terms holds phi_i/eps + log w_i (the target-side potential drops
    out of the normalised average).  The x1 coordinates entering each average
    use the periodic image of the source nearest the target, so averages never
    straddle the seam.
    """
    C = transport_cost_matrix(source_points, target_points, domain) / eps  # (N, M)
    L = source_log_terms[:, None] - C
    mx = np.max(L, axis=0)
    bad = ~np.isfinite(mx)
    if np.any(bad):
        raise ValueError(
            f"barycentric map degenerate: no coupling mass for particle(s) "
            f"{np.nonzero(bad)[0].tolist()}")
    W = np.exp(L - mx[None, :])
    denom = np.sum(W, axis=0)
    x1_img = nearest_image_x1(source_points[:, 0:1], target_points[None, :, 0],
                              domain.x1_period)
    b1 = np.sum(W * x1_img, axis=0) / denom
    b2 = (W.T @ source_points[:, 1]) / denom
    return np.column_stack([b1, b2])


def barycentric_map(pots: DualPotentials, grid_measure: DiscreteMeasure,
                    sigma: DiscreteMeasure, eps: float,
                    domain: Domain = Domain()) -> np.ndarray:
    """Entropic transport targets b_j for every particle; grad psi = Y - b."""
    terms = pots.phi / eps + log_weights(grid_measure)
    return barycentric_targets(grid_measure.points, terms, sigma.points, eps, domain)


def self_barycentric_map(psi_sym: np.ndarray, sigma: DiscreteMeasure, eps: float,
                         domain: Domain = Domain()) -> np.ndarray:
    """Targets of the self-coupling of sigma under its symmetric potential."""
    terms = np.asarray(psi_sym) / eps + log_weights(sigma)
    return barycentric_targets(sigma.points, terms, sigma.points, eps, domain)


def debiased_gradient(pots: DualPotentials, grid_measure: DiscreteMeasure,
                      sigma: DiscreteMeasure, eps: float,
                      domain: Domain = Domain()) -> np.ndarray:
    """grad(psi - psi_sym) per particle, as the difference of barycentric
    targets b_sym - b."""
    if pots.psi_sym is None:
        raise ValueError("debiased_gradient: psi_sym missing from potentials")
    b = barycentric_map(pots, grid_measure, sigma, eps, domain)
    b_sym = self_barycentric_map(pots.psi_sym, sigma, eps, domain)
    return b_sym - b
