"""Debiased solvers: the convex-concave saddle problem coupling the height,
the positive auxiliary field on the grid, and the two transport potentials.

Two routes to the same stationary point:

* ``saddle_ascent_descent`` -- plain alternating gradient descent in (h, u)
  and ascent in (phi, psi), with an adaptive relaxation step.
* ``saddle_sinkhorn`` -- a relaxation sweep in the manner of the coupled
  Sinkhorn solver.  The height is eliminated through the stationarity
  relation eps log u = phi + (g/f^2) h, which turns the phi-update into a
  Lambert-W step whose argument carries the u factor.  With u = 1 the sweep
  reduces exactly (bitwise) to the biased solver's sweep.

Everything is phrased in geff = g / f^2; that is the only combination of the
physical constants the optimisation depends on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DiscreteMeasure, Domain, transport_cost_matrix
from .numerics import log_weights, lse_rows
from .sinkhorn import PhysicalParams, SolveStats, _SwsgKernel, _swsg_sweep


class SolverError(RuntimeError):
    """Solver left its admissible state space (for example u <= 0)."""


@dataclass
class SaddleSolution:
    h: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    stats: SolveStats


def _self_kernel(grid_measure: DiscreteMeasure, eps: float, domain: Domain) -> np.ndarray:
    return np.ascontiguousarray(
        transport_cost_matrix(grid_measure.points, grid_measure.points, domain) / eps)


def saddle_residuals(h, u, phi, psi, grid_measure: DiscreteMeasure,
                     sigma: DiscreteMeasure, params: PhysicalParams, eps: float,
                     domain: Domain = Domain()) -> dict[str, float]:
    """Sup-norm residuals of the four stationarity relations, weight-free.

    Keys: 'row' (unit coupling mass per particle), 'col' (column sums
    reproduce h), 'state' (eps log u = phi + geff h), 'height'
    (h = u * kernel integral of u).
    """
    geff = params.geff
    logmu, logsig = log_weights(grid_measure), log_weights(sigma)
    C = transport_cost_matrix(grid_measure.points, sigma.points, domain) / eps
    lp = (phi / eps + logmu)[:, None] + (psi / eps + logsig)[None, :] - C
    P = np.exp(lp)
    row = np.abs(1.0 - P.sum(axis=0) / np.exp(logsig))
    col = np.abs(h - P.sum(axis=1) / np.exp(logmu))
    state = np.abs(eps * np.log(u) - phi - geff * h)
    Cxx = _self_kernel(grid_measure, eps, domain)
    ku = np.exp(lse_rows(Cxx, np.log(u) + logmu))
    height = np.abs(h - u * ku)
    return {"row": float(row.max()), "col": float(col.max()),
            "state": float(state.max()), "height": float(height.max())}


def saddle_sinkhorn(grid_measure: DiscreteMeasure, sigma: DiscreteMeasure,
                    params: PhysicalParams, eps: float, tol: float = 1e-11,
                    max_iters: int = 100_000,
                    init: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
                    domain: Domain = Domain()) -> SaddleSolution:
    """Relaxation sweep for the debiased stationarity system.

    Per sweep: psi log-update, phi Lambert-update with the u factor inside the
    argument, then the u-update geff * u_new = (eps log u - phi_new) / (K u).
    Stops when the max of the three increment sup-norms drops below tol.
    """
    geff = params.geff
    kern = _SwsgKernel(grid_measure, sigma, eps, domain)
    Cxx = _self_kernel(grid_measure, eps, domain)
    logmu = kern.logmu

    n = len(grid_measure)
    if init is not None:
        phi, psi, u = (np.array(v, dtype=float, copy=True) for v in init)
        if np.any(u <= 0):
            raise SolverError("saddle_sinkhorn: initial u must be positive")
    else:
        phi, psi, u = np.zeros(n), np.zeros(len(sigma)), np.ones(n)

    log_u = np.log(u)
    history: list[float] = []
    residual = np.inf
    for _ in range(max_iters):
        phi_new, psi_new = _swsg_sweep(kern, phi, params, log_u=log_u,
                                       eps_log_u=eps * log_u)
        numer = eps * log_u - phi_new  # = geff * h at the fixed point
        if np.any(numer <= 0) or not np.all(np.isfinite(numer)):
            raise SolverError("saddle_sinkhorn: auxiliary u left (0, inf)")
        log_ku = lse_rows(Cxx, log_u + logmu)
        log_u_new = np.log(numer) - math.log(geff) - log_ku
        u_new = np.exp(log_u_new)
        residual = max(float(np.max(np.abs(phi_new - phi))),
                       float(np.max(np.abs(psi_new - psi))),
                       float(np.max(np.abs(u_new - u))))
        history.append(residual)
        phi, psi, u, log_u = phi_new, psi_new, u_new, log_u_new
        if residual < tol:
            break

    h = u * np.exp(lse_rows(Cxx, log_u + logmu))
    stats = SolveStats(iterations=len(history), final_residual=residual,
                       residual_history=history, converged=residual < tol)
    return SaddleSolution(h=h, u=u, phi=phi, psi=psi, stats=stats)


def saddle_functional(h, u, phi, psi, grid_measure: DiscreteMeasure,
                      sigma: DiscreteMeasure, params: PhysicalParams, eps: float,
                      domain: Domain = Domain(),
                      include_symmetric: bool = True) -> float:
    """Value of the saddle functional (scaled by 1/f^2)."""
    geff = params.geff
    mu, sig = grid_measure.weights, sigma.weights
    C = transport_cost_matrix(grid_measure.points, sigma.points, domain)
    P = np.exp((phi[:, None] + psi[None, :] - C) / eps)
    val = (float(psi @ sig) + float((phi * h) @ mu)
           - eps * float(((P - 1.0) * mu[:, None] * sig[None, :]).sum())
           + 0.5 * geff * float((h * h) @ mu))
    if include_symmetric:
        Kxx = np.exp(-transport_cost_matrix(grid_measure.points, grid_measure.points, domain) / eps)
        val += (-eps * float((h * np.log(u)) @ mu)
                + 0.5 * eps * float((u * mu) @ Kxx @ (u * mu)))
    return val


def saddle_gradients(h, u, phi, psi, grid_measure: DiscreteMeasure,
                     sigma: DiscreteMeasure, params: PhysicalParams, eps: float,
                     domain: Domain = Domain(), include_symmetric: bool = True):
    """Weighted gradients of the saddle functional w.r.t. (h, u, phi, psi)."""
    geff = params.geff
    mu, sig = grid_measure.weights, sigma.weights
    C = transport_cost_matrix(grid_measure.points, sigma.points, domain)
    P = np.exp((phi[:, None] + psi[None, :] - C) / eps)
    col = P @ sig          # per grid node
    row = P.T @ mu         # per particle
    if include_symmetric:
        Kxx = np.exp(-transport_cost_matrix(grid_measure.points, grid_measure.points, domain) / eps)
        ku = Kxx @ (u * mu)
        gh = mu * (phi - eps * np.log(u) + geff * h)
        gu = mu * eps * (ku - h / u)
    else:
        ku = None
        gh = mu * (phi + geff * h)
        gu = np.zeros_like(u)
    gphi = mu * (h - col)
    gpsi = sig * (1.0 - row)
    return gh, gu, gphi, gpsi


def saddle_ascent_descent(grid_measure: DiscreteMeasure, sigma: DiscreteMeasure,
                          params: PhysicalParams, eps: float,
                          t: float | None = None, tol: float = 1e-10,
                          max_iters: int = 2_000_000,
                          domain: Domain = Domain(),
                          include_symmetric: bool = True) -> SaddleSolution:
    """Alternating gradient descent in (h, u), ascent in (phi, psi).

    The relaxation step defaults to 0.5 * eps * g / f^2 and adapts over a
    short window: it grows while the residual keeps shrinking and, on growth
    or a non-finite state, the iterate rolls back to the last checkpoint with
    a halved step.  Descent directions are the weight-free gradients, i.e.
    the stationarity residuals themselves; for the uniform grid weights this
    is just a rescaling of the steepest direction.

    With include_symmetric=False the self-interaction terms are dropped from
    the functional; the fixed point then coincides with the biased coupled
    solver (h = -phi * f^2 / g) and u is inert.
    """
    geff = params.geff
    mu, sig = grid_measure.weights, sigma.weights
    logmu, logsig = log_weights(grid_measure), log_weights(sigma)
    C = transport_cost_matrix(grid_measure.points, sigma.points, domain) / eps
    Kxx = np.exp(-transport_cost_matrix(grid_measure.points, grid_measure.points, domain) / eps)

    n, m = len(grid_measure), len(sigma)
    phi, psi = np.zeros(n), np.zeros(m)
    h, u = np.ones(n), np.ones(n)

    def residuals(phi, psi, h, u):
        with np.errstate(over="ignore", invalid="ignore"):
            lp = (phi / eps + logmu)[:, None] + (psi / eps + logsig)[None, :] - C
            P = np.exp(lp)
            col = P.sum(axis=1) / mu   # coupling column sums, weight-free
            row = P.sum(axis=0) / sig  # coupling row mass per particle, weight-free
            if include_symmetric:
                ku = Kxx @ (u * mu)
                rh = phi - eps * np.log(u) + geff * h
                ru = eps * (ku - h / u)
            else:
                rh = phi + geff * h
                ru = np.zeros_like(u)
        return rh, ru, h - col, 1.0 - row

    if t is None:
        t = 0.5 * eps * geff
    t_floor = t * 2.0**-20
    window = 30

    history: list[float] = []
    checkpoint = (phi, psi, h, u)
    anchor = np.inf
    residual = np.inf
    for it in range(1, max_iters + 1):
        rh, ru, rphi, rpsi = residuals(phi, psi, h, u)
        residual = max(float(np.max(np.abs(rh))), float(np.max(np.abs(ru))),
                       float(np.max(np.abs(rphi))), float(np.max(np.abs(rpsi))))
        if not np.isfinite(residual):
            if t <= t_floor:
                raise SolverError("saddle_ascent_descent diverged at the "
                                  "minimum step; problem too stiff")
            phi, psi, h, u = checkpoint
            t *= 0.5
            rh, ru, rphi, rpsi = residuals(phi, psi, h, u)
            residual = max(float(np.max(np.abs(rh))), float(np.max(np.abs(ru))),
                           float(np.max(np.abs(rphi))), float(np.max(np.abs(rpsi))))
        history.append(residual)
        if residual < tol:
            break
        if it % window == 0:
            if residual > 1.2 * anchor and t > t_floor:
                # diverging at this step size: roll back and halve
                phi, psi, h, u = checkpoint
                t *= 0.5
                rh, ru, rphi, rpsi = residuals(phi, psi, h, u)
            else:
                if residual < anchor:
                    t *= 1.3
                checkpoint = (phi.copy(), psi.copy(), h.copy(), u.copy())
            anchor = residual

        h = h - t * rh
        u_new = u - t * ru
        if include_symmetric and np.any(u_new <= 0):
            # overshoot of the positivity constraint: damp the u move only
            u_new = np.where(u_new <= 0, 0.5 * u, u_new)
        u = u_new
        phi = phi + t * rphi
        psi = psi + t * rpsi

    stats = SolveStats(iterations=len(history), final_residual=residual,
                       residual_history=history, converged=residual < tol)
    return SaddleSolution(h=h, u=u, phi=phi, psi=psi, stats=stats)
