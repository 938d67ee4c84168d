"""Independent small-instance oracles used by the verify command and tests.

These deliberately avoid the production solver's algorithm: the dual problem
is maximized densely with a quasi-Newton method, gradients are checked by
central finite differences, and the scalar special function is checked by its
defining equation.  Agreement between the oracles and the solvers is the
correctness argument for the package.
"""

from __future__ import annotations

import numpy as np

from . import numerics
from .geometry import DiscreteMeasure, Domain, transport_cost_matrix
from .sinkhorn import PhysicalParams, SolverConfig, solve_swsg_dual

def one_point_closed_form(params: PhysicalParams, c: float) -> tuple[float, float, float]:
    """(phi, psi, h) for a single grid point and a single unit-mass particle
    at squared distance c: phi = -g/f^2, psi = g/f^2 + c/2, h = 1.

    The c/2 is the transport cost (half the squared distance) of moving the
    whole unit mass between the two points."""
    geff = params.geff
    return -geff, geff + 0.5 * c, 1.0


def dual_objective(phi, psi, grid_measure: DiscreteMeasure,
                   sigma: DiscreteMeasure, params: PhysicalParams, eps: float,
                   domain: Domain = Domain()) -> float:
    """Regularised dual objective whose maximizer matches the coupled solver."""
    geff = params.geff
    mu, sig = grid_measure.weights, sigma.weights
    C = transport_cost_matrix(grid_measure.points, sigma.points, domain)
    P = np.exp((phi[:, None] + psi[None, :] - C) / eps)
    return (float(psi @ sig) - 0.5 / geff * float((phi * phi) @ mu)
            - eps * float(((P - 1.0) * mu[:, None] * sig[None, :]).sum()))


def dual_gradient(phi, psi, grid_measure, sigma, params, eps,
                  domain: Domain = Domain()):
    geff = params.geff
    mu, sig = grid_measure.weights, sigma.weights
    C = transport_cost_matrix(grid_measure.points, sigma.points, domain)
    P = np.exp((phi[:, None] + psi[None, :] - C) / eps)
    gphi = mu * (-phi / geff - P @ sig)
    gpsi = sig * (1.0 - P.T @ mu)
    return gphi, gpsi


def dense_dual_ascent(grid_measure: DiscreteMeasure, sigma: DiscreteMeasure,
                      params: PhysicalParams, eps: float,
                      domain: Domain = Domain()):
    """Maximize the dual densely with a quasi-Newton ascent (scipy L-BFGS).

    Only suitable for small instances; returns (phi, psi).
    """
    from scipy.optimize import minimize

    n, m = len(grid_measure), len(sigma)

    def neg(z):
        phi, psi = z[:n], z[n:]
        val = dual_objective(phi, psi, grid_measure, sigma, params, eps, domain)
        gphi, gpsi = dual_gradient(phi, psi, grid_measure, sigma, params, eps,
                                   domain)
        return -val, -np.concatenate([gphi, gpsi])

    res = minimize(neg, np.zeros(n + m), jac=True, method="L-BFGS-B",
                   options={"maxiter": 20_000, "ftol": 1e-18, "gtol": 1e-13,
                            "maxcor": 50})
    return res.x[:n], res.x[n:]


def central_difference_gradient(fn, z: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of a flat vector."""
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += step
        zm[i] -= step
        g[i] = (fn(zp) - fn(zm)) / (2.0 * step)
    return g


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def verify_checks(rng: np.random.Generator | None = None) -> list[dict]:
    """The small-instance oracle suite: one pass/fail record per check."""
    from .saddle import saddle_residuals, saddle_sinkhorn

    rng = rng if rng is not None else np.random.default_rng(0)
    checks: list[dict] = []
    domain = Domain()
    params = PhysicalParams()

    # Lambert: defining equation w e^w = z and agreement with scipy
    z = np.concatenate([np.geomspace(1e-8, 1e8, 25), [-0.05, -0.2, -0.36]])
    w = numerics.lambert_w0(z)
    resid = float(np.max(np.abs(w * np.exp(w) - z) / np.maximum(np.abs(z), 1e-30)))
    try:
        from scipy.special import lambertw
        ref = np.real(lambertw(z))
        dev = float(np.max(np.abs(w - ref)))
    except ImportError:  # pragma: no cover
        dev = 0.0
    ok = resid < 1e-12 and dev < 1e-12
    checks.append(_check("lambert_w0", ok,
                         f"defining-eq residual {resid:.2e}, scipy deviation {dev:.2e}"))

    # one-point closed form
    c = 0.07
    gm = DiscreteMeasure(np.array([[0.2, 0.3]]), np.array([1.0]))
    y = np.array([[0.2, 0.3 + np.sqrt(c)]])
    sg = DiscreteMeasure(y, np.array([1.0]))
    pots, _ = solve_swsg_dual(gm, sg, params, SolverConfig(eps=0.01), domain=domain)
    err = max(abs(pots.phi[0] + params.g), abs(pots.psi[0] - params.g - 0.5 * c))
    checks.append(_check("one_point_closed_form", err < 1e-9, f"max error {err:.2e}"))

    # dense quasi-Newton oracle vs coupled solver
    n, m, eps = 5, 6, 0.1
    gm = DiscreteMeasure(rng.random((n, 2)), np.full(n, 1.0 / n))
    sg = DiscreteMeasure(rng.random((m, 2)), rng.uniform(0.8, 1.2, m) / m)
    pots, _ = solve_swsg_dual(gm, sg, params, SolverConfig(eps=eps, tol=1e-13),
                              domain=domain)
    phi_ref, _psi_ref = dense_dual_ascent(gm, sg, params, eps, domain)
    dev = float(np.max(np.abs(pots.phi - phi_ref)))
    checks.append(_check("dense_dual_oracle", dev < 1e-7, f"phi sup deviation {dev:.2e}"))

    # finite differences of the saddle functional
    from .saddle import saddle_functional, saddle_gradients
    n = m = 4
    gm = DiscreteMeasure(rng.random((n, 2)), np.full(n, 1.0 / n))
    sg = DiscreteMeasure(rng.random((m, 2)), rng.uniform(0.8, 1.2, m) / m)
    h0 = rng.uniform(0.8, 1.2, n)
    u0 = rng.uniform(0.8, 1.2, n)
    phi0 = 0.1 * rng.standard_normal(n)
    psi0 = 0.1 * rng.standard_normal(m)
    z0 = np.concatenate([h0, u0, phi0, psi0])

    def f_of(z):
        return saddle_functional(z[:n], z[n:2 * n], z[2 * n:3 * n], z[3 * n:],
                                 gm, sg, params, 0.1, domain)

    gh, gu, gphi, gpsi = saddle_gradients(h0, u0, phi0, psi0, gm, sg, params,
                                          0.1, domain)
    g_exact = np.concatenate([gh, gu, gphi, gpsi])
    g_fd = central_difference_gradient(f_of, z0)
    rel = float(np.max(np.abs(g_exact - g_fd)) / max(np.max(np.abs(g_exact)), 1e-12))
    checks.append(_check("saddle_gradient_fd", rel < 1e-6, f"relative error {rel:.2e}"))

    # stationarity residuals at the saddle fixed point
    sol = saddle_sinkhorn(gm, sg, params, eps=0.1, tol=1e-13)
    res = saddle_residuals(sol.h, sol.u, sol.phi, sol.psi, gm, sg, params, 0.1,
                           domain)
    worst = max(res.values())
    detail = ", ".join(f"{k}={v:.2e}" for k, v in res.items())
    checks.append(_check("saddle_stationarity_residuals", worst < 1e-9, detail))

    return checks
