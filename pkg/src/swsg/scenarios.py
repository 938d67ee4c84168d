"""Initial data: jet and perturbed-jet height fields, the pushforward
construction of the initial particle cloud, and the stability admissibility
check for the jet slope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import DiscreteMeasure, Domain, Grid, remap_periodic
from .sinkhorn import PhysicalParams


@dataclass(frozen=True)
class JetParams:
    """Height profile a*tanh(b*(x2-c)) + d."""

    a: float = 0.1
    b: float = 10.0
    c: float = 0.5
    d: float = 1.0

    def __post_init__(self):
        if not self.d - abs(self.a) > 0:
            raise ValueError(f"jet height must stay positive: d - |a| = {self.d - abs(self.a)}")


@dataclass(frozen=True)
class BumpParams:
    """Isotropic Gaussian bump added to the jet height."""

    mu1: float = 0.5
    mu2: float = 0.3
    sigma0: float = 0.1
    alpha: float = 0.001

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")


def jet_height(points: np.ndarray, jet: JetParams) -> tuple[np.ndarray, np.ndarray]:
    """Height and analytic gradient of the zonal jet at the given points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    s = jet.b * (pts[:, 1] - jet.c)
    th = np.tanh(s)
    h = jet.a * th + jet.d
    grad = np.zeros_like(pts)
    grad[:, 1] = jet.a * jet.b * (1.0 - th * th)
    return h, grad


def perturbed_height(points: np.ndarray, jet: JetParams, bump: BumpParams,
                     domain: Domain = Domain()) -> tuple[np.ndarray, np.ndarray]:
    """Jet height plus a Gaussian bump; x1 offset taken to the nearest
    periodic image so the bump (and its gradient) are seam-free."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    h, grad = jet_height(pts, jet)
    p = domain.x1_period
    d1 = np.mod(pts[:, 0] - bump.mu1 + 0.5 * p, p) - 0.5 * p
    d2 = pts[:, 1] - bump.mu2
    s2 = bump.sigma0**2
    amp = bump.alpha / (2.0 * math.pi * s2)
    e = amp * np.exp(-(d1 * d1 + d2 * d2) / (2.0 * s2))
    h = h + e
    grad = grad.copy()
    grad[:, 0] += e * (-d1 / s2)
    grad[:, 1] += e * (-d2 / s2)
    return h, grad


def csp_check(jet: JetParams, params: PhysicalParams) -> bool:
    """Convexity (stability) admissibility: a*b^2 < 3*sqrt(3)*f/(4g)."""
    return jet.a * jet.b**2 < 3.0 * math.sqrt(3.0) * params.f / (4.0 * params.g)


def initial_sigma(grid: Grid, height_fn, params: PhysicalParams) -> DiscreteMeasure:
    """Pushforward initial cloud: particle i at X_i + (g/f^2) grad_h(X_i) with
    weight h0(X_i)/N, x1 remapped into the periodic window.

    height_fn maps points (n, 2) to (h, grad_h).
    """
    X = grid.points()
    h, grad = height_fn(X)
    if np.any(h <= 0):
        raise ValueError("initial_sigma: height must be strictly positive on the grid")
    Y = remap_periodic(X + (params.g / params.f**2) * grad, grid.domain)
    return DiscreteMeasure(Y, h / grid.size)


SCENARIOS = ("jet", "shallow_jet", "perturbed_jet")


def scenario_height_fn(name: str, jet: JetParams | None = None,
                       bump: BumpParams | None = None,
                       domain: Domain = Domain()):
    """Height function for a named scenario; see SCENARIOS for the names."""
    if name == "jet":
        j = jet if jet is not None else JetParams()
        return lambda pts: jet_height(pts, j)
    if name == "shallow_jet":
        j = jet if jet is not None else JetParams(b=5.0)
        return lambda pts: jet_height(pts, j)
    if name == "perturbed_jet":
        j = jet if jet is not None else JetParams()
        b = bump if bump is not None else BumpParams()
        return lambda pts: perturbed_height(pts, j, b, domain)
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")


def scenario_measures(name: str, grid: Grid, params: PhysicalParams,
                      jet: JetParams | None = None, bump: BumpParams | None = None
                      ) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """(grid volume measure, initial particle cloud) for a named scenario."""
    height_fn = scenario_height_fn(name, jet, bump, grid.domain)
    j = jet if jet is not None else (JetParams(b=5.0) if name == "shallow_jet" else JetParams())
    if not csp_check(j, params):
        warnings.warn(f"scenario {name!r}: stability inequality a*b^2 < 3*sqrt(3)*f/(4g) "
                      "violated; pushforward construction is no longer exact")
    return grid.measure(), initial_sigma(grid, height_fn, params)


def hoskins_inverse_x2(y2: np.ndarray, jet: JetParams, params: PhysicalParams,
                       tol: float = 1e-12) -> np.ndarray:
    """Invert the monotone 1D coordinate map y2 = x2 + (g/f^2) h0'(x2) of the
    unperturbed jet by bisection.  Monotonicity holds under the stability
    inequality (|h0''| (g/f^2) < 1)."""
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    geff = params.g / params.f**2
    shift = geff * abs(jet.a) * jet.b  # max displacement magnitude
    lo = y2 - shift - 1e-9
    hi = y2 + 1e-9

    def fwd(x2):
        s = jet.b * (x2 - jet.c)
        th = np.tanh(s)
        return x2 + geff * jet.a * jet.b * (1.0 - th * th)

    # bisection: fwd is increasing, root of fwd(x2) - y2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = fwd(mid) < y2
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < tol:
            break
    return 0.5 * (lo + hi)
