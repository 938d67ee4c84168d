"""Scalar special functions and log-domain reductions shared by the solvers.

Everything here is pure.  The kernel reductions are fused and jitted because
they dominate the runtime of every Sinkhorn-type loop; summation runs in row
order, so results are deterministic for a fixed input layout (and reduction
reorderings between code paths agree to ~1e-13 relative).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .geometry import DiscreteMeasure, Domain, cost_matrix

_LOG_TINY = -30.0  # below this, W0(e^s) = e^s to better than 1e-13 relative
_LOG_HUGE = 700.0  # above this, e^s overflows double precision


@njit(cache=True)
def _w0_halley(z: float, w: float) -> float:
    # Halley iteration on w e^w = z, quadratic-plus convergence from a sane seed.
    for _ in range(60):
        ew = np.exp(w)
        f = w * ew - z
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


@njit(cache=True)
def _w0_scalar(z: float) -> float:
    if z <= -0.3678794411714423:  # at or below -1/e up to rounding
        if z < -0.36787944117144233 - 1e-15:
            return np.nan
        return -1.0
    if z == 0.0:
        return 0.0
    if z > np.e:
        w = np.log(z)
        w = w - np.log(w)
    elif z > 0.0:
        w = np.log1p(z) * 0.7
    else:
        # series seed at the branch point z = -1/e
        w = -1.0 + np.sqrt(max(2.0 * (1.0 + np.e * z), 0.0))
    return _w0_halley(z, w)


@njit(cache=True)
def _w0_of_log_scalar(s: float) -> float:
    # W0(e^s) without forming e^s when it would over/underflow.
    if s < _LOG_TINY:
        return np.exp(s)
    if s <= _LOG_HUGE:
        return _w0_scalar(np.exp(s))
    # asymptotic regime: solve w + log w = s by Newton, seed w = s - log s
    w = s - np.log(s)
    for _ in range(40):
        f = w + np.log(w) - s
        dw = f / (1.0 + 1.0 / w)
        w -= dw
        if abs(dw) <= 1e-16 * w:
            break
    return w


@njit(cache=True)
def _w0_of_log_vec(s: np.ndarray, out: np.ndarray):
    for i in range(s.size):
        out[i] = _w0_of_log_scalar(s[i])


def lambert_w0(z):
    """Principal branch of the Lambert function: w >= -1 with w e^w = z.

    Domain error (ValueError) for z < -1/e.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < -0.36787944117144233 - 1e-15):
        raise ValueError("lambert_w0: argument below -1/e")
    if z.ndim == 0:
        return _w0_scalar(float(z))
    out = np.empty_like(z)
    flat_in, flat_out = z.ravel(), out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _w0_scalar(flat_in[i])
    return out


def lambert_w0_of_log(s):
    """W0(exp(s)) for log-scale arguments; safe for s far outside [-700, 700]."""
    s = np.asarray(s, dtype=float)
    if s.ndim == 0:
        return _w0_of_log_scalar(float(s))
    out = np.empty_like(s)
    _w0_of_log_vec(s.ravel(), out.ravel())
    return out


@njit(cache=True)
def _lse_rows(C_over_eps: np.ndarray, v: np.ndarray, out: np.ndarray):
    # out[i] = log sum_j exp(v[j] - C_over_eps[i, j]); row-contiguous single pass pair.
    n, m = C_over_eps.shape
    for i in range(n):
        row = C_over_eps[i]
        mx = -np.inf
        for j in range(m):
            t = v[j] - row[j]
            if t > mx:
                mx = t
        if mx == -np.inf:
            out[i] = -np.inf
            continue
        s = 0.0
        for j in range(m):
            s += np.exp(v[j] - row[j] - mx)
        out[i] = mx + np.log(s)


def lse_rows(C_over_eps: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row reduction log sum_j exp(v[j] - C[i,j]) with max subtraction."""
    out = np.empty(C_over_eps.shape[0])
    _lse_rows(np.ascontiguousarray(C_over_eps), np.ascontiguousarray(v), out)
    return out


def logsumexp_weighted(logs: np.ndarray, log_weights: np.ndarray) -> float:
    """log sum_i exp(logs_i + log_weights_i); exact -inf when every term vanishes."""
    logs = np.asarray(logs, dtype=float)
    log_weights = np.asarray(log_weights, dtype=float)
    if logs.shape != log_weights.shape:
        raise ValueError("logsumexp_weighted: length mismatch")
    t = logs + log_weights
    # -inf + -inf is fine; +inf and NaN are forbidden by the carrier's contract
    mx = np.max(t) if t.size else -np.inf
    if mx == -np.inf:
        return -np.inf
    return float(mx + np.log(np.sum(np.exp(t - mx))))


def log_weights(m: DiscreteMeasure) -> np.ndarray:
    """Elementwise log of the weights, -inf for zero mass."""
    with np.errstate(divide="ignore"):
        return np.log(m.weights)


def kernel_logsumexp(
    targets: np.ndarray,
    sources: DiscreteMeasure,
    potentials_over_eps: np.ndarray,
    eps: float,
    domain: Domain,
) -> np.ndarray:
    """log of the kernel integral against the sources, one value per target.

    Returns log sum_i exp(potentials_over_eps[i] - c(X_i, target)/eps + log w_i)
    with c the periodic squared distance.
    """
    if len(sources) == 0:
        raise ValueError("kernel_logsumexp: empty source measure")
    if not eps > 0:
        raise ValueError(f"kernel_logsumexp: eps must be positive, got {eps}")
    targets = np.atleast_2d(targets)
    C = cost_matrix(targets, sources.points, domain) / eps
    v = np.asarray(potentials_over_eps, dtype=float) + log_weights(sources)
    return lse_rows(C, v)
