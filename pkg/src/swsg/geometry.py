"""Periodic channel geometry and the weighted point-cloud data model.

The domain is a channel, periodic in x1 with rigid walls at x2 = x2_min and
x2 = x2_max.  x2 is never wrapped; the walls are enforced implicitly through
the transport target.  All measures are weighted clouds of 2D points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Channel domain: x1 periodic with the given period, x2 in [x2_min, x2_max]."""

    x1_period: float = 1.0
    x2_min: float = 0.0
    x2_max: float = 1.0

    def __post_init__(self):
        if not self.x1_period > 0:
            raise ValueError(f"x1_period must be positive, got {self.x1_period}")
        if not self.x2_min < self.x2_max:
            raise ValueError(f"need x2_min < x2_max, got [{self.x2_min}, {self.x2_max}]")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud: points (n, 2), nonnegative weights (n,)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if w.shape != (pts.shape[0],):
            raise ValueError(f"weights shape {w.shape} does not match {pts.shape[0]} points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered Cartesian grid over the domain, n1 x n2 nodes.

    Node k = j * n1 + i sits at the center of cell (i, j); x1 varies fastest.
    Scalar grid fields reshape to (n2, n1).
    """

    n1: int
    n2: int
    domain: Domain = field(default_factory=Domain)

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"grid sizes must be >= 1, got {self.n1} x {self.n2}")

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    def axis1(self) -> np.ndarray:
        p = self.domain.x1_period
        return (np.arange(self.n1) + 0.5) * (p / self.n1)

    def axis2(self) -> np.ndarray:
        lo, hi = self.domain.x2_min, self.domain.x2_max
        return lo + (np.arange(self.n2) + 0.5) * ((hi - lo) / self.n2)

    def points(self) -> np.ndarray:
        x1, x2 = np.meshgrid(self.axis1(), self.axis2())
        return np.column_stack([x1.ravel(), x2.ravel()])

    def measure(self) -> DiscreteMeasure:
        """Uniform volume measure: weight 1/N at every node."""
        n = self.size
        return DiscreteMeasure(self.points(), np.full(n, 1.0 / n))


def total_mass(m: DiscreteMeasure) -> float:
    return float(np.sum(m.weights))


def remap_periodic(points: np.ndarray, domain: Domain) -> np.ndarray:
    """Shift x1 into [0, period) by integer multiples of the period; x2 untouched."""
    out = np.array(points, dtype=float, copy=True)
    p = domain.x1_period
    x1 = np.mod(out[..., 0], p)
    # np.mod can round up to the period itself for tiny negative inputs
    out[..., 0] = np.where(x1 >= p, x1 - p, x1)
    return out


def periodic_cost(x: np.ndarray, y: np.ndarray, domain: Domain) -> np.ndarray:
    """Squared periodic distance: min over x1 images of |dx1|^2, plus |dx2|^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = domain.x1_period
    d1 = np.abs(x[..., 0] - y[..., 0]) % p
    d1 = np.minimum(d1, p - d1)
    d2 = x[..., 1] - y[..., 1]
    return d1 * d1 + d2 * d2


def cost_matrix(xs: np.ndarray, ys: np.ndarray, domain: Domain) -> np.ndarray:
    """Pairwise periodic squared distances, shape (len(xs), len(ys))."""
    xs = np.atleast_2d(xs)
    ys = np.atleast_2d(ys)
    p = domain.x1_period
    d1 = np.abs(xs[:, 0:1] - ys[None, :, 0]) % p
    d1 = np.minimum(d1, p - d1)
    d2 = xs[:, 1:2] - ys[None, :, 1]
    return d1 * d1 + d2 * d2


def transport_cost_matrix(xs: np.ndarray, ys: np.ndarray, domain: Domain) -> np.ndarray:
    """Entropic transport cost: half the pairwise periodic squared distance.

    The 1/2 is what makes the optimal-map relation T(x) = x + (g/f^2) grad h
    consistent with the height h = -(f^2/g) phi recovered from the dual
    potential; every entropic solver and divergence uses this cost.
    """
    return 0.5 * cost_matrix(xs, ys, domain)


def nearest_image_x1(src_x1: np.ndarray, tgt_x1: float | np.ndarray, period: float) -> np.ndarray:
    """x1 coordinates of the sources shifted to their periodic image nearest tgt_x1."""
    src_x1 = np.asarray(src_x1, dtype=float)
    delta = src_x1 - tgt_x1
    return src_x1 - np.round(delta / period) * period
