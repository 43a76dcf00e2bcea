"""Geometry of the 1-D wave kernel and its rotated coordinates.

The wave propagator is one half on the closed backward light cone and
zero elsewhere.  The causal partial order ``precedes`` compares points
through that cone, and a 45-degree clockwise rotation turns it into the
componentwise order on the plane, which is what lets a two-parameter
grid recursion integrate over cones as if they were rectangles.

A RotatedLattice fixes an anchor point, a spacing, and cell counts in
the rotated plane.  Its cells are half-open squares; their pre-images in
(t, x) are diamonds, and the portion of a diamond above ``t = 0`` (the
only region carrying noise) reduces to clipping a square against a
half-plane in rotated coordinates, which is done in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import OutOfDomain

SQRT2 = math.sqrt(2.0)


class ConePoint(NamedTuple):
    """A (time, space) point."""

    t: float
    x: float


def green(t: float, x: float, s: float, y: float) -> float:
    """Wave propagator weight at source (s, y) for an observer at (t, x)."""
    if s < 0.0 or s > t:
        return 0.0
    return 0.5 if abs(y - x) <= t - s else 0.0


def green_cone_integral(t: float, p: float = 1.0) -> float:
    """Exact space-time integral of the propagator raised to power p.

    The cone section at lag tau has width 2*tau, so the integral is
    (1/2)**p * t**2 regardless of the observer's position.
    """
    if t < 0.0:
        raise OutOfDomain(f"horizon must be nonnegative, got {t}")
    return 0.5 ** p * t * t


def precedes(a, b) -> bool:
    """True when a sits in the closed backward cone of b."""
    (ta, xa), (tb, xb) = a, b
    return ta <= tb and abs(xa - xb) <= tb - ta


@dataclass(frozen=True)
class RotatedLattice:
    """Half-open square cells in the rotated plane, anchored at ``origin``.

    Rotated coordinates of a point p are
    ``v1 = (dt - dx)/sqrt(2)``, ``v2 = (dt + dx)/sqrt(2)`` with
    ``(dt, dx) = p - origin``; the map preserves area and carries the
    causal order to the componentwise order.  Cell (i, j) covers
    ``[i*spacing, (i+1)*spacing) x [j*spacing, (j+1)*spacing)`` for
    ``0 <= i < shape[0]``, ``0 <= j < shape[1]``.
    """

    origin: ConePoint
    spacing: float
    shape: tuple[int, int]

    def __post_init__(self):
        if not (self.spacing > 0.0) or not math.isfinite(self.spacing):
            raise OutOfDomain(f"spacing must be positive, got {self.spacing}")
        n1, n2 = self.shape
        if n1 < 1 or n2 < 1:
            raise OutOfDomain(f"shape must be at least 1x1, got {self.shape}")

    # extent of the cell block along each rotated axis
    @property
    def side1(self) -> float:
        return self.shape[0] * self.spacing

    @property
    def side2(self) -> float:
        return self.shape[1] * self.spacing

    def to_rotated(self, p) -> tuple[float, float]:
        t, x = p
        dt, dx = t - self.origin.t, x - self.origin.x
        return ((dt - dx) / SQRT2, (dt + dx) / SQRT2)

    def from_rotated(self, v) -> ConePoint:
        v1, v2 = v
        return ConePoint(
            self.origin.t + (v1 + v2) / SQRT2,
            self.origin.x + (v2 - v1) / SQRT2,
        )

    def contains_rotated(self, v1, v2) -> bool:
        return 0.0 <= v1 < self.side1 and 0.0 <= v2 < self.side2

    def cell_of(self, p) -> tuple[int, int]:
        """Cell index of a point, by its half-open rotated square."""
        v1, v2 = self.to_rotated(p)
        if not self.contains_rotated(v1, v2):
            raise OutOfDomain(f"point {tuple(p)} maps outside the lattice")
        return (int(v1 // self.spacing), int(v2 // self.spacing))

    def node_time(self, i, j):
        """Pre-image time coordinate of node (i, j); accepts arrays."""
        return self.origin.t + (np.asarray(i) + np.asarray(j)) * self.spacing / SQRT2

    def cell_center(self, i, j) -> ConePoint:
        d = self.spacing
        return self.from_rotated(((i + 0.5) * d, (j + 0.5) * d))

    def clipped_area(self, i, j) -> float:
        """Area of cell (i, j)'s diamond pre-image above ``t = 0``."""
        areas = self.clipped_areas()
        return float(areas[i, j])

    def clipped_areas(self) -> np.ndarray:
        """Matrix of pre-image areas above ``t = 0``, one entry per cell.

        In rotated coordinates ``t >= 0`` is the half-plane
        ``v1 + v2 >= c`` with ``c = -sqrt(2) * origin.t``; the area a
        square keeps above an antidiagonal line is piecewise quadratic
        in the line's offset, so no polygon machinery is needed.
        """
        d = self.spacing
        c = -SQRT2 * self.origin.t
        n1, n2 = self.shape
        lo1 = np.arange(n1)[:, None] * d
        lo2 = np.arange(n2)[None, :] * d
        # m is the offset of the cut line in cell-local coordinates
        m = np.clip(c - lo1 - lo2, 0.0, 2.0 * d)
        below = np.where(
            m <= d,
            0.5 * m * m,
            d * d - 0.5 * (2.0 * d - m) ** 2,
        )
        return d * d - below


def solver_lattice(
    t_max: float, x_lo: float, x_hi: float, spacing: float
) -> RotatedLattice:
    """Lattice whose cells carry all noise any observer in the strip sees.

    The anchor sits at negative time, centered in the window, so that
    for every observer (t, x) whose backward cone stays inside
    ``[x_lo, x_hi]`` at time zero, the rotated rectangle between the
    anchor and the observer contains the full cone; the portion of the
    rectangle below ``t = 0`` carries no noise and drops out through the
    clipped cell areas.  Jumps invisible to every such observer map
    outside the cell block and are meant to be filtered before binning.
    """
    if x_hi <= x_lo:
        raise OutOfDomain(f"window [{x_lo}, {x_hi}] is empty")
    if t_max <= 0.0:
        raise OutOfDomain(f"horizon must be positive, got {t_max}")
    half = 0.5 * (x_hi - x_lo)
    if half < t_max:
        from .errors import WindowTooSmall

        raise WindowTooSmall(
            f"window of width {2 * half} cannot hold a backward cone of height {t_max}"
        )
    origin = ConePoint(-half, 0.5 * (x_lo + x_hi))
    side = SQRT2 * half
    n = int(math.ceil(side / spacing - 1e-9))
    return RotatedLattice(origin=origin, spacing=spacing, shape=(n, n))
