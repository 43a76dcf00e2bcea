"""Driving noise: jump streams and their rotated-cell increments.

A JumpRecord is one realization of the jumps of the truncated measure
with sizes above a floor, on a space-time rectangle; keeping only those
jumps against compensated noise leaves a deterministic drift density
behind, which the record carries.  Binning a record onto a lattice
yields CellIncrements, the rescaled noise increments the grid solver
consumes: each cell holds the jumps landing in it, minus the drift times
the cell's area above ``t = 0``, divided by the noise scaling.

Gaussian increments realize the white-noise analogue cell by cell, and
hybrid increments add a Gaussian surrogate for the jumps dropped below
the floor, matching their variance exactly so the rescaled field keeps
the full second moment of the truncated measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import levy_measures as lm
from .errors import BudgetExceeded, JumpOutsideLattice, OutOfDomain, ShapeMismatch
from .wave_kernel import RotatedLattice

__all__ = [
    "JumpRecord",
    "CellIncrements",
    "jump_intensity",
    "simulate_jump_record",
    "filter_to_lattice",
    "levy_cell_increments",
    "gaussian_cell_increments",
    "hybrid_cell_increments",
]


def jump_intensity(spec: lm.LevyMeasureSpec, floor: float) -> float:
    """Arrival rate per unit space-time area of jumps above the floor."""
    return lm.mass_above(spec, floor)


@dataclass(frozen=True)
class JumpRecord:
    """Jumps of one noise realization, sorted by arrival time.

    ``domain`` is (t_max, x_lo, x_hi) for the rectangle
    [0, t_max] x [x_lo, x_hi]; ``drift`` is the compensator density the
    floor truncation leaves behind.
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    domain: tuple[float, float, float]
    floor: float
    drift: float

    def __post_init__(self):
        if not (self.t.shape == self.x.shape == self.z.shape):
            raise ShapeMismatch("jump coordinate arrays disagree on length")

    @property
    def count(self) -> int:
        return self.t.size

    def to_rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist(), self.z.tolist()))


def simulate_jump_record(
    spec: lm.LevyMeasureSpec,
    t_max: float,
    x_lo: float,
    x_hi: float,
    floor: float,
    rng: np.random.Generator,
    cap: float = 1e7,
) -> JumpRecord:
    """Sample the jumps above ``floor`` on [0, t_max] x [x_lo, x_hi].

    Count is Poisson with mean intensity times area; arrival times and
    positions are uniform; sizes come from the restricted measure.  The
    draw order (count, times, positions, sizes) is fixed so a seeded
    generator reproduces the record bit for bit.
    """
    if t_max <= 0.0 or x_hi <= x_lo:
        raise OutOfDomain(f"empty simulation rectangle [0, {t_max}] x [{x_lo}, {x_hi}]")
    lam = jump_intensity(spec, floor)
    expected = lam * t_max * (x_hi - x_lo)
    if not math.isfinite(expected) or expected > cap:
        raise BudgetExceeded(
            f"expected jump count {expected:.3g} exceeds the cap {cap:.3g}"
        )
    n = int(rng.poisson(expected))
    t = rng.uniform(0.0, t_max, size=n)
    x = rng.uniform(x_lo, x_hi, size=n)
    z = lm.sample_amplitudes(spec, floor, rng, n)
    order = np.argsort(t, kind="stable")
    return JumpRecord(
        t=t[order],
        x=x[order],
        z=z[order],
        domain=(t_max, x_lo, x_hi),
        floor=floor,
        drift=lm.compensator_drift(spec, floor),
    )


def filter_to_lattice(record: JumpRecord, lattice: RotatedLattice) -> JumpRecord:
    """Drop jumps whose rotated image falls outside the cell block.

    On a solver lattice those are exactly the jumps no observer with an
    in-window backward cone can see.
    """
    v1, v2 = lattice.to_rotated((record.t, record.x))
    keep = (v1 >= 0.0) & (v1 < lattice.side1) & (v2 >= 0.0) & (v2 < lattice.side2)
    return replace(record, t=record.t[keep], x=record.x[keep], z=record.z[keep])


@dataclass(frozen=True)
class CellIncrements:
    """Rescaled noise increments, one value per lattice cell."""

    lattice: RotatedLattice
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.lattice.shape:
            raise ShapeMismatch(
                f"values shape {self.values.shape} does not match lattice {self.lattice.shape}"
            )


def levy_cell_increments(
    record: JumpRecord, lattice: RotatedLattice, sigma: float
) -> CellIncrements:
    """Bin a jump record onto lattice cells and rescale.

    Cell value = (sum of jumps in the cell - drift * cell area above
    t = 0) / sigma.  Jumps outside the cell block raise
    JumpOutsideLattice; filter first when the record's rectangle is
    wider than the lattice.
    """
    if not (sigma > 0.0) or not math.isfinite(sigma):
        raise OutOfDomain(f"noise scaling must be positive, got {sigma}")
    v1, v2 = lattice.to_rotated((record.t, record.x))
    if record.count and not (
        np.all(v1 >= 0.0)
        and np.all(v1 < lattice.side1)
        and np.all(v2 >= 0.0)
        and np.all(v2 < lattice.side2)
    ):
        raise JumpOutsideLattice("record contains jumps outside the lattice cell block")
    values = -record.drift * lattice.clipped_areas()
    i = (v1 // lattice.spacing).astype(np.intp)
    j = (v2 // lattice.spacing).astype(np.intp)
    n1, n2 = lattice.shape
    binned = np.bincount(i * n2 + j, weights=record.z, minlength=n1 * n2)
    values += binned.reshape(n1, n2)
    return CellIncrements(lattice=lattice, values=values / sigma)


def gaussian_cell_increments(
    lattice: RotatedLattice, rng: np.random.Generator
) -> CellIncrements:
    """White-noise increments: independent N(0, cell area above t = 0)."""
    std = np.sqrt(lattice.clipped_areas())
    values = rng.standard_normal(lattice.shape) * std
    return CellIncrements(lattice=lattice, values=values)


def hybrid_cell_increments(
    record: JumpRecord,
    lattice: RotatedLattice,
    spec: lm.LevyMeasureSpec,
    rng: np.random.Generator,
) -> CellIncrements:
    """Jump increments plus a Gaussian stand-in for the sub-floor jumps.

    The stand-in is white noise scaled so each cell regains exactly the
    variance the floor removed; with it the rescaled increments carry
    unit variance per unit area, the same as the untruncated measure.
    Appropriate when sub-floor jumps are small against the noise scaling
    (their compensated integral is then itself nearly Gaussian).
    """
    var_total = lm.variance(spec)
    sigma = math.sqrt(var_total)
    base = levy_cell_increments(record, lattice, sigma)
    var_lost = lm.variance_below(spec, record.floor)
    if var_lost <= 0.0:
        return base
    ratio = math.sqrt(var_lost) / sigma
    infill = rng.standard_normal(lattice.shape) * np.sqrt(lattice.clipped_areas())
    return CellIncrements(lattice=lattice, values=base.values + ratio * infill)
