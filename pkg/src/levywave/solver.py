"""Two routes to the mild solution of the driven wave equation.

The equation integrates the propagator against rescaled noise with a
state-dependent amplitude ``f``: the value at an observer point is the
half-weighted sum of ``f(value at source) * increment`` over the
backward cone, with value zero before time zero.

``solve_event_driven`` works jump by jump and is exact for driftless
records: each jump's contribution is weighted by ``f`` of the field
just before that jump, evaluated by summing strictly earlier jumps in
its cone.

``solve_grid`` runs the rotated two-parameter recursion against binned
cell increments.  It computes the plain Volterra double sum

    u(i, j) = sum over i' < i, j' < j of f(u(i', j')) * inc(i', j'),

which makes the grid field a two-parameter strong martingale when the
amplitude is read at the cell's lower-left node.  The propagator's one
half is not part of that recursion; ``solve_wave_grid`` folds it into
the amplitude, and is the entry point that approximates the equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import levy_measures as lm
from .errors import DriftUnsupported, InsufficientSchedule, NonFinite, OutOfDomain
from .noise import CellIncrements, JumpRecord, filter_to_lattice, simulate_jump_record
from .wave_kernel import RotatedLattice, solver_lattice

__all__ = [
    "EventSolution",
    "FieldGrid",
    "RefinementReport",
    "solve_event_driven",
    "solve_grid",
    "solve_wave_grid",
    "eval_field",
    "refinement_study",
]


@dataclass(frozen=True)
class EventSolution:
    """Exact mild solution of a driftless jump record.

    ``node_values`` holds the field seen by each jump (strictly earlier
    jumps only); ``weights`` caches each jump's finished contribution so
    evaluation is pure cone geometry.
    """

    record: JumpRecord
    node_values: np.ndarray
    weights: np.ndarray
    sigma: float

    def eval(self, t: float, x: float) -> float:
        """Field at (t, x): jumps strictly before t whose cone covers it."""
        r = self.record
        seen = (r.t < t) & (np.abs(r.x - x) <= t - r.t)
        return float(np.sum(self.weights[seen]))

    def eval_many(self, ts: np.ndarray, xs: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(xs, dtype=float)
        r = self.record
        seen = (r.t[None, :] < ts[:, None]) & (
            np.abs(r.x[None, :] - xs[:, None]) <= ts[:, None] - r.t[None, :]
        )
        return seen @ self.weights


def solve_event_driven(
    record: JumpRecord, f: Callable[[np.ndarray], np.ndarray], sigma: float
) -> EventSolution:
    """Resolve jump-by-jump interactions exactly (driftless records only)."""
    if record.drift != 0.0:
        raise DriftUnsupported(
            "event-driven route needs a driftless record; use the grid solver"
        )
    if not (sigma > 0.0) or not math.isfinite(sigma):
        raise OutOfDomain(f"noise scaling must be positive, got {sigma}")
    n = record.count
    t, x, z = record.t, record.x, record.z
    node_values = np.zeros(n)
    weights = np.zeros(n)
    for k in range(n):
        if k:
            seen = np.abs(x[:k] - x[k]) <= t[k] - t[:k]
            node_values[k] = np.sum(weights[:k][seen])
        weights[k] = 0.5 * float(f(node_values[k])) * z[k] / sigma
    if not np.all(np.isfinite(weights)):
        raise NonFinite("event-driven solution produced non-finite values")
    return EventSolution(record=record, node_values=node_values, weights=weights, sigma=sigma)


@dataclass(frozen=True)
class FieldGrid:
    """Grid field on lattice nodes; zero on both rotated axes."""

    lattice: RotatedLattice
    values: np.ndarray  # shape (n1 + 1, n2 + 1)
    sigma: float

    def __post_init__(self):
        n1, n2 = self.lattice.shape
        if self.values.shape != (n1 + 1, n2 + 1):
            from .errors import ShapeMismatch

            raise ShapeMismatch(
                f"node array {self.values.shape} does not fit lattice {self.lattice.shape}"
            )

    def eval(self, t: float, x: float) -> float:
        return eval_field(self, t, x)


def solve_grid(
    increments: CellIncrements,
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float = 1.0,
) -> FieldGrid:
    """Run the two-parameter Volterra recursion over the cell block.

    Row sweep of the equivalent explicit update
    ``u(i,j) = u(i-1,j) + u(i,j-1) - u(i-1,j-1) + f(u(i-1,j-1))*inc``,
    with the amplitude read at each cell's lower-left node.
    """
    values = _sweep(increments.values[None, :, :], f)[0]
    if not np.all(np.isfinite(values)):
        raise NonFinite("grid recursion produced non-finite values")
    return FieldGrid(lattice=increments.lattice, values=values, sigma=sigma)


def solve_wave_grid(
    increments: CellIncrements,
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float = 1.0,
) -> FieldGrid:
    """Grid approximation of the wave equation: fold in the propagator's half."""
    return solve_grid(increments, lambda u: 0.5 * f(u), sigma)


def _sweep(inc: np.ndarray, f) -> np.ndarray:
    """Volterra recursion for a batch of increment blocks (batch, n1, n2)."""
    b, n1, n2 = inc.shape
    u = np.zeros((b, n1 + 1, n2 + 1))
    for i in range(1, n1 + 1):
        gain = f(u[:, i - 1, :-1]) * inc[:, i - 1, :]
        u[:, i, 1:] = u[:, i - 1, 1:] + np.cumsum(gain, axis=-1)
    return u


def eval_field(field: FieldGrid, t: float, x: float) -> float:
    """Field at the componentwise-smallest node at or above the point.

    Matches the convention that the limit is taken from inside the
    forward cone; a query exactly on a node returns that node.
    """
    i, j = _node_above(field.lattice, t, x)
    return float(field.values[i, j])


def eval_field_many(field: FieldGrid, ts, xs) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    lat = field.lattice
    v1, v2 = lat.to_rotated((ts, xs))
    i = np.ceil(v1 / lat.spacing - 1e-9).astype(np.intp)
    j = np.ceil(v2 / lat.spacing - 1e-9).astype(np.intp)
    n1, n2 = lat.shape
    if np.any(i < 0) or np.any(j < 0) or np.any(i > n1) or np.any(j > n2):
        raise OutOfDomain("some query points map outside the lattice")
    return field.values[i, j]


def _node_above(lat: RotatedLattice, t: float, x: float) -> tuple[int, int]:
    v1, v2 = lat.to_rotated((t, x))
    i = int(math.ceil(v1 / lat.spacing - 1e-9))
    j = int(math.ceil(v2 / lat.spacing - 1e-9))
    n1, n2 = lat.shape
    if i < 0 or j < 0 or i > n1 or j > n2:
        raise OutOfDomain(f"point {(t, x)} maps outside the lattice")
    return i, j


@dataclass(frozen=True)
class RefinementReport:
    """Mean-square gaps between solutions at consecutive jump floors."""

    floors: tuple[float, ...]
    mean_square_gap: np.ndarray  # length len(floors) - 1
    stderr: np.ndarray
    n_paths: int

    def to_dict(self) -> dict:
        return {
            "floors": list(self.floors),
            "mean_square_gap": [float(v) for v in self.mean_square_gap],
            "stderr": [float(v) for v in self.stderr],
            "n_paths": self.n_paths,
        }


def refinement_study(
    spec: lm.LevyMeasureSpec,
    f: Callable,
    floors,
    t_max: float,
    x_lo: float,
    x_hi: float,
    n_paths: int,
    seed: int,
    eval_t: float = 1.0,
    eval_window: tuple[float, float] = (0.0, 1.0),
    probe_n: int = 24,
    cap: float = 1e7,
) -> RefinementReport:
    """Couple solutions across a decreasing schedule of jump floors.

    All floors share one jump stream (simulated at the smallest floor);
    each coarser solution just drops the jumps below its own floor, so
    consecutive gaps isolate the contribution of one size band.  Gaps
    are squared-field integrals over [0, eval_t] x eval_window by the
    midpoint rule, averaged over paths.
    """
    floors = tuple(float(g) for g in floors)
    if len(floors) < 2 or any(b >= a for a, b in zip(floors, floors[1:])):
        raise InsufficientSchedule(f"floors must be strictly decreasing, got {floors}")
    if lm.compensator_drift(spec, floors[-1]) != 0.0:
        raise DriftUnsupported("coupled refinement needs a driftless (symmetric) family")
    sigma = math.sqrt(lm.variance(spec))

    tq = (np.arange(probe_n) + 0.5) * eval_t / probe_n
    xq = eval_window[0] + (np.arange(probe_n) + 0.5) * (eval_window[1] - eval_window[0]) / probe_n
    tt, xx = np.meshgrid(tq, xq, indexing="ij")
    cell_area = (eval_t / probe_n) * ((eval_window[1] - eval_window[0]) / probe_n)

    gaps = np.zeros((n_paths, len(floors) - 1))
    streams = np.random.SeedSequence(seed).spawn(n_paths)
    for p, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        full = simulate_jump_record(spec, t_max, x_lo, x_hi, floors[-1], rng, cap=cap)
        fields = []
        for g in floors:
            keep = np.abs(full.z) > g
            rec = JumpRecord(
                t=full.t[keep], x=full.x[keep], z=full.z[keep],
                domain=full.domain, floor=g, drift=0.0,
            )
            sol = solve_event_driven(rec, f, sigma)
            fields.append(sol.eval_many(tt.ravel(), xx.ravel()))
        for q in range(len(floors) - 1):
            gaps[p, q] = np.sum((fields[q] - fields[q + 1]) ** 2) * cell_area

    mean = gaps.mean(axis=0)
    se = gaps.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros_like(mean)
    return RefinementReport(floors=floors, mean_square_gap=mean, stderr=se, n_paths=n_paths)
