"""Distribution-valued velocity of the simulated wave field.

The time derivative of the wave field only exists as a distribution: it
is a sum of translated point masses riding the light cone of every
noise atom.  This module computes its pairings ``<v_t, h_q>`` against
the Hermite basis along a simulated path in two independent ways:

* directly from the kernel's time derivative (half a point mass on each
  cone edge), and
* through the semimartingale split, a pure-jump part at the atom
  positions plus an absolutely continuous drift integrated by trapezoid
  on a refined grid.

Agreement of the two is a sharp consistency check of the solver, since
they share nothing but the path atoms.  The module also evaluates the
residual of the weak (integrated-by-parts) form of the equation, and
builds the characteristic pair of backward test functions whose
insertion collapses the weak form onto a single space point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import (
    ConfigError,
    NonFinite,
    OutOfDomain,
    QuadratureFailure,
    ShapeMismatch,
    SupportViolation,
)
from .hermite import DEFAULT_Q_MAX, DEFAULT_R, hermite_all, hermite_deriv_all, project
from .noise import CellIncrements
from .solver import EventSolution, FieldGrid

__all__ = [
    "VelocityPath",
    "PathAtoms",
    "path_atoms",
    "field_atoms",
    "velocity_coeffs_direct",
    "velocity_coeffs_semimartingale",
    "velocity_pairing",
    "pairing_vector",
    "weak_residual",
    "characteristics_pair",
    "default_times",
]


@dataclass(frozen=True)
class PathAtoms:
    """Noise atoms of one realized path: times, positions, weights.

    ``weight`` is the full scaled mass f(u_-)*(increment)/sigma of each
    atom; the kernel's one-half lives in the pairing formulas, not here.
    """

    t: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if not (t.shape == x.shape == w.shape) or t.ndim != 1:
            raise ShapeMismatch("atom arrays must be equal-length vectors")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def count(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class VelocityPath:
    """Hermite pairings of the velocity distribution along output times.

    ``coeffs[i, q]`` is ``<v at times[i], h_q>``.  Rows are exactly zero
    at time 0 (the field starts at rest).
    """

    times: np.ndarray
    coeffs: np.ndarray
    r: float = DEFAULT_R
    sigma: float = 1.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ShapeMismatch("times must be a nonempty vector")
        if np.any(np.diff(times) <= 0):
            raise OutOfDomain("output times must be strictly increasing")
        if coeffs.shape != (times.size,) + coeffs.shape[1:] or coeffs.ndim != 2:
            raise ShapeMismatch(
                f"coefficient matrix {coeffs.shape} does not match {times.size} output times"
            )
        if not np.all(np.isfinite(coeffs)):
            raise NonFinite("velocity coefficients must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def q_max(self) -> int:
        return self.coeffs.shape[1] - 1

    def dual_norms(self, r: Optional[float] = None) -> np.ndarray:
        rr = self.r if r is None else r
        q = np.arange(self.coeffs.shape[1])
        weights = (1.0 + 2.0 * q) ** (-rr)
        return np.sqrt((self.coeffs * self.coeffs) @ weights)

    def pair(self, phi_coeffs: np.ndarray) -> np.ndarray:
        """<v_t, phi> at every output time from phi's Hermite coefficients."""
        c = np.asarray(phi_coeffs, dtype=float)
        if c.shape != (self.coeffs.shape[1],):
            raise ShapeMismatch(f"need {self.coeffs.shape[1]} coefficients, got {c.shape}")
        return self.coeffs @ c

    def to_rows(self):
        """Long-format rows (t_i, q, coeff) for CSV export."""
        for i, t in enumerate(self.times):
            for q in range(self.coeffs.shape[1]):
                yield (float(t), q, float(self.coeffs[i, q]))


def default_times(t_max: float, n: int = 65) -> np.ndarray:
    return np.linspace(0.0, t_max, n)


def _grid_pair(path) -> tuple[FieldGrid, CellIncrements]:
    grid, inc = path
    if not isinstance(grid, FieldGrid) or not isinstance(inc, CellIncrements):
        raise ConfigError("grid path must be a (FieldGrid, CellIncrements) pair")
    if inc.lattice is not grid.lattice and inc.lattice != grid.lattice:
        raise ShapeMismatch("field and increments live on different lattices")
    return grid, inc


def _cell_centers(lattice) -> tuple[np.ndarray, np.ndarray]:
    n1, n2 = lattice.shape
    d = lattice.spacing
    v1 = (np.arange(n1) + 0.5) * d
    v2 = (np.arange(n2) + 0.5) * d
    t_c, x_c = lattice.from_rotated((v1[:, None], v2[None, :]))
    return t_c.ravel(), x_c.ravel()


def path_atoms(path, f: Optional[Callable] = None) -> PathAtoms:
    """Velocity atoms (s_k, y_k, w_k) so that
    <v_t, phi> = sum over s_k < t of (phi(y_k + (t - s_k)) + phi(y_k - (t - s_k))) * w_k / 2.

    Event paths contribute one atom per jump at its exact location.
    Grid paths contribute one atom per lattice cell at the cell center
    (time clamped at 0 for boundary cells sliced by the initial line),
    weighted by f at the cell's pre-jump corner times the compensated
    cell increment.
    """
    if isinstance(path, EventSolution):
        rec = path.record
        return PathAtoms(rec.t, rec.x, 2.0 * path.weights)
    grid, inc = _grid_pair(path)
    if f is None:
        raise ConfigError("grid paths need the reaction coefficient f to weight cells")
    t_c, x_c = _cell_centers(grid.lattice)
    w = (np.asarray(f(grid.values[:-1, :-1]), dtype=float) * inc.values).ravel()
    return PathAtoms(np.maximum(t_c, 0.0), x_c, w)


def field_atoms(path, f: Optional[Callable] = None) -> PathAtoms:
    """Cone atoms (t_p, x_p, w) so that the field itself is
    u(s, y) = sum of w * indicator(|y - x_p| <= s - t_p).

    For event paths these are the jumps with their kernel-halved masses.
    For grid paths the recursion makes the field a step function jumping
    at each cell's upper-right lattice node, which is therefore the
    exact anchor (no surrogate involved).
    """
    if isinstance(path, EventSolution):
        rec = path.record
        return PathAtoms(rec.t, rec.x, path.weights.copy())
    grid, inc = _grid_pair(path)
    if f is None:
        raise ConfigError("grid paths need the reaction coefficient f to weight cells")
    lat = grid.lattice
    n1, n2 = lat.shape
    d = lat.spacing
    v1 = (np.arange(n1) + 1.0) * d
    v2 = (np.arange(n2) + 1.0) * d
    t_p, x_p = lat.from_rotated((v1[:, None], v2[None, :]))
    # the recursion's node gain carries the propagator's half, so the
    # step the field takes at the anchor is half of f times the increment
    w = 0.5 * np.asarray(f(grid.values[:-1, :-1]), dtype=float) * inc.values
    return PathAtoms(t_p.ravel(), x_p.ravel(), w.ravel())


def _as_atoms(path, f) -> PathAtoms:
    return path if isinstance(path, PathAtoms) else path_atoms(path, f)


def velocity_coeffs_direct(
    path,
    times: Sequence[float],
    q_max: int = DEFAULT_Q_MAX,
    f: Optional[Callable] = None,
    r: float = DEFAULT_R,
    sigma: float = 1.0,
) -> VelocityPath:
    """Hermite pairings from the kernel's distributional time derivative.

    For each output time the kernel derivative puts half an atom on each
    edge of every contributing cone, so

        <v_t, h_q> = 1/2 * sum_{s_k < t} (h_q(y_k + (t - s_k)) + h_q(y_k - (t - s_k))) * w_k.
    """
    atoms = _as_atoms(path, f)
    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, q_max + 1))
    for i, t in enumerate(times):
        mask = atoms.t < t
        if not np.any(mask):
            continue
        lag = t - atoms.t[mask]
        right = hermite_all(q_max, atoms.x[mask] + lag)
        left = hermite_all(q_max, atoms.x[mask] - lag)
        out[i] = 0.5 * (right + left) @ atoms.w[mask]
    return VelocityPath(times=times, coeffs=out, r=r, sigma=sigma)


def velocity_coeffs_semimartingale(
    path,
    times: Sequence[float],
    q_max: int = DEFAULT_Q_MAX,
    f: Optional[Callable] = None,
    inner_step: Optional[float] = None,
    r: float = DEFAULT_R,
    sigma: float = 1.0,
) -> VelocityPath:
    """Same pairings through the jump-plus-drift decomposition.

        X_t(h_q) = sum_{s_k < t} h_q(y_k) w_k + 1/2 * integral_0^t J_r dr,
        J_r      = sum_{s_k < r} (h_q'(y_k + (r - s_k)) - h_q'(y_k - (r - s_k))) w_k.

    The drift integrand is continuous (each atom enters at zero), so the
    trapezoid rule on a grid refining the output times converges at
    second order.  ``inner_step`` bounds the refinement step; the
    default is half the coarsest output gap.
    """
    atoms = _as_atoms(path, f)
    times = np.asarray(times, dtype=float)
    if times.size < 1:
        raise ShapeMismatch("need at least one output time")
    if inner_step is None:
        gaps = np.diff(times)
        inner_step = 0.5 * float(np.max(gaps)) if gaps.size else 1.0
    if not (inner_step > 0):
        raise OutOfDomain(f"inner step must be positive, got {inner_step}")

    # refine each output gap so output times are nodes of the inner grid
    inner = [times[0]]
    index_of = [0]
    for a, b in zip(times[:-1], times[1:]):
        m = max(1, int(math.ceil((b - a) / inner_step - 1e-12)))
        seg = np.linspace(a, b, m + 1)[1:]
        inner.extend(seg.tolist())
        index_of.append(len(inner) - 1)
    inner = np.asarray(inner)

    drift_rate = np.zeros((inner.size, q_max + 1))
    for k, rr in enumerate(inner):
        mask = atoms.t < rr
        if not np.any(mask):
            continue
        lag = rr - atoms.t[mask]
        d_right = hermite_deriv_all(q_max, atoms.x[mask] + lag)
        d_left = hermite_deriv_all(q_max, atoms.x[mask] - lag)
        drift_rate[k] = (d_right - d_left) @ atoms.w[mask]
    drift = cumulative_trapezoid(drift_rate, inner, axis=0, initial=0.0)

    basis = hermite_all(q_max, atoms.x) if atoms.count else None
    out = np.zeros((times.size, q_max + 1))
    for i, t in enumerate(times):
        mask = atoms.t < t
        if np.any(mask):
            out[i] = basis[:, mask] @ atoms.w[mask]
        out[i] += 0.5 * drift[index_of[i]]
    return VelocityPath(times=times, coeffs=out, r=r, sigma=sigma)


def pairing_vector(phi: Callable, atoms: PathAtoms, t: float) -> np.ndarray:
    """Per-atom factor (phi(y + (t-s)) + phi(y - (t-s)))/2, zero where s >= t."""
    lag = t - atoms.t
    live = lag > 0
    out = np.zeros(atoms.count)
    if np.any(live):
        y = atoms.x[live]
        d = lag[live]
        out[live] = 0.5 * (np.asarray(phi(y + d), dtype=float) + np.asarray(phi(y - d), dtype=float))
    return out


def velocity_pairing(path, phi: Callable, t: float, f: Optional[Callable] = None) -> float:
    """<v_t, phi> evaluated directly from path atoms, no basis truncation."""
    atoms = _as_atoms(path, f)
    return float(pairing_vector(phi, atoms, t) @ atoms.w)


class _Primitive:
    """Running integral of a smooth compactly supported function.

    Panel edges carry exact cumulative Gauss-Legendre sums; interior
    points finish with one more 16-point rule, so the result is smooth
    in x at machine accuracy.
    """

    def __init__(self, phi: Callable, support: tuple[float, float], panel: float = 0.25):
        self.phi = phi
        self.lo, self.hi = support
        n = max(1, int(math.ceil((self.hi - self.lo) / panel - 1e-12)))
        self.edges = np.linspace(self.lo, self.hi, n + 1)
        gx, gw = np.polynomial.legendre.leggauss(16)
        self._gx, self._gw = gx, gw
        half = 0.5 * np.diff(self.edges)
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        vals = np.asarray(phi((mid[:, None] + half[:, None] * gx[None, :]).ravel()))
        panel_sums = (vals.reshape(n, 16) @ gw) * half
        self.cum = np.concatenate([[0.0], np.cumsum(panel_sums)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.lo, self.hi)
        idx = np.clip(np.searchsorted(self.edges, xc, side="right") - 1, 0, self.edges.size - 2)
        a = self.edges[idx]
        half = 0.5 * (xc - a)
        mid = a + half
        pts = mid[..., None] + half[..., None] * self._gx
        tail = (np.asarray(self.phi(pts.ravel())).reshape(pts.shape) @ self._gw) * half
        return self.cum[idx] + tail

    @property
    def total(self) -> float:
        return float(self.cum[-1])


def _field_pair_primitive(atoms: PathAtoms, prim: _Primitive, s: float) -> float:
    """<u(s), phi> for the step field with the given cone atoms."""
    lag = s - atoms.t
    live = lag > 0
    if not np.any(live):
        return 0.0
    y = atoms.x[live]
    d = lag[live]
    return float((prim(y + d) - prim(y - d)) @ atoms.w[live])


def _field_pair_second(atoms: PathAtoms, phi_deriv: Callable, s: float) -> float:
    """<u(s), phi''> in closed form: the cone indicator integrates phi''
    to a difference of first derivatives at the cone edges."""
    lag = s - atoms.t
    live = lag > 0
    if not np.any(live):
        return 0.0
    y = atoms.x[live]
    d = lag[live]
    vals = np.asarray(phi_deriv(y + d), dtype=float) - np.asarray(phi_deriv(y - d), dtype=float)
    return float(vals @ atoms.w[live])


def _window_of(path) -> tuple[float, float]:
    if isinstance(path, EventSolution):
        _, x_lo, x_hi = path.record.domain
        return x_lo, x_hi
    grid, _ = path
    lat = grid.lattice
    half = lat.side1 / math.sqrt(2.0)
    return lat.origin.x - half, lat.origin.x + half


def weak_residual(
    u_path,
    v_path: VelocityPath,
    phi1,
    phi2,
    t: float,
    f: Optional[Callable] = None,
    q_max: Optional[int] = None,
) -> float:
    """Defect of the integrated-by-parts form of the equation at time t.

    Returns

        <u(t), phi1> + <v_t, phi2>
        - integral_0^t ( <u(s), phi2''> + <v_s, phi1> ) ds
        - sum_{s_k < t} phi2(y_k) w_k

    which vanishes for the exact pair (u, v) and measures the combined
    quadrature and basis-truncation error for a computed one.  The
    velocity pairings are assembled from the test functions' Hermite
    coefficients; ``phi1`` and ``phi2`` must expose ``support``,
    ``deriv`` and be supported strictly inside the spatial window.
    Time integration is the trapezoid rule on the velocity path's
    output grid, which must contain ``t``.
    """
    x_lo, x_hi = _window_of(u_path)
    for name, phi in (("phi1", phi1), ("phi2", phi2)):
        lo, hi = phi.support
        if not (x_lo < lo and hi < x_hi):
            raise SupportViolation(
                f"{name} support [{lo}, {hi}] must sit strictly inside ({x_lo}, {x_hi})"
            )
    times = v_path.times
    hits = np.flatnonzero(np.abs(times - t) <= 1e-12)
    if hits.size == 0:
        raise OutOfDomain(f"time {t} is not on the velocity path's output grid")
    it = int(hits[0])

    qm = v_path.q_max if q_max is None else q_max
    window = (min(-7.0, x_lo - 1.0), max(7.0, x_hi + 1.0))
    # the projection panel must resolve the fastest basis oscillation,
    # wavelength pi / sqrt(2 q + 1)
    panel = min(0.5, 1.5 / math.sqrt(2.0 * qm + 1.0))
    c1 = project(phi1, q_max=qm, window=window, panel=panel).coeffs
    c2 = project(phi2, q_max=qm, window=window, panel=panel).coeffs

    u_atoms = field_atoms(u_path, f)
    v_atoms = path_atoms(u_path, f)
    prim1 = _Primitive(phi1, phi1.support)

    u_phi1_t = _field_pair_primitive(u_atoms, prim1, t)
    v_phi2_t = float(v_path.coeffs[it, : qm + 1] @ c2)

    u_phi2dd = np.array([_field_pair_second(u_atoms, phi2.deriv, s) for s in times[: it + 1]])
    v_phi1 = v_path.coeffs[: it + 1, : qm + 1] @ c1
    time_integral = float(trapezoid(u_phi2dd + v_phi1, times[: it + 1]))

    live = v_atoms.t < t
    jump_sum = float(np.asarray(phi2(v_atoms.x[live]), dtype=float) @ v_atoms.w[live])

    return u_phi1_t + v_phi2_t - time_integral - jump_sum


def _adaptive_simpson(g: Callable, a: float, b: float, tol: float) -> float:
    """Classic recursive Simpson with Richardson acceptance."""
    fa, fb = g(a), g(b)
    m = 0.5 * (a + b)
    fm = g(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = g(lm), g(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth > 60:
            raise QuadratureFailure(f"Simpson recursion exhausted on [{a}, {b}]")
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) + recurse(
            m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1
        )

    if a == b:
        return 0.0
    return recurse(a, fa, m, fm, b, fb, whole, tol, 0)


def characteristics_pair(phi: Callable, t: float, tol: float = 1e-10):
    """Backward test-function pair for the weak form aimed at time t.

    Returns evaluators (psi1, psi2) with

        psi1(s, y) = (phi(y + (t - s)) + phi(y - (t - s))) / 2
        psi2(s, y) = 1/2 * integral of phi over [y - (t - s), y + (t - s)]

    The pair solves the backward wave system: the s-derivative of psi2
    is -psi1, psi2 satisfies the wave equation in (s, y), and at s = t
    they collapse to (phi, 0).  Both evaluators accept vector y.
    """

    def psi1(s, y):
        d = t - s
        y = np.asarray(y, dtype=float)
        out = 0.5 * (np.asarray(phi(y + d), dtype=float) + np.asarray(phi(y - d), dtype=float))
        return out if out.ndim else float(out)

    def psi2(s, y):
        d = t - s
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.array(
            [_adaptive_simpson(lambda u: float(phi(u)), yy - d, yy + d, tol) for yy in ys]
        )
        out *= 0.5
        return out if np.ndim(y) else float(out[0])

    return psi1, psi2
