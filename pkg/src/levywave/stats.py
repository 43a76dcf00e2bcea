"""Sample statistics and martingale diagnostics for simulated paths.

Everything statistical the experiments need lives here: two-sample
Kolmogorov-Smirnov distances as the convergence-in-law proxy, moment
reports with jackknife standard errors, covariance-against-the-past
orthogonality tests, and the complex compensator that turns the
exponential of an observable into an approximate martingale.  All
reductions are pure functions of sample vectors, so they parallelize
trivially and never touch the simulation state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import EmptySample, LengthMismatch, NonFinite, OutOfDomain
from .hermite import quadrature_grid
from .levy_measures import (
    AlphaStableSymmetric,
    GammaSubordinator,
    LevyMeasureSpec,
    _truncated_atoms,
    variance,
)
from .solver import EventSolution, FieldGrid, eval_field_many
from .velocity import (
    PathAtoms,
    _field_pair_primitive,
    _field_pair_second,
    _Primitive,
    field_atoms,
    pairing_vector,
    path_atoms,
)

__all__ = [
    "SampleSet",
    "StatsReport",
    "ks_two_sample",
    "moment_report",
    "martingale_orthogonality",
    "OrthogonalityResult",
    "jump_characteristic_integral",
    "compensator_path",
    "observable_path",
    "martingale_diagnostic",
]


@dataclass(frozen=True)
class SampleSet:
    """A labelled vector of Monte Carlo draws with its seed provenance."""

    values: np.ndarray
    label: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise EmptySample(f"sample '{self.label}' is empty")
        if not np.all(np.isfinite(v)):
            raise NonFinite(f"sample '{self.label}' contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass
class StatsReport:
    """Named statistics with standard errors plus run metadata.

    Every Monte Carlo estimate carries its sample size in the metadata
    and a standard error in its entry; deterministic quantities carry
    ``None`` there.
    """

    entries: list = dc_field(default_factory=list)
    metadata: dict = dc_field(default_factory=dict)

    def add(self, name: str, value: float, se: Optional[float] = None):
        self.entries.append((str(name), float(value), None if se is None else float(se)))

    def value(self, name: str) -> float:
        for n, v, _ in self.entries:
            if n == name:
                return v
        raise KeyError(name)

    def se(self, name: str) -> Optional[float]:
        for n, _, s in self.entries:
            if n == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "entries": [{"name": n, "value": v, "se": s} for n, v, s in self.entries],
            "metadata": dict(self.metadata),
        }


def _values(a) -> np.ndarray:
    v = a.values if isinstance(a, SampleSet) else np.asarray(a, dtype=float)
    if v.size == 0:
        raise EmptySample("empty sample")
    return v


def ks_two_sample(a, b) -> float:
    """Sup distance between the two empirical distribution functions."""
    va = np.sort(_values(a))
    vb = np.sort(_values(b))
    grid = np.concatenate([va, vb])
    fa = np.searchsorted(va, grid, side="right") / va.size
    fb = np.searchsorted(vb, grid, side="right") / vb.size
    return float(np.max(np.abs(fa - fb)))


def moment_report(samples, metadata: Optional[dict] = None) -> StatsReport:
    """Mean, variance, skewness, excess kurtosis with jackknife errors.

    The jackknife runs on power sums, so the N leave-one-out replicas
    cost O(N) total.  Kurtosis is excess (normal draws give 0).
    Variance is the unbiased sample variance.
    """
    x = _values(samples)
    n = x.size
    if n < 2:
        raise OutOfDomain("moment report needs at least two draws")

    def stats_from_sums(s1, s2, s3, s4, m):
        mean = s1 / m
        mu2 = s2 / m - mean**2
        mu3 = s3 / m - 3.0 * mean * s2 / m + 2.0 * mean**3
        mu4 = s4 / m - 4.0 * mean * s3 / m + 6.0 * mean**2 * s2 / m - 3.0 * mean**4
        var = mu2 * m / (m - 1.0)
        safe = mu2 > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            skew = np.where(safe, mu3 / np.where(safe, mu2, 1.0) ** 1.5, 0.0)
            kurt = np.where(safe, mu4 / np.where(safe, mu2, 1.0) ** 2 - 3.0, 0.0)
        return mean, var, skew, kurt

    p1, p2, p3, p4 = (float(np.sum(x**k)) for k in (1, 2, 3, 4))
    full = stats_from_sums(p1, p2, p3, p4, float(n))
    loo = stats_from_sums(p1 - x, p2 - x**2, p3 - x**3, p4 - x**4, float(n - 1))

    report = StatsReport(metadata={"n": n, **(metadata or {})})
    if isinstance(samples, SampleSet):
        report.metadata.setdefault("label", samples.label)
        if samples.seed is not None:
            report.metadata.setdefault("seed", samples.seed)
    for name, value, reps in zip(("mean", "variance", "skewness", "kurtosis"), full, loo):
        reps = np.asarray(reps, dtype=float)
        se = math.sqrt((n - 1.0) / n * float(np.sum((reps - reps.mean()) ** 2)))
        report.add(name, float(value), se)
    return report


@dataclass(frozen=True)
class OrthogonalityResult:
    correlation: float
    z: float
    n: int

    @property
    def passed(self) -> bool:
        return abs(self.z) < 3.0

    def to_dict(self) -> dict:
        return {
            "correlation": self.correlation,
            "z": self.z,
            "n": self.n,
            "passed": self.passed,
        }


def martingale_orthogonality(increments, past) -> OrthogonalityResult:
    """Correlation test of martingale increments against the past.

    A true martingale increment is uncorrelated with every functional of
    the path up to the increment's left endpoint, so the standardized
    correlation z = corr * sqrt(N) is asymptotically standard normal.
    A constant past functional degenerates to the mean-zero test of the
    increments themselves.
    """
    inc = _values(increments)
    pst = _values(past)
    if inc.size != pst.size:
        raise LengthMismatch(f"paired samples differ in length: {inc.size} vs {pst.size}")
    n = inc.size
    if n < 100:
        raise OutOfDomain(f"orthogonality test needs at least 100 pairs, got {n}")
    si = float(np.std(inc))
    sp = float(np.std(pst))
    if sp == 0.0:
        corr = float(np.mean(inc)) / si if si > 0 else 0.0
    elif si == 0.0:
        corr = 0.0
    else:
        corr = float(np.mean((inc - inc.mean()) * (pst - pst.mean()))) / (si * sp)
    return OrthogonalityResult(correlation=corr, z=corr * math.sqrt(n), n=n)


# --- jump characteristic integral ------------------------------------------
#
# inner(theta) = integral of (exp(i theta z) - 1 - i theta z) over the
# truncated measure.  Writing the integrand as theta^2 z^2 * g(theta z)
# with g(w) = (exp(iw) - 1 - iw)/w^2 turns it into an integral against
# the finite second-moment measure, uniformly accurate down to theta = 0
# where g -> -1/2 reproduces the Gaussian quadratic form exactly.


def _g_complex(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) < 1e-3
    ws = w[small]
    # series to w^4; next term is w^5/2520, far below double rounding here
    out[small] = (
        -0.5
        - 1j * ws / 6.0
        + ws**2 / 24.0
        + 1j * ws**3 / 120.0
        - ws**4 / 720.0
    )
    wl = w[~small]
    out[~small] = (np.exp(1j * wl) - 1.0 - 1j * wl) / (wl * wl)
    return out


def _g_even(w: np.ndarray) -> np.ndarray:
    # symmetric measures kill the odd part: (cos w - 1)/w^2
    w = np.asarray(w, dtype=float)
    out = np.empty(w.shape)
    small = np.abs(w) < 1e-3
    ws = w[small]
    out[small] = -0.5 + ws**2 / 24.0 - ws**4 / 720.0
    wl = w[~small]
    out[~small] = (np.cos(wl) - 1.0) / (wl * wl)
    return out


@lru_cache(maxsize=64)
def _second_moment_nodes(spec: LevyMeasureSpec):
    """Nodes z_i and masses m_i with sum m_i ~ second moment, plus a
    flag for symmetric (purely real) specs."""
    fam = spec.family
    eps = spec.epsilon
    if isinstance(fam, AlphaStableSymmetric):
        # z = eps * t^(1/(2-alpha)) maps Lebesgue on [0,1] to the
        # normalized second-moment measure exactly
        gx, gw = np.polynomial.legendre.leggauss(64)
        t = 0.5 * (gx + 1.0)
        wts = 0.5 * gw
        z = eps * t ** (1.0 / (2.0 - fam.alpha))
        return z, wts * variance(spec), True
    if isinstance(fam, GammaSubordinator):
        gx, gw = np.polynomial.legendre.leggauss(64)
        z = 0.5 * eps * (gx + 1.0)
        wts = 0.5 * eps * gw
        masses = wts * fam.rate * z * np.exp(-fam.rate * z)
        return z, masses, False
    z, lam = _truncated_atoms(spec)
    if z.size == 0:
        return np.zeros(0), np.zeros(0), True
    order = np.argsort(z)
    zs, ls = z[order], lam[order]
    symmetric = bool(np.allclose(zs, -zs[::-1], atol=1e-15) and np.allclose(ls, ls[::-1]))
    return z, lam * z * z, symmetric


def jump_characteristic_integral(spec: LevyMeasureSpec, theta) -> np.ndarray:
    """integral of (e^{i theta z} - 1 - i theta z) against the truncated measure.

    Vectorized over theta.  Symmetric families return exactly real
    values; the small-theta limit is -theta^2 * variance / 2 with no
    cancellation loss.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    z, masses, symmetric = _second_moment_nodes(spec)
    if z.size == 0:
        return np.zeros(theta.shape, dtype=complex)
    w = theta[..., None] * z[None, :]
    g = _g_even(w) if symmetric else _g_complex(w)
    out = (theta**2).astype(complex) * (g @ masses)
    return out


def observable_path(u_path, phi1, phi2, times, f: Optional[Callable] = None) -> np.ndarray:
    """Y_s = <u(s), phi1> + <v_s, phi2> on the time grid, atom-exact."""
    ua = field_atoms(u_path, f)
    va = path_atoms(u_path, f)
    prim = _Primitive(phi1, phi1.support)
    out = np.empty(len(times))
    for i, s in enumerate(times):
        out[i] = _field_pair_primitive(ua, prim, s) + float(pairing_vector(phi2, va, s) @ va.w)
    return out


def compensator_path(
    u_path,
    xi: float,
    phi1,
    phi2,
    spec: Optional[LevyMeasureSpec],
    times: Sequence[float],
    f: Callable,
    sigma: float = 1.0,
    x_panel: float = 0.25,
    x_order: int = 8,
) -> np.ndarray:
    """Compensator A_t of exp(i xi Y_t) along one path, on the time grid.

    Two drift pieces accumulate: i xi times the predictable drift of Y
    (the wave operator's contribution), and the jump characteristic
    integral of theta(s, x) = xi f(u(s,x)) phi2(x) / sigma over space.
    ``spec = None`` selects the Gaussian arm, whose jump piece
    degenerates to the quadratic form -theta^2/2.

    Returns the complex array A(times), A(0) = 0.
    """
    times = np.asarray(times, dtype=float)
    ua = field_atoms(u_path, f)
    va = path_atoms(u_path, f)
    x_nodes, x_wts = quadrature_grid(phi2.support, panel=x_panel, order=x_order)
    phi2_nodes = np.asarray(phi2(x_nodes), dtype=float)

    if isinstance(u_path, EventSolution):
        def u_at(s):
            return u_path.eval_many(np.full(x_nodes.shape, s), x_nodes)
    else:
        grid, _ = u_path

        def u_at(s):
            return eval_field_many(grid, s, x_nodes)

    rate = np.empty(times.size, dtype=complex)
    for i, s in enumerate(times):
        drift = _field_pair_second(ua, phi2.deriv, s) + float(
            pairing_vector(phi1, va, s) @ va.w
        )
        theta = xi * np.asarray(f(u_at(s)), dtype=float) * phi2_nodes / sigma
        if spec is None:
            inner = -0.5 * theta**2 + 0j
        else:
            inner = jump_characteristic_integral(spec, theta)
        rate[i] = 1j * xi * drift + complex(inner @ x_wts)
    re = cumulative_trapezoid(rate.real, times, initial=0.0)
    im = cumulative_trapezoid(rate.imag, times, initial=0.0)
    return re + 1j * im


def martingale_diagnostic(times, y_path, a_path) -> np.ndarray:
    """M_t = e^{i xi Y_t} - integral_0^t e^{i xi Y_s} dA_s, left endpoints.

    ``y_path`` must already be the exponent xi * Y; pass the compensator
    from the same run.  For a true martingale the increments of M are
    orthogonal to the past.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(y_path, dtype=float)
    a = np.asarray(a_path, dtype=complex)
    if not (times.shape == y.shape == a.shape):
        raise LengthMismatch("times, exponent, and compensator must share a grid")
    phase = np.exp(1j * y)
    stieltjes = np.concatenate([[0.0 + 0j], np.cumsum(phase[:-1] * np.diff(a))])
    return phase - stieltjes
