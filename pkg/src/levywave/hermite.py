"""Hermite functions, projections, and the weighted coefficient norms.

The Hermite functions form the orthonormal eigenbasis of the harmonic
oscillator on the line.  Everything here evaluates them by the stable
three-term recurrence (the Gaussian factor rides inside, so nothing
overflows), projects test functions onto them by composite
Gauss-Legendre panels, and measures coefficient vectors in the scale of
norms weighting entry q by ``(1 + 2q)`` to a signed power.  The dual
(negative-weight) norm is the one the distribution-valued velocity
process lives in; theory wants its exponent above 2 and the package
defaults to 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import OutOfDomain, ShapeMismatch, WindowTooSmall

__all__ = [
    "HermiteCoeffs",
    "hermite_eval",
    "hermite_all",
    "hermite_deriv",
    "hermite_deriv_all",
    "quadrature_grid",
    "project",
    "dual_norm",
    "DEFAULT_Q_MAX",
    "DEFAULT_R",
]

DEFAULT_Q_MAX = 64
DEFAULT_R = 3.0

_MAX_ORDER = 10_000


@dataclass(frozen=True)
class HermiteCoeffs:
    """Coefficient vector c_q, q = 0..Q_max, with an optional weight context."""

    coeffs: np.ndarray
    r: Optional[float] = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ShapeMismatch(f"coefficients must be a nonempty vector, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise OutOfDomain("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def q_max(self) -> int:
        return self.coeffs.size - 1


def _check_order(q: int) -> None:
    if not (0 <= q <= _MAX_ORDER):
        raise OutOfDomain(f"order must lie in [0, {_MAX_ORDER}], got {q}")


def hermite_all(q_max: int, x) -> np.ndarray:
    """All orders 0..q_max at once, shape (q_max + 1, len(x)).

    h_0 = pi**(-1/4) * exp(-x^2/2), h_1 = sqrt(2) x h_0, and
    h_{q+1} = x sqrt(2/(q+1)) h_q - sqrt(q/(q+1)) h_{q-1}.
    """
    _check_order(q_max)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((q_max + 1, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if q_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for q in range(1, q_max):
        out[q + 1] = x * math.sqrt(2.0 / (q + 1)) * out[q] - math.sqrt(q / (q + 1.0)) * out[q - 1]
    return out


def hermite_eval(q: int, x):
    """Value of the order-q Hermite function; vectorized over x."""
    vals = hermite_all(q, x)[q]
    return vals[0] if np.isscalar(x) else vals


def hermite_deriv_all(q_max: int, x) -> np.ndarray:
    """Derivatives of orders 0..q_max via the ladder identity.

    h_q' = sqrt(q/2) h_{q-1} - sqrt((q+1)/2) h_{q+1}, so one extra order
    of values covers every requested derivative.
    """
    h = hermite_all(q_max + 1, x)
    q = np.arange(q_max + 1)[:, None]
    upper = np.sqrt((q + 1) / 2.0) * h[1 : q_max + 2]
    lower = np.zeros_like(upper)
    if q_max >= 1:
        lower[1:] = np.sqrt(q[1:] / 2.0) * h[: q_max]
    return lower - upper


def hermite_deriv(q: int, x):
    vals = hermite_deriv_all(q, x)[q]
    return vals[0] if np.isscalar(x) else vals


def quadrature_grid(window: tuple[float, float], panel: float = 0.5, order: int = 16):
    """Composite Gauss-Legendre nodes and weights over the window."""
    a, b = window
    if not (b > a):
        raise OutOfDomain(f"empty quadrature window [{a}, {b}]")
    n_panels = max(1, int(math.ceil((b - a) / panel - 1e-12)))
    edges = np.linspace(a, b, n_panels + 1)
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


def project(
    phi: Callable | np.ndarray,
    q_max: int = DEFAULT_Q_MAX,
    window: tuple[float, float] = (-7.0, 7.0),
    panel: float = 0.5,
) -> HermiteCoeffs:
    """Hermite coefficients of a fast-decaying function by quadrature.

    ``phi`` is either a vectorized callable or samples on exactly the
    grid ``quadrature_grid(window, panel)``.  The window must already
    contain the function's visible mass: values on the outermost panels
    are required to be negligible against the peak, else WindowTooSmall.
    """
    nodes, weights = quadrature_grid(window, panel)
    if callable(phi):
        samples = np.asarray(phi(nodes), dtype=float)
    else:
        samples = np.asarray(phi, dtype=float)
    if samples.shape != nodes.shape:
        raise ShapeMismatch(
            f"expected {nodes.shape[0]} samples on the quadrature grid, got {samples.shape}"
        )
    scale = float(np.max(np.abs(samples))) if samples.size else 0.0
    order = nodes.size // max(1, int(round((window[1] - window[0]) / panel)))
    edge = max(order, 1)
    tail = float(np.max(np.abs(samples[:edge]), initial=0.0))
    tail = max(tail, float(np.max(np.abs(samples[-edge:]), initial=0.0)))
    if scale > 0.0 and tail > 1e-10 * scale:
        raise WindowTooSmall(
            f"function mass at the window edge ({tail:.3g} vs peak {scale:.3g}); widen the window"
        )
    basis = hermite_all(q_max, nodes)
    return HermiteCoeffs(coeffs=basis @ (weights * samples))


def dual_norm(coeffs: HermiteCoeffs | np.ndarray, r: float) -> float:
    """Weighted norm sqrt(sum (1+2q)^(-r) c_q^2).

    Positive ``r`` is the dual (distribution-side) norm; ``r = 0`` is
    Euclidean.  Pass a negative ``r`` nowhere: primal norms use the same
    formula with the weight inverted, via ``primal_norm``.
    """
    if not (r >= 0.0) or not math.isfinite(r):
        raise OutOfDomain(f"weight exponent must be nonnegative, got {r}")
    c = coeffs.coeffs if isinstance(coeffs, HermiteCoeffs) else np.asarray(coeffs, dtype=float)
    q = np.arange(c.size)
    return float(np.sqrt(np.sum((1.0 + 2.0 * q) ** (-r) * c * c)))


def primal_norm(coeffs: HermiteCoeffs | np.ndarray, r: float) -> float:
    """Smoothness-side norm: same sum with weight (1+2q)^(+r)."""
    if not (r >= 0.0) or not math.isfinite(r):
        raise OutOfDomain(f"weight exponent must be nonnegative, got {r}")
    c = coeffs.coeffs if isinstance(coeffs, HermiteCoeffs) else np.asarray(coeffs, dtype=float)
    q = np.arange(c.size)
    return float(np.sqrt(np.sum((1.0 + 2.0 * q) ** r * c * c)))
