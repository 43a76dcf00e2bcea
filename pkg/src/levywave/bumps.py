"""Compactly supported smooth test functions with exact derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain

__all__ = ["SmoothBump"]


@dataclass(frozen=True)
class SmoothBump:
    """The mollifier exp(1 - 1/(1 - s^2)) on (lo, hi), zero outside.

    ``s`` is the affine map of x onto (-1, 1); the peak value is exactly
    1 at the midpoint.  Infinitely differentiable everywhere, so pairing
    it with distribution-valued objects needs no boundary care.  The two
    derivative methods are closed forms, not finite differences.
    """

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise OutOfDomain(f"support [{self.lo}, {self.hi}] is empty")

    def _s(self, x):
        mid = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        return (np.asarray(x, dtype=float) - mid) / half, half

    def __call__(self, x):
        s, _ = self._s(x)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out if out.ndim else float(out)

    def deriv(self, x):
        # d/ds exp(1 - 1/(1-s^2)) = value * (-2s) / (1-s^2)^2, then chain rule.
        s, half = self._s(x)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        g = 1.0 - si * si
        out[inside] = np.exp(1.0 - 1.0 / g) * (-2.0 * si) / (g * g) / half
        return out if out.ndim else float(out)

    def second_deriv(self, x):
        s, half = self._s(x)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        g = 1.0 - si * si
        # second s-derivative: value * ((6 s^4 - 2) / g^4 + 4 s^2 / g^4 * (1/g - 1) ... expand directly:
        # f = e^{1 - 1/g}; f' = f * (-2s)/g^2; f'' = f * [4s^2/g^4 + (-2 g^2 + (-2s)(-2)(-2s) g)/g^4]
        #   = f * (4s^2/g^4 - 2/g^2 - 8 s^2/g^3)
        out[inside] = (
            np.exp(1.0 - 1.0 / g)
            * (4.0 * si * si / g**4 - 2.0 / (g * g) - 8.0 * si * si / g**3)
            / (half * half)
        )
        return out if out.ndim else float(out)

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)
