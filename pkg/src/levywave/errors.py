"""Exception taxonomy shared across the package.

Every error raised on purpose derives from LevyWaveError so callers can
catch the package's failures in one clause and let genuine bugs surface.
"""

from __future__ import annotations


class LevyWaveError(Exception):
    """Base class for all deliberate failures in this package."""


class ConfigError(LevyWaveError):
    """Experiment configuration is malformed or inconsistent."""


class NonFinite(LevyWaveError):
    """A quantity that must be finite and positive is not."""


class OutOfDomain(LevyWaveError):
    """A query point lies outside the region a solution covers."""


class EmptySupport(LevyWaveError):
    """The requested restriction of a jump measure carries no mass."""


class FloorAboveTruncation(LevyWaveError):
    """The jump-size floor is at or above the truncation level."""


class BudgetExceeded(LevyWaveError):
    """Expected jump count exceeds the configured simulation cap."""


class JumpOutsideLattice(LevyWaveError):
    """A jump falls outside the lattice handed to the binning routine."""


class DriftUnsupported(LevyWaveError):
    """The event-driven solver only handles driftless (symmetric) noise."""


class ShapeMismatch(LevyWaveError):
    """Array arguments disagree on dimensions."""


class WindowTooSmall(LevyWaveError):
    """A quadrature window truncates visible mass of the integrand."""


class InsufficientSchedule(LevyWaveError):
    """A truncation-level schedule is too short or not strictly decreasing."""


class EmptySample(LevyWaveError):
    """A statistic was requested on an empty sample."""


class LengthMismatch(LevyWaveError):
    """Paired sample arrays have different lengths."""


class SupportViolation(LevyWaveError):
    """Sampled values escaped their stated support."""


class QuadratureFailure(LevyWaveError):
    """Numerical integration did not reach the requested tolerance."""
