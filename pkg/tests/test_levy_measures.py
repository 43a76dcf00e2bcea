"""Truncated jump measures: moments, tails, sampling, the ratio criterion.

Closed-form values are cross-checked against direct quadrature of the
density so the library formulas never grade themselves.
"""

import math

import numpy as np
import pytest
from scipy import integrate, special

from levywave import (
    AlphaStableSymmetric,
    AtomTable,
    EmptySupport,
    FloorAboveTruncation,
    GammaSubordinator,
    InsufficientSchedule,
    LevyMeasureSpec,
    NonFinite,
    PointMass,
    compensator_drift,
    condition_verdict,
    mass_above,
    measure_from_dict,
    measure_to_dict,
    path_rng,
    sample_amplitudes,
    tail_second_moment,
    tail_variance_ratio,
    variance,
)


def stable(alpha, eps):
    return LevyMeasureSpec(family=AlphaStableSymmetric(alpha=alpha), epsilon=eps)


def gamma(rate, eps):
    return LevyMeasureSpec(family=GammaSubordinator(rate=rate), epsilon=eps)


# --- second moments ----------------------------------------------------


@pytest.mark.parametrize("alpha,eps", [(0.5, 1.0), (1.5, 1.0), (1.5, 0.01), (1.9, 0.3)])
def test_stable_variance_against_quadrature(alpha, eps):
    oracle, err = integrate.quad(lambda z: 2.0 * z**2 * z ** (-1.0 - alpha), 0.0, eps)
    assert err < 1e-9
    assert variance(stable(alpha, eps)) == pytest.approx(oracle, rel=1e-11)


def test_stable_variance_closed_form():
    # alpha 1.5, eps 1: 2 / (2 - 1.5) = 4, exactly
    assert variance(stable(1.5, 1.0)) == pytest.approx(4.0, abs=1e-14)


@pytest.mark.parametrize("rate,eps", [(1.0, 1.0), (0.5, 0.01), (2.0, 0.3)])
def test_gamma_variance_against_quadrature(rate, eps):
    oracle, err = integrate.quad(
        lambda z: z**2 * rate * math.exp(-rate * z) / z, 0.0, eps
    )
    assert err < 1e-14
    assert variance(gamma(rate, eps)) == pytest.approx(oracle, rel=1e-10)


def test_gamma_variance_small_truncation_series():
    # the series branch of the second-moment helper kicks in below 1e-3
    rate, eps = 1.0, 1e-4
    oracle, _ = integrate.quad(lambda z: rate * z * math.exp(-rate * z), 0.0, eps)
    assert variance(gamma(rate, eps)) == pytest.approx(oracle, rel=1e-10)


def test_atom_variance():
    spec = LevyMeasureSpec(
        family=AtomTable(atoms=((0.5, 2.0), (0.25, 1.0))), epsilon=1.0
    )
    assert variance(spec) == pytest.approx(2.0 * 0.25 + 1.0 * 0.0625, abs=1e-15)


def test_point_mass_above_truncation_has_no_mass():
    spec = LevyMeasureSpec(family=PointMass(z0=2.0, intensity=1.0), epsilon=1.0)
    with pytest.raises(NonFinite):
        variance(spec)


def test_with_epsilon_rescales():
    spec = stable(1.5, 1.0)
    assert variance(spec.with_epsilon(0.25)) == pytest.approx(
        2.0 * 0.25**0.5 / 0.5, rel=1e-12
    )


# --- tails and the normal-approximation ratio --------------------------


def test_tail_second_moment_quadrature():
    alpha, eps, a = 1.5, 1.0, 0.5
    oracle, _ = integrate.quad(lambda z: 2.0 * z ** (1.0 - alpha), a, eps)
    assert tail_second_moment(stable(alpha, eps), a) == pytest.approx(oracle, rel=1e-12)


def test_tail_second_moment_saturates():
    spec = stable(1.5, 0.1)
    assert tail_second_moment(spec, 0.1) == 0.0
    assert tail_second_moment(spec, 0.5) == 0.0
    assert tail_second_moment(spec, 0.0) == pytest.approx(variance(spec), rel=1e-12)


def test_stable_ratio_vanishes_below_threshold():
    """The rescaled tail is empty once kappa * sigma(eps) reaches the cutoff.

    For the symmetric power family that happens for every eps below
    (2 kappa^2 / (2 - alpha))^(1/alpha); the ratio must then be an exact
    zero, not merely small.
    """
    for alpha in (0.5, 1.5):
        for kappa in (0.5, 1.0, 2.0):
            bound = (2.0 * kappa**2 / (2.0 - alpha)) ** (1.0 / alpha)
            for eps in (0.9 * bound, 0.5 * bound, 1e-3 * bound):
                assert tail_variance_ratio(stable(alpha, eps), kappa) == 0.0


def test_stable_ratio_positive_above_threshold():
    alpha, kappa = 1.5, 0.5
    bound = (2.0 * kappa**2 / (2.0 - alpha)) ** (1.0 / alpha)
    assert tail_variance_ratio(stable(alpha, 1.5 * bound), kappa) > 0.0


def test_gamma_ratio_approaches_flat_limit():
    # small-eps limit of the tail fraction: 1 - kappa^2 * rate / 2
    for rate, kappa in [(1.0, 1.0), (0.5, 1.0), (1.0, 0.5)]:
        r = tail_variance_ratio(gamma(rate, 1e-3), kappa)
        assert r == pytest.approx(1.0 - kappa**2 * rate / 2.0, abs=0.02)


def test_gamma_ratio_exact_small_eps():
    # independent evaluation of the same ratio by quadrature
    rate, kappa, eps = 1.0, 1.0, 1e-2
    var, _ = integrate.quad(lambda z: rate * z * math.exp(-rate * z), 0.0, eps)
    a = kappa * math.sqrt(var)
    tail, _ = integrate.quad(lambda z: rate * z * math.exp(-rate * z), a, eps)
    assert tail_variance_ratio(gamma(rate, eps), kappa) == pytest.approx(
        tail / var, rel=1e-8
    )


def test_verdict_holds_for_stable():
    for alpha in (0.5, 1.5):
        rep = condition_verdict(
            stable(alpha, 1.0), kappas=(0.5, 1.0, 2.0), epsilons=(1.0, 0.1, 0.01)
        )
        assert rep.verdict == "HOLDS"
        assert rep.ratios.shape == (3, 3)
        assert np.all(rep.ratios[:, -1] == 0.0)


def test_verdict_fails_for_gamma():
    for rate in (0.5, 1.0):
        rep = condition_verdict(
            gamma(rate, 1.0), kappas=(0.5, 1.0, 2.0), epsilons=(1.0, 0.1, 0.01)
        )
        assert rep.verdict == "FAILS"


def test_verdict_schedule_guards():
    with pytest.raises(InsufficientSchedule):
        condition_verdict(stable(1.5, 1.0), kappas=(1.0,), epsilons=(1.0, 0.1))
    with pytest.raises(InsufficientSchedule):
        condition_verdict(stable(1.5, 1.0), kappas=(1.0,), epsilons=(1.0, 0.1, 0.1))


def test_verdict_needs_kappas():
    with pytest.raises(Exception):
        condition_verdict(stable(1.5, 1.0), kappas=(), epsilons=(1.0, 0.1, 0.01))


# --- drift and mass of the retained large jumps ------------------------


def test_compensator_drift_symmetric_is_zero():
    assert compensator_drift(stable(1.5, 1.0), 0.1) == 0.0


def test_compensator_drift_gamma():
    rate, floor, eps = 1.0, 0.1, 1.0
    oracle, _ = integrate.quad(lambda z: z * rate * math.exp(-rate * z) / z, floor, eps)
    got = compensator_drift(gamma(rate, eps), floor)
    assert got == pytest.approx(oracle, rel=1e-12)
    assert got == pytest.approx(math.exp(-0.1) - math.exp(-1.0), rel=1e-12)


def test_mass_above_stable():
    alpha, floor, eps = 0.5, 0.25, 1.0
    oracle, _ = integrate.quad(lambda z: 2.0 * z ** (-1.0 - alpha), floor, eps)
    assert mass_above(stable(alpha, eps), floor) == pytest.approx(oracle, rel=1e-12)
    assert mass_above(stable(alpha, eps), floor) == pytest.approx(4.0, rel=1e-12)


def test_mass_above_gamma_exp1():
    rate, floor, eps = 2.0, 0.05, 1.0
    oracle, _ = integrate.quad(lambda z: rate * math.exp(-rate * z) / z, floor, eps)
    assert mass_above(gamma(rate, eps), floor) == pytest.approx(oracle, rel=1e-10)
    exp1 = special.exp1(rate * floor) - special.exp1(rate * eps)
    assert mass_above(gamma(rate, eps), floor) == pytest.approx(rate * exp1, rel=1e-12)


def test_mass_above_zero_floor_diverges():
    assert mass_above(stable(1.5, 1.0), 0.0) == math.inf


def test_floor_must_stay_below_truncation():
    with pytest.raises(FloorAboveTruncation):
        mass_above(stable(1.5, 1.0), 1.0)
    rng = path_rng(0, 0, 0)
    with pytest.raises(FloorAboveTruncation):
        sample_amplitudes(stable(1.5, 1.0), 1.5, rng, 10)


# --- amplitude sampling ------------------------------------------------


def test_stable_amplitudes_distribution():
    """Inverse-CDF draw checked against the analytic restricted law."""
    alpha, floor, eps = 0.7, 0.2, 1.0
    rng = path_rng(99, 0, 0)
    z = sample_amplitudes(stable(alpha, eps), floor, rng, 20_000)
    a = np.abs(z)
    assert np.all((a > floor) & (a <= eps))
    lo, hi = floor**-alpha, eps**-alpha
    u = (lo - a**-alpha) / (lo - hi)  # probability transform, should be uniform
    ks = np.max(np.abs(np.sort(u) - np.arange(1, u.size + 1) / u.size))
    assert ks < 0.02
    assert abs(np.mean(np.sign(z))) < 3.0 / math.sqrt(z.size)


def test_gamma_amplitudes_distribution():
    rate, floor, eps = 1.0, 0.1, 1.0
    rng = path_rng(99, 1, 0)
    z = sample_amplitudes(gamma(rate, eps), floor, rng, 20_000)
    assert np.all((z > floor) & (z <= eps))
    denom = special.exp1(rate * floor) - special.exp1(rate * eps)
    u = (special.exp1(rate * floor) - special.exp1(rate * z)) / denom
    ks = np.max(np.abs(np.sort(u) - np.arange(1, u.size + 1) / u.size))
    assert ks < 0.02


def test_empty_amplitude_request():
    # zero-size draws happen whenever a Poisson count comes up empty
    rng = path_rng(0, 0, 0)
    for spec in (stable(1.5, 1.0), gamma(1.0, 1.0)):
        z = sample_amplitudes(spec, 0.1, rng, 0)
        assert z.shape == (0,)


def test_stable_sampler_rejects_zero_floor():
    rng = path_rng(0, 0, 0)
    with pytest.raises(EmptySupport):
        sample_amplitudes(stable(1.0, 1.0), 0.0, rng, 5)


def test_atom_table_rejects_empty():
    with pytest.raises(EmptySupport):
        AtomTable(atoms=())


# --- serialization -----------------------------------------------------


@pytest.mark.parametrize(
    "spec",
    [
        stable(1.5, 0.01),
        gamma(0.5, 1.0),
        LevyMeasureSpec(family=PointMass(z0=0.3, intensity=2.0), epsilon=1.0),
        LevyMeasureSpec(family=AtomTable(atoms=((0.1, 1.0), (0.2, 0.5))), epsilon=0.5),
    ],
)
def test_measure_round_trip(spec):
    d = measure_to_dict(spec)
    back = measure_from_dict(d)
    assert back == spec
    assert measure_to_dict(back) == d


def test_reproducible_rng_streams():
    a = path_rng(1729, 3, 14).standard_normal(8)
    b = path_rng(1729, 3, 14).standard_normal(8)
    c = path_rng(1729, 3, 15).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
