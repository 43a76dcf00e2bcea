"""Velocity-component coefficients: traveling pairs, both state-space
representations, the characteristic flow, and the weak-form residual."""

import math

import numpy as np
import pytest

from levywave import (
    ConePoint,
    JumpRecord,
    OutOfDomain,
    RotatedLattice,
    SmoothBump,
    SupportViolation,
    gaussian_cell_increments,
    hermite_all,
    path_rng,
    solve_event_driven,
    solve_wave_grid,
)
from levywave.hermite import dual_norm
from levywave.velocity import (
    VelocityPath,
    characteristics_pair,
    default_times,
    path_atoms,
    velocity_coeffs_direct,
    velocity_coeffs_semimartingale,
    velocity_pairing,
    weak_residual,
)

ONES = lambda u: np.ones_like(np.asarray(u, dtype=float))


def one_jump(t0=0.3, x0=0.4, z0=0.7, domain=(1.0, -2.0, 2.0)):
    return JumpRecord(
        t=np.array([t0]), x=np.array([x0]), z=np.array([z0]),
        domain=domain, floor=0.5, drift=0.0,
    )


def test_single_jump_coefficients():
    """One atom: the velocity is a pair of impulses running left and
    right, so the q-th coefficient is the half-sum of the basis at the
    two fronts times the source mass."""
    z, sigma = 0.7, 2.0
    sol = solve_event_driven(one_jump(z0=z), ONES, sigma=sigma)
    times = np.array([0.0, 0.2, 0.3, 0.65, 1.0])
    vp = velocity_coeffs_direct(sol, times, q_max=8, f=ONES, sigma=sigma)
    h = lambda q, y: hermite_all(8, np.array([y]))[q, 0]
    for i, t in enumerate(times):
        lag = t - 0.3
        for q in range(9):
            if lag <= 0.0:
                assert vp.coeffs[i, q] == 0.0
            else:
                want = 0.5 * (h(q, 0.4 + lag) + h(q, 0.4 - lag)) * z / sigma
                assert vp.coeffs[i, q] == pytest.approx(want, abs=1e-14)


def test_no_noise_no_velocity():
    rec = JumpRecord(
        t=np.array([]), x=np.array([]), z=np.array([]),
        domain=(1.0, -2.0, 2.0), floor=0.5, drift=0.0,
    )
    sol = solve_event_driven(rec, ONES, sigma=1.0)
    vp = velocity_coeffs_direct(sol, default_times(1.0, 9), q_max=4, f=ONES)
    np.testing.assert_array_equal(vp.coeffs, 0.0)


def test_pairing_matches_coefficient_for_basis_function():
    # pairing against h_3 itself must reproduce coefficient 3 exactly,
    # truncation plays no role for a pure mode
    sol = solve_event_driven(one_jump(), ONES, sigma=1.0)
    vp = velocity_coeffs_direct(sol, np.array([0.0, 0.8]), q_max=6, f=ONES)

    def h3(y):
        return hermite_all(3, np.atleast_1d(np.asarray(y, dtype=float)))[3]

    got = velocity_pairing(sol, h3, 0.8, f=ONES)
    assert got == pytest.approx(vp.coeffs[1, 3], abs=1e-12)


def test_atom_weights_conventions():
    sol = solve_event_driven(one_jump(z0=0.7), ONES, sigma=2.0)
    atoms = path_atoms(sol, f=ONES)
    assert atoms.count == 1
    # twice the field weight: the field carries the kernel's half
    assert atoms.w[0] == pytest.approx(2.0 * sol.weights[0])
    assert atoms.w[0] == pytest.approx(0.7 / 2.0)


def test_semimartingale_route_agrees_and_refines():
    """Both representations share the truncated basis; the only gap is
    the trapezoid on the drift integral.  With the atom entry aligned to
    the inner grid the error must drop at second order."""
    sol = solve_event_driven(one_jump(), ONES, sigma=1.0)
    times = np.linspace(0.0, 1.0, 11)
    direct = velocity_coeffs_direct(sol, times, q_max=16, f=ONES)
    errs = []
    for step in (0.05, 0.025):
        semi = velocity_coeffs_semimartingale(sol, times, q_max=16, f=ONES, inner_step=step)
        errs.append(dual_norm(semi.coeffs[-1] - direct.coeffs[-1], 3.0))
    assert errs[0] > 1e-7  # the routes genuinely differ before refinement
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.9


def test_gaussian_isometry():
    """Monte Carlo second moment of a coefficient against the exact sum
    over lattice cells (independent increments, variance = cell area)."""
    lat = RotatedLattice(ConePoint(-1.0, 0.5), 1.0 / 16.0, (32, 32))
    areas = lat.clipped_areas().ravel()
    ii, jj = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
    centers = [lat.cell_center(i, j) for i, j in zip(ii.ravel(), jj.ravel())]
    t_c = np.array([max(c.t, 0.0) for c in centers])
    x_c = np.array([c.x for c in centers])
    t_eval = 1.0
    lag = t_eval - t_c
    live = lag > 0.0
    q = 2
    h = hermite_all(q, np.concatenate([x_c + lag, x_c - lag]))
    pair = 0.5 * (h[q, : x_c.size] + h[q, x_c.size :]) * live
    var_exact = float(np.sum(pair**2 * areas))

    n = 3000
    samples = np.empty(n)
    for k in range(n):
        inc = gaussian_cell_increments(lat, path_rng(314, 0, k))
        grid = solve_wave_grid(inc, ONES, sigma=1.0)
        vp = velocity_coeffs_direct((grid, inc), np.array([0.0, t_eval]), q_max=q, f=ONES)
        samples[k] = vp.coeffs[1, q]
    assert abs(np.mean(samples)) < 4.0 * math.sqrt(var_exact / n)
    mc = float(np.var(samples))
    se = var_exact * math.sqrt(2.0 / n)
    assert abs(mc - var_exact) < 3.0 * se


def test_characteristic_flow_identities():
    """The pair (psi1, psi2) must satisfy d/ds psi2 = -psi1 and the wave
    identity d2/ds2 psi2 = d2/dy2 psi2, checked by centered differences."""
    phi = SmoothBump(-0.5, 1.5)
    t = 1.0
    psi1, psi2 = characteristics_pair(phi, t)
    ys = np.linspace(-1.2, 2.2, 18)
    d = 1e-4
    for s in np.linspace(0.05, 0.9, 12):
        dpsi2 = (psi2(s + d, ys) - psi2(s - d, ys)) / (2 * d)
        np.testing.assert_allclose(dpsi2, -psi1(s, ys), atol=1e-6)

    d = 5e-4
    for s in (0.2, 0.5):
        for y in np.linspace(-0.8, 1.8, 9):
            dss = (psi2(s + d, y) - 2 * psi2(s, y) + psi2(s - d, y)) / d**2
            dyy = (psi2(s, y + d) - 2 * psi2(s, y) + psi2(s, y - d)) / d**2
            assert dss == pytest.approx(dyy, abs=1e-4 * (1.0 + abs(dyy)))


def test_characteristics_collapse_at_final_time():
    phi = SmoothBump(0.0, 1.0)
    psi1, psi2 = characteristics_pair(phi, 0.75)
    y = np.linspace(-0.5, 1.5, 21)
    np.testing.assert_allclose(psi1(0.75, y), phi(y), atol=1e-12)
    np.testing.assert_allclose(psi2(0.75, y), 0.0, atol=1e-12)


def test_weak_residual_zero_noise_exact():
    rec = JumpRecord(
        t=np.array([]), x=np.array([]), z=np.array([]),
        domain=(1.0, -2.0, 2.0), floor=0.5, drift=0.0,
    )
    f = lambda u: 0.5 * np.asarray(u, dtype=float)  # f(0) = 0: field stays at rest
    sol = solve_event_driven(rec, f, sigma=1.0)
    times = np.linspace(0.0, 1.0, 33)
    vp = velocity_coeffs_direct(sol, times, q_max=8, f=f)
    r = weak_residual(sol, vp, SmoothBump(0.0, 1.0), SmoothBump(-0.5, 1.5), 1.0, f=f)
    assert r == 0.0


def test_weak_residual_single_jump_quadrature_error():
    """With the second test function supported away from the jump's
    light trace, every term involving it vanishes and the residual is
    the pure trapezoid error of one time integral."""
    rec = JumpRecord(
        t=np.array([0.25]), x=np.array([-0.95]), z=np.array([1.0]),
        domain=(1.0, -3.0, 3.0), floor=0.5, drift=0.0,
    )
    sol = solve_event_driven(rec, ONES, sigma=1.0)
    times = np.linspace(0.0, 1.0, 129)
    vp = velocity_coeffs_direct(sol, times, q_max=512, f=ONES)
    phi1 = SmoothBump(-1.0, 0.0)
    phi2 = SmoothBump(0.8, 1.8)  # trace stays inside [-1.7, -0.2]
    r = weak_residual(sol, vp, phi1, phi2, 1.0, f=ONES)
    assert abs(r) < 1e-3


def test_weak_residual_guards():
    sol = solve_event_driven(one_jump(), ONES, sigma=1.0)
    times = np.linspace(0.0, 1.0, 17)
    vp = velocity_coeffs_direct(sol, times, q_max=8, f=ONES)
    huge = SmoothBump(-50.0, 50.0)
    with pytest.raises(SupportViolation):
        weak_residual(sol, vp, huge, SmoothBump(0.0, 1.0), 1.0, f=ONES)
    with pytest.raises(OutOfDomain):
        weak_residual(sol, vp, SmoothBump(0.0, 1.0), SmoothBump(0.0, 1.0), 0.123, f=ONES)


def test_velocity_path_container():
    times = default_times(1.0, 5)
    assert times.shape == (5,)
    assert times[0] == 0.0 and times[-1] == 1.0
    coeffs = np.zeros((5, 7))
    coeffs[2, 3] = 2.0
    vp = VelocityPath(times=times, coeffs=coeffs, r=3.0, sigma=1.0)
    assert vp.q_max == 6
    norms = vp.dual_norms()
    assert norms.shape == (5,)
    assert norms[2] == pytest.approx(2.0 * 7.0 ** -1.5, abs=1e-14)
    assert norms[0] == 0.0
