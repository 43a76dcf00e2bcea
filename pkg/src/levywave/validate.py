"""Fast self-checks of the library's internal invariants.

Every check is deterministic, takes well under a second, and returns a
``CheckResult``; the command line prints one PASS/FAIL line per entry.
These are sanity gates for a fresh install, not the statistical
experiments, so they use fixed seeds and tight closed-form targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .bumps import SmoothBump
from .config import (
    config_from_dict,
    config_hash,
    config_to_dict,
    default_alpha_config,
    default_gamma_config,
)
from .errors import LevyWaveError
from .experiments import aligned_lattice, path_rng, probe_node
from .hermite import hermite_all, hermite_deriv, hermite_eval, project, quadrature_grid
from .levy_measures import (
    AlphaStableSymmetric,
    GammaSubordinator,
    LevyMeasureSpec,
    compensator_drift,
    condition_verdict,
    variance,
)
from .noise import (
    filter_to_lattice,
    gaussian_cell_increments,
    levy_cell_increments,
    simulate_jump_record,
)
from .solver import solve_event_driven, solve_grid, solve_wave_grid
from .stats import jump_characteristic_integral, ks_two_sample
from .velocity import characteristics_pair, velocity_pairing
from .wave_kernel import green_cone_integral, solver_lattice

__all__ = ["CheckResult", "run_checks", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def check_kernel_cone_integral() -> CheckResult:
    got = green_cone_integral(1.0, 2.0)
    return _result(
        "kernel_cone_integral", abs(got - 0.25) < 1e-14, f"got {got!r}, want 0.25"
    )


def check_rotation_roundtrip() -> CheckResult:
    lat = solver_lattice(1.0, -1.0, 2.0, 0.125)
    rng = np.random.Generator(np.random.PCG64(7))
    t = rng.uniform(0.0, 1.0, 200)
    x = rng.uniform(0.0, 1.0, 200)
    v1, v2 = lat.to_rotated((t, x))
    t2, x2 = lat.from_rotated((v1, v2))
    gap = max(np.max(np.abs(t2 - t)), np.max(np.abs(x2 - x)))
    return _result("rotation_roundtrip", gap < 1e-12, f"max round-trip gap {gap:.2e}")


def check_rotation_order() -> CheckResult:
    # cone order (s,y) <= (t,x) iff |x-y| <= t-s iff both rotated coords ordered
    lat = solver_lattice(1.0, -1.0, 2.0, 0.25)
    rng = np.random.Generator(np.random.PCG64(11))
    pts = rng.uniform(-0.5, 1.5, size=(300, 2))
    bad = 0
    for (s, y), (t, x) in zip(pts[:150], pts[150:]):
        cone = abs(x - y) <= (t - s)
        a1, a2 = lat.to_rotated((s, y))
        b1, b2 = lat.to_rotated((t, x))
        split = (a1 <= b1 + 1e-12) and (a2 <= b2 + 1e-12)
        if cone != split:
            bad += 1
    return _result("rotation_order", bad == 0, f"{bad} order mismatches out of 150")


def check_clipped_area_total() -> CheckResult:
    lat = solver_lattice(1.0, -1.0, 2.0, 0.125)
    total = float(lat.clipped_areas().sum())
    c = -math.sqrt(2.0) * lat.origin.t
    want = lat.side1 * lat.side2 - 0.5 * c * c
    return _result(
        "clipped_area_total", abs(total - want) < 1e-10, f"got {total:.12f}, want {want:.12f}"
    )


def check_stable_variance_quadrature() -> CheckResult:
    spec = LevyMeasureSpec(family=AlphaStableSymmetric(alpha=1.5), epsilon=0.7)
    fam = spec.family
    got = variance(spec)
    want, _ = quad(lambda z: 2.0 * z * z * z ** (-1.0 - fam.alpha), 0.0, spec.epsilon)
    return _result(
        "stable_variance_quadrature",
        abs(got - want) < 1e-10 * max(1.0, abs(want)),
        f"closed form {got:.12f}, quadrature {want:.12f}",
    )


def check_gamma_drift_quadrature() -> CheckResult:
    spec = LevyMeasureSpec(family=GammaSubordinator(rate=1.3), epsilon=0.5)
    floor = 0.05
    got = compensator_drift(spec, floor)
    want, _ = quad(lambda z: 1.3 * math.exp(-1.3 * z), floor, spec.epsilon)
    return _result(
        "gamma_drift_quadrature",
        abs(got - want) < 1e-10,
        f"closed form {got:.12f}, quadrature {want:.12f}",
    )


def check_condition_verdicts() -> CheckResult:
    a = default_alpha_config()
    g = default_gamma_config()
    va = condition_verdict(a.measure, a.kappas, a.epsilons).verdict
    vg = condition_verdict(g.measure, g.kappas, g.epsilons).verdict
    ok = (va == "HOLDS") and (vg == "FAILS")
    return _result("condition_verdicts", ok, f"stable -> {va}, gamma -> {vg}")


def check_jump_record_reproducible() -> CheckResult:
    spec = LevyMeasureSpec(family=AlphaStableSymmetric(alpha=1.2), epsilon=1.0)
    recs = []
    for _ in range(2):
        rng = path_rng(42, 0, 0)
        recs.append(simulate_jump_record(spec, 1.0, -1.0, 2.0, 0.3, rng))
    r0, r1 = recs
    same = (
        r0.count == r1.count
        and np.array_equal(r0.t, r1.t)
        and np.array_equal(r0.x, r1.x)
        and np.array_equal(r0.z, r1.z)
    )
    return _result("jump_record_reproducible", same, f"{r0.count} jumps, bitwise equal: {same}")


def check_binning_conserves_mass() -> CheckResult:
    spec = LevyMeasureSpec(family=GammaSubordinator(rate=1.0), epsilon=1.0)
    rng = path_rng(42, 1, 0)
    rec = simulate_jump_record(spec, 1.0, -1.0, 2.0, 0.2, rng)
    lat = solver_lattice(1.0, -1.0, 2.0, 0.25)
    kept = filter_to_lattice(rec, lat)
    sigma = math.sqrt(variance(spec))
    inc = levy_cell_increments(kept, lat, sigma)
    got = float(inc.values.sum()) * sigma
    want = float(kept.z.sum()) - kept.drift * float(lat.clipped_areas().sum())
    return _result(
        "binning_conserves_mass",
        abs(got - want) < 1e-10 * max(1.0, abs(want)),
        f"binned total {got:.10f}, direct total {want:.10f}",
    )


def check_gaussian_cell_variance() -> CheckResult:
    lat = solver_lattice(1.0, -1.0, 2.0, 0.25)
    rng = path_rng(42, 2, 0)
    areas = lat.clipped_areas()
    n = 400
    acc = np.zeros_like(areas)
    for _ in range(n):
        acc += gaussian_cell_increments(lat, rng).values ** 2
    live = areas > 1e-12
    ratio = acc[live] / (n * areas[live])
    gap = float(np.max(np.abs(ratio - 1.0)))
    # 400 draws per cell: chi-square fluctuation is about 4.4 sigma at worst
    return _result(
        "gaussian_cell_variance", gap < 0.45, f"worst variance ratio error {gap:.3f}"
    )


def check_event_solver_brute_force() -> CheckResult:
    spec = LevyMeasureSpec(family=AlphaStableSymmetric(alpha=0.8), epsilon=1.0)
    rng = path_rng(42, 3, 0)
    rec = simulate_jump_record(spec, 1.0, -1.0, 2.0, 0.45, rng)
    f = lambda u: 0.5 * u + 1.0
    sol = solve_event_driven(rec, f, 1.0)
    # recompute every node value by direct summation over earlier jumps
    worst = 0.0
    for k in range(rec.count):
        mask = (rec.t < rec.t[k]) & (np.abs(rec.x - rec.x[k]) <= rec.t[k] - rec.t)
        u_k = float(sol.weights[mask].sum())
        worst = max(worst, abs(u_k - sol.node_values[k]))
    return _result(
        "event_solver_brute_force",
        worst < 1e-12,
        f"{rec.count} jumps, worst node gap {worst:.2e}",
    )


def check_grid_recursion_example() -> CheckResult:
    # 2x2 block, f(u) = u + 1, increments [[1,2],[4,8]]:
    # the far node accumulates (1+2) + (4 + (1+1)*8) = 23
    lat = solver_lattice(1.0, -1.5, 1.5, 1.5 * math.sqrt(2.0) / 2.0)
    from .noise import CellIncrements

    inc = CellIncrements(lattice=lat, values=np.array([[1.0, 2.0], [4.0, 8.0]]))
    grid = solve_grid(inc, lambda u: u + 1.0)
    want = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 3.0], [0.0, 5.0, 23.0]])
    gap = float(np.max(np.abs(grid.values - want)))
    return _result("grid_recursion_example", gap < 1e-12, f"max node gap {gap:.2e}")


def check_single_jump_field_value() -> CheckResult:
    from .noise import JumpRecord

    rec = JumpRecord(
        t=np.array([0.25]),
        x=np.array([0.1]),
        z=np.array([0.8]),
        domain=(1.0, -1.0, 2.0),
        floor=0.0,
        drift=0.0,
    )
    sol = solve_event_driven(rec, lambda u: np.ones_like(u), 2.0)
    got = float(sol.eval_many(np.array([1.0]), np.array([0.1]))[0])
    want = 0.5 * 0.8 / 2.0
    return _result(
        "single_jump_field_value", abs(got - want) < 1e-14, f"got {got!r}, want {want!r}"
    )


def check_grid_matches_single_jump() -> CheckResult:
    from .noise import JumpRecord

    rec = JumpRecord(
        t=np.array([0.2]),
        x=np.array([0.5]),
        z=np.array([1.0]),
        domain=(1.0, -1.0, 2.0),
        floor=0.0,
        drift=0.0,
    )
    lat = solver_lattice(1.0, -1.0, 2.0, 1.0 / 64.0)
    inc = levy_cell_increments(filter_to_lattice(rec, lat), lat, 1.0)
    grid = solve_wave_grid(inc, lambda u: np.ones_like(u))
    probe_t = np.array([0.9])
    probe_x = np.array([0.5])
    got = float(grid.eval(probe_t[0], probe_x[0]))
    exact = float(
        solve_event_driven(rec, lambda u: np.ones_like(u), 1.0).eval_many(probe_t, probe_x)[0]
    )
    return _result(
        "grid_matches_single_jump",
        abs(got - exact) < 1e-12,
        f"grid {got!r}, event {exact!r}",
    )


def check_hermite_normalization() -> CheckResult:
    got = float(hermite_all(0, np.array([0.0]))[0, 0])
    want = math.pi ** (-0.25)
    return _result(
        "hermite_normalization", abs(got - want) < 1e-14, f"h0(0) = {got!r}, want {want!r}"
    )


def check_hermite_orthonormal() -> CheckResult:
    nodes, wts = quadrature_grid((-12.0, 12.0), panel=0.5, order=16)
    basis = hermite_all(12, nodes)
    gram = (basis * wts[None, :]) @ basis.T
    gap = float(np.max(np.abs(gram - np.eye(13))))
    return _result("hermite_orthonormal", gap < 1e-10, f"worst Gram entry error {gap:.2e}")


def check_hermite_derivative() -> CheckResult:
    xs = np.linspace(-3.0, 3.0, 25)
    d = 1e-5
    got = hermite_deriv(8, xs)
    fd = (hermite_eval(8, xs + d) - hermite_eval(8, xs - d)) / (2.0 * d)
    gap = float(np.max(np.abs(got - fd)))
    return _result("hermite_derivative", gap < 1e-8, f"max ladder vs FD gap {gap:.2e}")


def check_projection_recovers_mode() -> CheckResult:
    coeffs = project(lambda x: hermite_eval(5, x), q_max=10, window=(-10.0, 10.0))
    want = np.zeros(11)
    want[5] = 1.0
    gap = float(np.max(np.abs(coeffs.coeffs - want)))
    return _result("projection_recovers_mode", gap < 1e-10, f"max coefficient error {gap:.2e}")


def check_bump_derivatives() -> CheckResult:
    bump = SmoothBump(0.0, 1.0)
    xs = np.linspace(0.05, 0.95, 19)
    d = 1e-6
    g1 = float(np.max(np.abs(bump.deriv(xs) - (bump(xs + d) - bump(xs - d)) / (2 * d))))
    g2 = float(
        np.max(np.abs(bump.second_deriv(xs) - (bump(xs + d) - 2 * bump(xs) + bump(xs - d)) / d**2))
    )
    ok = g1 < 1e-6 and g2 < 1e-3
    return _result("bump_derivatives", ok, f"first-gap {g1:.2e}, second-gap {g2:.2e}")


def check_velocity_single_jump() -> CheckResult:
    from .noise import JumpRecord

    rec = JumpRecord(
        t=np.array([0.25]),
        x=np.array([0.4]),
        z=np.array([1.5]),
        domain=(1.0, -1.0, 2.0),
        floor=0.0,
        drift=0.0,
    )
    sol = solve_event_driven(rec, lambda u: np.ones_like(u), 1.0)
    bump = SmoothBump(0.0, 1.0)
    t = 0.75
    got = velocity_pairing(sol, bump, t)
    lag = t - 0.25
    want = 0.5 * (bump(0.4 + lag) + bump(0.4 - lag)) * 1.5
    return _result(
        "velocity_single_jump", abs(got - want) < 1e-13, f"got {got!r}, want {want!r}"
    )


def check_characteristics_identity() -> CheckResult:
    bump = SmoothBump(0.2, 0.8)
    psi1, psi2 = characteristics_pair(bump, 1.0)
    s, y, d = 0.4, 0.55, 1e-4
    lhs = (psi2(s + d, y) - psi2(s - d, y)) / (2.0 * d)
    gap = abs(lhs + psi1(s, y))
    return _result(
        "characteristics_identity", gap < 1e-6, f"time-derivative identity gap {gap:.2e}"
    )


def check_ks_example() -> CheckResult:
    got = ks_two_sample(np.array([1.0, 2.0, 3.0]), np.array([1.5, 2.5, 3.5]))
    return _result("ks_example", abs(got - 1.0 / 3.0) < 1e-15, f"got {got!r}, want 1/3")


def check_characteristic_small_theta() -> CheckResult:
    spec = LevyMeasureSpec(family=AlphaStableSymmetric(alpha=1.5), epsilon=0.5)
    theta = np.array([1e-3])
    got = complex(jump_characteristic_integral(spec, theta)[0])
    want = -0.5 * theta[0] ** 2 * variance(spec)
    rel = abs(got - want) / abs(want)
    return _result(
        "characteristic_small_theta", rel < 1e-4, f"relative gap to quadratic law {rel:.2e}"
    )


def check_config_roundtrip() -> CheckResult:
    cfg = default_gamma_config()
    back = config_from_dict(config_to_dict(cfg))
    ok = back == cfg and config_hash(back) == config_hash(cfg)
    return _result("config_roundtrip", ok, f"hash {config_hash(cfg)}")


def check_probe_alignment() -> CheckResult:
    cfg = default_alpha_config()
    lat = aligned_lattice(cfg)
    i, j = probe_node(cfg, lat)
    n1, n2 = lat.shape
    ok = 0 < i <= n1 and 0 < j <= n2
    return _result(
        "probe_alignment", ok, f"probe node ({i}, {j}) on a {n1}x{n2} lattice"
    )


def check_seed_streams_disjoint() -> CheckResult:
    a = path_rng(42, 0, 0).standard_normal(4)
    b = path_rng(42, 0, 1).standard_normal(4)
    c = path_rng(42, 1, 0).standard_normal(4)
    a2 = path_rng(42, 0, 0).standard_normal(4)
    ok = np.array_equal(a, a2) and not np.array_equal(a, b) and not np.array_equal(a, c)
    return _result("seed_streams_disjoint", ok, "replay equal, siblings distinct")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_kernel_cone_integral,
    check_rotation_roundtrip,
    check_rotation_order,
    check_clipped_area_total,
    check_stable_variance_quadrature,
    check_gamma_drift_quadrature,
    check_condition_verdicts,
    check_jump_record_reproducible,
    check_binning_conserves_mass,
    check_gaussian_cell_variance,
    check_event_solver_brute_force,
    check_grid_recursion_example,
    check_single_jump_field_value,
    check_grid_matches_single_jump,
    check_hermite_normalization,
    check_hermite_orthonormal,
    check_hermite_derivative,
    check_projection_recovers_mode,
    check_bump_derivatives,
    check_velocity_single_jump,
    check_characteristics_identity,
    check_ks_example,
    check_characteristic_small_theta,
    check_config_roundtrip,
    check_probe_alignment,
    check_seed_streams_disjoint,
)


def run_checks() -> list[CheckResult]:
    out = []
    for check in CHECKS:
        try:
            out.append(check())
        except LevyWaveError as exc:
            out.append(_result(check.__name__, False, f"raised {type(exc).__name__}: {exc}"))
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failing check
            out.append(_result(check.__name__, False, f"crashed: {type(exc).__name__}: {exc}"))
    return out
