"""Release gate: the empirical program behind the normal-approximation
dichotomy, run end to end at desk scale.

Each criterion prints one PASS/FAIL line so a log scrape shows the whole
board.  Budgets: everything here finishes in a few minutes on one core;
the two-arm comparison in criterion 9 dominates.
"""

import math
import time

import numpy as np
import pytest

from levywave import (
    AlphaStableSymmetric,
    GammaSubordinator,
    JumpRecord,
    LevyMeasureSpec,
    SmoothBump,
    additive_variance_experiment,
    compare_experiment,
    default_alpha_config,
    default_gamma_config,
    exponential_martingale_experiment,
    green_cone_integral,
    hermite_all,
    martingale_field_experiment,
    quadrature_grid,
    representation_equivalence_study,
    solve_event_driven,
    solve_grid,
    solver_agreement_study,
    tail_variance_ratio,
    variance,
    weak_residual_study,
)
from levywave.hermite import hermite_deriv_all
from levywave.solver import CellIncrements
from levywave.stats import compensator_path
from levywave.velocity import default_times
from levywave.wave_kernel import ConePoint, RotatedLattice

pytestmark = pytest.mark.acceptance


def verdict(num, ok, detail):
    print(f"\nACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_condition_ratio():
    t0 = time.perf_counter()
    exact_zero = True
    for alpha in (0.5, 1.5):
        for kappa in (0.5, 1.0, 2.0):
            bound = (2.0 * kappa**2 / (2.0 - alpha)) ** (1.0 / alpha)
            for frac in (0.999, 0.5, 0.01, 1e-4):
                spec = LevyMeasureSpec(
                    family=AlphaStableSymmetric(alpha=alpha), epsilon=frac * bound
                )
                if tail_variance_ratio(spec, kappa) != 0.0:
                    exact_zero = False
    gamma = LevyMeasureSpec(family=GammaSubordinator(rate=1.0), epsilon=1e-3)
    gap = abs(tail_variance_ratio(gamma, 1.0) - 0.5)
    dt = time.perf_counter() - t0
    verdict(
        1,
        exact_zero and gap <= 0.02 and dt < 1.0,
        f"stable ratios exactly 0 below threshold: {exact_zero}; "
        f"gamma ratio gap to 0.5 at eps=1e-3: {gap:.5f} (<= 0.02); {dt:.2f}s",
    )


def test_criterion_02_hermite_suite():
    t0 = time.perf_counter()
    x, w = quadrature_grid((-16.0, 16.0), panel=0.25)
    h = hermite_all(50, x)
    gram_err = float(np.max(np.abs((h * w) @ h.T - np.eye(51))))

    xd, wd = quadrature_grid((-16.0, 16.0), panel=0.2)
    d = hermite_deriv_all(20, xd)
    energy_err = max(
        abs(float(np.sum(wd * d[q] ** 2)) - (q + 0.5)) for q in range(21)
    )

    xp = np.linspace(-6.0, 6.0, 121)
    hp = hermite_all(22, xp)
    ode_err = 0.0
    for q in range(21):
        lower = math.sqrt(q * (q - 1)) / 2.0 * hp[q - 2] if q >= 2 else 0.0
        upper = math.sqrt((q + 1) * (q + 2)) / 2.0 * hp[q + 2]
        d2 = lower + upper - (q + 0.5) * hp[q]
        ode_err = max(ode_err, float(np.max(np.abs(d2 - (xp**2 - 1.0 - 2.0 * q) * hp[q]))))
    dt = time.perf_counter() - t0
    verdict(
        2,
        gram_err < 1e-8 and energy_err < 1e-8 and ode_err < 1e-6 and dt < 10.0,
        f"orthonormality {gram_err:.2e} (<1e-8); derivative energy {energy_err:.2e} "
        f"(<1e-8); oscillator residual {ode_err:.2e} (<1e-6); {dt:.2f}s",
    )


def test_criterion_03_cone_integral():
    t0 = time.perf_counter()
    worst = 0.0
    for p in (1.0, 2.0):
        for t in (0.5, 1.0):
            # independent quadrature of the cone cross-section
            s = np.linspace(0.0, t, 20001)
            numeric = np.trapezoid((0.5**p) * 2.0 * (t - s), s)
            worst = max(worst, abs(green_cone_integral(t, p=p) - numeric))
            worst = max(worst, abs(green_cone_integral(t, p=p) - 0.5**p * t * t))
    dt = time.perf_counter() - t0
    verdict(3, worst < 1e-10 and dt < 1.0, f"max gap {worst:.2e} (<1e-10); {dt:.2f}s")


def test_criterion_04_solver_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    f = lambda v: 0.5 * v + 1.0
    exact = True
    for _ in range(100):
        n1 = int(rng.integers(1, 17))
        n2 = int(rng.integers(1, 17))
        vals = rng.standard_normal((n1, n2))
        lat = RotatedLattice(ConePoint(0.0, 0.0), 1.0, (n1, n2))
        grid = solve_grid(CellIncrements(lattice=lat, values=vals), f)
        oracle = np.zeros((n1 + 1, n2 + 1))
        for i in range(1, n1 + 1):
            for j in range(1, n2 + 1):
                s = 0.0
                for a in range(i):
                    row = 0.0
                    for b in range(j):
                        row += f(oracle[a, b]) * vals[a, b]
                    s += row
                oracle[i, j] = s
        if not np.array_equal(grid.values, oracle):
            exact = False
            break

    study = solver_agreement_study(default_alpha_config())
    dt = time.perf_counter() - t0
    verdict(
        4,
        exact and study["passed"],
        f"recursion == cone double sum bitwise on 100 lattices: {exact}; "
        f"event vs grid mesh-gap slope {study['slope']:.2f} (>=0.8) with probes "
        f"anchored at the finest level over deltas {study['deltas']}; {dt:.1f}s",
    )


def test_criterion_05_additive_variance():
    t0 = time.perf_counter()
    cfg = default_alpha_config()
    rows = {}
    ok = True
    for arm in ("gaussian", "levy"):
        res = additive_variance_experiment(cfg, arm, epsilon=0.1, n_paths=10_000, workers=1)
        rows[arm] = res
        ok = ok and res["within_3se"] and abs(res["oracle"] - 0.25) < 1e-14
    dt = time.perf_counter() - t0
    verdict(
        5,
        ok,
        "Var(u(1, 0.5)) vs 0.25: "
        + "; ".join(
            f"{arm} {res['variance']:.5f} +- {res['se']:.5f}" for arm, res in rows.items()
        )
        + f"; both within 3 SE; {dt:.0f}s",
    )


def test_criterion_06_strong_martingale():
    t0 = time.perf_counter()
    res = martingale_field_experiment(default_alpha_config(), n_paths=10_000, workers=1)
    zs = {k: c["z"] for k, c in res["orthogonality"].items()}
    worst_z = max(abs(z) for z in zs.values())
    c = res["cairoli"]
    dt = time.perf_counter() - t0
    verdict(
        6,
        res["passed"],
        f"rectangle-increment orthogonality worst |z| {worst_z:.2f} (<3); "
        f"factor-16 margin {c['margin']:.3f} +- {c['se']:.3f} (holds: {c['holds']}); {dt:.0f}s",
    )


def test_criterion_07_representation_equivalence():
    t0 = time.perf_counter()
    res = representation_equivalence_study(default_alpha_config(), n_paths=10)
    dt = time.perf_counter() - t0
    verdict(
        7,
        res["passed"] and res["worst_fine_gap"] < 1e-4,
        f"dual-norm gap at the fine inner step {res['worst_fine_gap']:.2e} (<1e-4); "
        f"worst halving ratio {res['worst_ratio']:.2f} (<=0.6, second-order segments "
        f"push below 0.5); 10 seeded paths; {dt:.1f}s",
    )


def test_criterion_08_weak_residual_decay():
    t0 = time.perf_counter()
    res = weak_residual_study(default_alpha_config(), n_paths=20)
    dt = time.perf_counter() - t0
    means = ", ".join(f"{m:.2e}" for m in res["mean_residuals"])
    verdict(
        8,
        res["passed"],
        f"mean |residual| over deltas {res['deltas']}: [{means}]; "
        f"fitted slope {res['slope']:.2f} (>=0.8); {dt:.0f}s",
    )


def test_criterion_09_dichotomy():
    t0 = time.perf_counter()
    light = compare_experiment(default_alpha_config(alpha=1.5), workers=1)["report"]
    heavy = compare_experiment(default_gamma_config(), workers=1)["report"]

    lu = [row["u"] for row in light["ks"]]
    slack = default_alpha_config().thresholds.monotone_slack
    light_ok = (
        light["dichotomy_pass"] is True
        and lu[-1] < 0.06
        and all(b <= a + slack for a, b in zip(lu, lu[1:]))
    )
    hu = [row["u"] for row in heavy["ks"]]
    heavy_ok = heavy["dichotomy_pass"] is True and all(v > 0.10 for v in hu)
    dt = time.perf_counter() - t0
    verdict(
        9,
        light_ok and heavy_ok,
        f"stable arm KS(u) {[round(v, 4) for v in lu]} non-increasing, final <0.06; "
        f"gamma arm KS(u) {[round(v, 4) for v in hu]} all >0.10; v-marginals via "
        f"shipped thresholds; {dt:.0f}s",
    )


def test_criterion_10_martingale_problem():
    t0 = time.perf_counter()
    # quadratic coefficient of the compensator at small frequency
    spec = LevyMeasureSpec(family=AlphaStableSymmetric(alpha=1.5), epsilon=0.1)
    sigma = math.sqrt(variance(spec))
    rec = JumpRecord(
        t=np.array([0.15, 0.55]),
        x=np.array([0.3, 0.7]),
        z=np.array([0.08, -0.06]),
        domain=(1.0, -1.0, 2.0),
        floor=0.05,
        drift=0.0,
    )
    f = lambda u: 0.5 * np.asarray(u, dtype=float) + 1.0
    sol = solve_event_driven(rec, f, sigma=sigma)
    phi1 = SmoothBump(0.0, 1.0)
    phi2 = SmoothBump(-0.2, 1.2)
    times = default_times(1.0, 33)
    xi = 0.1
    a_levy = compensator_path(sol, xi, phi1, phi2, spec, times, f, sigma=sigma)
    a_gauss = compensator_path(sol, xi, phi1, phi2, None, times, f, sigma=sigma)
    # symmetric measure: the jump piece is real, the shared drift piece
    # imaginary, so the real parts isolate the quadratic coefficients
    rel = abs(a_levy[-1].real - a_gauss[-1].real) / abs(a_gauss[-1].real)

    orth = exponential_martingale_experiment(default_alpha_config(), workers=1)
    worst_z = max(abs(c["z"]) for c in orth["orthogonality"].values())
    dt = time.perf_counter() - t0
    verdict(
        10,
        rel <= 1e-4 and orth["passed"],
        f"compensator quadratic coefficient relative gap {rel:.2e} (<=1e-4); "
        f"exponential-martingale worst |z| {worst_z:.2f} (<3) on the Gaussian arm; {dt:.0f}s",
    )
