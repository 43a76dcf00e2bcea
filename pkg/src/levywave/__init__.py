"""Wave equation in one space dimension under truncated jump noise.

The package simulates the mild solution driven by rescaled truncated
jump noise or by Gaussian white noise, tracks the distribution-valued
velocity process in an oscillator-eigenbasis norm, and measures how
close the jump-driven law comes to the Gaussian one as the truncation
level falls, alongside the exact tail criterion that decides the limit.
"""

from .bumps import SmoothBump
from .config import (
    DichotomyThresholds,
    ExperimentConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_alpha_config,
    default_gamma_config,
    load_config,
    save_config,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    DriftUnsupported,
    EmptySample,
    EmptySupport,
    FloorAboveTruncation,
    InsufficientSchedule,
    JumpOutsideLattice,
    LengthMismatch,
    LevyWaveError,
    NonFinite,
    OutOfDomain,
    QuadratureFailure,
    ShapeMismatch,
    SupportViolation,
    WindowTooSmall,
)
from .experiments import (
    additive_variance_experiment,
    aligned_lattice,
    compare_experiment,
    condition_report,
    exponential_martingale_experiment,
    martingale_field_experiment,
    path_rng,
    probe_node,
    representation_equivalence_study,
    run_arm,
    solver_agreement_study,
    weak_residual_study,
)
from .hermite import (
    HermiteCoeffs,
    dual_norm,
    hermite_all,
    hermite_deriv,
    hermite_eval,
    primal_norm,
    project,
    quadrature_grid,
)
from .levy_measures import (
    AlphaStableSymmetric,
    AtomTable,
    ConditionReport,
    GammaSubordinator,
    LevyMeasureSpec,
    PointMass,
    compensator_drift,
    condition_verdict,
    mass_above,
    measure_from_dict,
    measure_to_dict,
    sample_amplitudes,
    tail_second_moment,
    tail_variance_ratio,
    variance,
    variance_below,
)
from .noise import (
    CellIncrements,
    JumpRecord,
    filter_to_lattice,
    gaussian_cell_increments,
    hybrid_cell_increments,
    jump_intensity,
    levy_cell_increments,
    simulate_jump_record,
)
from .solver import (
    EventSolution,
    FieldGrid,
    RefinementReport,
    eval_field,
    eval_field_many,
    refinement_study,
    solve_event_driven,
    solve_grid,
    solve_wave_grid,
)
from .stats import (
    OrthogonalityResult,
    SampleSet,
    StatsReport,
    compensator_path,
    jump_characteristic_integral,
    ks_two_sample,
    martingale_diagnostic,
    martingale_orthogonality,
    moment_report,
    observable_path,
)
from .validate import CheckResult, run_checks
from .velocity import (
    PathAtoms,
    VelocityPath,
    characteristics_pair,
    default_times,
    field_atoms,
    path_atoms,
    velocity_coeffs_direct,
    velocity_coeffs_semimartingale,
    velocity_pairing,
    weak_residual,
)
from .wave_kernel import (
    ConePoint,
    RotatedLattice,
    green,
    green_cone_integral,
    precedes,
    solver_lattice,
)

__version__ = "0.1.0"
