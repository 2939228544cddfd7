"""platelab: a desk-scale numerical laboratory for a strongly damped
semilinear plate model with localized damping and a nonlocal stiffness
nonlinearity, on a uniform periodic box in one or two dimensions.

The library exposes the grid/field layer, matrix-free operators with an SPD
implicit-step solver, scenario assembly with samplewise admissibility
validation, a semi-implicit integrator, energy/Lyapunov/dissipation
diagnostics, a Newton solver for stationary states, and a reproducible run
harness (YAML configs, NDJSON/CSV bundles, content hashes).
"""

from .energetics import (
    EnergyBreakdown,
    ResidualSeries,
    difference_quotient_energy,
    dissipation,
    energy,
    energy_balance_residual,
    gradient_norm,
    lyapunov,
    standard_observers,
    tail_series,
)
from .grid import Field, Grid, NormKind, make_grid, norm, phase_norm, radial_cutoff, tail_norm
from .harness import (
    ConfigError,
    EnsembleResult,
    RunResult,
    build_scenario,
    config_hash,
    load_config,
    run_ensemble,
    run_scenario,
    sample_initial_data,
    validate_config,
)
from .integrator import BlowUpError, DependenceReport, StepReport, continuous_dependence, evolve, step
from .model import (
    DampingCoefficients,
    HypothesisViolation,
    Nonlinearity,
    Scenario,
    ValidationReport,
    apply_restoring,
    bump_load,
    complementary_patch_damping,
    constant_damping,
    kirchhoff_stiffness,
    linear_nonlinearity,
    make_nonlinearity,
    restoring_integral,
    ring_profile,
    stiffness_primitive_value,
    stiffness_value,
    validate_coefficients,
    validate_nonlinearity,
)
from .operators import (
    ImplicitOperatorSpec,
    SolverError,
    apply_implicit,
    bilaplacian,
    div_coeff_grad,
    gradient,
    laplacian,
    solve_implicit,
    solve_spd,
)
from .state import State, TrajectoryRecord, phase_distance
from .stationary import (
    StationaryResult,
    distance_to_stationary_set,
    search_stationary,
    solve_stationary,
    stationary_residual,
)

__version__ = "0.1.0"
