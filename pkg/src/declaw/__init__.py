"""Simulation and verification toolkit for scalar degenerate convection-diffusion laws."""

from .errors import (
    AnalysisError,
    ConfigurationError,
    DeclawError,
    DomainError,
    GenerationError,
    ShapeError,
    StabilityError,
    ValidationError,
)
from .grid import (
    FarField,
    GridFunction,
    LatticeSpec,
    Periodic,
    l1_distance,
    l1_plus,
    load_grid,
    make_lattice,
    periodize_inf,
    periodize_sup,
    save_grid,
    shift_mean,
    superlevel_measure,
    v_norm,
    x_norm,
)
from .harness import (
    Check,
    DecaySeries,
    PropertyReport,
    burgers_box_exact,
    bump_initial,
    check_dyadic_blocks,
    check_periodic_uniqueness,
    check_properties,
    check_truncation_convergence,
    dyadic_blocks_initial,
    run_periodic_decay,
    run_sandwich_decay,
    run_whole_space_decay,
)
from .model import (
    GNReport,
    ScalarModel,
    burgers_model,
    check_gn,
    heat_model,
    kruzhkov_fluxes,
    linear_model,
    load_model,
    nearest_active_values,
    periodic_decay_hypothesis,
    save_model,
)
from .poly import PiecewisePoly, chain_eval, chain_poly, primitive
from .residual import SpaceTimeBump, entropy_ramp, entropy_residual
from .solver import (
    SolverConfig,
    Trajectory,
    cfl_dt,
    common_dt,
    solve,
    solve_pair,
    step,
    truncation_sequence,
)

__version__ = "0.1.0"
