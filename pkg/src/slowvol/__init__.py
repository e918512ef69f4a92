"""Polynomial volume growth of homogeneous Hamiltonian flows.

Four measurement pipelines and a runner: exact Cayley-ball growth of
matrix groups with Bass-Guivarc'h degrees, degree-2 Hamiltonian flow
models on cotangent charts, fiber-sphere volume growth under those
flows with scaling-exponent fits, and a symbolic manifold catalog
supplying the lower bounds the measurements are compared against.
"""

from .errors import (
    BudgetExceeded,
    CatalogInvariantError,
    ConfigError,
    ConstraintViolation,
    EnergyDriftExceeded,
    GradientMismatch,
    MalformedDescriptor,
    NonInvertibleGenerator,
    NonPositiveH,
    NotUnitriangular,
    SeriesTooShort,
    SlowvolError,
    ZeroCovector,
)
from .fitting import (
    EXPONENT_INFINITY,
    ScalingFit,
    cumulative_trapezoid,
    fit_scaling,
    trailing_window,
)
from .group_growth import (
    BUILTIN_GENERATORS,
    GeneratorSet,
    GrowthSeries,
    LcsRanks,
    SlowGrowthFit,
    ball_counts,
    bass_guivarch,
    free_group_pair,
    heisenberg,
    hirsch_bound,
    hirsch_length,
    integer_lattice,
    lattice_translations,
    load_generator_file,
    malcev_lcs_ranks,
    read_growth_csv,
    save_generator_file,
    slow_growth_exponent,
    unitriangular_group,
    write_growth_csv,
)
from .flow_models import (
    FlatTorus,
    FlowConfig,
    HamiltonianModel,
    Nil3,
    PhasePoint,
    RandersTorus2,
    RoundSphere2,
    Sol3,
    StarshapedTorus2,
    catalog_models,
    chart_distance,
    conjugation_residual,
    dilation,
    euler_residual,
    flow,
    flow_batch,
    gradient,
    gradient_fd_mismatch,
    hamiltonian,
    parse_model,
    write_trajectory_csv,
)
from .volume_growth import (
    FiberSphereMesh,
    MeshThresholds,
    SlowVolFit,
    VolumeSeries,
    evolve_and_measure,
    initial_fiber_sphere,
    initial_punctured_disc,
    integral_growth_check,
    read_volume_csv,
    reduction_gap,
    reduction_series,
    slow_vol_fit,
    write_mesh_csv,
    write_volume_csv,
)
from .gamma_catalog import (
    Atom,
    FiniteCover,
    GammaResult,
    Product,
    catalog_atoms,
    cayley_plane,
    circle,
    complex_projective,
    cross_check_dimension_bound,
    fast,
    finite_cover,
    gamma,
    is_single_generator_type,
    klein_bottle,
    nil_circle_bundle,
    orientable_surface,
    parse,
    product,
    quaternionic_projective,
    real_projective,
    s2xr_quotient,
    s3_quotient,
    sol3,
    sphere,
    t3_finite_quotient,
    theorem_bound,
    torus,
)
from .cli_report import ExperimentConfig, SummaryRow, load_config, main, run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
