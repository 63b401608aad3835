"""Damped wave equations with fractional damping and dynamic Wentzell boundary conditions."""

from .config import RunConfig, config_from_dict, parse_config
from .errors import (
    AssemblyError,
    BlowUpError,
    ConfigurationError,
    ConstraintError,
    DimensionError,
    IntegrationError,
    NumericError,
    ParameterError,
    PreconditionError,
    StepError,
    WentzellError,
)
from .galerkin import build_modal_system, compute_energy, integrate, project_initial_data, step
from .geometry import GeometryKind, GeometrySpec, build_geometry, compute_measures
from .nonlinearity import NonlinearitySpec, PowerTerm, SineTerm, check_balance, estimate_poincare_constant
from .operator import (
    ExponentConvention,
    FractionalParams,
    Realization,
    assemble_blocks,
    assemble_wentzell,
    build_damping_matrix,
    solve_eigenproblem,
)
from .runner import Command, RunSummary, run

__version__ = "0.1.0"
