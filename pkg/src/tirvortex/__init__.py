"""Total-internal-reflection wave fields and their energy-flow vortices."""

from .scenario import (
    DomainError,
    Interface,
    Medium,
    Mode,
    ModeField,
    Scenario,
    build_braunbek_scenario,
    build_single_wave,
    build_wolter_scenario,
    critical_angle,
    evanescent_decay,
    fresnel_reflection,
    gh_shift,
)
from .scalarfield import (
    ComplexBasis,
    DegenerateBasisError,
    FieldSample,
    InvalidModeError,
    ModeSumField,
    NodeError,
    PlaneField,
    ScalarMode,
    ScenarioField,
    VectorMode,
    as_plane_field,
    continuity_residual,
    eikonal_momentum,
    eval_field,
    make_basis,
    scalar_to_vector,
    vector_to_scalar,
    velocity,
)
from .flow import (
    BernoulliParams,
    BernoulliSolution,
    CirculationResult,
    CriticalPoint,
    GeneralBernoulli,
    InvalidContourError,
    Streamline,
    bernoulli_closed_form,
    bernoulli_rk4,
    circle_contour,
    circulation,
    find_nodes,
    find_stagnation,
    trace_streamline,
)

__version__ = "0.1.0"
