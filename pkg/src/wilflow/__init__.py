"""Energy-stable finite element schemes for axisymmetric Willmore flow
with spontaneous curvature, on polygonal generating curves."""

from .analysis import (
    ConvergenceTable,
    ErrorTriple,
    SphereExact,
    convergence_study,
    eoc,
    manifold_distance,
    sphere_errors,
    sphere_radius,
)
from .config import ConfigError, RunConfig
from .geometry import (
    CurveCheck,
    Disc,
    PolygonalCurve,
    RoundedCylinder,
    Semicircle,
    ShapeSpec,
    Stadium,
    Thresholds,
    Topology,
    TorusCircle,
    build_curve,
    element_frames,
    mesh_ratio,
    shape_stats,
    validate_state,
    vertex_normals,
)
from .initialization import (
    InitialData,
    bending_energy,
    initial_data,
    initial_mean_curvature,
    zero_velocity_projection,
)
from .quadrature import GAUSS2, GAUSS3, MASS_LUMPED, element_inner_product, lumped_weights
from .schemes import (
    PicardDivergence,
    RunOutput,
    SchemeState,
    StepReport,
    WellPosednessViolation,
    initial_state,
    run_simulation,
    sqrt_metric_ratio,
    step_linear,
    step_nonlinear,
)
from .solver import BorderedBandMatrix, ExactSingularError

__version__ = "0.1.0"
