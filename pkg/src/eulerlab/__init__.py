"""eulerlab: spectral verification of complex-time analyticity for ideal flow.

The package builds, at desk scale, the machinery needed to watch ideal-fluid
particle trajectories continue into complex time: spectral calculus on the
periodic box, a volume-preserving chart around the identity map, a
Lagrangian-frame velocity solver, Picard iteration over complex-time disks,
and the diagnostics that turn all of it into an analyticity verdict.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .chart import ChartProblem, ChartSolution, chart_map, determinant_residual, nonlinearity_P, solve_phi
from .complex_time import (
    AnalyticOde,
    MonodromyReport,
    RadiusEstimate,
    RayPath,
    TaylorSeries,
    monodromy_check,
    picard_disk,
    radius_estimate,
    ray_integrate,
    taylor_from_circle,
)
from .config import FlowProblem
from .diagnostics import (
    DiagnosticsReport,
    analyticity_report,
    fluid_ode,
    parameter_analyticity_probe,
    parameter_circle_series,
    velocity_cross_check,
    vorticity_transport_error,
)
from .errors import (
    ConvergenceError,
    EulerLabError,
    EvaluationFailure,
    SingularMapError,
    UNIFORM_FLOW_MESSAGE,
    ValidationError,
)
from .flows import (
    FlowTrajectory,
    abc_flow,
    corner_and_random_points,
    euler_reference_evolve,
    evolve_displacement,
    evolve_real,
    exp_map,
    initial_condition,
    kinetic_energy,
    random_band,
    taylor_green,
    uniform_flow,
    validate_initial,
)
from .lagrangian import (
    DisplacementMap,
    JacobianBundle,
    VelocitySolve,
    conjugated_curl,
    conjugated_div,
    identity_map,
    jacobian,
    pushforward_vorticity,
    solve_velocity,
)
from .snapshot import load_field, save_field
from .spectral import (
    DEFAULT_SOBOLEV_INDEX,
    GridSpec,
    SobolevIndex,
    SpectralField,
    curl,
    curl_inv,
    dealias,
    differentiate,
    div,
    eval_at_points,
    field_from_coeffs,
    field_from_values,
    grad,
    l2_norm,
    laplace_inv,
    laplacian,
    multiply,
    project_div_free,
    sobolev_norm,
    zero_field,
)

__version__ = "0.1.0"
