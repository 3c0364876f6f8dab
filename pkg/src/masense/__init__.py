"""Direction-estimation error bounds and 3-D movable-antenna trajectory design.

A single receive antenna that keeps moving while it samples a
line-of-sight return synthesizes a virtual aperture; the achievable
direction-estimation accuracy depends on the trajectory only through
the 3x3 covariance of its position samples.  This package evaluates the
resulting closed-form error bounds, verifies them against a numeric
Fisher-information oracle and Monte Carlo maximum-likelihood trials,
and optimizes trajectories to minimize the worst-case bound over an
angular region by successive convex approximation.
"""

__version__ = "0.1.0"

from .geometry import (
    AngleVector,
    CovarianceMatrix,
    DirectionVector,
    FeasibilityReport,
    MovementRegion,
    TangentFrame,
    Trajectory,
    angles_from_direction,
    apv_covariance,
    check_feasibility,
    direction_from_angles,
    position_covariance,
    read_trajectory_csv,
    rotation_to_target,
    tangent_frame,
    trajectory_from_velocities,
    write_trajectory_csv,
)
from .metrics import (
    FimBlocks,
    IsotropyReport,
    MsaebResult,
    PlanarDecomposition,
    SensingScenario,
    correlation_map,
    crb_from_fim,
    fim_oracle,
    geometry_factor,
    isotropy_report,
    msaeb,
    msaeb_from_covariance,
    msaeb_single_direction_rotated,
    planar_decomposition,
    steering_vector,
)
from .benchmarks import BenchmarkSpec, gen_circle, gen_circle3, gen_fpa, gen_upg, generate
from .optimizer import (
    AngularRegion,
    OptimizationProblem,
    ScaTrace,
    discretize_region,
    optimize_single_direction,
    sca_optimize,
    solve_subproblem_p2,
    surrogate_covariance,
    surrogate_objective,
)
from .simulation import (
    McConfig,
    McMsaeResult,
    ReceivedSignal,
    SearchGrid,
    angular_error,
    mle_estimate,
    monte_carlo_msae,
    synthesize_signal,
)
