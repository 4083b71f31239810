"""Forward and inverse kinematics for multi-segment constant-curvature
continuum manipulators.

Provides closed-form SE(3) primitives, analytic Jacobians of the
product-of-exponentials model, three iterative IK solvers (plain Jacobian
pseudo-inverse, damped least squares, and a virtual-variable-length scheme
that shrinks segment lengths to escape boundary singularities) and a
randomized benchmark harness.
"""

from .liegroup import (
    LogBranchError,
    Pose,
    ScrewDecomposition,
    ad_of_twist,
    adjoint_of_pose,
    exp_se3,
    log_se3,
    pseudo_inverse,
    screw_decompose,
    skew3,
    twist_hat,
    twist_vee,
)
from .cc_model import (
    BEND_AXIS,
    MAX_SEGMENTS,
    PHI_REF,
    JacobianMatrix,
    ManipulatorState,
    SegmentState,
    centerline,
    forward_kinematics,
    jacobian_augmented,
    jacobian_standard,
    jacobian_vvl,
    partial_twist_kappa,
    partial_twist_length,
    partial_twist_phi,
    segment_twist,
)
from .solvers import (
    DEADLOCK_BENDING_ANGLE,
    Method,
    SolveResult,
    SolverOptions,
    TrajectoryPoint,
    detect_deadlock,
    error_norm,
    make_initial_guess,
    pose_error_twist,
    solve,
    step_dls,
    step_jacobian,
    step_vvl,
)
from .bench import (
    BenchmarkSpec,
    BenchmarkSummary,
    SummaryCell,
    TrialRecord,
    aggregate,
    run_suite,
    run_trial,
    sample_target,
    sample_workspace,
)

__version__ = "0.1.0"
