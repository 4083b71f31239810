"""Iterative inverse kinematics: error twist, the three update rules
(plain Jacobian, damped least squares, virtual-variable-length) and the
solve loop with convergence and deadlock instrumentation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels, cc_model
from .cc_model import ManipulatorState, SegmentState
from .liegroup import LogBranchError, Pose, log_se3, pseudo_inverse

__all__ = [
    "Method",
    "SolverOptions",
    "SolveResult",
    "TrajectoryPoint",
    "DEADLOCK_BENDING_ANGLE",
    "pose_error_twist",
    "error_norm",
    "step_jacobian",
    "step_dls",
    "step_vvl",
    "solve",
    "detect_deadlock",
    "make_initial_guess",
]

# A segment whose bending angle reaches 2*pi has coiled onto itself.
DEADLOCK_BENDING_ANGLE = 2.0 * np.pi

FAIL_CAUSES = ("", "max-iter", "log-branch")


class Method(str, enum.Enum):
    JACOBIAN = "jacobian"
    DLS = "dls"
    VVL = "vvl"

    @property
    def _code(self) -> int:
        return {Method.JACOBIAN: _kernels.METHOD_JACOBIAN,
                Method.DLS: _kernels.METHOD_DLS,
                Method.VVL: _kernels.METHOD_VVL}[self]


@dataclass(frozen=True)
class SolverOptions:
    method: Method = Method.JACOBIAN
    beta: float = 0.5                 # iteration step size factor
    lam: float = 0.01                 # DLS damping
    tol: float = 1e-4                 # convergence tolerance on e_V
    max_iter: int = 500
    vvl_initial_length_factor: float = 1.0 / 3.0
    record_trajectory: bool = False
    length_floor_fraction: float = 0.05
    # Cap on the norm of the (curvature, plane angle) part of the VVL update;
    # the augmented system is badly conditioned near the straight pose and
    # uncapped steps can coil segments in a single iteration. Length updates
    # are not capped (the length-restoration rows are self-correcting).
    # <= 0 disables. Plain Jacobian/DLS updates are never capped (they are
    # the uninstrumented benchmarks).
    vvl_step_limit: float = 2.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.vvl_initial_length_factor <= 1:
            raise ValueError("vvl_initial_length_factor must be in (0, 1]")
        if not 0 < self.length_floor_fraction < 1:
            raise ValueError("length_floor_fraction must be in (0, 1)")


@dataclass(frozen=True)
class TrajectoryPoint:
    iteration: int
    state: ManipulatorState
    error: float


@dataclass(frozen=True)
class SolveResult:
    converged: bool
    iterations: int
    final_error: float
    final_state: ManipulatorState
    deadlock_flags: tuple[bool, ...]
    fail_cause: str = ""              # "", "max-iter", "deadlock-flagged", "log-branch"
    trajectory: tuple[TrajectoryPoint, ...] | None = None


def pose_error_twist(current: Pose, target: Pose) -> np.ndarray:
    """Error twist log(target * current^-1), in the fixed (spatial) frame."""
    return log_se3(target @ current.inverse())


def error_norm(V_D: np.ndarray) -> float:
    """Composite pose error e_V = |V_D|, blending rotation angle, axial and
    circumferential translation of the error screw."""
    return float(np.linalg.norm(V_D))


def _deltas(state: ManipulatorState, target: Pose, opts: SolverOptions,
            method: Method) -> np.ndarray:
    current = cc_model.forward_kinematics(state)
    V_D = pose_error_twist(current, target)
    if method is Method.JACOBIAN:
        J = cc_model.jacobian_standard(state).entries
        return opts.beta * (pseudo_inverse(J) @ V_D)
    if method is Method.DLS:
        J = cc_model.jacobian_standard(state).entries
        G = J @ J.T + opts.lam**2 * np.eye(6)
        return opts.beta * (J.T @ np.linalg.solve(G, V_D))
    J = cc_model.jacobian_augmented(state).entries
    _, _, l, L = state.arrays()
    residual = np.concatenate([V_D, L - l])
    return opts.beta * (pseudo_inverse(J) @ residual)


def step_jacobian(state: ManipulatorState, target: Pose,
                  opts: SolverOptions) -> np.ndarray:
    """beta * pinv(J) @ V_D; entries ordered (dk1, dp1, ..., dkn, dpn)."""
    return _deltas(state, target, opts, Method.JACOBIAN)


def step_dls(state: ManipulatorState, target: Pose,
             opts: SolverOptions) -> np.ndarray:
    """beta * J^T (J J^T + lambda^2 I)^-1 V_D; ordering as step_jacobian."""
    return _deltas(state, target, opts, Method.DLS)


def step_vvl(state: ManipulatorState, target: Pose,
             opts: SolverOptions) -> np.ndarray:
    """beta * pinv(J_a) @ [V_D; L - l]; entries grouped (dk..., dp..., dl...)."""
    return _deltas(state, target, opts, Method.VVL)


def detect_deadlock(state: ManipulatorState) -> tuple[bool, ...]:
    """Flag segments whose bending angle |kappa*l| has reached 2*pi."""
    return tuple(abs(s.bending_angle) >= DEADLOCK_BENDING_ANGLE
                 for s in state.segments)


def make_initial_guess(n: int, nominal_lengths: Sequence[float],
                       opts: SolverOptions) -> ManipulatorState:
    """Straight rest configuration; VVL starts with shortened virtual
    lengths (factor * L), the other methods at the nominal lengths."""
    factor = (opts.vvl_initial_length_factor
              if opts.method is Method.VVL else 1.0)
    return ManipulatorState(tuple(
        SegmentState(kappa=0.0, phi=0.0, l=factor * float(L), L=float(L))
        for L in nominal_lengths))


def solve(initial: ManipulatorState, target: Pose,
          opts: SolverOptions) -> SolveResult:
    """Run the selected update rule from `initial` until the convergence
    metric reaches opts.tol or opts.max_iter steps have been taken.

    Convergence metric: e_V for Jacobian/DLS; for VVL the augmented
    residual norm |[V_D; L-l]|, after which lengths snap to nominal and the
    recomputed e_V must itself be <= tol. Deadlock flags are sticky over
    all visited states and never alter the iteration.
    """
    kappa, phi, l, L = initial.arrays()
    n = initial.n
    if opts.record_trajectory:
        traj_params = np.zeros((opts.max_iter + 1, 3, n))
        traj_err = np.zeros(opts.max_iter + 1)
    else:
        traj_params = np.zeros((1, 3, n))
        traj_err = np.zeros(1)
    status, iters, err, dead, n_rec = _kernels.solve_loop(
        kappa, phi, l, L, target.matrix(), opts.method._code,
        opts.beta, opts.lam, opts.tol, opts.max_iter,
        opts.length_floor_fraction,
        opts.vvl_step_limit if opts.method is Method.VVL else 0.0,
        opts.record_trajectory, traj_params, traj_err)

    final_state = ManipulatorState.from_arrays(kappa, phi, l, L)
    converged = status == _kernels.STATUS_CONVERGED
    if status == _kernels.STATUS_LOG_BRANCH:
        cause = "log-branch"
    elif converged:
        cause = ""
    elif bool(dead.any()):
        cause = "deadlock-flagged"
    else:
        cause = "max-iter"

    trajectory = None
    if opts.record_trajectory:
        trajectory = tuple(
            TrajectoryPoint(
                iteration=i,
                state=ManipulatorState.from_arrays(
                    traj_params[i, 0], traj_params[i, 1], traj_params[i, 2], L),
                error=float(traj_err[i]))
            for i in range(n_rec))
    return SolveResult(converged=converged, iterations=int(iters),
                       final_error=float(err), final_state=final_state,
                       deadlock_flags=tuple(bool(d) for d in dead),
                       fail_cause=cause, trajectory=trajectory)
