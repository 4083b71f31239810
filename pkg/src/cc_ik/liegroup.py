"""SE(3)/se(3) primitives: skew operators, exp/log maps, adjoints, screw
decomposition and an SVD pseudo-inverse.

Twists are plain numpy 6-vectors in [omega; v] order (angular part first).
Rigid transforms are `Pose` values (rotation matrix + translation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "LogBranchError",
    "Pose",
    "ScrewDecomposition",
    "skew3",
    "twist_hat",
    "twist_vee",
    "exp_se3",
    "log_se3",
    "adjoint_of_pose",
    "ad_of_twist",
    "screw_decompose",
    "pseudo_inverse",
]

ROTATION_TOL = 1e-12


class LogBranchError(ValueError):
    """Rotation angle within 1e-6 of pi: the principal log is ambiguous."""


@dataclass(frozen=True)
class Pose:
    """Rigid transform: 3x3 rotation R and translation p."""

    R: np.ndarray
    p: np.ndarray

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(T: np.ndarray, validate: bool = True) -> "Pose":
        T = np.asarray(T, dtype=float)
        pose = Pose(T[:3, :3].copy(), T[:3, 3].copy())
        if validate:
            pose.validate()
        return pose

    def validate(self) -> None:
        err = np.abs(self.R.T @ self.R - np.eye(3)).max()
        if err > 1e-9:
            raise ValueError(f"rotation is not orthonormal (error {err:.2e})")
        if abs(np.linalg.det(self.R) - 1.0) > 1e-9:
            raise ValueError("rotation has determinant != +1")

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.p
        return T

    def inverse(self) -> "Pose":
        return Pose(self.R.T.copy(), -(self.R.T @ self.p))

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.R @ other.R, self.R @ other.p + self.p)


@dataclass(frozen=True)
class ScrewDecomposition:
    """Geometric form of a twist: axis direction/point, pitch, magnitude."""

    axis: np.ndarray          # unit direction omega_e (or v/|v| if pure translation)
    point: np.ndarray         # q_e, a point on the axis (zero for pure translation)
    pitch: float              # h; math.inf for pure translation
    magnitude: float          # theta_e (rotation angle, or |v| if pure translation)
    pure_translation: bool = field(default=False)

    def to_twist(self) -> np.ndarray:
        if self.pure_translation:
            return np.concatenate([np.zeros(3), self.magnitude * self.axis])
        v = np.cross(self.axis, self.point) + self.pitch * self.axis
        return self.magnitude * np.concatenate([self.axis, v])


def skew3(v: np.ndarray) -> np.ndarray:
    """3x3 antisymmetric matrix with skew3(v) @ w == cross(v, w)."""
    return _kernels.skew(np.asarray(v, dtype=float))


def twist_hat(V: np.ndarray) -> np.ndarray:
    """4x4 matrix form of a twist: [[skew(omega), v], [0, 0]]."""
    V = np.asarray(V, dtype=float)
    M = np.zeros((4, 4))
    M[:3, :3] = skew3(V[:3])
    M[:3, 3] = V[3:]
    return M


def twist_vee(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Inverse of twist_hat; rejects matrices that are not twist-shaped."""
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    if np.abs(M[:3, :3] + M[:3, :3].T).max() > tol:
        raise ValueError("top-left 3x3 block is not antisymmetric")
    if np.abs(M[3, :]).max() > tol:
        raise ValueError("last row is not zero")
    return np.array([M[2, 1], M[0, 2], M[1, 0], M[0, 3], M[1, 3], M[2, 3]])


def exp_se3(V: np.ndarray) -> Pose:
    """Closed-form exponential map se(3) -> SE(3)."""
    T = _kernels.exp_se3(np.asarray(V, dtype=float))
    return Pose(T[:3, :3], T[:3, 3])


def log_se3(T: Pose) -> np.ndarray:
    """Principal logarithm SE(3) -> se(3).

    Raises LogBranchError when the rotation angle is within 1e-6 of pi.
    """
    V, ok = _kernels.log_se3(T.matrix())
    if not ok:
        raise LogBranchError("rotation angle too close to pi")
    return V


def adjoint_of_pose(T: Pose) -> np.ndarray:
    """6x6 adjoint [[R, 0], [skew(p) R, R]] transporting twists by T."""
    return _kernels.adjoint_tf(T.matrix())


def ad_of_twist(V: np.ndarray) -> np.ndarray:
    """6x6 little-adjoint [[skew(w), 0], [skew(v), skew(w)]]."""
    return _kernels.ad_twist(np.asarray(V, dtype=float))


def screw_decompose(V: np.ndarray) -> ScrewDecomposition:
    """Axis/point/pitch/magnitude parameterization of a nonzero twist."""
    V = np.asarray(V, dtype=float)
    w, v = V[:3], V[3:]
    theta = float(np.linalg.norm(w))
    if theta < 1e-12:
        mag = float(np.linalg.norm(v))
        if mag < 1e-12:
            raise ValueError("cannot decompose the zero twist")
        return ScrewDecomposition(axis=v / mag, point=np.zeros(3),
                                  pitch=math.inf, magnitude=mag,
                                  pure_translation=True)
    axis = w / theta
    pitch = float(axis @ v) / theta
    point = np.cross(v, axis) / theta
    return ScrewDecomposition(axis=axis, point=point, pitch=pitch,
                              magnitude=theta)


def pseudo_inverse(M: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse via SVD; singular values below
    1e-10 * max(m, n) * sigma_max are treated as zero."""
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]))
    cut = 1e-10 * max(M.shape) * s[0]
    inv = np.where(s > cut, 1.0 / np.where(s > cut, s, 1.0), 0.0)
    return (Vt.T * inv) @ U.T
