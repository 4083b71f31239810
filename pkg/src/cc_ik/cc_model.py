"""Constant-curvature segment model: parameterization, product-of-exponentials
forward kinematics, analytic partial twists and Jacobian assembly.

Each segment bends as a circular arc with curvature kappa in a plane at
angle phi from the x-axis; the bend axis at phi=0 is the y-axis and the
curvature-center offset direction is the x-axis. A segment carries both its
current (possibly virtual) length l and its nominal physical length L.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from . import _kernels
from .liegroup import Pose

__all__ = [
    "BEND_AXIS",
    "PHI_REF",
    "MAX_SEGMENTS",
    "SegmentState",
    "ManipulatorState",
    "JacobianMatrix",
    "segment_twist",
    "forward_kinematics",
    "partial_twist_kappa",
    "partial_twist_phi",
    "partial_twist_length",
    "jacobian_standard",
    "jacobian_vvl",
    "jacobian_augmented",
    "centerline",
]

# Bend axis at phi=0 and reference direction of the curvature-center offset.
BEND_AXIS = _kernels.BEND_AXIS
PHI_REF = _kernels.PHI_REF

MAX_SEGMENTS = 16

ParamName = Literal["kappa", "phi", "l"]


@dataclass(frozen=True)
class SegmentState:
    """One constant-curvature segment: (kappa, phi, l, L)."""

    kappa: float
    phi: float
    l: float
    L: float

    def __post_init__(self):
        for name in ("kappa", "phi", "l", "L"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"segment {name} must be finite")
        if self.l <= 0 or self.L <= 0:
            raise ValueError("segment lengths must be positive")

    @property
    def bending_angle(self) -> float:
        return self.kappa * self.l


@dataclass(frozen=True)
class ManipulatorState:
    """Ordered segments, base to tip."""

    segments: tuple[SegmentState, ...]
    max_segments: int = MAX_SEGMENTS

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not 1 <= len(self.segments) <= self.max_segments:
            raise ValueError(
                f"segment count must be in [1, {self.max_segments}]")

    @property
    def n(self) -> int:
        return len(self.segments)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(kappa, phi, l, L) as float arrays."""
        return (np.array([s.kappa for s in self.segments]),
                np.array([s.phi for s in self.segments]),
                np.array([s.l for s in self.segments]),
                np.array([s.L for s in self.segments]))

    @staticmethod
    def from_arrays(kappa: Sequence[float], phi: Sequence[float],
                    l: Sequence[float], L: Sequence[float] | None = None,
                    ) -> "ManipulatorState":
        if L is None:
            L = l
        return ManipulatorState(tuple(
            SegmentState(float(k), float(p), float(a), float(b))
            for k, p, a, b in zip(kappa, phi, l, L)))

    def with_lengths(self, l: Sequence[float]) -> "ManipulatorState":
        return ManipulatorState(tuple(
            replace(s, l=float(v)) for s, v in zip(self.segments, l)))


@dataclass(frozen=True)
class JacobianMatrix:
    """Dense Jacobian with explicit column labels (segment index, parameter)
    and, for the augmented variant, labels for the length-constraint rows."""

    entries: np.ndarray
    column_labels: tuple[tuple[int, ParamName], ...]
    constraint_rows: tuple[int, ...] = ()

    def __post_init__(self):
        if self.entries.shape[1] != len(self.column_labels):
            raise ValueError("column count does not match labels")

    def column(self, segment: int, param: ParamName) -> np.ndarray:
        return self.entries[:, self.column_labels.index((segment, param))]


def segment_twist(seg: SegmentState) -> np.ndarray:
    """Finite strain twist l * [kappa R(phi) w; R(phi) skew(q) w]."""
    return _kernels.segment_twist(seg.kappa, seg.phi, seg.l)


def partial_twist_kappa(seg: SegmentState) -> np.ndarray:
    """Right-trivialized partial of the segment exponential w.r.t. kappa.

    Angular part l R(phi) w; linear part kappa^-2 R(phi)
    (e^{l kappa skew(w)} - l kappa skew(w) - I) q, evaluated by series for
    small bending angles (limit at kappa=0 is -(l^2/2) R(phi) q).
    """
    return _kernels.partial_twist_kappa(seg.kappa, seg.phi, seg.l)


def partial_twist_phi(seg: SegmentState) -> np.ndarray:
    """Right-trivialized partial w.r.t. phi: the closed-form dexp operator
    (I + c1 ad + c2 ad^2 + c3 ad^3 + c4 ad^4) applied to d_phi V, with
    trigonometric coefficients of the bending angle (polynomial limits
    1/2, 1/6, 1/24, 1/120 at kappa=0, where d_phi V itself vanishes)."""
    return _kernels.partial_twist_phi(seg.kappa, seg.phi, seg.l)


def partial_twist_length(seg: SegmentState) -> np.ndarray:
    """Partial w.r.t. length; the twist is linear in l, so this is V/l."""
    return _kernels.partial_twist_length(seg.kappa, seg.phi, seg.l)


def forward_kinematics(state: ManipulatorState) -> Pose:
    """Product of exponentials of the segment twists, base to tip."""
    kappa, phi, l, _ = state.arrays()
    T = _kernels.forward_kinematics(kappa, phi, l)
    return Pose(T[:3, :3], T[:3, 3])


def jacobian_standard(state: ManipulatorState) -> JacobianMatrix:
    """6 x 2n spatial Jacobian, columns interleaved (k1, p1, ..., kn, pn);
    segment i columns are premultiplied by the adjoint of the cumulative
    product of the upstream exponentials."""
    kappa, phi, l, _ = state.arrays()
    J, _ = _kernels.jacobian(kappa, phi, l, False)
    labels = []
    for i in range(state.n):
        labels += [(i, "kappa"), (i, "phi")]
    return JacobianMatrix(J, tuple(labels))


def jacobian_vvl(state: ManipulatorState) -> JacobianMatrix:
    """6 x 3n Jacobian with per-segment length columns, grouped
    (k1..kn, p1..pn, l1..ln)."""
    kappa, phi, l, _ = state.arrays()
    J, _ = _kernels.jacobian(kappa, phi, l, True)
    labels = ([(i, "kappa") for i in range(state.n)]
              + [(i, "phi") for i in range(state.n)]
              + [(i, "l") for i in range(state.n)])
    return JacobianMatrix(J, tuple(labels))


def jacobian_augmented(state: ManipulatorState) -> JacobianMatrix:
    """(6+n) x 3n matrix: the grouped VVL Jacobian stacked over the
    length-selection block [0 | I]."""
    base = jacobian_vvl(state)
    n = state.n
    Ja = np.zeros((6 + n, 3 * n))
    Ja[:6] = base.entries
    Ja[6:, 2 * n:] = np.eye(n)
    return JacobianMatrix(Ja, base.column_labels,
                          constraint_rows=tuple(range(6, 6 + n)))


def centerline(state: ManipulatorState, samples_per_segment: int) -> np.ndarray:
    """Polyline along the backbone, (n*samples - n + 1) x 3, base to tip.

    Evaluates fractional exponentials (s/k) * V_i within each segment; the
    last point coincides with the forward-kinematics tip.
    """
    if samples_per_segment < 2:
        raise ValueError("samples_per_segment must be >= 2")
    points = [np.zeros(3)]
    T = np.eye(4)
    for seg in state.segments:
        V = segment_twist(seg)
        for s in range(1, samples_per_segment):
            frac = s / (samples_per_segment - 1)
            Ts = T @ _kernels.exp_se3(frac * V)
            points.append(Ts[:3, 3])
        T = T @ _kernels.exp_se3(V)
    return np.array(points)
