"""Analytical planar kinematics: FK, Jacobians, and task cost observables.

All FK functions broadcast over numpy arrays, so a whole grid of
configurations can be evaluated in one call; scalars give shape-(2,) points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi


# --- robot models -----------------------------------------------------------

@dataclass(frozen=True)
class OneLink:
    """Single revolute joint; link length may instead come from the search grid."""

    l1: float = 1.0

    def __post_init__(self):
        if self.l1 <= 0:
            raise ValueError("link length must be positive")


@dataclass(frozen=True)
class TwoLink:
    l1: float = 1.0
    l2: float = 1.0

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("link lengths must be positive")


@dataclass(frozen=True)
class DualArm:
    """Two planar 2R arms with fixed link lengths and base offsets."""

    base1: Tuple[float, float] = (-0.8, 0.0)
    base2: Tuple[float, float] = (0.8, 0.0)
    links1: Tuple[float, float] = (1.0, 1.0)
    links2: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if min(self.links1) <= 0 or min(self.links2) <= 0:
            raise ValueError("link lengths must be positive")


# --- tasks and weights --------------------------------------------------------

@dataclass(frozen=True)
class PoseTarget:
    """Target end-effector position, optional planar orientation, and the
    verification tolerance on the actual (analytic) error."""

    position: Tuple[float, float]
    phi: Optional[float] = None
    tolerance: Optional[float] = None


def antipodal_points(center, radius: float, axis: float):
    """Contact pair center -+ radius*(cos axis, sin axis) on a circular object."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, dtype=float)
    u = np.array([math.cos(axis), math.sin(axis)])
    return c - radius * u, c + radius * u


@dataclass(frozen=True)
class GraspTask:
    center: Tuple[float, float]
    radius: float
    axis: float = 0.0
    c_ideal1: Tuple[float, float] = field(default=None)  # type: ignore[assignment]
    c_ideal2: Tuple[float, float] = field(default=None)  # type: ignore[assignment]
    tolerance: Optional[float] = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.c_ideal1 is None or self.c_ideal2 is None:
            c1, c2 = antipodal_points(self.center, self.radius, self.axis)
            object.__setattr__(self, "c_ideal1", tuple(c1))
            object.__setattr__(self, "c_ideal2", tuple(c2))
        c1 = np.asarray(self.c_ideal1)
        c2 = np.asarray(self.c_ideal2)
        center = np.asarray(self.center)
        if np.max(np.abs((c1 + c2) / 2 - center)) > 1e-12:
            raise ValueError("contact points are not antipodal about the center")
        for c in (c1, c2):
            if abs(np.linalg.norm(c - center) - self.radius) > 1e-9:
                raise ValueError("contact point not on the object surface")


@dataclass(frozen=True)
class PoseWeights:
    """Position/orientation error weights and the oracle cost tolerance.

    epsilon=None leaves the threshold to the runner, which derives it from
    the grid-resolution cost floor.
    """

    alpha_p: float = 1.0
    alpha_R: float = 0.0
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.alpha_p < 0 or self.alpha_R < 0:
            raise ValueError("weights must be non-negative")
        if self.alpha_p == 0 and self.alpha_R == 0:
            raise ValueError("at least one weight must be positive")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive when given")


# --- forward kinematics -------------------------------------------------------

def fk_one(l1, theta1) -> np.ndarray:
    """p = (l1 cos t1, l1 sin t1)."""
    l1 = np.asarray(l1, dtype=float)
    if np.any(l1 <= 0):
        raise ValueError("link length must be positive")
    theta1 = np.asarray(theta1, dtype=float)
    return np.stack(
        np.broadcast_arrays(l1 * np.cos(theta1), l1 * np.sin(theta1)), axis=-1
    )


def fk_two(l1, l2, theta1, theta2) -> np.ndarray:
    """Planar 2R chain: p = (l1 c1 + l2 c12, l1 s1 + l2 s12)."""
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    if np.any(l1 <= 0) or np.any(l2 <= 0):
        raise ValueError("link lengths must be positive")
    t1 = np.asarray(theta1, dtype=float)
    t12 = t1 + np.asarray(theta2, dtype=float)
    return np.stack(
        np.broadcast_arrays(
            l1 * np.cos(t1) + l2 * np.cos(t12),
            l1 * np.sin(t1) + l2 * np.sin(t12),
        ),
        axis=-1,
    )


def fk_dual(model: DualArm, q1, q2) -> Tuple[np.ndarray, np.ndarray]:
    """Tip positions of both arms; q1, q2 are (theta_a, theta_b) joint pairs."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    p1 = np.asarray(model.base1) + fk_two(*model.links1, q1[..., 0], q1[..., 1])
    p2 = np.asarray(model.base2) + fk_two(*model.links2, q2[..., 0], q2[..., 1])
    return p1, p2


def jacobian_two(l1: float, l2: float, theta1: float, theta2: float) -> np.ndarray:
    """Analytic 2x2 Jacobian d p / d(theta1, theta2) of the 2R chain."""
    if l1 <= 0 or l2 <= 0:
        raise ValueError("link lengths must be positive")
    s1, c1 = math.sin(theta1), math.cos(theta1)
    s12, c12 = math.sin(theta1 + theta2), math.cos(theta1 + theta2)
    return np.array(
        [
            [-l1 * s1 - l2 * s12, -l2 * s12],
            [l1 * c1 + l2 * c12, l2 * c12],
        ]
    )


def manipulability(jacobian: np.ndarray) -> float:
    """sqrt(det(J J^T)); zero at singularities.

    det(J J^T) is mathematically non-negative; tiny negative values from
    rounding (>= -1e-12) are clipped to zero, anything worse raises.
    """
    J = np.asarray(jacobian, dtype=float)
    if J.shape != (2, 2) or not np.all(np.isfinite(J)):
        raise ValueError("jacobian must be a finite 2x2 matrix")
    d = float(np.linalg.det(J @ J.T))
    if d < 0:
        if d < -1e-12:
            raise ValueError(f"det(JJ^T) = {d} is negative beyond tolerance")
        d = 0.0
    return math.sqrt(d)


# --- orientation distances ------------------------------------------------------

def rotation_z(angle: float) -> np.ndarray:
    """3x3 rotation about the z axis (planar rotations embedded in SO(3))."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _check_rotation(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or abs(np.linalg.det(R) - 1) > 1e-9:
        raise ValueError("matrix is not a proper rotation")
    return R


def orientation_geodesic(R1: np.ndarray, R2: np.ndarray) -> float:
    """Geodesic distance on SO(3): arccos((Tr(R1^T R2) - 1)/2), in [0, pi]."""
    R1 = _check_rotation(R1)
    R2 = _check_rotation(R2)
    arg = (np.trace(R1.T @ R2) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, arg)))


def wrapped_angle_distance(phi1: float, phi2: float) -> float:
    """|phi1 - phi2| wrapped into (-pi, pi]; the planar orientation metric."""
    d = math.fmod(phi1 - phi2, TWO_PI)
    if d > math.pi:
        d -= TWO_PI
    elif d <= -math.pi:
        d += TWO_PI
    return abs(d)


# --- task costs -----------------------------------------------------------------

def pose_cost(p, p_target, weights: PoseWeights,
              phi: Optional[float] = None,
              phi_target: Optional[float] = None) -> float:
    """alpha_p * ||p - p_target||^2 + alpha_R * d(phi, phi_target)^2."""
    p = np.asarray(p, dtype=float)
    pt = np.asarray(p_target, dtype=float)
    cost = weights.alpha_p * float(np.sum((p - pt) ** 2))
    if weights.alpha_R > 0:
        if phi is None or phi_target is None:
            raise ValueError("orientation weight is positive but angles are missing")
        cost += weights.alpha_R * wrapped_angle_distance(phi, phi_target) ** 2
    return cost


def grasp_cost(p1, p2, task: GraspTask) -> float:
    """Summed squared deviation of both tips from the ideal contact pair."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    return float(
        np.sum((p1 - np.asarray(task.c_ideal1)) ** 2)
        + np.sum((p2 - np.asarray(task.c_ideal2)) ** 2)
    )
