"""Six degree-of-freedom rigid body with a semi-implicit Euler integrator.

Quaternions are stored as ``(w, x, y, z)``. The rotational state is the
world-frame angular momentum, so it is conserved exactly without torque.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from oceansim.errors import ConfigError

GRAVITY = np.array([0.0, -9.80665, 0.0])


def quat_multiply(a, b) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0 or angle == 0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def quat_exp(rotvec) -> np.ndarray:
    """Unit quaternion of the rotation vector ``rotvec`` (axis times angle)."""
    rotvec = np.asarray(rotvec, dtype=float)
    return quat_from_axis_angle(rotvec, float(np.linalg.norm(rotvec)))


@dataclass
class BodyPose:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).copy()
        self.orientation = np.asarray(self.orientation, dtype=float).copy()
        self.velocity = np.asarray(self.velocity, dtype=float).copy()
        self.angular_velocity = np.asarray(self.angular_velocity, dtype=float).copy()
        n = np.linalg.norm(self.orientation)
        if not n > 0:
            raise ConfigError("orientation quaternion must be non-zero")
        self.orientation /= n

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def to_world(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.position

    def point_velocity(self, points) -> np.ndarray:
        """Rigid velocity ``v + w x r`` of world points."""
        r = np.asarray(points, dtype=float) - self.position
        return self.velocity + np.cross(self.angular_velocity, r)

    def yaw(self) -> float:
        """Heading of the body +z axis, ``atan2(fx, fz)``."""
        f = self.rotation[:, 2]
        return float(np.arctan2(f[0], f[2]))

    def copy(self) -> "BodyPose":
        return BodyPose(self.position, self.orientation, self.velocity, self.angular_velocity)


@dataclass
class RigidBody:
    """Rigid body whose body frame origin is its centre of mass.

    Parameters
    ----------
    mass : float
        Mass in kg.
    inertia : (3, 3) array
        Inertia tensor about the centre of mass in the body frame.
    angular_damping : float
        Optional decay rate (1/s) of the angular momentum, 0 disables it.
    """

    mass: float
    inertia: np.ndarray
    pose: BodyPose = field(default_factory=BodyPose)
    angular_damping: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError(f"mass must be > 0, got {self.mass}")
        I = np.asarray(self.inertia, dtype=float)
        if I.shape != (3, 3) or not np.allclose(I, I.T, rtol=1e-9, atol=1e-12 * np.abs(I).max()):
            raise ConfigError("inertia must be a symmetric 3x3 matrix")
        if np.min(np.linalg.eigvalsh(I)) <= 0:
            raise ConfigError("inertia must be positive definite")
        self.inertia = I
        self.inertia_inv = np.linalg.inv(I)
        self.force = np.zeros(3)
        self.torque = np.zeros(3)
        R = self.pose.rotation
        self.angular_momentum = R @ I @ R.T @ self.pose.angular_velocity

    def world_inertia_inv(self) -> np.ndarray:
        R = self.pose.rotation
        return R @ self.inertia_inv @ R.T

    def apply_force(self, force) -> None:
        self.force += np.asarray(force, dtype=float)

    def apply_force_at(self, force, point) -> None:
        """Accumulate ``force`` acting at world ``point``."""
        f = np.asarray(force, dtype=float)
        self.force += f
        self.torque += np.cross(np.asarray(point, dtype=float) - self.pose.position, f)

    def apply_torque(self, torque) -> None:
        self.torque += np.asarray(torque, dtype=float)

    def clear(self) -> None:
        self.force[:] = 0.0
        self.torque[:] = 0.0

    def integrate(self, dt: float, gravity=GRAVITY) -> None:
        """Advance by ``dt``: velocities from forces, then pose from new velocities."""
        if not dt > 0:
            raise ConfigError("dt must be > 0")
        p = self.pose
        p.velocity = p.velocity + dt * (self.force / self.mass + np.asarray(gravity, dtype=float))
        self.angular_momentum = self.angular_momentum + dt * self.torque
        if self.angular_damping:
            self.angular_momentum *= np.exp(-self.angular_damping * dt)
        omega = self.world_inertia_inv() @ self.angular_momentum
        p.position = p.position + dt * p.velocity
        q = quat_multiply(quat_exp(omega * dt), p.orientation)
        p.orientation = q / np.linalg.norm(q)
        p.angular_velocity = self.world_inertia_inv() @ self.angular_momentum
        self.clear()

    @property
    def kinetic_energy(self) -> float:
        p = self.pose
        return 0.5 * self.mass * float(p.velocity @ p.velocity) + 0.5 * float(
            self.angular_momentum @ p.angular_velocity)


def box_inertia(mass: float, extent) -> np.ndarray:
    """Solid box inertia about its centre."""
    a, b, c = np.asarray(extent, dtype=float) ** 2
    return mass / 12.0 * np.diag([b + c, a + c, a + b])
