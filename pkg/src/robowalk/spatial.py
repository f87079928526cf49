"""6-D spatial vector algebra: motion/force vectors, cross products,
Plucker coordinate transforms and rigid-body inertias.

Conventions (fixed once, checked by the duality/power-invariance tests):
  * spatial vectors are ordered angular-then-linear;
  * a PluckerTransform (E, r) maps A-frame coordinates to B-frame
    coordinates, where r is the position of B's origin expressed in A and
    E rotates free vectors from A coordinates into B coordinates;
  * the power pairing <m, f> = m.angular . f.moment + m.linear . f.force
    is invariant under every transform pair.
"""

from dataclasses import dataclass

import numpy as np


class SpatialError(ValueError):
    """Invalid spatial quantity (non-finite, non-orthonormal, ...)."""


def _vec3(x, name):
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise SpatialError(f"{name} has non-finite components: {v}")
    return v


def _skew(v):
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


@dataclass(frozen=True)
class SpatialMotion:
    """Spatial motion vector (velocity or acceleration)."""

    angular: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angular", _vec3(self.angular, "angular"))
        object.__setattr__(self, "linear", _vec3(self.linear, "linear"))

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))

    def as_array(self):
        return np.concatenate([self.angular, self.linear])

    def __add__(self, other):
        return SpatialMotion(self.angular + other.angular,
                             self.linear + other.linear)

    def __sub__(self, other):
        return SpatialMotion(self.angular - other.angular,
                             self.linear - other.linear)

    def __mul__(self, s):
        return SpatialMotion(self.angular * s, self.linear * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpatialForce:
    """Spatial force vector (moment about the frame origin + linear force)."""

    moment: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "moment", _vec3(self.moment, "moment"))
        object.__setattr__(self, "force", _vec3(self.force, "force"))

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))

    def as_array(self):
        return np.concatenate([self.moment, self.force])

    def __add__(self, other):
        return SpatialForce(self.moment + other.moment,
                            self.force + other.force)

    def __sub__(self, other):
        return SpatialForce(self.moment - other.moment,
                            self.force - other.force)

    def __mul__(self, s):
        return SpatialForce(self.moment * s, self.force * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpatialInertia:
    """Rigid-body inertia: mass, CoG offset and rotational inertia about
    the CoG, all expressed in the body frame."""

    mass: float
    com: np.ndarray
    rotational_inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "com", _vec3(self.com, "com"))
        ic = np.asarray(self.rotational_inertia, dtype=float).reshape(3, 3)
        object.__setattr__(self, "rotational_inertia", ic)
        if not (np.isfinite(self.mass) and self.mass > 0.0):
            raise SpatialError(f"mass must be positive, got {self.mass}")
        if not np.allclose(ic, ic.T, atol=1e-12):
            raise SpatialError("rotational inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (ic + ic.T))) < -1e-12:
            raise SpatialError("rotational inertia must be positive semidefinite")


@dataclass(frozen=True)
class PluckerTransform:
    """Coordinate transform from frame A to frame B.

    rotation: 3x3 matrix taking A coordinates of a free vector to B
    coordinates.  translation: position of B's origin in A coordinates.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        object.__setattr__(self, "rotation", e)
        object.__setattr__(self, "translation",
                           _vec3(self.translation, "translation"))
        if not np.allclose(e.T @ e, np.eye(3), atol=1e-12):
            raise SpatialError("rotation must be orthonormal within 1e-12")
        if np.linalg.det(e) < 0.0:
            raise SpatialError("rotation must be proper (det = +1)")

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def inverse(self):
        return PluckerTransform(self.rotation.T, -self.rotation @ self.translation)

    def compose(self, first):
        """Transform equivalent to applying `first` (A->B) then self (B->C)."""
        return PluckerTransform(
            self.rotation @ first.rotation,
            first.translation + first.rotation.T @ self.translation)

    def motion_matrix(self):
        """The 6x6 matrix acting on stacked (angular, linear) motion vectors."""
        x = np.zeros((6, 6))
        x[:3, :3] = self.rotation
        x[3:, 3:] = self.rotation
        x[3:, :3] = -self.rotation @ _skew(self.translation)
        return x

    def point_to_parent(self, p_local):
        """Position in A coordinates of a point given in B coordinates."""
        return self.translation + self.rotation.T @ _vec3(p_local, "point")


def motion_cross(v: SpatialMotion, m: SpatialMotion) -> SpatialMotion:
    """Spatial cross product v x m of two motion vectors."""
    return SpatialMotion(
        np.cross(v.angular, m.angular),
        np.cross(v.angular, m.linear) + np.cross(v.linear, m.angular))


def force_cross(v: SpatialMotion, f: SpatialForce) -> SpatialForce:
    """Dual cross product v x* f of a motion vector with a force vector."""
    return SpatialForce(
        np.cross(v.angular, f.moment) + np.cross(v.linear, f.force),
        np.cross(v.angular, f.force))


def transform_motion(x: PluckerTransform, m: SpatialMotion) -> SpatialMotion:
    e, r = x.rotation, x.translation
    return SpatialMotion(e @ m.angular,
                         e @ (m.linear - np.cross(r, m.angular)))


def transform_force(x: PluckerTransform, f: SpatialForce) -> SpatialForce:
    e, r = x.rotation, x.translation
    return SpatialForce(e @ (f.moment - np.cross(r, f.force)),
                        e @ f.force)


def inertia_apply(inertia: SpatialInertia, v: SpatialMotion) -> SpatialForce:
    """Momentum-style product I v (moment of momentum about the frame origin)."""
    m, c, ic = inertia.mass, inertia.com, inertia.rotational_inertia
    h = v.linear + np.cross(v.angular, c)          # CoG-point linear velocity
    return SpatialForce(
        ic @ v.angular + m * np.cross(c, h),
        m * h)


def pairing(m: SpatialMotion, f: SpatialForce) -> float:
    """Power pairing <m, f>."""
    return float(m.angular @ f.moment + m.linear @ f.force)
