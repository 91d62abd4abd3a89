"""Fused-angles orientation representation.

Torso tilt is split into independent sagittal (pitch) and lateral (roll)
components plus a fused yaw and a hemisphere flag.  This keeps the two
balance-relevant tilt axes decoupled, unlike Euler angles where the second
rotation feeds into the third.

Conventions: x forward, y left, z up.  Quaternions are (w, x, y, z) and map
body coordinates to world coordinates.  All angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

UNIT_NORM_TOL = 1e-6
TILT_SUM_TOL = 1e-12


class InvalidRotationError(ValueError):
    """Quaternion is not unit norm, or fused angles violate their domain."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion (w, x, y, z), body frame to world frame."""

    w: float
    x: float
    y: float
    z: float

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: tuple[float, float, float], angle: float) -> "Rotation":
        ax, ay, az = axis
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if n == 0.0:
            return Rotation.identity()
        half = 0.5 * angle
        s = math.sin(half) / n
        return Rotation(math.cos(half), ax * s, ay * s, az * s)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Rotation":
        n = self.norm()
        if n == 0.0:
            return Rotation.identity()
        return Rotation(self.w / n, self.x / n, self.y / n, self.z / n)

    def canonical(self) -> "Rotation":
        """Same rotation with w >= 0 (resolves the quaternion double cover)."""
        if self.w < 0.0:
            return Rotation(-self.w, -self.x, -self.y, -self.z)
        return self

    def conjugate(self) -> "Rotation":
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Rotation") -> "Rotation":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Rotation(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotate(self, v: tuple[float, float, float]) -> tuple[float, float, float]:
        """Rotate a body-frame vector into the world frame."""
        w, x, y, z = self.w, self.x, self.y, self.z
        vx, vy, vz = v
        # q * (0, v) * q_conj, expanded
        tx = 2.0 * (y * vz - z * vy)
        ty = 2.0 * (z * vx - x * vz)
        tz = 2.0 * (x * vy - y * vx)
        return (
            vx + w * tx + y * tz - z * ty,
            vy + w * ty + z * tx - x * tz,
            vz + w * tz + x * ty - y * tx,
        )

    def rotate_inv(self, v: tuple[float, float, float]) -> tuple[float, float, float]:
        """Rotate a world-frame vector into the body frame."""
        return self.conjugate().rotate(v)

    def distance(self, other: "Rotation") -> float:
        """Double-cover-aware distance: min |q - p|, |q + p|."""
        d1 = math.sqrt(
            (self.w - other.w) ** 2
            + (self.x - other.x) ** 2
            + (self.y - other.y) ** 2
            + (self.z - other.z) ** 2
        )
        d2 = math.sqrt(
            (self.w + other.w) ** 2
            + (self.x + other.x) ** 2
            + (self.y + other.y) ** 2
            + (self.z + other.z) ** 2
        )
        return min(d1, d2)


@dataclass(frozen=True)
class FusedAngles:
    """Fused yaw / pitch / roll plus hemisphere flag.

    pitch is the sagittal tilt component, roll the lateral one; both lie in
    [-pi/2, pi/2] and satisfy sin^2(pitch) + sin^2(roll) <= 1.  hemisphere is
    +1 while the total tilt is below pi/2 and -1 beyond.
    """

    yaw: float
    pitch: float
    roll: float
    hemisphere: int = 1

    def validate(self) -> None:
        if abs(self.pitch) > 0.5 * math.pi or abs(self.roll) > 0.5 * math.pi:
            raise InvalidRotationError(f"tilt component out of range: {self}")
        crit = math.sin(self.pitch) ** 2 + math.sin(self.roll) ** 2
        if crit > 1.0 + TILT_SUM_TOL:
            raise InvalidRotationError(f"sin^2(pitch) + sin^2(roll) = {crit:.3e} > 1")
        if self.hemisphere not in (1, -1):
            raise InvalidRotationError(f"hemisphere must be +1 or -1, got {self.hemisphere}")


def fused_from_rotation(q: Rotation) -> FusedAngles:
    """Decompose a unit quaternion into fused angles.

    Fused yaw is the z-rotation component 2*atan2(z, w); the tilt components
    come from the world z-axis expressed in the body frame:
    sin(pitch) = 2(wy - xz), sin(roll) = 2(wx + yz).  The hemisphere flag is
    the sign of the (2,2) rotation-matrix entry 1 - 2(x^2 + y^2).
    """
    if abs(q.norm() - 1.0) > UNIT_NORM_TOL:
        raise InvalidRotationError(f"quaternion norm {q.norm():.9f} deviates from 1")
    q = q.normalized().canonical()

    yaw = wrap_angle(2.0 * math.atan2(q.z, q.w))
    s_pitch = max(-1.0, min(1.0, 2.0 * (q.w * q.y - q.x * q.z)))
    s_roll = max(-1.0, min(1.0, 2.0 * (q.w * q.x + q.y * q.z)))
    hemi = 1 if (q.x * q.x + q.y * q.y) <= 0.5 else -1
    return FusedAngles(yaw, math.asin(s_pitch), math.asin(s_roll), hemi)


def rotation_from_fused(f: FusedAngles) -> Rotation:
    """Reconstruct the unit quaternion for a fused-angles tuple.

    The rotation is composed as tilt-after-yaw: a yaw about world z followed
    by a pure tilt of angle alpha about a horizontal axis at angle
    gamma = atan2(sin(pitch), sin(roll)).
    """
    f.validate()
    s_pitch = math.sin(f.pitch)
    s_roll = math.sin(f.roll)
    crit = s_pitch * s_pitch + s_roll * s_roll

    if crit >= 1.0:
        alpha = 0.5 * math.pi
    else:
        c_alpha = math.sqrt(1.0 - crit)
        if f.hemisphere < 0:
            c_alpha = -c_alpha
        alpha = math.acos(c_alpha)

    gamma = math.atan2(s_pitch, s_roll)
    half_alpha = 0.5 * alpha
    half_yaw = 0.5 * f.yaw
    gam_psi = gamma + half_yaw

    ca, sa = math.cos(half_alpha), math.sin(half_alpha)
    return Rotation(
        ca * math.cos(half_yaw),
        sa * math.cos(gam_psi),
        sa * math.sin(gam_psi),
        ca * math.sin(half_yaw),
    ).normalized()


def tilt_components(f: FusedAngles) -> tuple[float, float]:
    """Project out the (sagittal, lateral) tilt pair used by the feedback laws."""
    return (f.pitch, f.roll)
