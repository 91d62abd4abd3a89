"""Open-loop omnidirectional CPG gait.

A single phase variable mu in [-pi, pi) drives both legs half a cycle apart:
mu in [-pi, 0) is the left-leg swing half, [0, pi) the right-leg swing half.
Waveforms are designed in the abstract space (leg extension, swing angles,
lateral hip shift) and converted to Cartesian foot poses and joint angles by
analytic inverse kinematics.  The foot pitch is kinematically locked parallel
to the trunk, so the ankle pitch is derived, not commanded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .fused_angles import wrap_angle

LEFT = +1
RIGHT = -1  # leg sign: +1 left, -1 right (y axis points left)


class UnreachableTargetError(ValueError):
    def __init__(self, distance: float, max_reach: float):
        super().__init__(f"target at {distance:.6f} m exceeds leg reach {max_reach:.6f} m")
        self.distance = distance
        self.max_reach = max_reach


@dataclass(frozen=True)
class GaitPhase:
    mu: float  # rad, wrapped to [-pi, pi)
    freq: float = 1.4  # Hz, full two-step cycle frequency

    def __post_init__(self) -> None:
        if not self.freq > 0:
            raise ValueError(f"gait frequency must be > 0, got {self.freq}")

    @property
    def step_duration(self) -> float:
        """Duration of one step (half the gait cycle)."""
        return 0.5 / self.freq

    def swing_leg(self) -> int:
        return LEFT if self.mu < 0.0 else RIGHT


@dataclass(frozen=True)
class GaitCommand:
    """Normalized omnidirectional command; components clamp to [-1, 1]."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    def clamped(self) -> "GaitCommand":
        cl = lambda v: max(-1.0, min(1.0, v))
        return GaitCommand(cl(self.vx), cl(self.vy), cl(self.omega))


@dataclass(frozen=True)
class AbstractPose:
    """Abstract-space coordinates of one leg."""

    extension: float = 0.0  # eta in [0, 1], 0 = fully extended
    swing_sag: float = 0.0  # rad, + = foot forward
    swing_lat: float = 0.0  # rad, + = foot to the left
    hip_shift_lat: float = 0.0  # m, + = pelvis shifted left
    hip_shift_sag: float = 0.0  # m, + = pelvis shifted forward
    foot_yaw: float = 0.0  # rad, turning component
    foot_pitch_locked: bool = True


@dataclass(frozen=True)
class FootPose:
    """Foot position relative to the hip joint, trunk-aligned axes."""

    x: float
    y: float
    z: float
    yaw: float = 0.0


@dataclass(frozen=True)
class LegJointAngles:
    hip_yaw: float
    hip_roll: float
    hip_pitch: float
    knee: float  # >= 0, 0 = straight
    ankle_pitch_derived: float  # keeps the foot parallel to the trunk


@dataclass(frozen=True)
class LegGeometry:
    thigh: float = 0.42
    shank: float = 0.42
    hip_width: float = 0.22

    def __post_init__(self) -> None:
        if self.thigh <= 0 or self.shank <= 0 or self.hip_width <= 0:
            raise ValueError(f"leg geometry must be positive: {self}")

    @property
    def max_reach(self) -> float:
        return self.thigh + self.shank


@dataclass(frozen=True)
class GaitParams:
    freq: float = 1.4  # Hz
    eta_max: float = 0.12  # swing retraction peak
    eta_range: float = 0.25  # fraction of leg length removed at eta = 1
    swing_amp_sag: float = 0.25  # rad at |vx| = 1
    swing_amp_lat: float = 0.18  # rad at |vy| = 1
    foot_yaw_amp: float = 0.25  # rad at |omega| = 1
    hip_shift_amp: float = 0.012  # m lateral pelvis sway


def advance_phase(p: GaitPhase, dt: float) -> GaitPhase:
    """Advance the gait phase: mu' = wrap(mu + 2*pi*f*dt)."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    mu = p.mu + 2.0 * math.pi * p.freq * dt
    if not -math.pi <= mu < math.pi:  # wrap only on exit, keeps dt=0 exact
        mu = wrap_angle(mu)
    return replace(p, mu=mu)


def swing_progress(mu: float, leg: int) -> float | None:
    """Progress through the leg's swing half-cycle in [0, 1), None in stance."""
    if leg == LEFT:
        return (mu + math.pi) / math.pi if mu < 0.0 else None
    return mu / math.pi if mu >= 0.0 else None


def _leg_waveforms(mu: float, leg: int, cmd: GaitCommand, params: GaitParams) -> AbstractPose:
    s = swing_progress(mu, leg)
    eta = params.eta_max * 0.5 * (1.0 - math.cos(2.0 * math.pi * s)) if s is not None else 0.0

    # sinusoids peak at mid-swing of the owning leg; the sign flips between
    # legs so the gait is symmetric under (mu -> mu + pi, leg swap, mirror)
    carrier = -math.sin(mu) if leg == LEFT else math.sin(mu)
    return AbstractPose(
        extension=eta,
        swing_sag=params.swing_amp_sag * cmd.vx * carrier,
        swing_lat=params.swing_amp_lat * cmd.vy * carrier,
        hip_shift_lat=params.hip_shift_amp * math.sin(mu),
        foot_yaw=params.foot_yaw_amp * cmd.omega * carrier,
    )


def abstract_waveforms(
    p: GaitPhase, cmd: GaitCommand, params: GaitParams
) -> tuple[AbstractPose, AbstractPose]:
    """Evaluate the CPG waveforms; returns (left, right) abstract poses."""
    cmd = cmd.clamped()
    return (
        _leg_waveforms(p.mu, LEFT, cmd, params),
        _leg_waveforms(p.mu, RIGHT, cmd, params),
    )


def abstract_to_cartesian(
    a: AbstractPose, leg_sign: int, geom: LegGeometry, eta_range: float = 0.25
) -> FootPose:
    """Place the foot by rotating the retracted leg vector about the hip.

    Leg length is (thigh + shank) * (1 - eta * eta_range); the sagittal swing
    rotates the leg about the hip pitch axis, the lateral swing about the hip
    roll axis.  Hip shifts displace the pelvis, so the foot moves the opposite
    way in the hip frame.
    """
    length = geom.max_reach * (1.0 - a.extension * eta_range)
    ss, cs = math.sin(a.swing_sag), math.cos(a.swing_sag)
    sl, cl = math.sin(a.swing_lat), math.cos(a.swing_lat)
    return FootPose(
        x=length * ss * cl - a.hip_shift_sag,
        y=length * sl - a.hip_shift_lat,
        z=-length * cs * cl,
        yaw=a.foot_yaw,
    )


def leg_ik(target: FootPose, geom: LegGeometry) -> LegJointAngles:
    """Analytic 5-DoF leg inverse kinematics, hip-relative target.

    Hip yaw tracks the commanded foot yaw, hip roll aligns the leg plane,
    then the planar 2R problem is solved by the law of cosines.  The derived
    ankle pitch cancels hip pitch and knee so the foot stays parallel to the
    trunk (locked foot pitch).
    """
    r = math.sqrt(target.x**2 + target.y**2 + target.z**2)
    a, b = geom.thigh, geom.shank
    if r > geom.max_reach + 1e-12:
        raise UnreachableTargetError(r, geom.max_reach)
    if r < abs(a - b) - 1e-12:
        raise UnreachableTargetError(r, geom.max_reach)
    r = min(max(r, abs(a - b)), geom.max_reach)

    hip_yaw = target.yaw
    cy, sy = math.cos(-hip_yaw), math.sin(-hip_yaw)
    tx = cy * target.x - sy * target.y
    ty = sy * target.x + cy * target.y
    tz = target.z

    hip_roll = math.atan2(ty, -tz)
    # into the leg's sagittal plane
    px = tx
    pz = -math.sqrt(ty * ty + tz * tz)

    cos_hip = _clamp1((a * a + r * r - b * b) / (2.0 * a * r)) if r > 0 else 1.0
    cos_foot = _clamp1((b * b + r * r - a * a) / (2.0 * b * r)) if r > 0 else 1.0
    phi_t = math.acos(cos_hip)
    phi_s = math.acos(cos_foot)
    delta = math.atan2(px, -pz)

    hip_pitch = delta + phi_t
    knee = phi_t + phi_s
    ankle_pitch = knee - hip_pitch  # foot pitch locked to the trunk
    return LegJointAngles(hip_yaw, hip_roll, hip_pitch, knee, ankle_pitch)


def leg_fk(j: LegJointAngles, geom: LegGeometry) -> FootPose:
    """Forward kinematics matching leg_ik's conventions."""
    a, b = geom.thigh, geom.shank
    theta_t = j.hip_pitch
    theta_s = j.hip_pitch - j.knee
    px = a * math.sin(theta_t) + b * math.sin(theta_s)
    pz = -a * math.cos(theta_t) - b * math.cos(theta_s)

    cr, sr = math.cos(j.hip_roll), math.sin(j.hip_roll)
    x1, y1, z1 = px, -sr * pz, cr * pz

    cy, sy = math.cos(j.hip_yaw), math.sin(j.hip_yaw)
    return FootPose(cy * x1 - sy * y1, sy * x1 + cy * y1, z1, j.hip_yaw)


def _clamp1(v: float) -> float:
    return max(-1.0, min(1.0, v))
