"""State estimation from simulated IMU and kinematic measurements.

Reconstructs torso orientation (passive complementary filter on fused
angles), the support leg (height hysteresis), the pseudo-CoM state (per-axis
Kalman filter driven by trunk acceleration) and the pseudo-ZMP.

The pseudo-CoM is a fixed offset from the torso frame; in the nominal gait
pose this approximates the true CoM well enough to close the balance loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .fused_angles import Rotation

FREE_FALL_ACCEL_FRACTION = 0.5  # below this fraction of g the accel is unusable


class EstimatorInputError(ValueError):
    """Measurement violates a precondition (non-finite, bad dt, ...)."""


@dataclass(frozen=True)
class ImuSample:
    """One 6-axis IMU reading: body-frame rates and specific force."""

    gyro: tuple[float, float, float]  # rad/s
    accel: tuple[float, float, float]  # m/s^2, includes gravity reaction
    dt: float  # s

    def validate(self) -> None:
        if not self.dt > 0.0:
            raise EstimatorInputError(f"dt must be > 0, got {self.dt}")
        if not all(math.isfinite(v) for v in (*self.gyro, *self.accel)):
            raise EstimatorInputError("non-finite IMU sample")


@dataclass(frozen=True)
class PhysicalParams:
    g: float = 9.81
    com_height: float = 0.9  # m, pendulum height of the pseudo-CoM
    robot_mass: float = 19.0  # kg
    foot_half_length: float = 0.12  # m
    hysteresis_margin: float = 0.01  # m, support-exchange height hysteresis

    def __post_init__(self) -> None:
        if self.g <= 0 or self.com_height <= 0 or self.robot_mass <= 0:
            raise ValueError(f"non-positive physical parameter: {self}")
        if self.hysteresis_margin < 0:
            raise ValueError("hysteresis_margin must be >= 0")

    @property
    def omega(self) -> float:
        """Pendulum constant sqrt(g / com_height)."""
        return math.sqrt(self.g / self.com_height)


class Support(Enum):
    LEFT = "L"
    RIGHT = "R"

    def other(self) -> "Support":
        return Support.RIGHT if self is Support.LEFT else Support.LEFT


@dataclass(frozen=True)
class SupportState:
    support: Support
    blend: float = 1.0  # [0, 1] share of weight on the support foot


def complementary_update(state: Rotation, imu: ImuSample, k_acc: float = 1.0) -> Rotation:
    """One step of the passive complementary attitude filter.

    The gyro term integrates angular rate exactly (axis-angle increment);
    the accelerometer term rotates the estimate about a horizontal axis so
    that the predicted gravity direction decays toward the measured one with
    rate ``k_acc``.  Gravity carries no heading information, so fused yaw is
    only ever driven by the gyro.  If the accelerometer norm drops below half
    of g (free fall / impact) the correction step is skipped.
    """
    imu.validate()
    if imu.dt > 0.1:
        raise EstimatorInputError(f"dt {imu.dt} exceeds 0.1 s filter limit")

    gx, gy, gz = imu.gyro
    rate = math.sqrt(gx * gx + gy * gy + gz * gz)
    q = state
    if rate * imu.dt > 0.0:
        q = q * Rotation.from_axis_angle((gx, gy, gz), rate * imu.dt)

    ax, ay, az = imu.accel
    a_norm = math.sqrt(ax * ax + ay * ay + az * az)
    if a_norm >= FREE_FALL_ACCEL_FRACTION * 9.81:
        up_meas = (ax / a_norm, ay / a_norm, az / a_norm)
        up_est = q.rotate_inv((0.0, 0.0, 1.0))
        # correction axis: rotating the estimate about it pulls up_est onto up_meas
        ex = up_meas[1] * up_est[2] - up_meas[2] * up_est[1]
        ey = up_meas[2] * up_est[0] - up_meas[0] * up_est[2]
        ez = up_meas[0] * up_est[1] - up_meas[1] * up_est[0]
        err = math.sqrt(ex * ex + ey * ey + ez * ez)
        if err > 0.0:
            q = q * Rotation.from_axis_angle((ex, ey, ez), k_acc * err * imu.dt)

    return q.normalized().canonical()


def support_update(
    prev: SupportState,
    left_foot_height: float,
    right_foot_height: float,
    margin: float,
) -> SupportState:
    """Hysteretic support-leg selection from foot heights.

    The support switches only when the candidate foot is lower than the
    current support foot by more than ``margin``; chatter from small height
    oscillations is suppressed.  ``blend`` is the height difference
    normalized by the margin band, clamped to [0, 1] (1 = support foot
    clearly lower, 0.5 = level feet).
    """
    if not (math.isfinite(left_foot_height) and math.isfinite(right_foot_height)):
        raise EstimatorInputError("non-finite foot height")

    support = prev.support
    if support is Support.LEFT:
        if right_foot_height < left_foot_height - margin:
            support = Support.RIGHT
    else:
        if left_foot_height < right_foot_height - margin:
            support = Support.LEFT

    heights = {Support.LEFT: left_foot_height, Support.RIGHT: right_foot_height}
    diff = heights[support.other()] - heights[support]
    if margin > 0.0:
        blend = 0.5 + 0.5 * diff / margin
    else:
        blend = 1.0 if diff > 0 else (0.5 if diff == 0 else 0.0)
    return SupportState(support, max(0.0, min(1.0, blend)))


@dataclass(frozen=True)
class ComAxisState:
    """Pseudo-CoM filter state for one horizontal axis.

    Covariance of (c, c_dot) is stored as the symmetric triple
    (p_cc, p_cv, p_vv).
    """

    c: float = 0.0
    c_dot: float = 0.0
    c_ddot: float = 0.0
    p_cc: float = 1e-2
    p_cv: float = 0.0
    p_vv: float = 1e-2
    outlier: bool = False

    def covariance(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.p_cc, self.p_cv), (self.p_cv, self.p_vv))


@dataclass(frozen=True)
class ComState:
    x: ComAxisState = field(default_factory=ComAxisState)
    y: ComAxisState = field(default_factory=ComAxisState)


@dataclass(frozen=True)
class ComFilterNoise:
    q_proc: float = 1e-4  # white acceleration noise density
    r_meas: float = 1e-4  # kinematic position measurement variance
    accel_lpf_tau: float = 0.0  # s; 0 = report the raw input acceleration

    def __post_init__(self) -> None:
        if self.q_proc <= 0 or self.r_meas <= 0:
            raise ValueError("noise parameters must be > 0")


def com_kf_update(
    state: ComAxisState,
    measured_com: float,
    measured_accel: float,
    dt: float,
    noise: ComFilterNoise = ComFilterNoise(),
) -> ComAxisState:
    """Kalman update of one pseudo-CoM axis.

    Constant-acceleration prediction with the gravity-removed world-frame
    trunk acceleration as control input, position correction from the
    kinematic pseudo-CoM measurement.  A non-finite measurement is treated
    as an outlier: the prediction is held and flagged.
    """
    if not dt > 0.0:
        raise EstimatorInputError(f"dt must be > 0, got {dt}")

    u = measured_accel if math.isfinite(measured_accel) else 0.0

    # predict
    c = state.c + state.c_dot * dt + 0.5 * u * dt * dt
    v = state.c_dot + u * dt
    dt2, dt3, dt4 = dt * dt, dt ** 3, dt ** 4
    p_cc = state.p_cc + 2.0 * dt * state.p_cv + dt2 * state.p_vv + noise.q_proc * dt4 / 4.0
    p_cv = state.p_cv + dt * state.p_vv + noise.q_proc * dt3 / 2.0
    p_vv = state.p_vv + noise.q_proc * dt2

    if noise.accel_lpf_tau > 0.0:
        beta = math.exp(-dt / noise.accel_lpf_tau)
        c_ddot = beta * state.c_ddot + (1.0 - beta) * u
    else:
        c_ddot = u

    if not math.isfinite(measured_com):
        return ComAxisState(c, v, c_ddot, p_cc, p_cv, p_vv, outlier=True)

    # correct position
    s = p_cc + noise.r_meas
    k_c = p_cc / s
    k_v = p_cv / s
    innov = measured_com - c
    c += k_c * innov
    v += k_v * innov
    # covariance update (I - K H) P, symmetrized
    n_cc = (1.0 - k_c) * p_cc
    n_cv = (1.0 - k_c) * p_cv
    n_vv = p_vv - k_v * p_cv
    return ComAxisState(c, v, c_ddot, n_cc, 0.5 * (n_cv + n_cv), n_vv, outlier=False)


def pseudo_zmp(c: float, c_ddot: float, params: PhysicalParams) -> float:
    """Pseudo zero-moment point of one axis: c - (com_height / g) * c_ddot."""
    return c - (params.com_height / params.g) * c_ddot
