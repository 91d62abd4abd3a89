"""Balance feedback around the open-loop CPG gait.

Two mechanisms close the loop: tilt-proportional swing-leg offsets (foot
placement) and a CoM-ZMP velocity controller acting on the estimated pseudo
states.  A second, purely nominal CPG provides the reference pseudo-CoM/ZMP
trajectories; the reference ZMP is matched to the observed one through a
leaky-integrated offset from the support-foot center.  Leaky integration also
drives the hip shift, and a rate limiter smooths velocity commands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .gait_core import GaitCommand, GaitPhase, LegGeometry
from .state_estim import ComState, PhysicalParams, Support, SupportState


@dataclass(frozen=True)
class FeedbackGains:
    k_swing_sag: float = 0.8  # rad of swing offset per rad of tilt
    k_swing_lat: float = 0.6
    k_c: float = 5.0  # 1/s, CoM error gain
    k_z: float = 2.0  # 1/s, ZMP error gain
    fade_fraction: float = 0.25  # of step duration, linear fade-out window
    leak_tau: float = 0.2  # s, leaky integrator time constant
    rate_max: float = 8.0  # (m/s)/s command slew limit
    hp_tau: float = 0.3  # s, decay of the reported rate-limit residual

    def __post_init__(self) -> None:
        for name in ("k_swing_sag", "k_swing_lat", "k_c", "k_z", "leak_tau", "rate_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.fade_fraction <= 1.0:
            raise ValueError("fade_fraction must lie in [0, 1]")

    def stability_condition(self, omega: float) -> bool:
        """Recorded design inequality 0 < k_z < omega < k_c."""
        return 0.0 < self.k_z < omega < self.k_c


@dataclass(frozen=True)
class ReferenceState:
    """Nominal pseudo-CoM/ZMP trajectory sample plus the adapted ZMP offset."""

    c_ref: tuple[float, float]
    c_dot_ref: tuple[float, float]
    p_ref: tuple[float, float]
    zmp_offset: tuple[float, float] = (0.0, 0.0)


def swing_window_weight(mu: float, leg: int, fade_fraction: float) -> float:
    """Offset weight for one leg: 1 in its swing half, linear fade after.

    The fade spans ``fade_fraction`` of a step just after the leg starts to
    take support; outside swing and fade the weight is 0.  The pattern is
    periodic, so a tilt persisting into the next step re-applies the offset.
    """
    fade = fade_fraction * math.pi
    if leg == +1:  # left: swing over [-pi, 0)
        if mu < 0.0:
            return 1.0
        return max(0.0, 1.0 - mu / fade) if fade > 0.0 else 0.0
    if mu >= 0.0:  # right: swing over [0, pi)
        return 1.0
    return max(0.0, 1.0 - (mu + math.pi) / fade) if fade > 0.0 else 0.0


def swing_leg_feedback(
    tilt: tuple[float, float],
    phase: GaitPhase,
    support: SupportState,
    gains: FeedbackGains,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Tilt-proportional swing offsets, ((left sag, left lat), (right ...)).

    Forward tilt swings the airborne leg forward so it lands ahead of the
    CoM; lateral tilt likewise.  A leg that the height hysteresis still
    reports as supporting gets no offset even inside its expected swing
    window (it is carrying weight and must not be steered).
    """
    sag, lat = tilt
    out = []
    for leg, sup in ((+1, Support.LEFT), (-1, Support.RIGHT)):
        w = swing_window_weight(phase.mu, leg, gains.fade_fraction)
        if support.support is sup and w >= 1.0:
            w = 0.0
        out.append((w * gains.k_swing_sag * sag, w * gains.k_swing_lat * lat))
    return (out[0], out[1])


def com_zmp_control_axis(
    c_hat: float,
    p_hat: float,
    c_ref: float,
    c_dot_ref: float,
    p_ref: float,
    zmp_offset: float,
    gains: FeedbackGains,
) -> float:
    """Velocity command of the CoM-ZMP controller for one axis (exact affine law)."""
    return c_dot_ref + gains.k_c * (c_ref - c_hat) - gains.k_z * (p_ref + zmp_offset - p_hat)


def com_zmp_control(
    est: ComState,
    p_hat: tuple[float, float],
    ref: ReferenceState,
    gains: FeedbackGains,
) -> tuple[float, float]:
    """CoM velocity command per horizontal axis steering c to the reference."""
    return (
        com_zmp_control_axis(
            est.x.c, p_hat[0], ref.c_ref[0], ref.c_dot_ref[0], ref.p_ref[0], ref.zmp_offset[0], gains
        ),
        com_zmp_control_axis(
            est.y.c, p_hat[1], ref.c_ref[1], ref.c_dot_ref[1], ref.p_ref[1], ref.zmp_offset[1], gains
        ),
    )


def closed_loop_matrix(gains: FeedbackGains, params: PhysicalParams):
    """Linearized LIPM + controller error dynamics as a 2x2 matrix.

    With the velocity command kinematically realized and the ZMP eliminated
    through the pendulum relation p = c - c_ddot / omega^2, the tracking
    error obeys e_ddot + (omega^2/k_z) e_dot + omega^2 (k_c - k_z)/k_z e = 0.
    """
    w2 = params.omega**2
    return (
        (0.0, 1.0),
        (-w2 * (gains.k_c - gains.k_z) / gains.k_z, -w2 / gains.k_z),
    )


def periodic_lipm_response(
    offset: float, t: float, omega: float, half_period: float
) -> tuple[float, float]:
    """Periodic antisymmetric LIPM response to a square-wave ZMP.

    Over one half-period the ZMP sits at ``offset``; the unique solution with
    c(T) = -c(0) and c_dot(T) = -c_dot(0) starts at c(0) = 0 moving toward
    the support side with c_dot(0) = omega * offset * tanh(omega T / 2).
    """
    k = math.tanh(0.5 * omega * half_period)
    c = offset * (1.0 - math.cosh(omega * t) + k * math.sinh(omega * t))
    c_dot = offset * omega * (k * math.cosh(omega * t) - math.sinh(omega * t))
    return c, c_dot


@dataclass(frozen=True)
class ReferenceCpgParams:
    step_amp_sag: float = 0.04  # m of sagittal ZMP alternation at |vx| = 1


def reference_foot_center(
    support: Support,
    cmd: GaitCommand,
    geom: LegGeometry,
    params: ReferenceCpgParams = ReferenceCpgParams(),
) -> tuple[float, float]:
    """Nominal support-foot center while ``support`` carries the robot."""
    cmd = cmd.clamped()
    sign = 1.0 if support is Support.LEFT else -1.0
    return (sign * params.step_amp_sag * cmd.vx, sign * 0.5 * geom.hip_width)


def reference_cpg(
    phase: GaitPhase,
    cmd: GaitCommand,
    phys: PhysicalParams,
    geom: LegGeometry,
    params: ReferenceCpgParams = ReferenceCpgParams(),
) -> ReferenceState:
    """Nominal pseudo-CoM/ZMP reference assuming ideal CPG execution.

    The reference ZMP alternates between the support-foot centers with the
    gait schedule; the reference CoM is the periodic LIPM response to that
    square wave, evaluated in closed form (no integration state).
    """
    cmd = cmd.clamped()
    half_period = phase.step_duration
    mu = phase.mu
    if not -math.pi <= mu < math.pi:
        from .fused_angles import wrap_angle

        mu = wrap_angle(mu)
    if mu >= 0.0:  # right swing, left support
        t = (mu / math.pi) * half_period
        d_lat = +0.5 * geom.hip_width
        d_sag = +params.step_amp_sag * cmd.vx
    else:
        t = ((mu + math.pi) / math.pi) * half_period
        d_lat = -0.5 * geom.hip_width
        d_sag = -params.step_amp_sag * cmd.vx

    cy, vy = periodic_lipm_response(d_lat, t, phys.omega, half_period)
    cx, vx = periodic_lipm_response(d_sag, t, phys.omega, half_period)
    return ReferenceState(c_ref=(cx, cy), c_dot_ref=(vx, vy), p_ref=(d_sag, d_lat))


def leaky_integrate(y: float, x: float, leak_tau: float, dt: float) -> float:
    """First-order leaky integrator y' = beta*y + (1-beta)*x, beta = exp(-dt/tau)."""
    if leak_tau <= 0.0 or dt <= 0.0:
        raise ValueError("leak_tau and dt must be > 0")
    beta = math.exp(-dt / leak_tau)
    return beta * y + (1.0 - beta) * x


def match_zmp_offset(
    ref: ReferenceState,
    p_hat_observed: tuple[float, float],
    leak_tau: float,
    dt: float,
    foot_half_length: float,
) -> ReferenceState:
    """Pull the reference ZMP toward the observed one via a leaky offset.

    The offset is integrated from the observed-minus-reference ZMP error and
    clamped to the support-foot extent so the matched reference never leaves
    the foot.
    """
    new = []
    for axis in (0, 1):
        err = p_hat_observed[axis] - ref.p_ref[axis]
        off = leaky_integrate(ref.zmp_offset[axis], err, leak_tau, dt)
        new.append(max(-foot_half_length, min(foot_half_length, off)))
    return replace(ref, zmp_offset=(new[0], new[1]))


def rate_limit(prev: float, target: float, rate_max: float, dt: float) -> float:
    """Slew-rate limit: move from prev toward target by at most rate_max*dt."""
    if rate_max <= 0.0 or dt <= 0.0:
        raise ValueError("rate_max and dt must be > 0")
    step = rate_max * dt
    return prev + max(-step, min(step, target - prev))


@dataclass
class RateLimiter:
    """Stateful rate limiter that also tracks the high-passed residual.

    The residual (target - output) is reported for logging and decays with
    the configured high-pass time constant once the output catches up.
    """

    rate_max: float
    hp_tau: float = 0.3
    value: float = 0.0
    residual: float = 0.0

    def update(self, target: float, dt: float) -> float:
        self.value = rate_limit(self.value, target, self.rate_max, dt)
        decay = math.exp(-dt / self.hp_tau) if self.hp_tau > 0.0 else 0.0
        self.residual = (target - self.value) * (1.0 - decay) + self.residual * decay
        return self.value
