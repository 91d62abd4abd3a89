"""Deterministic fixed-step reduced-order simulation.

The plant is a planar LIPM: each horizontal axis integrates
c_ddot = omega^2 (c - p) with the exact cosh/sinh map, where p is the applied
center of pressure, clamped to the support-foot polygon.  Feet follow the CPG
kinematics and re-plant the polygon at every measured support exchange, so
stepping (and feedback foot placement) is what extends the recoverable push
range.  Torso tilt is derived from the CoM-over-CoP geometry and fed through
a synthesized IMU into the real estimator chain, closing the loop the same
way the robot does.

A scenario run is a pure function of its config (including the RNG seed):
identical configs produce byte-identical trajectory logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .fused_angles import FusedAngles, Rotation, fused_from_rotation, rotation_from_fused, tilt_components
from .gait_core import (
    LEFT,
    RIGHT,
    AbstractPose,
    GaitCommand,
    GaitParams,
    GaitPhase,
    LegGeometry,
    abstract_to_cartesian,
    abstract_waveforms,
    advance_phase,
    swing_progress,
)
from .kick_waveform import (
    KickPhase,
    KickProfile,
    _OnlineLowPass,
    default_profile,
    eval_waveform,
)
from .skills_fsm import InterceptPlanner
from .stabilization import (
    FeedbackGains,
    RateLimiter,
    ReferenceCpgParams,
    ReferenceState,
    com_zmp_control_axis,
    leaky_integrate,
    match_zmp_offset,
    reference_cpg,
    reference_foot_center,
    swing_leg_feedback,
)
from .state_estim import (
    ComAxisState,
    ComFilterNoise,
    ImuSample,
    PhysicalParams,
    Support,
    SupportState,
    com_kf_update,
    complementary_update,
    pseudo_zmp,
    support_update,
)

DT = 0.002  # s, fixed dynamics and control step
COM_BLOWUP_LIMIT = 10.0  # m, beyond this the run aborts as fallen
CONTACT_EPS = 0.004  # m above the lower foot that still counts as ground contact
DETECTION_PERIOD = 0.03  # s between ball detections (perception rate)

CSV_HEADER = "t,c_x,c_y,cdot_x,cdot_y,zmp_x,zmp_y,p_ref_x,p_ref_y,support,phase,theta,phi,event"


class SimulationAborted(RuntimeError):
    pass


@dataclass(frozen=True)
class PendulumSpec:
    mass: float = 5.0  # kg
    cord_length: float = 1.0  # m (not stated by the benchmark; configurable)
    retraction: float = 0.9  # m horizontal pull-back
    restitution: float = 0.0  # plastic impact by default

    def validate(self) -> None:
        if self.mass <= 0:
            raise ValueError("pendulum mass must be > 0")
        if not 0.0 <= self.retraction <= self.cord_length:
            raise ValueError(
                f"retraction {self.retraction} must lie in [0, cord length {self.cord_length}]"
            )
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")


@dataclass(frozen=True)
class BallModel:
    """Rolling ball with an effective restitution at foot contact.

    Both constants are desk-scale calibration, chosen once so the shipped
    kick profile reaches ~5 m at full strength and ~2.5 m at the documented
    legacy strength; they are config, not measured claims.
    """

    rolling_friction: float = 0.05  # dimensionless
    restitution_factor: float = 0.357  # launch speed fraction of contact speed

    def __post_init__(self) -> None:
        if self.rolling_friction <= 0:
            raise ValueError("rolling friction must be > 0")
        if not 0.0 < self.restitution_factor <= 1.0:
            raise ValueError("restitution factor must lie in (0, 1]")


@dataclass
class BallState:
    pos: float = 0.0  # m along the approach axis
    vel: float = 0.0  # m/s


def lipm_step(
    c: float, c_dot: float, p: float, params: PhysicalParams, dt: float
) -> tuple[float, float]:
    """Exact discrete LIPM map for c_ddot = omega^2 (c - p), constant p.

    Uses the cosh/sinh closed form rather than an Euler step, so the orbital
    energy 0.5 c_dot^2 - 0.5 omega^2 (c - p)^2 is conserved to rounding.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    w = params.omega
    ch, sh = math.cosh(w * dt), math.sinh(w * dt)
    d = c - p
    return p + d * ch + (c_dot / w) * sh, d * w * sh + c_dot * ch


def pendulum_push(spec: PendulumSpec, params: PhysicalParams) -> float:
    """CoM velocity change from a free-falling pendulum impact.

    Impact speed comes from the drop height of a cord pulled back
    horizontally by d: v = sqrt(2 g (L - sqrt(L^2 - d^2))).  The impulse is an
    instantaneous two-body momentum exchange at the CoM.
    """
    spec.validate()
    drop = spec.cord_length - math.sqrt(spec.cord_length**2 - spec.retraction**2)
    v = math.sqrt(2.0 * params.g * drop)
    return (1.0 + spec.restitution) * spec.mass * v / (spec.mass + params.robot_mass)


def rolling_stop_distance(speed: float, model: BallModel, g: float = 9.81) -> float:
    """Total distance a ball rolls from ``speed`` to rest: v^2 / (2 mu g)."""
    return speed * speed / (2.0 * model.rolling_friction * g)


def ball_roll_step(ball: BallState, model: BallModel, g: float, dt: float) -> BallState:
    """Advance a rolling ball by dt with constant friction deceleration.

    The final partial step is integrated exactly, so the cumulative distance
    matches v^2/(2 mu g) to machine precision.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if ball.vel == 0.0:
        return BallState(ball.pos, 0.0)
    decel = model.rolling_friction * g
    sign = 1.0 if ball.vel > 0 else -1.0
    speed = abs(ball.vel)
    if speed <= decel * dt:
        return BallState(ball.pos + sign * speed * speed / (2.0 * decel), 0.0)
    new_speed = speed - decel * dt
    return BallState(ball.pos + sign * 0.5 * (speed + new_speed) * dt, sign * new_speed)


@dataclass(frozen=True)
class BallScenario:
    model: BallModel = BallModel()
    distance: float = 0.24  # m ahead of the robot / neutral foot
    speed: float = 0.0  # m/s along x (negative = approaching)
    radius: float = 0.11  # size-5 ball
    goal_distance: float = 4.0  # m, ball beyond this counts as a goal


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "walk"  # walk | push | kick | intercept
    seed: int = 0
    duration_s: float = 10.0
    robot: PhysicalParams = field(default_factory=PhysicalParams)
    gait: GaitParams = field(default_factory=GaitParams)
    geom: LegGeometry = field(default_factory=LegGeometry)
    gains: FeedbackGains = field(default_factory=FeedbackGains)
    # scenario-level estimator tuning: a faster-correcting KF and a slow accel
    # correction keep the CoM-acceleration content of the accelerometer from
    # polluting the closed loop
    kf_noise: ComFilterNoise = field(default_factory=lambda: ComFilterNoise(q_proc=1e-2))
    command: GaitCommand = field(default_factory=GaitCommand)
    feedback_enabled: bool = True
    k_acc: float = 0.05  # complementary filter accel gain
    tau_v: float = 0.05  # s, inner CoM-velocity tracking constant
    hip_shift_clamp: float = 0.15  # m, bound on the integrated hip-shift offset
    com_meas_offset: tuple[float, float] = (0.0, 0.0)  # pseudo-CoM measurement bias
    pendulum: PendulumSpec | None = None
    push_time: float = 2.0
    push_axis: str = "x"
    ball: BallScenario = field(default_factory=BallScenario)
    kick_profile: KickProfile | None = None
    kick_time: float = 2.0
    game_messages: tuple[tuple[float, str], ...] = ()
    # trigger window for interception; kick opportunities are quantized to the
    # gait period, so the window must cover half of it to guarantee a trigger
    kick_exec_margin: float = 0.36

    def validate(self) -> None:
        if self.scenario not in ("walk", "push", "kick", "intercept"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.pendulum is not None:
            self.pendulum.validate()


def _fmt(x: float) -> str:
    return f"{x:.9g}"


@dataclass
class TrajectoryLog:
    rows: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return CSV_HEADER + "\n" + "".join(r + "\n" for r in self.rows)

    def summary_json(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2) + "\n"


class _Runner:
    """Single scenario execution; owns all mutable state for one run."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.phys = cfg.robot
        self.omega = self.phys.omega
        self.half_period = 0.5 / cfg.gait.freq

        self.phase = GaitPhase(0.0, cfg.gait.freq)
        ref0 = reference_cpg(self.phase, cfg.command, self.phys, cfg.geom)
        # plant starts on the nominal periodic orbit (mu = 0 is a support exchange)
        self.c = [ref0.c_ref[0], ref0.c_ref[1]]
        self.c_dot = [ref0.c_dot_ref[0], ref0.c_dot_ref[1]]
        self.anchor = [0.0, 0.0]
        self.p_applied = [ref0.p_ref[0], ref0.p_ref[1]]
        self.support = SupportState(Support.LEFT)

        self.tilt_true = (0.0, 0.0)
        left0, right0 = abstract_waveforms(self.phase, cfg.command.clamped(), cfg.gait)
        lw0, rw0 = self._foot_world(left0, LEFT), self._foot_world(right0, RIGHT)
        self.planted = {LEFT: [lw0[0], lw0[1]], RIGHT: [rw0[0], rw0[1]]}
        self.in_contact = {LEFT: True, RIGHT: True}

        self.tilt_true = self._true_tilt()
        tilt = self.tilt_true
        self.q_true = rotation_from_fused(FusedAngles(0.0, tilt[0], tilt[1], 1))
        self.q_est = self.q_true
        self.kf = [
            ComAxisState(c=self.c[0] + cfg.com_meas_offset[0], c_dot=self.c_dot[0]),
            ComAxisState(c=self.c[1] + cfg.com_meas_offset[1], c_dot=self.c_dot[1]),
        ]
        self.zmp_offset = (0.0, 0.0)
        self.hip_shift_state = [0.0, 0.0]
        self.limiters = [
            RateLimiter(cfg.gains.rate_max, cfg.gains.hp_tau, value=self.c_dot[0]),
            RateLimiter(cfg.gains.rate_max, cfg.gains.hp_tau, value=self.c_dot[1]),
        ]

        self.t = 0.0
        self.impulse_accel = [0.0, 0.0]
        self.saturation_time = [0.0, 0.0]
        self.clamped = [False, False]
        self.fell = False
        self.aborted = False
        self.events: list[str] = []
        self.log = TrajectoryLog()
        self.err_window: list[tuple[float, float]] = []  # (|c-cref|, |cdot-cdotref|) recent
        self.max_com_error = 0.0

        # scenario extras
        self.push_done = cfg.scenario != "push" or cfg.pendulum is None
        self.delta_v = pendulum_push(cfg.pendulum, self.phys) if cfg.pendulum else 0.0

        self.kick_profile = cfg.kick_profile or default_profile()
        self.kick_armed = False
        self.kick_active = False
        self.kick_done = cfg.scenario not in ("kick", "intercept")
        self.kick_leg = RIGHT
        self.lpf_eta = _OnlineLowPass(self.kick_profile.retract.low_pass_tau)
        self.lpf_swing = _OnlineLowPass(self.kick_profile.swing.low_pass_tau)
        self.contact_speed = 0.0
        self.ball: BallState | None = None
        self.ball_contacted = False
        self.launch_pos = 0.0
        if cfg.scenario in ("kick", "intercept"):
            self.ball = BallState(cfg.ball.distance, cfg.ball.speed if cfg.scenario == "intercept" else 0.0)

        self.planner: InterceptPlanner | None = None
        self.game_phase = "PLAY" if not cfg.game_messages else "INITIAL"
        self.pending_messages = sorted(cfg.game_messages)
        self.trigger_count = 0
        self.next_detection_t = 0.0
        if cfg.scenario == "intercept":
            self.planner = InterceptPlanner(
                trigger_radius=self.phys.foot_half_length + cfg.ball.radius,
                margin=cfg.kick_exec_margin,
            )

    # -- helpers -----------------------------------------------------------

    def _true_tilt(self) -> tuple[float, float]:
        """Torso tilt proxy: tipping lean beyond the support polygon.

        While the CoM projects inside the polygon the stiff posture holds the
        trunk upright (tilt 0); once it passes an edge the robot pivots about
        that edge and leans by the excess.  Nominal walking and in-place
        kicking read exactly upright; the tilt signals the unrecovered part
        of a push.  Both components are capped so the decomposition stays in
        its valid tilt range (beyond the cap the robot counts as fallen).
        """
        h = self.phys.com_height
        lo, hi = self._polygon()
        out = []
        for axis in range(2):
            excess = self.c[axis] - max(lo[axis], min(hi[axis], self.c[axis]))
            out.append(max(-0.6, min(0.6, math.atan2(excess, h))))
        return (out[0], out[1])

    def _ref_tilt(self, ref_frame: ReferenceState) -> tuple[float, float]:
        """Reference tilt: the nominal CPG never leaves its polygon (upright)."""
        return (0.0, 0.0)

    def _world_ref(self, ref: ReferenceState) -> ReferenceState:
        ax, ay = self.anchor
        return ReferenceState(
            c_ref=(ref.c_ref[0] + ax, ref.c_ref[1] + ay),
            c_dot_ref=ref.c_dot_ref,
            p_ref=(ref.p_ref[0] + ax, ref.p_ref[1] + ay),
            zmp_offset=self.zmp_offset,
        )

    def _foot_world(self, pose: AbstractPose, leg: int) -> tuple[float, float, float]:
        """World foot position: trunk-frame kinematics rotated by the torso tilt.

        A tilted trunk plants its feet displaced toward the tilt (the leg
        vector rotates with the trunk), which is what makes an unassisted
        tilt run away and what the swing-leg feedback compensates.
        """
        fp = abstract_to_cartesian(pose, leg, self.cfg.geom, self.cfg.gait.eta_range)
        hip_y = 0.5 * self.cfg.geom.hip_width * (1 if leg == LEFT else -1)
        ts, tl = self.tilt_true
        x = self.c[0] + fp.x * math.cos(ts) + fp.z * math.sin(ts)
        y = self.c[1] + hip_y + fp.y * math.cos(tl) + fp.z * math.sin(tl)
        return (x, y, fp.z)

    def _polygon(self) -> tuple[list[float], list[float]]:
        """Per-axis CoP bounds spanned by the feet currently in contact."""
        fhl = self.phys.foot_half_length
        legs = [leg for leg in (LEFT, RIGHT) if self.in_contact[leg]] or [
            LEFT if self.support.support is Support.LEFT else RIGHT
        ]
        lo = [min(self.planted[leg][a] for leg in legs) - fhl for a in range(2)]
        hi = [max(self.planted[leg][a] for leg in legs) + fhl for a in range(2)]
        return lo, hi

    # -- main loop ---------------------------------------------------------

    def run(self) -> TrajectoryLog:
        n_steps = int(round(self.cfg.duration_s / DT))
        for _ in range(n_steps):
            self.step()
            if self.aborted:
                break
        return self._finish()

    def step(self) -> None:
        cfg = self.cfg
        self.events = []
        self._consume_game_messages()

        prev_q_true = self.q_true
        self.t += DT
        self.phase = advance_phase(self.phase, DT)

        # 1. open-loop waveforms (+ kick superposition on the kicking leg)
        cmd = cfg.command.clamped()
        left, right = abstract_waveforms(self.phase, cmd, cfg.gait)
        left, right = self._apply_kick(left, right)

        # 2. synthesized IMU -> orientation estimate (an applied push impulse
        # shows up as a one-step acceleration spike, as a real IMU would see)
        accel_world = (
            self.omega**2 * (self.c[0] - self.p_applied[0]) + self.impulse_accel[0],
            self.omega**2 * (self.c[1] - self.p_applied[1]) + self.impulse_accel[1],
            0.0,
        )
        self.impulse_accel = [0.0, 0.0]
        self.tilt_true = self._true_tilt()
        tilt = self.tilt_true
        self.q_true = rotation_from_fused(FusedAngles(0.0, tilt[0], tilt[1], 1))
        gyro = _body_rates(prev_q_true, self.q_true, DT)
        accel_body = self.q_true.rotate_inv(
            (accel_world[0], accel_world[1], accel_world[2] + self.phys.g)
        )
        self.q_est = complementary_update(
            self.q_est, ImuSample(gyro, accel_body, DT), cfg.k_acc
        )
        est_tilt = tilt_components(fused_from_rotation(self.q_est))

        # 3. pseudo-CoM Kalman filter on the gravity-removed estimate
        a_est = self.q_est.rotate(accel_body)
        a_est = (a_est[0], a_est[1], a_est[2] - self.phys.g)
        for axis in range(2):
            self.kf[axis] = com_kf_update(
                self.kf[axis],
                self.c[axis] + cfg.com_meas_offset[axis],
                a_est[axis],
                DT,
                cfg.kf_noise,
            )
        p_hat = (
            pseudo_zmp(self.kf[0].c, self.kf[0].c_ddot, self.phys),
            pseudo_zmp(self.kf[1].c, self.kf[1].c_ddot, self.phys),
        )

        # 4. reference CPG (the ZMP offset carried over from the last step's match)
        ref_frame = reference_cpg(self.phase, cmd, self.phys, cfg.geom)
        ref = self._world_ref(ref_frame)

        # 5. swing-leg feedback and hip shift, applied before the feet plant
        # so foot placement actually reflects them
        if cfg.feedback_enabled:
            ref_tilt = self._ref_tilt(ref_frame)
            deviation = (est_tilt[0] - ref_tilt[0], est_tilt[1] - ref_tilt[1])
            (lo_s, lo_l), (ro_s, ro_l) = swing_leg_feedback(
                deviation, self.phase, self.support, cfg.gains
            )
            left = replace(left, swing_sag=left.swing_sag + lo_s, swing_lat=left.swing_lat + lo_l)
            right = replace(right, swing_sag=right.swing_sag + ro_s, swing_lat=right.swing_lat + ro_l)

            # integrated pseudo-CoM offset over the stance (lean relative to
            # the reference lean) shifts the hips, i.e. plants the feet toward
            # the lean side
            mid = (
                0.5 * (self.planted[LEFT][0] + self.planted[RIGHT][0]),
                0.5 * (self.planted[LEFT][1] + self.planted[RIGHT][1]),
            )
            for axis in range(2):
                err = self.kf[axis].c - mid[axis] - ref_frame.c_ref[axis]
                self.hip_shift_state[axis] = leaky_integrate(
                    self.hip_shift_state[axis], err, cfg.gains.leak_tau, DT
                )
            shift = [
                -max(-cfg.hip_shift_clamp, min(cfg.hip_shift_clamp, s))
                for s in self.hip_shift_state
            ]
            left = replace(left, hip_shift_sag=left.hip_shift_sag + shift[0],
                           hip_shift_lat=left.hip_shift_lat + shift[1])
            right = replace(right, hip_shift_sag=right.hip_shift_sag + shift[0],
                            hip_shift_lat=right.hip_shift_lat + shift[1])

        # 6. measured support from foot heights; plant/track foot contacts
        lw = self._foot_world(left, LEFT)
        rw = self._foot_world(right, RIGHT)
        prev_support = self.support.support
        self.support = support_update(self.support, lw[2], rw[2], self.phys.hysteresis_margin)
        z_min = min(lw[2], rw[2])
        for leg, fw in ((LEFT, lw), (RIGHT, rw)):
            contact = fw[2] - z_min < CONTACT_EPS
            if contact and not self.in_contact[leg]:
                # touchdown plants the foot at its current kinematic position;
                # planted feet stay put, airborne feet keep their last spot so
                # a swinging (or kicking) leg never masquerades as body lean
                self.planted[leg] = [fw[0], fw[1]]
            self.in_contact[leg] = contact

        # 7. support exchange re-anchors the reference frame on the CoM
        if self.support.support is not prev_support:
            self.anchor = [self.c[0] - ref_frame.c_ref[0], self.c[1] - ref_frame.c_ref[1]]
            ref = self._world_ref(ref_frame)
            if cfg.feedback_enabled:
                ref = replace(ref, zmp_offset=self.zmp_offset)
            self.events.append("exchange")

        # 8. CoM-ZMP controller -> velocity command
        cmd_vel = []
        for axis in range(2):
            if cfg.feedback_enabled:
                u = com_zmp_control_axis(
                    self.kf[axis].c,
                    p_hat[axis],
                    ref.c_ref[axis],
                    ref.c_dot_ref[axis],
                    ref.p_ref[axis],
                    ref.zmp_offset[axis],
                    cfg.gains,
                )
            else:
                u = ref.c_dot_ref[axis]
            cmd_vel.append(self.limiters[axis].update(u, DT))

        # 9. CoP realization, clamped to the support polygon, exact LIPM step
        lo, hi = self._polygon()
        demands = [0.0, 0.0]
        for axis in range(2):
            demand = ref.p_ref[axis] + (self.kf[axis].c_dot - cmd_vel[axis]) / (
                cfg.tau_v * self.omega**2
            )
            demands[axis] = demand
            applied = max(lo[axis], min(hi[axis], demand))
            self.clamped[axis] = applied != demand
            self.saturation_time[axis] = (
                self.saturation_time[axis] + DT if self.clamped[axis] else 0.0
            )
            self.p_applied[axis] = applied
            self.c[axis], self.c_dot[axis] = lipm_step(
                self.c[axis], self.c_dot[axis], applied, self.phys, DT
            )

        # 10. ZMP offset matching for the next step.  The controller's own
        # commanded CoP deviation is subtracted from the observation so the
        # offset adapts only to exogenous bias, not to its own effect; while
        # the CoP is saturated the observation is meaningless, so the
        # adaptation freezes (anti-windup).
        if cfg.feedback_enabled:
            obs = []
            for axis in range(2):
                if self.clamped[axis]:
                    obs.append(ref.p_ref[axis] + ref.zmp_offset[axis])
                else:
                    obs.append(p_hat[axis] - (demands[axis] - ref.p_ref[axis]))
            matched = match_zmp_offset(
                ref, (obs[0], obs[1]), cfg.gains.leak_tau, DT, self.phys.foot_half_length
            )
            self.zmp_offset = matched.zmp_offset

        self._apply_push()
        self._update_ball(right)
        self._check_fall(ref)
        self._track_errors(ref)
        self._log_row(est_tilt, ref)

    # -- scenario pieces ---------------------------------------------------

    def _consume_game_messages(self) -> None:
        while self.pending_messages and self.pending_messages[0][0] <= self.t:
            _, phase = self.pending_messages.pop(0)
            from .skills_fsm import GAME_PHASES

            if phase in GAME_PHASES:
                self.game_phase = phase
            else:
                self.events.append("bad_message")

    def _apply_kick(
        self, left: AbstractPose, right: AbstractPose
    ) -> tuple[AbstractPose, AbstractPose]:
        cfg = self.cfg
        if cfg.scenario == "kick" and not self.kick_done and not self.kick_armed:
            if self.t >= cfg.kick_time and self.game_phase == "PLAY":
                self.kick_armed = True
                self.trigger_count += 1
                self.events.append("kick_trigger")
        if cfg.scenario == "intercept" and self.planner is not None and not self.kick_armed:
            due = self.t >= self.next_detection_t  # perception runs at its own rate
            if due and self.ball is not None and self.game_phase == "PLAY":
                self.next_detection_t = self.t + DETECTION_PERIOD
                t_exec = self._time_to_kick_contact()
                if self.planner.update(self.t, self.ball.pos, t_exec):
                    self.kick_armed = True
                    self.trigger_count += 1
                    self.events.append("kick_trigger")

        s = swing_progress(self.phase.mu, self.kick_leg)
        if self.kick_armed and not self.kick_active and s is not None and s < 0.05:
            self.kick_active = True
        if self.kick_active and s is None:
            self.kick_active = False
            self.kick_armed = False
            self.kick_done = True

        d_eta = d_swing = 0.0
        if self.kick_active and s is not None:
            phi = KickPhase(s)
            d_eta = self.kick_profile.strength * eval_waveform(self.kick_profile.retract, phi)
            d_swing = self.kick_profile.strength * eval_waveform(self.kick_profile.swing, phi)
        d_eta = self.lpf_eta.step(d_eta, DT)
        d_swing = self.lpf_swing.step(d_swing, DT)
        if d_eta or d_swing:
            kicked = right if self.kick_leg == RIGHT else left
            kicked = replace(
                kicked,
                extension=max(0.0, min(1.0, kicked.extension + d_eta)),
                swing_sag=kicked.swing_sag + d_swing,
            )
            if self.kick_leg == RIGHT:
                right = kicked
            else:
                left = kicked
        return left, right

    def _time_to_kick_contact(self) -> float:
        """Time until the next cleanly startable kick reaches its contact phase.

        A kick only starts at a swing onset, so opportunities are quantized
        to the gait period; the trigger margin must cover half a period.
        """
        contact_phase = 0.45  # fraction of the swing where the foot crosses the ball line
        mu = self.phase.mu
        period = 1.0 / self.phase.freq
        s = swing_progress(mu, self.kick_leg)
        if s is not None and s < 0.05 and not self.kick_active:
            return (contact_phase - s) * self.half_period
        # wait for the next swing onset of the kicking leg
        if self.kick_leg == RIGHT:
            frac_to_swing = ((-mu) % (2.0 * math.pi)) / (2.0 * math.pi)
        else:
            frac_to_swing = ((-math.pi - mu) % (2.0 * math.pi)) / (2.0 * math.pi)
        return frac_to_swing * period + contact_phase * self.half_period

    def _apply_push(self) -> None:
        cfg = self.cfg
        if not self.push_done and self.t >= cfg.push_time:
            axis = 0 if cfg.push_axis == "x" else 1
            self.c_dot[axis] += self.delta_v
            self.impulse_accel[axis] = self.delta_v / DT
            self.push_done = True
            self.events.append("push")

    def _update_ball(self, right_pose: AbstractPose) -> None:
        if self.ball is None:
            return
        cfg = self.cfg
        fp = abstract_to_cartesian(right_pose, self.kick_leg, cfg.geom, cfg.gait.eta_range)
        foot_speed = self._foot_speed_estimate(fp.x)
        self.ball = ball_roll_step(self.ball, cfg.ball.model, self.phys.g, DT)
        if self.ball_contacted or not self.kick_active:
            return
        foot_x = self.c[0] + fp.x
        if foot_x >= self.ball.pos - cfg.ball.radius and foot_speed > 0.0:
            rel_speed = foot_speed - min(0.0, self.ball.vel)
            launch = cfg.ball.model.restitution_factor * rel_speed
            self.contact_speed = rel_speed
            self.launch_pos = self.ball.pos
            self.ball = BallState(self.ball.pos, launch)
            self.ball_contacted = True
            self.events.append("contact")

    def _foot_speed_estimate(self, foot_x_rel: float) -> float:
        prev = getattr(self, "_prev_foot_x", None)
        self._prev_foot_x = foot_x_rel
        if prev is None:
            return 0.0
        return (foot_x_rel - prev) / DT

    def _check_fall(self, ref: ReferenceState) -> None:
        if max(abs(self.c[0]), abs(self.c[1])) > COM_BLOWUP_LIMIT:
            self.fell = True
            self.aborted = True
            self.events.append("fell")
            return
        if self.fell:
            return
        if max(abs(self.tilt_true[0]), abs(self.tilt_true[1])) >= 0.6:
            self.fell = True  # tipped beyond the model's recovery range
            self.events.append("fell")
            return
        lo, hi = self._polygon()
        for axis in range(2):
            excursion = max(0.0, lo[axis] - self.c[axis], self.c[axis] - hi[axis])
            if (
                self.saturation_time[axis] > self.half_period
                and excursion > 0.4 * self.phys.com_height
            ):
                self.fell = True
                self.events.append("fell")

    def _track_errors(self, ref: ReferenceState) -> None:
        e_pos = math.hypot(self.c[0] - ref.c_ref[0], self.c[1] - ref.c_ref[1])
        e_vel = math.hypot(
            self.c_dot[0] - ref.c_dot_ref[0], self.c_dot[1] - ref.c_dot_ref[1]
        )
        self.max_com_error = max(self.max_com_error, e_pos)
        self.err_window.append((e_pos, e_vel))
        keep = int(1.0 / DT)
        if len(self.err_window) > keep:
            self.err_window.pop(0)

    def _log_row(self, est_tilt: tuple[float, float], ref: ReferenceState) -> None:
        r = self.log.rows
        vals = [
            self.t,
            self.kf[0].c,
            self.kf[1].c,
            self.kf[0].c_dot,
            self.kf[1].c_dot,
            pseudo_zmp(self.kf[0].c, self.kf[0].c_ddot, self.phys),
            pseudo_zmp(self.kf[1].c, self.kf[1].c_ddot, self.phys),
            ref.p_ref[0],
            ref.p_ref[1],
        ]
        row = ",".join(_fmt(v) for v in vals)
        row += f",{self.support.support.value},{_fmt(self.phase.mu)}"
        row += f",{_fmt(est_tilt[0])},{_fmt(est_tilt[1])}"
        row += "," + ";".join(self.events)
        r.append(row)

    def _finish(self) -> TrajectoryLog:
        settled = (
            not self.fell
            and len(self.err_window) >= int(1.0 / DT)
            and max(e for e, _ in self.err_window) < 0.03
            and max(v for _, v in self.err_window) < 0.10
        )
        distance = 0.0
        goals = 0
        if self.ball is not None and self.ball_contacted:
            distance = self.ball.pos - self.launch_pos
            if self.ball.pos >= self.cfg.ball.goal_distance:
                goals = 1
        self.log.summary = {
            "scenario": self.cfg.scenario,
            "recovered": settled,
            "fell": self.fell,
            "aborted": self.aborted,
            "distance": round(distance, 9),
            "goals": goals,
            "max_com_error": round(self.max_com_error, 9),
            "delta_v": round(self.delta_v, 9),
            "contact_speed": round(self.contact_speed, 9),
            "kick_triggers": self.trigger_count,
        }
        return self.log


def _body_rates(q_prev: Rotation, q_cur: Rotation, dt: float) -> tuple[float, float, float]:
    """Body angular rates taking q_prev to q_cur over dt (axis-angle / dt)."""
    rel = q_prev.conjugate() * q_cur
    rel = rel.canonical()
    s = math.sqrt(rel.x**2 + rel.y**2 + rel.z**2)
    if s < 1e-15:
        return (0.0, 0.0, 0.0)
    angle = 2.0 * math.atan2(s, rel.w)
    k = angle / (s * dt)
    return (rel.x * k, rel.y * k, rel.z * k)


def run_scenario(cfg: ScenarioConfig) -> TrajectoryLog:
    """Execute one scenario deterministically and return its trajectory log."""
    return _Runner(cfg).run()
