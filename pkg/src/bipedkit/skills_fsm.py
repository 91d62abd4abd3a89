"""Soccer skills: ball-track fitting, kick timing, and the two FSMs.

The interception skill fits a per-axis quadratic to recent ball detections,
solves for the time of arrival at the trigger radius in front of the foot,
and fires the kick when that matches the known kick execution time.  The
Game FSM gates all actions on the controller-reported game phase; the
Behavior FSM is a minimal deterministic skill table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .gait_core import GaitCommand

GAME_PHASES = ("INITIAL", "READY", "SET", "PLAY", "STOP")

TRACK_WINDOW = 15  # detections kept for the fit (~0.45 s at 33 fps)
MIN_TRACK_SPAN = 0.1  # s


class TrackFitError(ValueError):
    pass


class NeverArrivesError(ValueError):
    pass


@dataclass(frozen=True)
class TrackSample:
    t: float
    x: float
    y: float


@dataclass
class BallTrack:
    """Sliding window of timestamped ball detections."""

    samples: list[TrackSample] = field(default_factory=list)
    window: int = TRACK_WINDOW

    def add(self, t: float, x: float, y: float) -> None:
        if self.samples and t <= self.samples[-1].t:
            raise TrackFitError(f"timestamps must increase, got {t} after {self.samples[-1].t}")
        self.samples.append(TrackSample(t, x, y))
        if len(self.samples) > self.window:
            self.samples.pop(0)

    @property
    def span(self) -> float:
        if not self.samples:
            return 0.0
        return self.samples[-1].t - self.samples[0].t


@dataclass(frozen=True)
class TrackFit:
    """Quadratic motion estimate per axis, time-zeroed at the last sample."""

    t0: float
    pos: tuple[float, float]
    vel: tuple[float, float]
    acc: tuple[float, float]

    def predict(self, t: float) -> tuple[float, float]:
        dt = t - self.t0
        return (
            self.pos[0] + self.vel[0] * dt + 0.5 * self.acc[0] * dt * dt,
            self.pos[1] + self.vel[1] * dt + 0.5 * self.acc[1] * dt * dt,
        )


def _quadratic_lsq(ts: list[float], xs: list[float]) -> tuple[float, float, float]:
    """Least-squares fit of x = p0 + v t + a/2 t^2 via normal equations."""
    n = len(ts)
    s1 = sum(ts)
    s2 = sum(t * t for t in ts)
    s3 = sum(t**3 for t in ts)
    s4 = sum(t**4 for t in ts)
    b0 = sum(xs)
    b1 = sum(t * x for t, x in zip(ts, xs))
    b2 = sum(t * t * x for t, x in zip(ts, xs))
    m = [
        [float(n), s1, s2, b0],
        [s1, s2, s3, b1],
        [s2, s3, s4, b2],
    ]
    # gaussian elimination with partial pivoting
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) < 1e-12:
            raise TrackFitError("rank-deficient track (degenerate timestamps)")
        m[col], m[piv] = m[piv], m[col]
        for r in range(3):
            if r != col:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    p0, v, half_a = (m[i][3] / m[i][i] for i in range(3))
    return p0, v, 2.0 * half_a


def fit_track(track: BallTrack) -> TrackFit:
    """Per-axis quadratic least squares over the detection window.

    Exact on noiseless data of degree <= 2.  Requires at least 3 samples
    spanning more than MIN_TRACK_SPAN seconds.
    """
    if len(track.samples) < 3:
        raise TrackFitError(f"need >= 3 samples, got {len(track.samples)}")
    if track.span <= MIN_TRACK_SPAN:
        raise TrackFitError(f"track span {track.span:.3f} s too short")
    t0 = track.samples[-1].t
    ts = [s.t - t0 for s in track.samples]
    px, vx, ax = _quadratic_lsq(ts, [s.x for s in track.samples])
    py, vy, ay = _quadratic_lsq(ts, [s.y for s in track.samples])
    return TrackFit(t0, (px, py), (vx, vy), (ax, ay))


def time_of_arrival(d0: float, v: float, a: float, r_trigger: float) -> float:
    """Smallest positive t with d0 + v t + a t^2 / 2 = r_trigger.

    Degenerates to the linear solution for |a| < 1e-9; raises
    NeverArrivesError when no positive real root exists (receding or
    stalling ball).
    """
    if d0 <= r_trigger:
        raise ValueError(f"ball already inside trigger radius ({d0} <= {r_trigger})")
    c = d0 - r_trigger
    if abs(a) < 1e-9:
        if v >= 0.0:
            raise NeverArrivesError("ball not approaching")
        return -c / v
    disc = v * v - 2.0 * a * c
    if disc < 0.0:
        raise NeverArrivesError("no real arrival time")
    sq = math.sqrt(disc)
    roots = sorted(((-v - sq) / a, (-v + sq) / a))
    for t in roots:
        if t > 0.0:
            return t
    raise NeverArrivesError("arrival only in the past")


def kick_trigger(t_arrival: float, t_kick_exec: float, margin: float) -> bool:
    """True iff the arrival time falls inside the execution window +- margin."""
    return abs(t_arrival - t_kick_exec) <= margin


class InterceptPlanner:
    """Stateful intercept skill: track, fit, and fire the kick exactly once."""

    def __init__(self, trigger_radius: float, margin: float = 0.05):
        self.trigger_radius = trigger_radius
        self.margin = margin
        self.track = BallTrack()
        self.fired = False
        self.last_arrival: float | None = None

    def update(self, t: float, ball_x: float, t_kick_exec: float) -> bool:
        """Feed one detection; returns True on the single trigger instant."""
        if self.fired:
            return False
        self.track.add(t, ball_x, 0.0)
        if len(self.track.samples) < 3 or self.track.span <= MIN_TRACK_SPAN:
            return False
        fit = fit_track(self.track)
        try:
            arrival = time_of_arrival(
                fit.pos[0], fit.vel[0], fit.acc[0], self.trigger_radius
            )
        except (NeverArrivesError, ValueError):
            self.last_arrival = None
            return False
        self.last_arrival = arrival
        if kick_trigger(arrival, t_kick_exec, self.margin):
            self.fired = True
            return True
        return False


# -- finite state machines ---------------------------------------------------


class GamePhase(Enum):
    INITIAL = "INITIAL"
    READY = "READY"
    SET = "SET"
    PLAY = "PLAY"
    STOP = "STOP"


@dataclass(frozen=True)
class GameState:
    phase: GamePhase = GamePhase.INITIAL
    secondary: str = "none"


def game_fsm_step(state: GameState, message: dict) -> tuple[GameState, str | None]:
    """Apply one game-controller message; unknown content leaves the state
    unchanged and returns a warning instead."""
    phase_name = message.get("phase")
    try:
        phase = GamePhase(phase_name)
    except ValueError:
        return state, f"unknown game phase {phase_name!r}"
    secondary = message.get("secondary", state.secondary)
    return GameState(phase, secondary), None


class BehaviorState(Enum):
    SEARCH_BALL = "SEARCH_BALL"
    GO_TO_BALL = "GO_TO_BALL"
    ALIGN = "ALIGN"
    KICK = "KICK"
    AVOID_OBSTACLE = "AVOID_OBSTACLE"
    WAIT = "WAIT"


@dataclass(frozen=True)
class WorldSnapshot:
    ball_visible: bool
    ball_dist: float
    obstacle_ahead: bool
    aligned: bool


NEAR_BALL_DIST = 0.5  # m


def behavior_step(state: BehaviorState, world: WorldSnapshot):
    """One deterministic behavior transition; returns (state, action).

    The action is a GaitCommand, except in KICK where it is the default
    KickProfile.  An obstacle overrides everything except an in-progress
    kick.
    """
    from .kick_waveform import default_profile

    if world.obstacle_ahead and state is not BehaviorState.KICK:
        return BehaviorState.AVOID_OBSTACLE, GaitCommand(vx=0.0, vy=0.6, omega=0.0)
    if not world.ball_visible:
        return BehaviorState.SEARCH_BALL, GaitCommand(omega=0.5)
    if world.ball_dist > NEAR_BALL_DIST:
        return BehaviorState.GO_TO_BALL, GaitCommand(vx=1.0)
    if not world.aligned:
        return BehaviorState.ALIGN, GaitCommand(vy=0.4, omega=0.2)
    return BehaviorState.KICK, default_profile()


@dataclass
class SoccerAgent:
    """Game-gated behavior: no action leaves the agent unless phase is PLAY."""

    game: GameState = field(default_factory=GameState)
    behavior: BehaviorState = BehaviorState.WAIT
    warnings: list[str] = field(default_factory=list)

    def handle_message(self, message: dict) -> None:
        self.game, warning = game_fsm_step(self.game, message)
        if warning:
            self.warnings.append(warning)

    def step(self, world: WorldSnapshot):
        self.behavior, action = behavior_step(self.behavior, world)
        if self.game.phase is not GamePhase.PLAY:
            return None
        return action
