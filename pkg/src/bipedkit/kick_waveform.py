"""Parametric in-walk kick from editable waveforms.

Two 12-keypoint waveforms (leg retraction and swing angle) are superimposed
on the CPG gait during the kicking leg's swing half-cycle.  Keypoints live in
[-1, 1] and are scaled by separate positive/negative amplitudes after linear
interpolation; a first-order low-pass smooths the transitions.  Kick strength
multiplies the applied values, so one tuned profile covers weak passes and
full-power shots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .gait_core import (
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

N_KEYPOINTS = 12


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class KickWaveform:
    keypoints: tuple[float, ...]
    amp_pos: float = 1.0
    amp_neg: float = 1.0
    low_pass_tau: float = 0.02  # s

    def __post_init__(self) -> None:
        if len(self.keypoints) != N_KEYPOINTS:
            raise WaveformError(f"expected {N_KEYPOINTS} keypoints, got {len(self.keypoints)}")
        if any(not -1.0 <= k <= 1.0 for k in self.keypoints):
            raise WaveformError("keypoints must lie in [-1, 1]")
        if self.amp_pos < 0 or self.amp_neg < 0 or not math.isfinite(self.amp_pos + self.amp_neg):
            raise WaveformError("amplitudes must be finite and >= 0")


@dataclass(frozen=True)
class KickPhase:
    """Normalized kick progress; clamps to [0, 1]."""

    phi: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", max(0.0, min(1.0, self.phi)))


@dataclass(frozen=True)
class KickProfile:
    retract: KickWaveform
    swing: KickWaveform
    strength: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.strength <= 1.0:
            raise WaveformError(f"strength must lie in [0, 1], got {self.strength}")


def eval_waveform(w: KickWaveform, phi: KickPhase) -> float:
    """Evaluate a waveform: linear interpolation of raw keypoints, then
    per-sign amplitude scaling.

    Keypoint i anchors at phi = i/11; the interpolated raw value is scaled by
    amp_pos if positive, amp_neg if negative.
    """
    pos = phi.phi * (N_KEYPOINTS - 1)
    i = min(int(pos), N_KEYPOINTS - 2)
    frac = pos - i
    raw = w.keypoints[i] * (1.0 - frac) + w.keypoints[i + 1] * frac
    return raw * (w.amp_pos if raw >= 0.0 else w.amp_neg)


def low_pass_trace(samples: list[float], low_pass_tau: float, dt: float) -> list[float]:
    """First-order low-pass over a uniformly sampled series (unit DC gain).

    The filter state starts on the first sample, so the output stays inside
    the input range.
    """
    if dt <= 0.0:
        raise WaveformError("dt must be > 0")
    if not samples:
        return []
    if low_pass_tau <= 0.0:
        return list(samples)
    alpha = 1.0 - math.exp(-dt / low_pass_tau)
    out = [samples[0]]
    y = samples[0]
    for x in samples[1:]:
        y += alpha * (x - y)
        out.append(y)
    return out


def superimpose_kick(base: AbstractPose, profile: KickProfile, phi: KickPhase) -> AbstractPose:
    """Add the kick to an abstract pose: retraction onto the leg extension
    (clamped to [0, 1]), swing onto the sagittal swing angle.  All other
    abstract components pass through untouched."""
    eta = base.extension + profile.strength * eval_waveform(profile.retract, phi)
    return replace(
        base,
        extension=max(0.0, min(1.0, eta)),
        swing_sag=base.swing_sag + profile.strength * eval_waveform(profile.swing, phi),
    )


def default_profile(strength: float = 1.0) -> KickProfile:
    """Shipped kick profile, hand-tuned against the desk-scale ball model."""
    return KickProfile(
        retract=KickWaveform(
            keypoints=(0.0, 0.35, 0.8, 1.0, 0.95, 0.8, 0.55, 0.3, 0.12, 0.04, 0.0, 0.0),
            amp_pos=0.22,
            amp_neg=0.05,
        ),
        swing=KickWaveform(
            keypoints=(0.0, -0.55, -0.9, -0.7, -0.15, 0.45, 0.9, 1.0, 0.8, 0.45, 0.15, 0.0),
            amp_pos=0.55,
            amp_neg=0.28,
        ),
        strength=strength,
    )


LEGACY_STRENGTH = 0.7  # documented reduced strength of the pre-waveform kicks


@dataclass(frozen=True)
class KickSimResult:
    peak_foot_speed: float  # m/s, max forward foot speed over the cycle
    contact_speed: float  # m/s, forward foot speed at ball contact (0 = no contact)
    predicted_distance: float  # m, rolling distance of the launched ball
    foot_trace: tuple[tuple[float, float, float, float], ...]  # (t, x, z, speed)
    contact_time: float | None = None
    momentum_window: tuple[float, float] | None = None  # [t0, t1] where speed >= 80% peak


def waveform_doc(profile: KickProfile) -> dict:
    """Serialize a profile to the shared WaveformDoc JSON shape (schema v1)."""
    def wf(w: KickWaveform) -> dict:
        return {"keypoints": list(w.keypoints), "ampPos": w.amp_pos, "ampNeg": w.amp_neg}

    return {
        "v": 1,
        "retract": wf(profile.retract),
        "swing": wf(profile.swing),
        "strength": profile.strength,
        "lowPassTau": profile.retract.low_pass_tau,
    }


def profile_from_doc(doc: dict) -> KickProfile:
    """Build a profile from a WaveformDoc dict (assumed schema-valid)."""
    tau = float(doc.get("lowPassTau", 0.02))

    def wf(d: dict) -> KickWaveform:
        return KickWaveform(
            keypoints=tuple(float(k) for k in d["keypoints"]),
            amp_pos=float(d["ampPos"]),
            amp_neg=float(d["ampNeg"]),
            low_pass_tau=tau,
        )

    return KickProfile(
        retract=wf(doc["retract"]),
        swing=wf(doc["swing"]),
        strength=float(doc.get("strength", 1.0)),
    )


class _OnlineLowPass:
    """Streaming variant of low_pass_trace, state starts on the first sample."""

    def __init__(self, tau: float):
        self.tau = tau
        self._y: float | None = None

    def step(self, x: float, dt: float) -> float:
        if self._y is None or self.tau <= 0.0:
            self._y = x
            return x
        self._y += (1.0 - math.exp(-dt / self.tau)) * (x - self._y)
        return self._y


def simulate_kick(
    profile: KickProfile,
    gait: GaitParams,
    geom: LegGeometry,
    ball: "BallModel",
    ball_distance: float = 0.24,
    ball_radius: float = 0.11,
    dt: float = 0.002,
) -> KickSimResult:
    """Open-loop kick rehearsal over one gait cycle, walking in place.

    The kick rides on the right leg's swing half-cycle; the forward foot
    speed comes from finite differences of the Cartesian foot trajectory.
    The ball rests ``ball_distance`` ahead of the neutral foot; on the first
    foot-ball intersection it launches with restitution-scaled contact speed
    and the rolling model predicts the distance.  If the foot never reaches
    the ball the result reports no contact and zero distance.
    """
    from .sim_world import BallModel, rolling_stop_distance  # local import, no cycle

    assert isinstance(ball, BallModel)
    phase = GaitPhase(0.0, gait.freq)  # right swing starts at mu = 0
    cmd = GaitCommand()
    lpf_eta = _OnlineLowPass(profile.retract.low_pass_tau)
    lpf_swing = _OnlineLowPass(profile.swing.low_pass_tau)

    times: list[float] = []
    xs: list[float] = []
    zs: list[float] = []
    t = 0.0
    n_steps = int(round(1.0 / gait.freq / dt))
    for _ in range(n_steps + 1):
        _, right = abstract_waveforms(phase, cmd, gait)
        s = swing_progress(phase.mu, RIGHT)
        if s is not None:
            phi = KickPhase(s)
            d_eta = profile.strength * eval_waveform(profile.retract, phi)
            d_swing = profile.strength * eval_waveform(profile.swing, phi)
        else:
            d_eta = d_swing = 0.0
        d_eta = lpf_eta.step(d_eta, dt)
        d_swing = lpf_swing.step(d_swing, dt)
        pose = replace(
            right,
            extension=max(0.0, min(1.0, right.extension + d_eta)),
            swing_sag=right.swing_sag + d_swing,
        )
        fp = abstract_to_cartesian(pose, RIGHT, geom, gait.eta_range)
        times.append(t)
        xs.append(fp.x)
        zs.append(fp.z)
        t += dt
        phase = advance_phase(phase, dt)

    speeds = [0.0] * len(xs)
    for i in range(1, len(xs) - 1):
        speeds[i] = (xs[i + 1] - xs[i - 1]) / (2.0 * dt)
    if len(xs) >= 2:
        speeds[0] = (xs[1] - xs[0]) / dt
        speeds[-1] = (xs[-1] - xs[-2]) / dt

    peak = max(speeds)
    contact_idx = None
    for i, x in enumerate(xs):
        if x >= ball_distance - ball_radius:
            contact_idx = i
            break

    trace = tuple(zip(times, xs, zs, speeds))
    window = None
    if peak > 0.0:
        hot = [t_ for t_, sp in zip(times, speeds) if sp >= 0.8 * peak]
        if hot:
            window = (hot[0], hot[-1])

    if contact_idx is None or speeds[contact_idx] <= 0.0:
        return KickSimResult(peak, 0.0, 0.0, trace, None, window)

    contact_speed = speeds[contact_idx]
    launch = ball.restitution_factor * contact_speed
    distance = rolling_stop_distance(launch, ball)
    return KickSimResult(peak, contact_speed, distance, trace, times[contact_idx], window)
