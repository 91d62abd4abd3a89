import math
import random

import pytest
from hypothesis import given, strategies as st

from bipedkit.gait_core import AbstractPose, GaitParams, LegGeometry
from bipedkit.kick_waveform import (
    LEGACY_STRENGTH,
    KickPhase,
    KickProfile,
    KickWaveform,
    WaveformError,
    default_profile,
    eval_waveform,
    low_pass_trace,
    profile_from_doc,
    simulate_kick,
    superimpose_kick,
    waveform_doc,
)
from bipedkit.sim_world import BallModel

ZERO = KickWaveform(keypoints=(0.0,) * 12)


def ramp_waveform(**kw):
    return KickWaveform(keypoints=tuple(i / 11 for i in range(12)), **kw)


class TestEvalWaveform:
    def test_all_zero_keypoints(self):
        for phi in [0.0, 0.13, 0.5, 0.99, 1.0]:
            assert eval_waveform(ZERO, KickPhase(phi)) == 0.0

    def test_anchor_exactness(self):
        w = KickWaveform(
            keypoints=(0.0, 0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8, 0.9, -1.0, 1.0),
            amp_pos=2.0,
            amp_neg=3.0,
        )
        for i, k in enumerate(w.keypoints):
            v = eval_waveform(w, KickPhase(i / 11))
            amp = 2.0 if k >= 0 else 3.0
            assert v == pytest.approx(k * amp, abs=1e-12)

    def test_midpoint_interpolation(self):
        kp = [0.0] * 12
        kp[5], kp[6] = 0.4, 0.8
        w = KickWaveform(keypoints=tuple(kp), amp_pos=1.0, amp_neg=1.0)
        assert eval_waveform(w, KickPhase(5.5 / 11)) == pytest.approx(0.6, abs=1e-12)

    def test_sign_dependent_scaling_after_interpolation(self):
        kp = [0.0] * 12
        kp[3], kp[4] = -0.5, 0.5
        w = KickWaveform(keypoints=tuple(kp), amp_pos=2.0, amp_neg=4.0)
        # raw interpolation crosses zero at phi = 3.5/11
        assert eval_waveform(w, KickPhase(3.25 / 11)) == pytest.approx(-0.25 * 4.0)
        assert eval_waveform(w, KickPhase(3.75 / 11)) == pytest.approx(0.25 * 2.0)

    def test_continuous_and_bounded(self):
        rng = random.Random(8)
        w = KickWaveform(
            keypoints=tuple(rng.uniform(-1, 1) for _ in range(12)), amp_pos=1.3, amp_neg=0.7
        )
        prev = eval_waveform(w, KickPhase(0.0))
        for i in range(1, 2001):
            cur = eval_waveform(w, KickPhase(i / 2000))
            assert abs(cur - prev) < 0.02
            assert abs(cur) <= max(1.3, 0.7) + 1e-12
            prev = cur

    @given(st.floats(0.01, 1.0), st.floats(0.0, 1.0))
    def test_scaling_invariance_of_raw_keypoints(self, s, phi):
        kp = (0.0, 0.2, 0.5, 0.9, 1.0, 0.7, 0.4, 0.1, -0.3, -0.6, -0.2, 0.0)
        w1 = KickWaveform(keypoints=kp, amp_pos=1.0, amp_neg=1.0)
        w2 = KickWaveform(keypoints=tuple(k * s for k in kp), amp_pos=1.0, amp_neg=1.0)
        assert eval_waveform(w2, KickPhase(phi)) == pytest.approx(
            s * eval_waveform(w1, KickPhase(phi)), abs=1e-12
        )

    def test_keypoint_count_enforced(self):
        with pytest.raises(WaveformError):
            KickWaveform(keypoints=(0.0,) * 11)

    def test_keypoint_range_enforced(self):
        with pytest.raises(WaveformError):
            KickWaveform(keypoints=(0.0,) * 11 + (1.5,))


class TestLowPass:
    def test_constant_input_dc_gain(self):
        out = low_pass_trace([0.7] * 2000, 0.02, 0.001)
        assert out[-1] == pytest.approx(0.7, abs=1e-6)

    def test_zero_input(self):
        assert low_pass_trace([0.0] * 100, 0.05, 0.01) == [0.0] * 100

    def test_step_response_at_tau(self):
        dt, tau = 0.001, 0.05
        samples = [0.0] * 100 + [1.0] * 200
        out = low_pass_trace(samples, tau, dt)
        idx = 100 + int(round(tau / dt))
        assert out[idx - 1] == pytest.approx(1.0 - math.exp(-1.0), rel=0.01)

    def test_output_bounded_by_input_range(self):
        rng = random.Random(2)
        samples = [rng.uniform(-0.5, 0.8) for _ in range(500)]
        out = low_pass_trace(samples, 0.03, 0.002)
        assert min(out) >= min(samples) - 1e-12
        assert max(out) <= max(samples) + 1e-12


class TestSuperimpose:
    def test_zero_strength_identity(self):
        base = AbstractPose(extension=0.07, swing_sag=0.1, swing_lat=-0.05)
        prof = KickProfile(retract=ramp_waveform(), swing=ramp_waveform(), strength=0.0)
        assert superimpose_kick(base, prof, KickPhase(0.6)) == base

    def test_retraction_clamped_to_one(self):
        kp = [0.0] * 12
        kp[5] = 1.0
        prof = KickProfile(
            retract=KickWaveform(keypoints=tuple(kp), amp_pos=2.0),
            swing=ZERO,
            strength=1.0,
        )
        out = superimpose_kick(AbstractPose(extension=0.5), prof, KickPhase(5 / 11))
        assert out.extension == 1.0

    def test_lateral_swing_untouched(self):
        base = AbstractPose(swing_lat=-0.123, hip_shift_lat=0.01)
        prof = default_profile()
        for phi in (0.0, 0.3, 0.7, 1.0):
            out = superimpose_kick(base, prof, KickPhase(phi))
            assert out.swing_lat == base.swing_lat
            assert out.hip_shift_lat == base.hip_shift_lat


class TestWaveformDoc:
    def test_round_trip(self):
        prof = default_profile(strength=0.8)
        doc = waveform_doc(prof)
        assert doc["v"] == 1
        assert len(doc["retract"]["keypoints"]) == 12
        back = profile_from_doc(doc)
        assert back.retract.keypoints == prof.retract.keypoints
        assert back.swing.amp_pos == prof.swing.amp_pos
        assert back.strength == 0.8


class TestSimulateKick:
    def test_zero_profile_no_contact(self):
        prof = KickProfile(retract=ZERO, swing=ZERO, strength=1.0)
        res = simulate_kick(prof, GaitParams(), LegGeometry(), BallModel())
        assert res.contact_speed == 0.0
        assert res.predicted_distance == 0.0
        assert res.contact_time is None

    def test_doubling_strength_increases_distance(self):
        gait, geom, ball = GaitParams(), LegGeometry(), BallModel()
        d_half = simulate_kick(default_profile(0.5), gait, geom, ball).predicted_distance
        d_full = simulate_kick(default_profile(1.0), gait, geom, ball).predicted_distance
        assert d_full > d_half

    def test_distance_monotone_in_strength(self):
        gait, geom, ball = GaitParams(), LegGeometry(), BallModel()
        dists = [
            simulate_kick(default_profile(s / 10), gait, geom, ball).predicted_distance
            for s in range(1, 11)
        ]
        assert all(b >= a for a, b in zip(dists, dists[1:]))

    def test_calibration_anchor(self):
        # shipped profile: ~5 m at full strength, clearly less at legacy strength
        gait, geom, ball = GaitParams(), LegGeometry(), BallModel()
        full = simulate_kick(default_profile(1.0), gait, geom, ball)
        assert full.predicted_distance == pytest.approx(5.0, abs=0.5)
        legacy = simulate_kick(default_profile(LEGACY_STRENGTH), gait, geom, ball)
        assert legacy.predicted_distance <= 3.0

    def test_contact_inside_high_momentum_window(self):
        res = simulate_kick(default_profile(1.0), GaitParams(), LegGeometry(), BallModel())
        lo, hi = res.momentum_window
        assert lo <= res.contact_time <= hi

    def test_trace_shape(self):
        res = simulate_kick(default_profile(1.0), GaitParams(), LegGeometry(), BallModel())
        assert len(res.foot_trace) > 100
        t, x, z, speed = res.foot_trace[10]
        assert z < 0.0
        assert res.peak_foot_speed >= max(s for *_, s in res.foot_trace) - 1e-12
