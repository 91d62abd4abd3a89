import math
import random

import pytest
from hypothesis import given, strategies as st

from bipedkit.fused_angles import (
    FusedAngles,
    InvalidRotationError,
    Rotation,
    fused_from_rotation,
    rotation_from_fused,
    tilt_components,
    wrap_angle,
)


def random_unit_quaternion(rng):
    while True:
        q = [rng.gauss(0.0, 1.0) for _ in range(4)]
        n = math.sqrt(sum(c * c for c in q))
        if n > 1e-3:
            return Rotation(*(c / n for c in q))


def rodrigues_matrix(axis, angle):
    # independent rotation-matrix oracle (axis-angle, Rodrigues form)
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    ax, ay, az = ax / n, ay / n, az / n
    c, s, t = math.cos(angle), math.sin(angle), 1.0 - math.cos(angle)
    return [
        [t * ax * ax + c, t * ax * ay - s * az, t * ax * az + s * ay],
        [t * ax * ay + s * az, t * ay * ay + c, t * ay * az - s * ax],
        [t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c],
    ]


def matrix_from_rotation(q):
    cols = [q.rotate((1, 0, 0)), q.rotate((0, 1, 0)), q.rotate((0, 0, 1))]
    return [[cols[j][i] for j in range(3)] for i in range(3)]


def test_identity_decomposes_to_zero():
    f = fused_from_rotation(Rotation.identity())
    assert f == FusedAngles(0.0, 0.0, 0.0, 1)


def test_pure_pitch_rotation():
    q = Rotation.from_axis_angle((0.0, 1.0, 0.0), 0.3)
    f = fused_from_rotation(q)
    assert f.yaw == pytest.approx(0.0, abs=1e-12)
    assert f.pitch == pytest.approx(0.3, abs=1e-12)
    assert f.roll == pytest.approx(0.0, abs=1e-12)
    assert f.hemisphere == 1
    # cross-check the reconstruction against the Rodrigues matrix oracle
    oracle = rodrigues_matrix((0.0, 1.0, 0.0), 0.3)
    got = matrix_from_rotation(rotation_from_fused(f))
    for i in range(3):
        for j in range(3):
            assert got[i][j] == pytest.approx(oracle[i][j], abs=1e-12)


def test_pure_roll_rotation():
    q = Rotation.from_axis_angle((1.0, 0.0, 0.0), -0.25)
    f = fused_from_rotation(q)
    assert f.roll == pytest.approx(-0.25, abs=1e-12)
    assert f.pitch == pytest.approx(0.0, abs=1e-12)


def test_pure_yaw_reconstruction():
    q = rotation_from_fused(FusedAngles(0.5, 0.0, 0.0, 1))
    oracle = Rotation.from_axis_angle((0.0, 0.0, 1.0), 0.5)
    assert q.distance(oracle) < 1e-12


def test_zero_fused_gives_identity():
    assert rotation_from_fused(FusedAngles(0.0, 0.0, 0.0, 1)).distance(Rotation.identity()) == 0.0


def test_round_trip_random_quaternions():
    rng = random.Random(20231)
    for _ in range(1000):
        q = random_unit_quaternion(rng)
        f = fused_from_rotation(q)
        q2 = rotation_from_fused(f)
        assert q.distance(q2) < 1e-9


def test_fused_round_trip_componentwise():
    rng = random.Random(777)
    for _ in range(500):
        # sample tilts inside the valid disc, upper hemisphere
        while True:
            pitch = rng.uniform(-1.4, 1.4)
            roll = rng.uniform(-1.4, 1.4)
            if math.sin(pitch) ** 2 + math.sin(roll) ** 2 < 0.999:
                break
        f = FusedAngles(rng.uniform(-math.pi, math.pi), pitch, roll, 1)
        g = fused_from_rotation(rotation_from_fused(f))
        assert g.yaw == pytest.approx(f.yaw, abs=1e-9)
        assert g.pitch == pytest.approx(f.pitch, abs=1e-9)
        assert g.roll == pytest.approx(f.roll, abs=1e-9)
        assert g.hemisphere == 1


def test_tilt_components_is_projection():
    assert tilt_components(FusedAngles(0.0, 0.2, -0.1, 1)) == (0.2, -0.1)
    assert tilt_components(FusedAngles(0.0, 0.0, 0.0, 1)) == (0.0, 0.0)


def test_tilt_invariant_under_yaw():
    for k in range(16):
        yaw = -math.pi + k * (2.0 * math.pi / 16)
        f = FusedAngles(yaw, 0.17, -0.28, 1)
        q = rotation_from_fused(f)
        g = fused_from_rotation(q)
        assert tilt_components(g)[0] == pytest.approx(0.17, abs=1e-12)
        assert tilt_components(g)[1] == pytest.approx(-0.28, abs=1e-12)


def test_hemisphere_flag():
    # tilt below pi/2 from upright: +1
    q = Rotation.from_axis_angle((0.0, 1.0, 0.0), 1.2)
    assert fused_from_rotation(q).hemisphere == 1
    # beyond pi/2: -1
    q = Rotation.from_axis_angle((0.0, 1.0, 0.0), 2.0)
    assert fused_from_rotation(q).hemisphere == -1


def test_non_unit_quaternion_rejected():
    with pytest.raises(InvalidRotationError):
        fused_from_rotation(Rotation(1.0, 0.2, 0.0, 0.0))


def test_invalid_tilt_sum_rejected():
    with pytest.raises(InvalidRotationError):
        rotation_from_fused(FusedAngles(0.0, 1.2, 1.2, 1))


@given(
    st.floats(-math.pi, math.pi - 1e-9),
    st.floats(-1.3, 1.3),
    st.floats(-1.3, 1.3),
)
def test_round_trip_property(yaw, pitch, roll):
    if math.sin(pitch) ** 2 + math.sin(roll) ** 2 >= 0.999:
        return
    f = FusedAngles(yaw, pitch, roll, 1)
    q = rotation_from_fused(f)
    assert abs(q.norm() - 1.0) < 1e-12
    g = fused_from_rotation(q)
    assert abs(wrap_angle(g.yaw - f.yaw)) < 1e-9
    assert abs(g.pitch - f.pitch) < 1e-9
    assert abs(g.roll - f.roll) < 1e-9


@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4))
def test_decomposition_valid_for_any_unit_quaternion(w, x, y, z):
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n < 1e-3:
        return
    q = Rotation(w / n, x / n, y / n, z / n)
    f = fused_from_rotation(q)
    assert abs(f.pitch) <= 0.5 * math.pi
    assert abs(f.roll) <= 0.5 * math.pi
    assert math.sin(f.pitch) ** 2 + math.sin(f.roll) ** 2 <= 1.0 + 1e-12
    assert -math.pi <= f.yaw < math.pi
    crit = math.sin(f.pitch) ** 2 + math.sin(f.roll) ** 2
    if crit > 1.0 - 1e-6:
        return  # exactly-sideways tilt: the clamp at the domain edge costs precision
    assert rotation_from_fused(f).distance(q) < 1e-9
