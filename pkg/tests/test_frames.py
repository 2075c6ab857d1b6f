import math

import numpy as np
import pytest

from windfrt import frames
from windfrt.errors import InvalidInputError

SQRT3 = math.sqrt(3.0)


def test_park_matrix_is_orthogonal_over_random_angles():
    rng = np.random.RandomState(7)
    worst = 0.0
    for theta in rng.uniform(-20.0, 20.0, size=1000):
        T = frames.park_matrix(theta)
        worst = max(worst, np.max(np.abs(T @ T.T - np.eye(3))))
    assert worst < 1e-12


def test_park_zero_input():
    assert np.allclose(frames.park(0.0, (0.0, 0.0, 0.0)), 0.0)


def test_park_equal_phases_is_pure_zero_sequence():
    # direct evaluation: sin terms cancel, cos terms cancel, zero row sums to
    # 3 * sqrt(2/3) / sqrt(2) = sqrt(3)
    d, q, z = frames.park(0.0, (1.0, 1.0, 1.0))
    assert abs(d) < 1e-14 and abs(q) < 1e-14
    assert z == pytest.approx(SQRT3, abs=1e-14)


def test_balanced_signal_lands_on_d_axis():
    rng = np.random.RandomState(11)
    for theta in rng.uniform(0.0, 2.0 * math.pi, size=100):
        x_m = 2.0
        x = frames.symmetric_three_phase(x_m, theta)
        d, q, z = frames.park(theta, x)
        assert d == pytest.approx(math.sqrt(1.5) * x_m, rel=1e-12)
        assert abs(q) < 1e-10 * x_m
        assert abs(z) < 1e-10 * x_m


def test_park_is_linear():
    rng = np.random.RandomState(3)
    for _ in range(50):
        theta = rng.uniform(0, 7)
        x, y = rng.randn(3), rng.randn(3)
        a, b = rng.randn(2)
        lhs = frames.park(theta, a * x + b * y)
        rhs = a * frames.park(theta, x) + b * frames.park(theta, y)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_inverse_park_round_trip():
    x = np.array([1.0, -0.3, 0.7])
    back = frames.inverse_park(1.234, frames.park(1.234, x))
    assert np.max(np.abs(back - x)) < 1e-12


def test_inverse_park_zero():
    assert np.allclose(frames.inverse_park(2.2, (0.0, 0.0, 0.0)), 0.0)


def test_round_trip_at_quarter_turn():
    x = np.array([1.0, 0.0, -1.0])
    assert np.allclose(frames.inverse_park(math.pi / 2, frames.park(math.pi / 2, x)), x, atol=1e-12)


def test_rotate_dq_definition():
    assert np.allclose(frames.rotate_dq(1.0, (1.0, 0.0)), (0.0, -1.0))
    assert np.allclose(frames.rotate_dq(0.0, (3.0, -5.0)), (0.0, 0.0))
    out = frames.rotate_dq(314.159, (0.5, 0.5))
    assert out[0] == pytest.approx(157.0795, abs=1e-4)
    assert out[1] == pytest.approx(-157.0795, abs=1e-4)


def test_skew_properties():
    J = frames.J
    assert np.allclose(J.T, -J)
    assert np.allclose(J @ J, -np.eye(2))


def test_wrap_angle_idempotent():
    th = frames.wrap_angle(17.5)
    assert 0.0 <= th < 2.0 * math.pi
    assert frames.wrap_angle(th) == th


def test_non_finite_inputs_rejected():
    with pytest.raises(InvalidInputError):
        frames.park(float("nan"), (1.0, 0.0, 0.0))
    with pytest.raises(InvalidInputError):
        frames.park(0.0, (1.0, float("inf"), 0.0))
    with pytest.raises(InvalidInputError):
        frames.rotate_dq(float("nan"), (1.0, 0.0))


def test_complex_dq_mapping_matches_minus_j():
    # multiplying the packed complex by 1j == applying -J to the dq vector
    v = np.array([0.3, -1.2])
    z = frames.dq_to_complex(v) * 1j
    assert np.allclose(frames.complex_to_dq(z), -(frames.J @ v))
