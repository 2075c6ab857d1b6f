"""Reference-frame math: power-invariant Park transform and the dq rotation operator.

The transform keeps the sqrt(2/3) scaling, so three-phase power is v.T @ i in
dq with no 3/2 correction.  For a balanced signal of amplitude X_m the dq
magnitude is sqrt(3/2)*X_m, i.e. the line-to-line RMS voltage.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi
SQRT_2_3 = math.sqrt(2.0 / 3.0)
INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Skew generator used in all dq cross-coupling terms: J.T == -J, J @ J == -I.
J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _check_finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        from .errors import InvalidInputError

        raise InvalidInputError(f"{name} must be finite, got {value}")
    return arr


def wrap_angle(theta: float) -> float:
    """Wrap an angle to [0, 2*pi). Idempotent."""
    _check_finite("theta", theta)
    return float(theta % TWO_PI)


def park_matrix(theta: float) -> np.ndarray:
    """3x3 power-invariant transform T(theta); orthogonal, T.T == inv(T)."""
    _check_finite("theta", theta)
    a = theta
    b = theta - TWO_PI / 3.0
    c = theta + TWO_PI / 3.0
    return SQRT_2_3 * np.array(
        [
            [math.sin(a), math.sin(b), math.sin(c)],
            [math.cos(a), math.cos(b), math.cos(c)],
            [INV_SQRT2, INV_SQRT2, INV_SQRT2],
        ]
    )


def park(theta: float, x_abc) -> np.ndarray:
    """Transform a three-phase sample to (d, q, zero)."""
    x = _check_finite("x_abc", x_abc)
    return park_matrix(theta) @ x


def inverse_park(theta: float, x_dq0) -> np.ndarray:
    """Transform (d, q, zero) back to phase quantities via T.T."""
    x = _check_finite("x_dq0", x_dq0)
    return park_matrix(theta).T @ x


def rotate_dq(omega: float, v) -> np.ndarray:
    """omega * J @ v, the cross-coupling term of the dq device models."""
    _check_finite("omega", omega)
    vv = _check_finite("v", v)
    return omega * (J @ vv)


def symmetric_three_phase(amplitude: float, theta: float) -> np.ndarray:
    """Balanced three-phase sample X_m * sin(theta + {0, -2pi/3, +2pi/3})."""
    _check_finite("amplitude", amplitude)
    _check_finite("theta", theta)
    return amplitude * np.array(
        [
            math.sin(theta),
            math.sin(theta - TWO_PI / 3.0),
            math.sin(theta + TWO_PI / 3.0),
        ]
    )


def dq_to_complex(v) -> complex:
    """Pack a dq vector as v_d + 1j*v_q.

    Multiplication by 1j in this representation equals applying -J to the dq
    vector, so steady-state phasor impedance arithmetic carries over directly.
    """
    return complex(v[0], v[1])


def complex_to_dq(z: complex) -> np.ndarray:
    return np.array([z.real, z.imag])
