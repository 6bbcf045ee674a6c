"""The mathematical pendulum ``x' = y, y' = -sin x`` with Stormer-Verlet steps.

Inside the separatrix (``H < 1``) orbits are closed and recur; outside, ``x``
grows without bound on the universal cover and nothing returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .exceptions import ValidationError

SEPARATRIX_TOL = 1e-9


@dataclass(frozen=True)
class PendulumState:
    x: float
    y: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "t"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")

    @property
    def energy(self) -> float:
        return energy(self.x, self.y)


class OrbitType(str, Enum):
    LIBRATION = "libration"
    SEPARATRIX = "separatrix"
    ROTATION = "rotation"


def energy(x, y):
    """``H = y^2 / 2 - cos x``."""
    return 0.5 * np.square(y) - np.cos(x)


def _check_dt(dt):
    if not (math.isfinite(dt) and 0 < dt <= 0.1):
        raise ValidationError(f"dt must lie in (0, 0.1], got {dt!r}")


@numba.njit(cache=False)
def _verlet(x, y, dt):
    y_half = y - 0.5 * dt * math.sin(x)
    x_new = x + dt * y_half
    y_new = y_half - 0.5 * dt * math.sin(x_new)
    return x_new, y_new


def pendulum_step(s: PendulumState, dt: float) -> PendulumState:
    """One kick-drift-kick step."""
    _check_dt(dt)
    x, y = _verlet(s.x, s.y, dt)
    return PendulumState(x, y, s.t + dt)


def classify_orbit(s: PendulumState) -> OrbitType:
    h = s.energy
    if abs(h - 1.0) <= SEPARATRIX_TOL:
        return OrbitType.SEPARATRIX
    return OrbitType.LIBRATION if h < 1.0 else OrbitType.ROTATION


@numba.njit(cache=False)
def _trajectory(x, y, dt, n_steps, stride):
    m = n_steps // stride + 1
    out = np.empty((m, 3))
    out[0, 0], out[0, 1], out[0, 2] = 0.0, x, y
    k = 1
    for i in range(1, n_steps + 1):
        x, y = _verlet(x, y, dt)
        if i % stride == 0:
            out[k, 0], out[k, 1], out[k, 2] = i * dt, x, y
            k += 1
    return out[:k]


def trajectory(s0: PendulumState, dt: float, t_max: float, stride: int = 1) -> np.ndarray:
    """Rows ``(t, x, y)`` every ``stride`` steps, starting at ``s0``; ``t`` is relative to ``s0.t``."""
    _check_dt(dt)
    n = int(round(t_max / dt))
    out = _trajectory(float(s0.x), float(s0.y), float(dt), n, max(1, int(stride)))
    out[:, 0] += s0.t
    return out


@numba.njit(cache=False)
def _energy_drift(x, y, dt, n_steps):
    h0 = 0.5 * y * y - math.cos(x)
    worst = 0.0
    for _ in range(n_steps):
        x, y = _verlet(x, y, dt)
        d = abs(0.5 * y * y - math.cos(x) - h0)
        if d > worst:
            worst = d
    return worst, x, y


def energy_drift(s0: PendulumState, dt: float, t_max: float) -> float:
    """``sup_t |H(t) - H(0)|`` over ``[0, t_max]``."""
    _check_dt(dt)
    worst, _, _ = _energy_drift(float(s0.x), float(s0.y), float(dt), int(round(t_max / dt)))
    return float(worst)


def final_state(s0: PendulumState, dt: float, t_max: float) -> PendulumState:
    _check_dt(dt)
    n = int(round(t_max / dt))
    _, x, y = _energy_drift(float(s0.x), float(s0.y), float(dt), n)
    return PendulumState(float(x), float(y), s0.t + n * dt)


@numba.njit(cache=False)
def _wrap(a):
    return a - 2.0 * math.pi * math.floor((a + math.pi) / (2.0 * math.pi))


@numba.njit(cache=False)
def _dist(x, y, x0, y0, wrap):
    dx = _wrap(x - x0) if wrap else x - x0
    return math.sqrt(dx * dx + (y - y0) * (y - y0))


@numba.njit(cache=False)
def _scan_return(x0, y0, dt, n_steps, delta, wrap):
    """Return (found, t_min, d_prev, d_min, d_next) for the first re-entry episode."""
    x, y = x0, y0
    left = False
    inside = False
    best_i = -1
    best_d = np.inf
    d_prev_best = 0.0
    d_next_best = 0.0
    d_prev = 0.0
    for i in range(1, n_steps + 1):
        x, y = _verlet(x, y, dt)
        d = _dist(x, y, x0, y0, wrap)
        if best_i == i - 1 and d_next_best < 0.0:
            d_next_best = d
        if not left:
            if d >= delta:
                left = True
        elif d < delta:
            inside = True
            if d < best_d:
                best_d = d
                best_i = i
                d_prev_best = d_prev
                d_next_best = -1.0
        elif inside:
            break
        d_prev = d
    if best_i < 0:
        return False, 0.0, 0.0, 0.0, 0.0
    return True, best_i * dt, d_prev_best, best_d, d_next_best


def recurrence_time(
    s0: PendulumState, delta: float, t_max: float, *, dt: float = 1e-3, metric: str = "wrapped"
) -> float | None:
    """Time of closest approach to ``s0`` during the first return to its ``delta``-ball.

    The trajectory must first leave the ball. ``metric="wrapped"`` measures
    ``x`` modulo ``2 pi``; ``"unwrapped"`` uses ``x`` on the real line.
    Returns ``None`` when no return happens before ``t_max``.
    """
    if not (delta > 0):
        raise ValidationError("delta must be positive")
    if metric not in ("wrapped", "unwrapped"):
        raise ValidationError(f"metric must be 'wrapped' or 'unwrapped', got {metric!r}")
    _check_dt(dt)
    found, t, dm, d0, dp = _scan_return(
        float(s0.x), float(s0.y), float(dt), int(round(t_max / dt)), float(delta), metric == "wrapped"
    )
    if not found:
        return None
    if dp >= 0.0 and dm > 0.0:
        # vertex of the parabola through the squared distances at the three samples
        a, b, c = dm * dm, d0 * d0, dp * dp
        den = a - 2.0 * b + c
        if den > 0:
            t += 0.5 * dt * (a - c) / den
    return float(t)


def elliptic_period(h: float) -> float:
    """Libration period ``4 K(k)``, ``k = sin(a/2)``, amplitude ``a = arccos(-H)``."""
    from scipy.special import ellipk

    if not -1.0 < h < 1.0:
        raise ValidationError("period defined for -1 < H < 1")
    k = math.sin(0.5 * math.acos(-h))
    return 4.0 * float(ellipk(k * k))


def one_step_jacobian(x: float, y: float, dt: float, h: float = 1e-4) -> np.ndarray:
    """Central-difference Jacobian of the one-step map at ``(x, y)``."""
    _check_dt(dt)
    jac = np.empty((2, 2))
    for j, (ex, ey) in enumerate(((h, 0.0), (0.0, h))):
        p = np.array(_verlet(x + ex, y + ey, dt))
        m = np.array(_verlet(x - ex, y - ey, dt))
        jac[:, j] = (p - m) / (2 * h)
    return jac


def phase_portrait(n_orbits: int = 15, dt: float = 1e-2, t_max: float = 20.0) -> list[np.ndarray]:
    """Trajectories ``(t, x, y)`` from a fan of initial conditions on ``x = 0`` and ``x = -pi``."""
    out = []
    for y0 in np.linspace(0.2, 3.0, n_orbits):
        out.append(trajectory(PendulumState(0.0, float(y0)), dt, t_max, stride=5))
        out.append(trajectory(PendulumState(0.0, -float(y0)), dt, t_max, stride=5))
    out.append(trajectory(PendulumState(-np.pi + 1e-3, 0.0), dt, 3 * t_max, stride=5))
    return out
