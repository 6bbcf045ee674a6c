import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_euler import PendulumState, ValidationError, classify_orbit, pendulum_step, recurrence_time
from annulus_euler.pendulum import (
    OrbitType,
    elliptic_period,
    energy,
    energy_drift,
    final_state,
    one_step_jacobian,
    phase_portrait,
    trajectory,
)

from .oracles import elliptic_period_quad


def test_equilibria():
    s = pendulum_step(PendulumState(0.0, 0.0), 1e-2)
    assert (s.x, s.y) == (0.0, 0.0) and s.t == 1e-2
    s = PendulumState(math.pi, 0.0)
    for _ in range(1000):
        s = pendulum_step(s, 1e-2)
    assert abs(s.x - math.pi) <= 1e-12 and abs(s.y) <= 1e-12


def test_energy_example_million_steps():
    assert energy_drift(PendulumState(0.0, 0.5), 1e-3, 1000.0) < 1e-6


@pytest.mark.parametrize("y0", [0.3, 1.5, 1.999, 2.001, 2.5, 3.4])
def test_energy_bounded_long_time(y0):
    s0 = PendulumState(0.0, y0)
    assert abs(s0.energy) <= 5
    assert energy_drift(s0, 1e-3, 1e4) < 1e-5


def test_rejects_bad_input():
    with pytest.raises(ValidationError):
        PendulumState(float("nan"), 0.0)
    for dt in (0.0, -1e-3, 0.2):
        with pytest.raises(ValidationError):
            pendulum_step(PendulumState(0.0, 1.0), dt)
    with pytest.raises(ValidationError):
        recurrence_time(PendulumState(0.0, 0.5), 0.0, 10.0)
    with pytest.raises(ValidationError):
        recurrence_time(PendulumState(0.0, 0.5), 0.1, 10.0, metric="torus")
    with pytest.raises(ValidationError):
        elliptic_period(1.0)


def test_classify_examples():
    assert classify_orbit(PendulumState(0.0, 0.5)) is OrbitType.LIBRATION
    assert PendulumState(0.0, 0.5).energy == pytest.approx(-0.875)
    assert classify_orbit(PendulumState(0.0, 2.0)) is OrbitType.SEPARATRIX
    assert classify_orbit(PendulumState(0.0, 2.5)) is OrbitType.ROTATION


@pytest.mark.parametrize("h", [-0.999, -0.875, 0.0, 0.5, 0.9, 0.99])
def test_elliptic_period_matches_quadrature_oracle(h):
    assert elliptic_period(h) == pytest.approx(elliptic_period_quad(h), rel=1e-12)


def test_libration_return_example():
    s0 = PendulumState(0.0, 0.5)
    t = recurrence_time(s0, 1e-2, 100.0)
    assert t is not None
    assert abs(t / elliptic_period_quad(s0.energy) - 1) < 0.02


def test_small_oscillation_harmonic_limit():
    t = recurrence_time(PendulumState(0.0, 0.01), 1e-3, 20.0)
    assert abs(t / (2 * math.pi) - 1) < 1e-4


def test_rotation_never_returns_unwrapped():
    s0 = PendulumState(0.0, 2.5)
    assert recurrence_time(s0, 0.1, 200.0, metric="unwrapped") is None
    tr = trajectory(s0, 1e-2, 50.0)
    assert np.all(np.diff(tr[:, 1]) > 0)
    assert np.min(tr[:, 2]) >= math.sqrt(2 * (s0.energy - 1)) - 1e-4


def libration_grid():
    xs = np.linspace(-2.6, 2.6, 10)
    ys = np.linspace(-1.9, 1.9, 10)
    out = [PendulumState(float(x), float(y)) for x in xs for y in ys if energy(x, y) < 0.99]
    return out


def test_libration_grid_recurs_at_elliptic_period():
    states = libration_grid()
    assert len(states) >= 40
    for s in states:
        t = recurrence_time(s, 1e-2, 100.0)
        assert t is not None
        assert abs(t / elliptic_period_quad(s.energy) - 1) < 0.02


def test_rotation_grid_drifts():
    t_max = 100.0
    for x in np.linspace(-3.0, 3.0, 10):
        for y in np.linspace(-3.5, 3.5, 10):
            s = PendulumState(float(x), float(y))
            h = s.energy
            if h <= 1.01:
                continue
            assert recurrence_time(s, 0.1, t_max, metric="unwrapped") is None
            end = final_state(s, 1e-3, t_max)
            assert abs(end.x) > abs(s.x) + 0.9 * math.sqrt(2 * (h - 1)) * t_max


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-10, 10), y=st.floats(-3, 3), dt=st.floats(1e-3, 0.1))
def test_one_step_map_preserves_area(x, y, dt):
    assert abs(np.linalg.det(one_step_jacobian(x, y, dt)) - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(-2.5, 2.5), dt=st.floats(1e-3, 0.1))
def test_step_is_time_reversible(x, y, dt):
    s = pendulum_step(PendulumState(x, y), dt)
    back = pendulum_step(PendulumState(s.x, -s.y), dt)
    assert back.x == pytest.approx(x, abs=1e-12) and -back.y == pytest.approx(y, abs=1e-12)


def test_trajectory_and_portrait_shapes():
    tr = trajectory(PendulumState(0.2, 0.0, t=1.0), 1e-2, 1.0, stride=10)
    assert tr.shape == (11, 3)
    assert tr[0, 0] == 1.0 and tr[-1, 0] == pytest.approx(2.0)
    orbits = phase_portrait(n_orbits=3, t_max=2.0)
    assert len(orbits) == 7 and all(o.shape[1] == 3 for o in orbits)
