"""Semi-Lagrangian transport of vorticity, ``d_t omega + u . grad omega = 0``.

The velocity is ``u = (sigma1 / 2pi) u* + v`` where ``u* = |x|^-2 (-x2, x1)``
is evaluated in closed form and ``v`` is reconstructed from ``omega`` at every
step (:func:`annulus_euler.biot_savart.grid_velocity`). Characteristics are
traced backward in polar coordinates with a classical four-stage integrator
and frozen velocity; the foot-point value comes from bicubic interpolation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from ._validation import R_INNER, R_OUTER, check_positive
from .biot_savart import GridVelocity, grid_velocity
from .exceptions import CFLViolation, SimulationDiverged, ValidationError
from .geometry import PolarGrid, ScalarField, make_grid
from .interpolation import PolarStencil

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    ``v_bound`` is the assumed bound on ``sup|v|`` used for the CFL check
    (the theorem's regime is ``sup|v| < 1/4``). ``coupled=False`` freezes
    ``v = 0`` so vorticity is a passive scalar under the background rotation.
    """

    n_r: int = 64
    n_theta: int = 256
    dt: float = 2e-3
    t_end: float = 25.1
    sigma1: float = TWO_PI
    output_interval: float = 0.1
    coupled: bool = True
    monotone: bool = False
    range_limit: bool = True
    v_bound: float = 0.25

    def __post_init__(self):
        make_grid(self.n_r, self.n_theta)
        check_positive(self.dt, "dt")
        check_positive(self.output_interval, "output_interval")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValidationError(f"t_end must be finite and nonnegative, got {self.t_end!r}")
        if not math.isfinite(self.sigma1):
            raise ValidationError("sigma1 must be finite")
        speed = self.max_speed
        limit = 0.5 * self.grid.min_cell_size
        if self.dt * speed > limit:
            raise CFLViolation(
                f"dt * max_speed = {self.dt * speed:.4g} exceeds 0.5 * min cell size = {limit:.4g}"
            )

    @property
    def grid(self) -> PolarGrid:
        return make_grid(self.n_r, self.n_theta)

    @property
    def max_speed(self) -> float:
        return abs(self.sigma1) / TWO_PI / R_INNER + self.v_bound

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def steps_per_output(self) -> int:
        return max(1, int(round(self.output_interval / self.dt)))

    def as_dict(self) -> dict:
        return {
            "n_r": self.n_r,
            "n_theta": self.n_theta,
            "dt": self.dt,
            "t_end": self.t_end,
            "sigma1": self.sigma1,
            "output_interval": self.output_interval,
            "coupled": self.coupled,
            "monotone": self.monotone,
            "range_limit": self.range_limit,
            "v_bound": self.v_bound,
        }


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    omega: ScalarField
    sigma1: float
    diagnostics: dict = field(default_factory=dict)
    velocity: GridVelocity | None = field(default=None, repr=False)
    # range of the run's initial data; transport keeps omega inside it
    bounds: tuple[float, float] | None = None

    def to_json_dict(self) -> dict:
        d = self.diagnostics
        return {
            "t": self.t,
            "energy": d["energy"],
            "enstrophy": d["enstrophy"],
            "omega_min": d["omega_min"],
            "omega_max": d["omega_max"],
            "circulation": d["circulation"],
        }


def _zero_velocity(grid: PolarGrid, sigma1: float) -> GridVelocity:
    z = np.zeros(grid.shape)
    from .boundary_integral import BoundaryDensity
    from .geometry import boundary_quadrature

    q1 = boundary_quadrature(1, grid.n_theta)
    q2 = boundary_quadrature(2, grid.n_theta)
    dens = BoundaryDensity(q1, q2, np.zeros(2 * grid.n_theta), 0.0, "interior")
    return GridVelocity(grid, sigma1, z, z, z, z, 0.0, dens)


def diagnose(omega: ScalarField, vel: GridVelocity, projected: int = 0) -> dict:
    grid = omega.grid
    circ = vel.circulation()
    return {
        "energy": vel.energy(),
        "enstrophy": grid.integrate(omega.values**2),
        "omega_min": float(omega.values.min()),
        "omega_max": float(omega.values.max()),
        "circulation": circ,
        "circulation_residual": abs(circ - vel.sigma1) / max(1.0, abs(vel.sigma1)),
        "sup_v": vel.sup_v(),
        "projected_feet": int(projected),
    }


class EulerSimulator:
    """Stateful driver; holds the grid and the velocity mode of a run."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.grid = config.grid

    def velocity(self, omega: ScalarField) -> GridVelocity:
        if self.config.coupled:
            return grid_velocity(omega, self.config.sigma1)
        return _zero_velocity(self.grid, self.config.sigma1)

    def initial_state(self, omega0: ScalarField, t0: float = 0.0) -> SimState:
        if omega0.grid != self.grid:
            raise ValidationError(
                f"initial field grid {omega0.grid.shape} does not match config grid {self.grid.shape}"
            )
        vel = self.velocity(omega0)
        bounds = (float(omega0.values.min()), float(omega0.values.max()))
        return SimState(float(t0), omega0, self.config.sigma1, diagnose(omega0, vel), vel, bounds)

    def advance(self, state: SimState, dt: float) -> SimState:
        vel = state.velocity if state.velocity is not None else self.velocity(state.omega)
        bounds = state.bounds or (float(state.omega.values.min()), float(state.omega.values.max()))
        values, projected = semi_lagrangian_values(
            state.omega, vel, dt, monotone=self.config.monotone,
            bounds=bounds if self.config.range_limit else None,
        )
        if not np.all(np.isfinite(values)):
            raise SimulationDiverged(
                f"non-finite vorticity after step from t = {state.t:.6g}; "
                f"last finite diagnostics: {state.diagnostics}"
            )
        omega = ScalarField(self.grid, values)
        new_vel = self.velocity(omega)
        return SimState(
            state.t + dt, omega, state.sigma1, diagnose(omega, new_vel, projected), new_vel, bounds
        )

    def iterate(self, state: SimState) -> Iterator[tuple[int, SimState]]:
        """Yield ``(step_index, state)`` for every step up to ``t_end``."""
        cfg = self.config
        n = cfg.n_steps
        for k in range(n):
            dt = cfg.dt if k < n - 1 else cfg.t_end - state.t
            if dt <= 0:
                break
            state = self.advance(state, dt)
            yield k + 1, state


def semi_lagrangian_values(
    omega: ScalarField, vel: GridVelocity, dt: float, *, monotone: bool = False, bounds=None
):
    """Vorticity after one backward-characteristic step, and the number of projected feet.

    ``monotone`` clips each foot value to its enclosing cell; ``bounds``
    clips to a fixed ``(lo, hi)``, normally the range of the initial data.
    """
    grid = omega.grid
    r0 = grid.R.ravel()
    t0 = grid.TH.ravel()
    coef = vel.sigma1 / TWO_PI
    v_stack = np.stack([vel.v_r, vel.v_t])
    has_v = bool(np.any(v_stack))

    def rates(r, th, first=False):
        rc = np.clip(r, R_INNER, R_OUTER)
        if not has_v:
            return np.zeros_like(r), coef / (rc * rc)
        if first:
            vr, vt = v_stack[0].ravel(), v_stack[1].ravel()
        else:
            vr, vt = PolarStencil(grid, rc, th).many(v_stack)
        return vr, coef / (rc * rc) + vt / rc

    h = -dt
    k1r, k1t = rates(r0, t0, first=True)
    k2r, k2t = rates(r0 + 0.5 * h * k1r, t0 + 0.5 * h * k1t)
    k3r, k3t = rates(r0 + 0.5 * h * k2r, t0 + 0.5 * h * k2t)
    k4r, k4t = rates(r0 + h * k3r, t0 + h * k3t)
    rf = r0 + (h / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
    tf = t0 + (h / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)

    disp = np.hypot(rf - r0, 0.5 * (rf + r0) * (tf - t0))
    max_disp = float(disp.max())
    if max_disp > grid.min_cell_size * (1.0 + 1e-6):
        raise CFLViolation(
            f"foot point moved {max_disp:.4g}, more than one cell ({grid.min_cell_size:.4g})"
        )
    outside = (rf < R_INNER) | (rf > R_OUTER)
    projected = int(outside.sum())
    rf = np.clip(rf, R_INNER, R_OUTER)

    stencil = PolarStencil(grid, rf, tf)
    values = stencil(omega.values)
    if monotone:
        lo, hi = stencil.bounds(omega.values)
        values = np.clip(values, lo, hi)
    if bounds is not None:
        values = np.clip(values, bounds[0], bounds[1])
    return values.reshape(grid.shape), projected


def step(
    state: SimState, dt: float, *, coupled: bool = True, monotone: bool = False, range_limit: bool = True
) -> SimState:
    """Advance ``state`` by one semi-Lagrangian step of size ``dt`` (negative ``dt`` runs backward)."""
    grid = state.omega.grid
    cfg = SimConfig(
        grid.n_r, grid.n_theta, dt=abs(dt), t_end=0.0, sigma1=state.sigma1,
        coupled=coupled, monotone=monotone, range_limit=range_limit,
    )
    sim = EulerSimulator(cfg)
    if state.velocity is None:
        state = replace(state, velocity=sim.velocity(state.omega))
    return sim.advance(state, dt)


def run(
    config: SimConfig,
    omega0: ScalarField,
    callback: Callable[[SimState], None] | None = None,
) -> list[SimState]:
    """Integrate from t = 0 to ``config.t_end``; snapshots every ``steps_per_output`` steps and at the end."""
    sim = EulerSimulator(config)
    state = sim.initial_state(omega0)
    snapshots = [state]
    every = config.steps_per_output
    n = config.n_steps
    for k, state in sim.iterate(state):
        if callback is not None:
            callback(state)
        if k % every == 0 or k == n:
            snapshots.append(state)
            log.debug("t=%.4f enstrophy=%.6e", state.t, state.diagnostics["enstrophy"])
    return snapshots


def _relative_drift(series: np.ndarray) -> float:
    ref = series[0]
    dev = float(np.max(np.abs(series - ref)))
    return dev / abs(ref) if ref != 0 else dev


def conservation_report(snapshots: list[SimState]) -> dict:
    """Relative energy and enstrophy drift and the maximum-principle violation over a run."""
    if len(snapshots) < 2:
        raise ValidationError("conservation_report needs at least two snapshots")
    energy = np.array([s.diagnostics["energy"] for s in snapshots])
    enstrophy = np.array([s.diagnostics["enstrophy"] for s in snapshots])
    w0 = snapshots[0].omega.values
    max0 = float(np.max(np.abs(w0)))
    maxt = max(float(np.max(np.abs(s.omega.values))) for s in snapshots)
    lo0, hi0 = float(w0.min()), float(w0.max())
    lo = min(s.diagnostics["omega_min"] for s in snapshots)
    hi = max(s.diagnostics["omega_max"] for s in snapshots)
    circ = np.array([s.diagnostics["circulation"] for s in snapshots])
    return {
        "energy_drift": _relative_drift(energy),
        "enstrophy_drift": _relative_drift(enstrophy),
        "range_violation": max(0.0, maxt - max0),
        "range_violation_relative": max(0.0, maxt - max0) / max0 if max0 > 0 else 0.0,
        "undershoot": max(0.0, lo0 - lo),
        "overshoot": max(0.0, hi - hi0),
        "circulation_drift": float(np.max(np.abs(circ - circ[0]))) / max(1.0, abs(circ[0])),
    }
