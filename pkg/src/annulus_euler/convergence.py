"""Grid-refinement studies for the velocity reconstruction and the transport step."""

from __future__ import annotations

import numpy as np

from .biot_savart import grid_velocity, bound_ratio
from .euler_sim import SimConfig, conservation_report, run
from .geometry import ScalarField, c0_norm, make_grid
from .interpolation import PolarStencil


def radial_oracle(kind: str):
    """``(omega(r), u_theta(r))`` pairs with closed-form tangential speed at zero circulation."""
    pi = np.pi
    if kind == "uniform":
        return (lambda r: np.ones_like(r)), (lambda r: (r * r - 1.0) / (2.0 * r))
    if kind == "quadratic":
        return (lambda r: r * r), (lambda r: (r**4 - 1.0) / (4.0 * r))
    if kind == "cosine":

        def prim(s):
            return s * np.sin(pi * s) / pi + np.cos(pi * s) / pi**2

        return (lambda r: np.cos(pi * r)), (lambda r: (prim(r) - prim(1.0)) / r)
    raise ValueError(f"unknown radial oracle {kind!r}")


def velocity_error(n_r: int, n_theta: int, kind: str = "uniform") -> float:
    """Max relative error of ``u_theta`` against the radial oracle over interior nodes."""
    g = make_grid(n_r, n_theta)
    w, u = radial_oracle(kind)
    vel = grid_velocity(ScalarField.from_function(g, lambda R, TH: w(R)), 0.0)
    exact = u(g.r)
    inner = slice(1, None)
    err = np.abs(vel.total_t[inner] - exact[inner, None]) / np.max(np.abs(exact))
    return float(err.max())


def mode_field(grid, m: int = 1):
    return ScalarField.from_function(grid, lambda R, TH: np.sin(np.pi * (R - 1.0)) ** 2 * np.cos(m * TH))


def self_convergence(grids, m: int = 1) -> list[dict]:
    """Velocity of a non-radial mode on each grid, compared at shared nodes with the finest grid."""
    grids = sorted(grids)
    fine = make_grid(*grids[-1])
    vf = grid_velocity(mode_field(fine, m), 0.0)
    out = []
    for n_r, n_t in grids[:-1]:
        g = make_grid(n_r, n_t)
        v = grid_velocity(mode_field(g, m), 0.0)
        st = PolarStencil(fine, g.R.ravel(), g.TH.ravel())
        ref_r, ref_t = st.many(np.stack([vf.v_r, vf.v_t]))
        diff = np.hypot(v.v_r.ravel() - ref_r, v.v_t.ravel() - ref_t)
        out.append({"grid": f"{n_r}x{n_t}", "max_diff_vs_finest": float(diff.max())})
    return out


def bound_study(grids, n_fields: int = 20, seed: int = 0) -> dict:
    """``||v||_C0 / ||omega||_C0`` for seeded band-limited fields on each grid."""
    rng = np.random.default_rng(seed)
    coeffs = [rng.normal(size=(4, 5, 2)) for _ in range(n_fields)]
    ratios = {}
    for n_r, n_t in grids:
        g = make_grid(n_r, n_t)
        vals = []
        for c in coeffs:
            vals.append(bound_ratio(band_limited_field(g, c)))
        ratios[f"{n_r}x{n_t}"] = vals
    return ratios


def band_limited_field(grid, coeffs) -> ScalarField:
    """``sum_{k, m} cos(k pi (r - 1)) (a cos m theta + b sin m theta)`` with ``coeffs[k, m] = (a, b)``."""
    s = np.pi * (grid.R - 1.0)
    vals = np.zeros(grid.shape)
    for k in range(coeffs.shape[0]):
        for m in range(coeffs.shape[1]):
            a, b = coeffs[k, m]
            vals += np.cos(k * s) * (a * np.cos(m * grid.TH) + b * np.sin(m * grid.TH))
    return ScalarField(grid, vals)


def transport_study(grids, t_end: float = 2.0, dt: float = 2e-3, amplitude: float = 0.25) -> list[dict]:
    """Enstrophy drift and range violation of the bump initial data on each grid."""
    from .recurrence_lab import XiSpec

    spec = XiSpec(amplitude / 2.5)
    out = []
    for n_r, n_t in grids:
        cfg = SimConfig(n_r, n_t, dt=dt, t_end=t_end, output_interval=max(dt, t_end / 20))
        g = cfg.grid
        w0 = ScalarField.from_function(g, lambda R, TH: spec.amplitude * spec.profile(TH))
        rep = conservation_report(run(cfg, w0))
        out.append({"grid": f"{n_r}x{n_t}", **rep, "c0": c0_norm(w0)})
    return out
