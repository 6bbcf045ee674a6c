"""Velocity from vorticity on the annulus: ``v = v_hat + v_tilde + grad phi``.

* ``v_hat`` is the circulation part, a multiple of ``|x|^-2 (-x2, x1)``;
* ``v_tilde`` is the free-space Biot-Savart integral of the vorticity
  extended by zero outside the annulus;
* ``grad phi`` is the harmonic correction restoring ``v . n = 0`` on both
  circles (see :mod:`annulus_euler.boundary_integral`).

The volume integral uses the grid's area weights with the singularity
subtracted to first order: ``omega(y) - omega(x) - grad omega(x) . (y - x)``
is integrated against the kernel, and the integrals of the subtracted
constant and linear parts over M are added back in closed form. The
coincident node is dropped.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import R_INNER, check_finite_array, check_points
from .boundary_integral import (
    BoundaryDensity,
    GridLayerEvaluator,
    MomentSolver,
    NeumannData,
    eval_grad_phi,
    neumann_residual,
)
from .exceptions import ValidationError
from .geometry import PolarGrid, ScalarField, c0_norm, polar_gradient
from .interpolation import PolarStencil

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class VelocitySamples:
    points: np.ndarray
    v_hat: np.ndarray
    v_tilde: np.ndarray
    grad_phi: np.ndarray
    total: np.ndarray

    def __post_init__(self):
        for name in ("points", "v_hat", "v_tilde", "grad_phi", "total"):
            check_finite_array(getattr(self, name), name, ndim=2)

    @property
    def v(self) -> np.ndarray:
        """Velocity without the circulation part, ``v_tilde + grad_phi``."""
        return self.v_tilde + self.grad_phi

    def as_table(self) -> np.ndarray:
        return np.column_stack([self.points, self.v_hat, self.v_tilde, self.grad_phi, self.total])


def rotation_field(points) -> np.ndarray:
    """``|x|^-2 (-x2, x1)``: unit-circulation irrotational rotation."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    r2 = np.einsum("pk,pk->p", pts, pts)
    return np.column_stack([-pts[:, 1], pts[:, 0]]) / r2[:, None]


def eval_vhat(sigma1: float, points) -> np.ndarray:
    """Circulation part ``(sigma1 / 2 pi) |x|^-2 (-x2, x1)``."""
    sigma1 = float(sigma1)
    if not np.isfinite(sigma1):
        raise ValidationError("sigma1 must be finite")
    pts = check_points(points)
    return (sigma1 / TWO_PI) * rotation_field(pts)


def annulus_swirl(r) -> np.ndarray:
    """Azimuthal speed of ``(1/2pi) int_M K(x - y) dy``, i.e. free-space velocity of unit vorticity on M."""
    r = np.asarray(r, dtype=np.float64)
    return (r * r - 1.0) / (2.0 * r)


def _linear_swirl(r):
    """Closed-form free-space velocity at (r, 0) of the linear vorticities ``y - x`` on M.

    Returns ``(I_rt, I_tr)``: the theta-velocity induced by ``(y - x) . e_r``
    and the r-velocity induced by ``(y - x) . e_theta`` (the other two
    couplings vanish by symmetry).
    """
    r = np.asarray(r, dtype=np.float64)
    psi1 = -(r**4 - 1.0) / (8.0 * r) - r * (4.0 - r * r) / 4.0
    dpsi1 = -(3.0 * r**4 + 1.0) / (8.0 * r * r) - (4.0 - 3.0 * r * r) / 4.0
    return dpsi1 - r * annulus_swirl(r), -psi1 / r


def _exclusion_radius(grid: PolarGrid) -> np.ndarray:
    """Per-ring radius inside which a source node is treated as coincident with the target."""
    return 0.5 * np.minimum(grid.dr, grid.r * grid.dtheta)


class VolumeKernel:
    """Volume Biot-Savart integral at all nodes of a polar grid, by FFT in theta.

    In polar components at the target the kernel depends only on the two radii
    and the angular offset, so the sum over the grid is a circular
    cross-correlation per pair of rings.
    """

    def __init__(self, grid: PolarGrid):
        self.grid = grid
        r = grid.r
        phi = grid.theta
        ri = r[:, None, None]
        rk = r[None, :, None]
        cphi, sphi = np.cos(phi)[None, None, :], np.sin(phi)[None, None, :]
        d2 = ri * ri + rk * rk - 2.0 * ri * rk * cphi
        excl = _exclusion_radius(grid)[None, :, None]
        near = d2 < excl * excl
        d2 = np.where(near, 1.0, d2)
        wk = (grid.radial_weights * r * grid.dtheta / TWO_PI)[None, :, None]
        k_r = np.where(near, 0.0, wk * rk * sphi / d2)
        k_t = np.where(near, 0.0, wk * (ri - rk * cphi) / d2)
        # (y - x) in the target frame: radial part rk cos(phi) - ri, angular part rk sin(phi)
        lin_r = rk * cphi - ri
        lin_t = rk * sphi
        self._row_r = k_r.sum(axis=(1, 2))
        self._row_t = k_t.sum(axis=(1, 2))
        self._lin_rt = (lin_r * k_t).sum(axis=(1, 2))
        self._lin_tr = (lin_t * k_r).sum(axis=(1, 2))
        self._hat_r = np.conj(np.fft.rfft(k_r, axis=2))
        self._hat_t = np.conj(np.fft.rfft(k_t, axis=2))
        self._swirl = annulus_swirl(r)
        self._exact_rt, self._exact_tr = _linear_swirl(r)

    def __call__(self, omega_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Polar components ``(v_r, v_theta)`` of ``v_tilde`` at every node."""
        w = np.asarray(omega_values, dtype=np.float64).reshape(self.grid.shape)
        n = self.grid.n_theta
        g_r, g_t = polar_gradient(self.grid, w)
        w_hat = np.fft.rfft(w, axis=1)
        v_r = np.fft.irfft(np.einsum("ikm,km->im", self._hat_r, w_hat), n=n, axis=1)
        v_t = np.fft.irfft(np.einsum("ikm,km->im", self._hat_t, w_hat), n=n, axis=1)
        v_r += -w * self._row_r[:, None] + g_t * (self._exact_tr - self._lin_tr)[:, None]
        v_t += w * (self._swirl - self._row_t)[:, None] + g_r * (self._exact_rt - self._lin_rt)[:, None]
        return v_r, v_t


@lru_cache(maxsize=8)
def volume_kernel(grid: PolarGrid) -> VolumeKernel:
    return VolumeKernel(grid)


@lru_cache(maxsize=8)
def moment_solver(n_b: int, convention: str) -> MomentSolver:
    return MomentSolver(n_b, n_b, convention)


@lru_cache(maxsize=8)
def grid_layer(grid: PolarGrid) -> GridLayerEvaluator:
    return GridLayerEvaluator(grid)


def polar_to_cartesian(v_r, v_t, theta) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.column_stack([np.ravel(v_r * c - v_t * s), np.ravel(v_r * s + v_t * c)])


def _vtilde_chunk(src, weights, excl, omega_src, pts, omega_pts, grad_pts, closed_form) -> np.ndarray:
    # elementwise only (no BLAS/einsum) so each point's sum is independent of batching
    dx = pts[:, 0:1] - src[None, :, 0]
    dy = pts[:, 1:2] - src[None, :, 1]
    d2 = dx * dx + dy * dy
    near = d2 < excl[None, :] ** 2
    # omega(y) - omega(x) - grad omega(x) . (y - x), with y - x = -d
    smooth = omega_src[None, :] - omega_pts[:, None] + (dx * grad_pts[:, 0:1] + dy * grad_pts[:, 1:2])
    coef = np.where(near, 0.0, weights[None, :] * smooth / np.where(near, 1.0, d2))
    out = np.empty((pts.shape[0], 2))
    out[:, 0] = -(coef * dy).sum(axis=1)
    out[:, 1] = (coef * dx).sum(axis=1)
    return out + closed_form


def _closed_form_part(pts, omega_pts, grad_pts) -> np.ndarray:
    """Exact integrals of the subtracted constant and linear parts, Cartesian."""
    r = np.hypot(pts[:, 0], pts[:, 1])
    c, s = pts[:, 0] / r, pts[:, 1] / r
    g_r = grad_pts[:, 0] * c + grad_pts[:, 1] * s
    g_t = -grad_pts[:, 0] * s + grad_pts[:, 1] * c
    exact_rt, exact_tr = _linear_swirl(r)
    u_r = g_t * exact_tr
    u_t = omega_pts * annulus_swirl(r) + g_r * exact_rt
    return np.column_stack([u_r * c - u_t * s, u_r * s + u_t * c])


def eval_vtilde(omega: ScalarField, points, *, chunk_size: int = 128, n_jobs: int = 1) -> np.ndarray:
    """Free-space Biot-Savart velocity of ``omega`` (extended by zero) at arbitrary points of M.

    Cost is O(N_points * N_grid); points are processed in chunks, optionally
    on ``n_jobs`` threads. Each point's sum runs over the grid in a fixed
    order, so results do not depend on chunking or threading.
    """
    pts = check_points(points)
    grid = omega.grid
    src = grid.nodes
    weights = grid.area_weights.ravel() / TWO_PI
    excl = np.repeat(_exclusion_radius(grid), grid.n_theta)
    omega_src = omega.values.ravel()
    r = np.clip(np.hypot(pts[:, 0], pts[:, 1]), R_INNER, 2.0)
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    g_r, g_t = polar_gradient(grid, omega.values)
    stencil = PolarStencil(grid, r, theta)
    omega_pts, gr_pts, gt_pts = stencil.many(np.stack([omega.values, g_r, g_t]))
    grad_pts = polar_to_cartesian(gr_pts, gt_pts, theta)
    closed = _closed_form_part(pts, omega_pts, grad_pts)
    starts = range(0, pts.shape[0], chunk_size)

    def work(s):
        sl = slice(s, s + chunk_size)
        return _vtilde_chunk(
            src, weights, excl, omega_src, pts[sl], omega_pts[sl], grad_pts[sl], closed[sl]
        )

    if n_jobs == 1 or pts.shape[0] <= chunk_size:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(work, starts))
    return np.vstack(parts) if parts else np.zeros((0, 2))


@dataclass(frozen=True, eq=False)
class GridVelocity:
    """Velocity parts at every grid node, in polar components (r, theta).

    ``v_*`` arrays hold the non-circulation velocity ``v = total - (sigma1/2pi) u*``
    including the discrete circulation correction.
    """

    grid: PolarGrid
    sigma1: float
    vtilde_r: np.ndarray
    vtilde_t: np.ndarray
    gphi_r: np.ndarray
    gphi_t: np.ndarray
    circulation_defect: float
    density: BoundaryDensity

    @property
    def v_r(self) -> np.ndarray:
        return self.vtilde_r + self.gphi_r

    @property
    def v_t(self) -> np.ndarray:
        return self.vtilde_t + self.gphi_t - (self.circulation_defect / TWO_PI) / self.grid.r[:, None]

    @property
    def total_r(self) -> np.ndarray:
        return self.v_r

    @property
    def total_t(self) -> np.ndarray:
        return self.v_t + (self.sigma1 / TWO_PI) / self.grid.r[:, None]

    def sup_v(self) -> float:
        return float(np.max(np.hypot(self.v_r, self.v_t)))

    def circulation(self) -> float:
        """Trapezoid circulation of the total velocity on Gamma_1."""
        return float(np.sum(self.total_t[0]) * self.grid.dtheta * R_INNER)

    def energy(self) -> float:
        return 0.5 * self.grid.integrate(self.total_r**2 + self.total_t**2)

    def boundary_normal_residual(self) -> float:
        """``max |total . n|`` over the boundary nodes (fluid-side limit of grad phi)."""
        return float(max(np.max(np.abs(self.total_r[0])), np.max(np.abs(self.total_r[-1]))))

    def divergence(self) -> np.ndarray:
        """Discrete divergence: differences in r, spectral in theta."""
        g = self.grid
        h = g.dr
        ru = g.r[:, None] * self.total_r
        d = np.empty_like(ru)
        d[1:-1] = (ru[2:] - ru[:-2]) / (2 * h)
        d[0] = (-3 * ru[0] + 4 * ru[1] - ru[2]) / (2 * h)
        d[-1] = (3 * ru[-1] - 4 * ru[-2] + ru[-3]) / (2 * h)
        m = np.fft.rfftfreq(g.n_theta, 1.0 / g.n_theta)
        ut_hat = np.fft.rfft(self.total_t, axis=1) * (1j * m)
        if g.n_theta % 2 == 0:
            ut_hat[:, -1] = 0.0
        d_theta = np.fft.irfft(ut_hat, n=g.n_theta, axis=1)
        return (d + d_theta) / g.r[:, None]

    def cartesian(self, which: str = "total") -> np.ndarray:
        comps = {
            "total": (self.total_r, self.total_t),
            "v": (self.v_r, self.v_t),
            "v_tilde": (self.vtilde_r, self.vtilde_t),
            "grad_phi": (self.gphi_r, self.gphi_t),
        }[which]
        return polar_to_cartesian(comps[0], comps[1], self.grid.TH)


def grid_velocity(omega: ScalarField, sigma1: float = 0.0, convention: str = "interior") -> GridVelocity:
    """Reconstruct the velocity of ``omega`` at every grid node (fast path)."""
    grid = omega.grid
    vt_r, vt_t = volume_kernel(grid)(omega.values)
    solver = moment_solver(grid.n_theta, convention)
    data = NeumannData(solver.quad1, solver.quad2, -vt_r[0], -vt_r[-1])
    density = solver.solve(data)
    gp_r, gp_t = grid_layer(grid)(density)
    defect = float(np.sum(vt_t[0] + gp_t[0]) * grid.dtheta * R_INNER)
    return GridVelocity(grid, float(sigma1), vt_r, vt_t, gp_r, gp_t, defect, density)


class VelocityReconstructor(BaseEstimator):
    """Estimator-style wrapper: ``fit`` on a vorticity field, ``predict`` velocity at points.

    Parameters
    ----------
    sigma1 : float
        Circulation of the velocity on the inner circle.
    convention : {"interior", "verbatim"}
        Sign of the jump term in the moment equation on Gamma_1.
    chunk_size, n_jobs : int
        Batching of the O(N_points * N_grid) volume integral.
    """

    def __init__(self, sigma1=0.0, convention="interior", chunk_size=128, n_jobs=1):
        self.sigma1 = sigma1
        self.convention = convention
        self.chunk_size = chunk_size
        self.n_jobs = n_jobs

    def fit(self, omega: ScalarField, y=None):
        if not isinstance(omega, ScalarField):
            raise ValidationError("fit expects a ScalarField of vorticity")
        self.omega_ = omega
        self.grid_velocity_ = grid_velocity(omega, self.sigma1, self.convention)
        self.density_ = self.grid_velocity_.density
        self.circulation_defect_ = self.grid_velocity_.circulation_defect
        self.neumann_residual_ = neumann_residual(
            self.density_,
            NeumannData(
                self.density_.quad1,
                self.density_.quad2,
                -self.grid_velocity_.vtilde_r[0],
                -self.grid_velocity_.vtilde_r[-1],
            ),
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "grid_velocity_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("VelocityReconstructor is not fitted yet; call fit(omega) first")

    def decompose(self, points) -> VelocitySamples:
        self._check_fitted()
        pts = check_points(points)
        coef = (float(self.sigma1) - self.circulation_defect_) / TWO_PI
        v_hat = coef * rotation_field(pts)
        v_tilde = eval_vtilde(self.omega_, pts, chunk_size=self.chunk_size, n_jobs=self.n_jobs)
        grad_phi = eval_grad_phi(self.density_, pts)
        total = v_hat + v_tilde + grad_phi
        return VelocitySamples(pts, v_hat, v_tilde, grad_phi, total)

    def predict(self, points) -> np.ndarray:
        return self.decompose(points).total


def solve_velocity(omega: ScalarField, sigma1: float, points, **kwargs) -> VelocitySamples:
    """Full reconstruction ``v_hat + v_tilde + grad phi`` at ``points``."""
    return VelocityReconstructor(sigma1=sigma1, **kwargs).fit(omega).decompose(points)


def bound_ratio(omega: ScalarField) -> float:
    """``sup|v| / sup|omega|`` on the grid for zero circulation, an empirical reconstruction constant."""
    gv = grid_velocity(omega, 0.0)
    return float(np.max(np.hypot(gv.total_r, gv.total_t)) / c0_norm(omega))
