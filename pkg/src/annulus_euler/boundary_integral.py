"""Interior Neumann problem on the annulus by a single-layer potential.

The harmonic correction ``phi`` is written as

    phi(x) = int_{G1 u G2} N(x, y) f(y) dl(y),   N(x, y) = ln|x - y| / (2 pi),

and the density ``f`` (the "moment") solves a second-kind Fredholm equation
discretized by the trapezoid (Nystrom) rule on both circles.

Normals are ``n = x / |x|`` on both circles. That vector points out of the
fluid on G2 but into the fluid on G1, so the identity term of the moment
equation carries a different sign on each circle when the normal derivative
is taken from inside the fluid. Both sign conventions are available; the
velocity solver uses ``"interior"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg

from ._validation import R_INNER, R_OUTER, check_finite_array, check_points
from .exceptions import Unsolvable, ValidationError
from .geometry import BoundaryQuadrature, PolarGrid, boundary_quadrature

Convention = Literal["verbatim", "interior"]

SOLVABILITY_RTOL = 1e-6
# absolute floor so rounding-level data (e.g. radial vorticity) is not flagged
_RESIDUAL_FLOOR = 1e-13
_SPECTRAL_DECAY = 1e-13
# the operator has one null direction (a circle-constant mode) whose discrete
# singular value decays like 2^-n_b; the next one is ~0.2 s_max, so any cutoff
# in between drops it for every n_b >= 16
_RANK_RTOL = 1e-4


def assemble_kernel(quad1: BoundaryQuadrature, quad2: BoundaryQuadrature) -> np.ndarray:
    """Nystrom matrix of the normal-derivative kernel.

    ``A[p, q] = w_q (x_p - x_q) . n_p / (2 pi |x_p - x_q|^2)`` off the diagonal;
    the diagonal holds the smooth limit ``w_p / (4 pi R_p)``.
    """
    nodes = np.vstack([quad1.nodes, quad2.nodes])
    normals = np.vstack([quad1.normals, quad2.normals])
    weights = np.concatenate([quad1.weights, quad2.weights])
    radii = np.concatenate(
        [np.full(quad1.n_b, quad1.radius), np.full(quad2.n_b, quad2.radius)]
    )
    d = nodes[:, None, :] - nodes[None, :, :]
    d2 = np.einsum("pqk,pqk->pq", d, d)
    np.fill_diagonal(d2, 1.0)
    num = np.einsum("pqk,pk->pq", d, normals)
    A = num / d2 / (2.0 * np.pi) * weights[None, :]
    np.fill_diagonal(A, weights / (4.0 * np.pi * radii))
    return A


def jump_coefficients(n1: int, n2: int, convention: Convention = "interior") -> np.ndarray:
    """Identity-term coefficient per boundary node.

    ``"verbatim"``: -1/2 on both circles. ``"interior"``: +1/2 on G1 (where
    ``x/|x|`` points into the fluid) and -1/2 on G2, i.e. the limit of the
    normal derivative taken from inside the annulus.
    """
    if convention == "verbatim":
        return np.full(n1 + n2, -0.5)
    if convention == "interior":
        return np.concatenate([np.full(n1, 0.5), np.full(n2, -0.5)])
    raise ValidationError(f"unknown jump convention {convention!r}")


@dataclass(frozen=True, eq=False)
class NeumannData:
    """Right-hand side ``-v_tilde . n`` at the boundary nodes of each circle."""

    quad1: BoundaryQuadrature
    quad2: BoundaryQuadrature
    values1: np.ndarray
    values2: np.ndarray

    def __post_init__(self):
        for name, q, v in (("values1", self.quad1, self.values1), ("values2", self.quad2, self.values2)):
            arr = check_finite_array(v, name, ndim=1)
            if arr.size != q.n_b:
                raise ValidationError(f"{name} has {arr.size} entries, expected {q.n_b}")
            object.__setattr__(self, name, arr)

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.values1, self.values2])

    def circle_fluxes(self) -> tuple[float, float]:
        return self.quad1.integrate(self.values1), self.quad2.integrate(self.values2)

    def is_solvable(self, tol: float = SOLVABILITY_RTOL) -> bool:
        """Per-circle zero-flux condition ``|int_Gj g dl| <= tol (1 + sup|g|)``."""
        scale = 1.0 + float(np.max(np.abs(self.values)))
        return all(abs(flux) <= tol * scale for flux in self.circle_fluxes())


@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    quad1: BoundaryQuadrature
    quad2: BoundaryQuadrature
    f_values: np.ndarray
    residual: float = 0.0
    convention: str = "interior"
    data_norm: float = field(default=0.0, repr=False)

    @property
    def f1(self) -> np.ndarray:
        return self.f_values[: self.quad1.n_b]

    @property
    def f2(self) -> np.ndarray:
        return self.f_values[self.quad1.n_b :]

    def scaled(self, alpha: float) -> "BoundaryDensity":
        return BoundaryDensity(
            self.quad1, self.quad2, alpha * self.f_values, abs(alpha) * self.residual, self.convention
        )


def _data_vector(data) -> np.ndarray:
    if isinstance(data, NeumannData):
        return data.values
    return check_finite_array(data, "data", ndim=1)


def solve_moment(A: np.ndarray, data, *, convention: Convention = "interior", quads=None) -> BoundaryDensity:
    """Minimum-norm least-squares solution of ``(J + A) f = data``.

    ``J`` is the diagonal jump term of ``convention`` (``-I/2`` for
    ``"verbatim"``, the fluid-side limit for ``"interior"``). Raises
    :class:`Unsolvable` when the residual exceeds
    ``1e-6 * |data|``.
    """
    g = _data_vector(data)
    if isinstance(data, NeumannData):
        quads = (data.quad1, data.quad2)
    if quads is None:
        raise ValidationError("quadratures are required when data is a plain array")
    q1, q2 = quads
    if A.shape != (g.size, g.size) or g.size != q1.n_b + q2.n_b:
        raise ValidationError(f"matrix {A.shape} does not match data of length {g.size}")
    L = A + np.diag(jump_coefficients(q1.n_b, q2.n_b, convention))
    f, *_ = scipy.linalg.lstsq(L, g, cond=_RANK_RTOL, lapack_driver="gelsd")
    residual = float(np.linalg.norm(L @ f - g))
    g_norm = float(np.linalg.norm(g))
    if residual > SOLVABILITY_RTOL * g_norm + _RESIDUAL_FLOOR:
        raise Unsolvable(residual, g_norm)
    return BoundaryDensity(q1, q2, f, residual, convention, g_norm)


class MomentSolver:
    """Cached pseudo-inverse of the moment operator for repeated solves.

    The operator depends only on the node counts and the sign convention, so a
    time-stepping run factors it once (SVD) and applies it every step.
    """

    def __init__(self, n_b1: int, n_b2: int | None = None, convention: Convention = "interior"):
        n_b2 = n_b1 if n_b2 is None else n_b2
        self.quad1 = boundary_quadrature(1, n_b1)
        self.quad2 = boundary_quadrature(2, n_b2)
        self.convention = convention
        self.A = assemble_kernel(self.quad1, self.quad2)
        self.L = self.A + np.diag(jump_coefficients(n_b1, n_b2, convention))
        U, s, Vt = np.linalg.svd(self.L)
        keep = s > _RANK_RTOL * s[0]
        self.rank = int(keep.sum())
        self.pinv = (Vt[keep].T / s[keep]) @ U[:, keep].T
        self.singular_values = s

    def solve(self, data) -> BoundaryDensity:
        g = _data_vector(data)
        f = self.pinv @ g
        residual = float(np.linalg.norm(self.L @ f - g))
        g_norm = float(np.linalg.norm(g))
        if residual > SOLVABILITY_RTOL * g_norm + _RESIDUAL_FLOOR:
            raise Unsolvable(residual, g_norm)
        return BoundaryDensity(self.quad1, self.quad2, f, residual, self.convention, g_norm)


# --- evaluation of the layer potential ---------------------------------------------------


def _fourier_coefficients(values: np.ndarray):
    """Real trigonometric-interpolant coefficients ``a_0, a_m, b_m`` (m = 1..n/2)."""
    n = values.size
    c = np.fft.rfft(values) / n
    a = 2.0 * c.real
    b = -2.0 * c.imag
    a[0] = c[0].real
    if n % 2 == 0:
        a[-1] = c[-1].real
        b[-1] = 0.0
    return a, b


def _spectral_circle(radius: float, values: np.ndarray, r: np.ndarray, theta: np.ndarray):
    """Potential and polar gradient of one circle's layer at points (r, theta).

    Exact for the trigonometric interpolant of the density (product
    integration). Points must lie on the fluid side of the circle.
    """
    a, b = _fourier_coefficients(values)
    outside = radius <= R_INNER
    m = np.arange(1, a.size)
    rho = (radius / r) if outside else (r / radius)
    rho_m = np.exp(np.log(rho)[:, None] * m[None, :])
    mt = theta[:, None] * m[None, :]
    cos_mt, sin_mt = np.cos(mt), np.sin(mt)
    T = cos_mt * a[1:] + sin_mt * b[1:]
    dT = -sin_mt * a[1:] + cos_mt * b[1:]
    phi = radius * a[0] * np.log(np.maximum(r, radius)) - (rho_m * T * (radius / (2.0 * m))).sum(axis=1)
    sign = 1.0 if outside else -1.0
    d_r = sign * (radius / (2.0 * r)) * (rho_m * T).sum(axis=1)
    if outside:
        d_r = d_r + radius * a[0] / r
    d_t = -(radius / (2.0 * r)) * (rho_m * dT).sum(axis=1)
    return phi, d_r, d_t


def _polar_to_cartesian(d_r, d_t, theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.column_stack([d_r * c - d_t * s, d_r * s + d_t * c])


def _direct(density: BoundaryDensity, pts: np.ndarray, gradient: bool) -> np.ndarray:
    src = np.vstack([density.quad1.nodes, density.quad2.nodes])
    w = np.concatenate([density.quad1.weights, density.quad2.weights]) * density.f_values
    d = pts[:, None, :] - src[None, :, :]
    d2 = np.einsum("pqk,pqk->pq", d, d)
    if gradient:
        return np.einsum("pqk,pq->pk", d, w / d2) / (2.0 * np.pi)
    return (0.5 * np.log(d2) * w).sum(axis=1) / (2.0 * np.pi)


def _needs_spectral(density: BoundaryDensity, r: np.ndarray) -> np.ndarray:
    """True where the trapezoid rule is not yet at machine accuracy for the layer."""
    rho1 = R_INNER / r
    rho2 = r / R_OUTER
    err1 = rho1 ** (density.quad1.n_b // 2)
    err2 = rho2 ** (density.quad2.n_b // 2)
    return (err1 > _SPECTRAL_DECAY) | (err2 > _SPECTRAL_DECAY)


def _evaluate(density: BoundaryDensity, points, method: str, gradient: bool) -> np.ndarray:
    pts = check_points(points)
    r = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    if method == "direct":
        use_spec = np.zeros(r.size, dtype=bool)
    elif method == "spectral":
        use_spec = np.ones(r.size, dtype=bool)
    elif method == "auto":
        use_spec = _needs_spectral(density, r)
    else:
        raise ValidationError(f"unknown evaluation method {method!r}")
    out = np.zeros((r.size, 2)) if gradient else np.zeros(r.size)
    if np.any(~use_spec):
        out[~use_spec] = _direct(density, pts[~use_spec], gradient)
    if np.any(use_spec):
        rs = np.clip(r[use_spec], R_INNER, R_OUTER)
        ts = theta[use_spec]
        p1, r1, t1 = _spectral_circle(R_INNER, density.f1, rs, ts)
        p2, r2, t2 = _spectral_circle(R_OUTER, density.f2, rs, ts)
        if gradient:
            out[use_spec] = _polar_to_cartesian(r1 + r2, t1 + t2, ts)
        else:
            out[use_spec] = p1 + p2
    return out


def eval_grad_phi(density: BoundaryDensity, points, method: str = "auto") -> np.ndarray:
    """Gradient of the single-layer potential at points of the annulus, shape (N, 2).

    ``"direct"`` applies the trapezoid rule to
    ``(1/2pi) int (x - y)/|x - y|^2 f(y) dl(y)``; ``"spectral"`` integrates the
    trigonometric interpolant of ``f`` exactly, which stays accurate up to and
    on the boundary (one-sided limit from the fluid). ``"auto"`` uses the
    direct rule wherever it is already converged to ~1e-13.
    """
    return _evaluate(density, points, method, gradient=True)


def eval_potential(density: BoundaryDensity, points, method: str = "auto") -> np.ndarray:
    return _evaluate(density, points, method, gradient=False)


def normal_derivative_from_domain(density: BoundaryDensity) -> tuple[np.ndarray, np.ndarray]:
    """``grad phi . (x/|x|)`` at the boundary nodes, limit taken from inside the annulus."""
    out = []
    for q in (density.quad1, density.quad2):
        g = eval_grad_phi(density, q.nodes, method="spectral")
        out.append(np.einsum("pk,pk->p", g, q.normals))
    return out[0], out[1]


def neumann_residual(density: BoundaryDensity, data: NeumannData) -> float:
    """Max mismatch between the fluid-side normal derivative of ``phi`` and the data."""
    d1, d2 = normal_derivative_from_domain(density)
    return float(max(np.max(np.abs(d1 - data.values1)), np.max(np.abs(d2 - data.values2))))


class GridLayerEvaluator:
    """Fast evaluation of ``grad phi`` at every node of a polar grid.

    Requires the density nodes to share the grid's angles (``n_b == n_theta``).
    Returns polar components ``(d_r phi, (1/r) d_theta phi)``, shape (n_r, n_theta) each.
    """

    def __init__(self, grid: PolarGrid):
        self.grid = grid
        n = grid.n_theta
        m = np.arange(n // 2 + 1)
        r = grid.r[:, None]
        mm = np.maximum(m, 1)[None, :]
        self._factors = []
        for radius, outside in ((R_INNER, True), (R_OUTER, False)):
            rho = (radius / r) if outside else (r / radius)
            rho_m = rho ** m[None, :]
            sign = 1.0 if outside else -1.0
            g_r = sign * (radius / (2.0 * r)) * rho_m
            g_t = -(radius / (2.0 * r)) * rho_m * (1j * m[None, :] / mm)
            g_r[:, 0] = (radius / r[:, 0]) if outside else 0.0
            g_t[:, 0] = 0.0
            self._factors.append((g_r, g_t))

    def __call__(self, density: BoundaryDensity) -> tuple[np.ndarray, np.ndarray]:
        n = self.grid.n_theta
        if density.quad1.n_b != n or density.quad2.n_b != n:
            raise ValidationError("density nodes must match the grid angles")
        d_r = np.zeros(self.grid.shape)
        d_t = np.zeros(self.grid.shape)
        for f, (g_r, g_t) in zip((density.f1, density.f2), self._factors):
            c = np.fft.rfft(f)
            d_r += np.fft.irfft(g_r * c[None, :], n=n, axis=1)
            d_t += np.fft.irfft(g_t * c[None, :], n=n, axis=1)
        return d_r, d_t
