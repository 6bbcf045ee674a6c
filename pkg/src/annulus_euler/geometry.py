"""Annulus geometry, polar tensor grids, discrete norms and boundary quadrature.

The fluid domain is the fixed annulus ``1 <= |x| <= 2``. Grid functions are
stored as ``(n_r, n_theta)`` arrays indexed ``[i_r, j_theta]``; the flattened
row-major order of that array is the node order used everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from ._validation import R_INNER, R_OUTER, check_count, check_finite_array
from .exceptions import GridMismatch, ValidationError

Circle = Literal[1, 2]


@dataclass(frozen=True)
class Annulus:
    r_inner: float = R_INNER
    r_outer: float = R_OUTER

    def __post_init__(self):
        if self.r_inner != R_INNER or self.r_outer != R_OUTER:
            raise ValidationError("the annulus is fixed to 1 <= |x| <= 2")

    @property
    def area(self) -> float:
        return np.pi * (self.r_outer**2 - self.r_inner**2)

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rad = np.hypot(pts[:, 0], pts[:, 1])
        return (rad >= self.r_inner - tol) & (rad <= self.r_outer + tol)


ANNULUS = Annulus()


@dataclass(frozen=True)
class PolarGrid:
    """Uniform tensor grid in (r, theta) over the annulus.

    Radial nodes are uniform on [1, 2] and include both boundaries; angular
    nodes are ``theta_j = 2 pi j / n_theta``.
    """

    n_r: int
    n_theta: int

    @cached_property
    def r(self) -> np.ndarray:
        return np.linspace(R_INNER, R_OUTER, self.n_r)

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def dr(self) -> float:
        return (R_OUTER - R_INNER) / (self.n_r - 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @cached_property
    def R(self) -> np.ndarray:
        return np.repeat(self.r[:, None], self.n_theta, axis=1)

    @cached_property
    def TH(self) -> np.ndarray:
        return np.repeat(self.theta[None, :], self.n_r, axis=0)

    @cached_property
    def X(self) -> np.ndarray:
        return self.R * np.cos(self.TH)

    @cached_property
    def Y(self) -> np.ndarray:
        return self.R * np.sin(self.TH)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Cartesian node coordinates, shape (n_r * n_theta, 2), row-major in (i_r, j_theta)."""
        return np.column_stack([self.X.ravel(), self.Y.ravel()])

    @cached_property
    def polar_nodes(self) -> np.ndarray:
        return np.column_stack([self.R.ravel(), self.TH.ravel()])

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """Trapezoid weights for integrals over [1, 2] in r (exact for linear integrands)."""
        w = np.full(self.n_r, self.dr)
        w[0] = w[-1] = 0.5 * self.dr
        return w

    @cached_property
    def area_weights(self) -> np.ndarray:
        """Area quadrature weights ``w_i r_i dtheta`` per node, shape (n_r, n_theta)."""
        w = self.radial_weights * self.r * self.dtheta
        return np.repeat(w[:, None], self.n_theta, axis=1)

    @property
    def min_cell_size(self) -> float:
        return min(self.dr, R_INNER * self.dtheta)

    def cell_diameter(self) -> np.ndarray:
        """Per-ring cell diameter ``sqrt(dr^2 + (r dtheta)^2)``."""
        return np.hypot(self.dr, self.r * self.dtheta)

    def integrate(self, values) -> float:
        return float(np.sum(self.area_weights * values))


def make_grid(n_r: int, n_theta: int) -> PolarGrid:
    """Build a polar grid over the annulus.

    Rejects ``n_r < 8``, ``n_theta < 16`` and odd ``n_theta``.
    """
    n_r = check_count(n_r, "n_r", 8)
    n_theta = check_count(n_theta, "n_theta", 16)
    if n_theta % 2:
        raise ValidationError(f"n_theta must be even, got {n_theta}")
    return PolarGrid(n_r, n_theta)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size != self.grid.size:
            raise ValidationError(
                f"field has {vals.size} values but the grid has {self.grid.size} nodes"
            )
        vals = check_finite_array(vals.reshape(self.grid.shape), "field values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: PolarGrid, func: Callable) -> "ScalarField":
        """Sample ``func(r, theta)`` on the grid nodes."""
        return cls(grid, np.broadcast_to(func(grid.R, grid.TH), grid.shape))

    @classmethod
    def zeros(cls, grid: PolarGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def _check_same_grid(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise GridMismatch(
                f"grid {self.grid.shape} does not match grid {other.grid.shape}"
            )

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check_same_grid(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check_same_grid(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, alpha):
        return ScalarField(self.grid, self.values * alpha)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


def c0_norm(f: ScalarField) -> float:
    """Discrete sup norm over grid nodes."""
    return float(np.max(np.abs(f.values)))


def polar_gradient(grid: PolarGrid, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(d_r f, (1/r) d_theta f)`` by second-order differences.

    Centered in the interior, second-order one-sided at r = 1 and r = 2,
    periodic in theta.
    """
    v = np.asarray(values, dtype=np.float64).reshape(grid.shape)
    h = grid.dr
    fr = np.empty_like(v)
    fr[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    fr[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    fr[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    ft = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * grid.dtheta)
    return fr, ft / grid.r[:, None]


def c1_norm(f: ScalarField) -> float:
    """``max(sup|f|, sup|grad f|)`` on the grid (the fixed C^1 convention)."""
    fr, ft = polar_gradient(f.grid, f.values)
    grad_sup = float(np.max(np.hypot(fr, ft)))
    return max(c0_norm(f), grad_sup)


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    circle: int
    n_b: int

    @property
    def radius(self) -> float:
        return R_INNER if self.circle == 1 else R_OUTER

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_b) / self.n_b

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.radius * np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    @cached_property
    def normals(self) -> np.ndarray:
        """``n = x / |x|`` on both circles."""
        return np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.n_b, 2.0 * np.pi * self.radius / self.n_b)

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * np.asarray(values)))


def boundary_quadrature(circle: Circle, n_b: int) -> BoundaryQuadrature:
    """Equal-weight trapezoid rule on Gamma_1 (r = 1) or Gamma_2 (r = 2)."""
    if circle not in (1, 2):
        raise ValidationError(f"circle must be 1 or 2, got {circle!r}")
    n_b = check_count(n_b, "n_b", 16)
    return BoundaryQuadrature(int(circle), n_b)


def wrap_angle(theta):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta), 2.0 * np.pi)
