"""Passive markers, material lines and closed material patches.

Velocity suppliers are callables ``u(t, points) -> (N, 2)`` in Cartesian
components. Markers are advanced with classical RK4. Markers that start on a
boundary circle are projected back onto it after every step; any other marker
that leaves the annulus by more than a small tolerance raises
:class:`MarkerEscape`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from ._validation import R_INNER, R_OUTER, check_finite_array, check_points, check_positive
from .biot_savart import GridVelocity, rotation_field
from .exceptions import MarkerEscape, RefinementExplosion, ValidationError
from .geometry import PolarGrid, wrap_angle
from .interpolation import PolarStencil

TWO_PI = 2.0 * np.pi
ESCAPE_TOL = 1e-6
BOUNDARY_TOL = 1e-9


class VelocitySupplier(Protocol):
    def __call__(self, t: float, points: np.ndarray) -> np.ndarray: ...


class RotationVelocity:
    """``(sigma1 / 2pi) |x|^-2 (-x2, x1)``, time independent."""

    def __init__(self, sigma1: float):
        self.sigma1 = float(sigma1)

    def __call__(self, t, points):
        return (self.sigma1 / TWO_PI) * rotation_field(points)


class GridVelocitySeries:
    """Velocity from reconstructed grid snapshots, linear in time between them.

    The background rotation is evaluated in closed form; only the remaining
    part ``v`` is interpolated (bicubic) from the grid.
    """

    def __init__(self, grid: PolarGrid, sigma1: float, keep: int = 2):
        self.grid = grid
        self.sigma1 = float(sigma1)
        self.keep = max(2, int(keep))
        self._times: list[float] = []
        self._fields: list[np.ndarray] = []

    def append(self, t: float, velocity: GridVelocity):
        if self._times and t <= self._times[-1]:
            raise ValidationError("snapshot times must increase")
        self._times.append(float(t))
        self._fields.append(np.stack([velocity.v_r, velocity.v_t]))
        if len(self._times) > self.keep:
            del self._times[0], self._fields[0]

    def _v_polar(self, t, r, theta):
        times = self._times
        if not times:
            raise ValidationError("no velocity snapshots")
        st = PolarStencil(self.grid, r, theta)
        if len(times) == 1 or t <= times[0]:
            return st.many(self._fields[0])
        if t >= times[-1]:
            return st.many(self._fields[-1])
        k = int(np.searchsorted(times, t)) - 1
        a = (t - times[k]) / (times[k + 1] - times[k])
        return (1.0 - a) * st.many(self._fields[k]) + a * st.many(self._fields[k + 1])

    def __call__(self, t, points):
        pts = np.asarray(points, dtype=float)
        r = np.clip(np.hypot(pts[:, 0], pts[:, 1]), R_INNER, R_OUTER)
        th = np.arctan2(pts[:, 1], pts[:, 0])
        vr, vt = self._v_polar(t, r, th)
        c, s = np.cos(th), np.sin(th)
        v = np.column_stack([vr * c - vt * s, vr * s + vt * c])
        return v + (self.sigma1 / TWO_PI) * rotation_field(pts)


def _rk4(points, u: Callable, t, dt):
    k1 = u(t, points)
    k2 = u(t + 0.5 * dt, points + 0.5 * dt * k1)
    k3 = u(t + 0.5 * dt, points + 0.5 * dt * k2)
    k4 = u(t + dt, points + dt * k3)
    return points + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _boundary_flags(points):
    rad = np.hypot(points[:, 0], points[:, 1])
    on1 = np.abs(rad - R_INNER) <= BOUNDARY_TOL
    on2 = np.abs(rad - R_OUTER) <= BOUNDARY_TOL
    return on1, on2


def _constrain(points, on1, on2):
    rad = np.hypot(points[:, 0], points[:, 1])
    free = ~(on1 | on2)
    bad = free & ((rad < R_INNER - ESCAPE_TOL) | (rad > R_OUTER + ESCAPE_TOL))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise MarkerEscape(i, float(rad[i]))
    target = np.where(on1, R_INNER, np.where(on2, R_OUTER, np.clip(rad, R_INNER, R_OUTER)))
    return points * (target / rad)[:, None]


def advect_points(points, u: Callable, t0: float, t1: float, dt: float) -> np.ndarray:
    """Carry markers from ``t0`` to ``t1`` with RK4 steps of at most ``dt``."""
    pts = check_points(points).copy()
    check_positive(dt, "dt")
    on1, on2 = _boundary_flags(pts)
    n = max(1, int(np.ceil(abs(t1 - t0) / dt - 1e-12)))
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        pts = _constrain(_rk4(pts, u, t, h), on1, on2)
        t += h
    return pts


@dataclass
class MaterialLine:
    """An ordered chain of markers with a continuously tracked polar angle.

    ``unwrapped_theta`` is the angle of each marker, updated by nearest-branch
    continuation so winding around the annulus is counted.
    """

    points: np.ndarray
    unwrapped_theta: np.ndarray = field(default=None)
    gap_threshold: float = 0.02
    max_markers: int = 10**6

    def __post_init__(self):
        self.points = check_finite_array(self.points, "points", ndim=2)
        if self.points.shape[0] < 2 or self.points.shape[1] != 2:
            raise ValidationError("a material line needs at least two (x, y) markers")
        if self.unwrapped_theta is None:
            self.unwrapped_theta = np.unwrap(np.arctan2(self.points[:, 1], self.points[:, 0]))
        self._on1, self._on2 = _boundary_flags(self.points)

    @classmethod
    def segment(cls, gap_threshold: float = 0.02, max_markers: int = 10**6) -> "MaterialLine":
        """The radial segment ``{x2 = 0, 1 <= x1 <= 2}`` with gaps below the threshold."""
        check_positive(gap_threshold, "gap_threshold")
        n = int(np.ceil((R_OUTER - R_INNER) / gap_threshold)) + 1
        x = np.linspace(R_INNER, R_OUTER, n)
        return cls(np.column_stack([x, np.zeros(n)]), np.zeros(n), gap_threshold, max_markers)

    def __len__(self):
        return self.points.shape[0]

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])

    def step(self, u: Callable, t: float, dt: float):
        new = _constrain(_rk4(self.points, u, t, dt), self._on1, self._on2)
        ang = np.arctan2(new[:, 1], new[:, 0])
        self.unwrapped_theta = self.unwrapped_theta + wrap_angle(ang - self.unwrapped_theta)
        self.points = new

    def refine(self) -> int:
        """Insert cubic midpoints (in r, unwrapped theta) until every gap is below threshold."""
        added = 0
        while True:
            gaps = np.hypot(*np.diff(self.points, axis=0).T)
            long = np.flatnonzero(gaps > self.gap_threshold * (1.0 + 1e-9))
            if long.size == 0:
                return added
            if len(self) + long.size > self.max_markers:
                raise RefinementExplosion(
                    f"refinement would exceed {self.max_markers} markers ({len(self)} + {long.size})"
                )
            r, th = self.radii, self.unwrapped_theta
            mr = _midpoints(r, long, closed=False)
            mt = _midpoints(th, long, closed=False)
            mr = np.clip(mr, R_INNER, R_OUTER)
            mid = np.column_stack([mr * np.cos(mt), mr * np.sin(mt)])
            pos = long + 1
            self.points = np.insert(self.points, pos, mid, axis=0)
            self.unwrapped_theta = np.insert(self.unwrapped_theta, pos, mt)
            self._on1 = np.insert(self._on1, pos, False)
            self._on2 = np.insert(self._on2, pos, False)
            added += long.size

    def intersects_left_half(self) -> bool:
        """Whether some marker lies in ``{x1 < 0}``."""
        return bool(np.any(self.points[:, 0] < 0.0))

    def to_table(self) -> np.ndarray:
        """Rows ``(marker_index, x, y, theta_unwrapped)``."""
        idx = np.arange(len(self), dtype=float)
        return np.column_stack([idx, self.points, self.unwrapped_theta])


def _midpoints(values, seg, closed: bool):
    """Four-point cubic midpoint of segments ``seg`` -> ``seg + 1``; linear where a neighbour is missing."""
    n = values.size
    if closed:
        p0 = values[(seg - 1) % n]
        p1 = values[seg % n]
        p2 = values[(seg + 1) % n]
        p3 = values[(seg + 2) % n]
        return (-p0 + 9 * p1 + 9 * p2 - p3) / 16.0
    p1 = values[seg]
    p2 = values[seg + 1]
    out = 0.5 * (p1 + p2)
    inner = (seg >= 1) & (seg + 2 <= n - 1)
    s = seg[inner]
    out[inner] = (-values[s - 1] + 9 * values[s] + 9 * values[s + 1] - values[s + 2]) / 16.0
    return out


def advect_line(line: MaterialLine, u: Callable, t0: float, t1: float, dt: float, *, refine: bool = True):
    """Advance ``line`` in place from ``t0`` to ``t1`` and refine at the end."""
    check_positive(dt, "dt")
    n = max(1, int(np.ceil(abs(t1 - t0) / dt - 1e-12)))
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        line.step(u, t, h)
        t += h
    if refine:
        line.refine()
    return line


def winding_separation(line: MaterialLine) -> float:
    """Unwrapped angle at the inner end minus the angle at the outer end."""
    return float(line.unwrapped_theta[0] - line.unwrapped_theta[-1])


@dataclass
class Patch:
    """A closed material curve (polygon, no repeated endpoint)."""

    points: np.ndarray
    gap_threshold: float = 0.005
    max_markers: int = 10**6

    def __post_init__(self):
        self.points = check_finite_array(self.points, "points", ndim=2)
        if self.points.shape[0] < 3:
            raise ValidationError("a patch needs at least three vertices")
        self._on1, self._on2 = _boundary_flags(self.points)

    @classmethod
    def polar_box(cls, r0, r1, th0, th1, per_side: int = 128, gap_threshold: float = 0.005) -> "Patch":
        """Boundary of ``{r0 <= r <= r1, th0 <= theta <= th1}`` sampled counter-clockwise."""
        if not (R_INNER <= r0 < r1 <= R_OUTER) or not th0 < th1:
            raise ValidationError("invalid polar box")
        s = np.linspace(0.0, 1.0, per_side, endpoint=False)
        r = np.concatenate([r0 + (r1 - r0) * s, np.full(per_side, r1), r1 - (r1 - r0) * s, np.full(per_side, r0)])
        th = np.concatenate([np.full(per_side, th0), th0 + (th1 - th0) * s, np.full(per_side, th1), th1 - (th1 - th0) * s])
        return cls(np.column_stack([r * np.cos(th), r * np.sin(th)]), gap_threshold)

    @classmethod
    def from_corners(cls, corners, per_side: int = 128, gap_threshold: float = 0.005) -> "Patch":
        """Polygon through ``corners`` with each edge split into ``per_side`` pieces."""
        c = check_points(corners)
        s = np.linspace(0.0, 1.0, per_side, endpoint=False)[:, None]
        edges = [c[k] + s * (c[(k + 1) % len(c)] - c[k]) for k in range(len(c))]
        return cls(np.concatenate(edges), gap_threshold)

    def step(self, u: Callable, t: float, dt: float):
        self.points = _constrain(_rk4(self.points, u, t, dt), self._on1, self._on2)

    def refine(self) -> int:
        added = 0
        while True:
            d = np.diff(self.points, axis=0, append=self.points[:1])
            long = np.flatnonzero(np.hypot(d[:, 0], d[:, 1]) > self.gap_threshold * (1.0 + 1e-9))
            if long.size == 0:
                return added
            if len(self.points) + long.size > self.max_markers:
                raise RefinementExplosion(f"patch refinement would exceed {self.max_markers} vertices")
            mx = _midpoints(self.points[:, 0], long, closed=True)
            my = _midpoints(self.points[:, 1], long, closed=True)
            self.points = np.insert(self.points, long + 1, np.column_stack([mx, my]), axis=0)
            self._on1 = np.insert(self._on1, long + 1, False)
            self._on2 = np.insert(self._on2, long + 1, False)
            added += long.size

    @property
    def area(self) -> float:
        return patch_area(self.points)


def patch_area(patch) -> float:
    """Shoelace signed area of a closed polygon (positive for counter-clockwise order)."""
    p = np.asarray(patch.points if isinstance(patch, Patch) else patch, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
