"""Input validation helpers shared by the estimators and the functional API."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError

R_INNER = 1.0
R_OUTER = 2.0


def check_finite_array(a, name: str, *, ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_points(points, *, tol: float = 1e-9, name: str = "points") -> np.ndarray:
    """Return ``points`` as a (N, 2) float array, rejecting points outside 1 <= |x| <= 2."""
    pts = check_finite_array(points, name)
    if pts.ndim == 1 and pts.shape[0] == 2:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError(f"{name} must have shape (N, 2), got {pts.shape}")
    rad = np.hypot(pts[:, 0], pts[:, 1])
    bad = np.flatnonzero((rad < R_INNER - tol) | (rad > R_OUTER + tol))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(
            f"{name}[{i}] = ({pts[i, 0]:.6g}, {pts[i, 1]:.6g}) lies outside the annulus "
            f"1 <= |x| <= 2 (|x| = {rad[i]:.6g})"
        )
    return pts


def check_count(value, name: str, minimum: int) -> int:
    if int(value) != value:
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValidationError(f"{name} = {value} is below the minimum {minimum} (under-resolved)")
    return value


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return value
