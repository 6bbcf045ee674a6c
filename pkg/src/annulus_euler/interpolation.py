"""Bicubic (4x4 Lagrange) interpolation on a polar grid.

Periodic in theta, clamped in r: near r = 1 and r = 2 the radial stencil is
shifted inward so it never leaves the grid.
"""

from __future__ import annotations

import numpy as np

from .geometry import PolarGrid


def _cubic_weights(a: np.ndarray) -> np.ndarray:
    """Lagrange weights for nodes at offsets -1, 0, 1, 2 evaluated at ``a``; shape (4, N)."""
    am1 = a + 1.0
    a1 = a - 1.0
    a2 = a - 2.0
    return np.stack(
        [
            -a * a1 * a2 / 6.0,
            am1 * a1 * a2 / 2.0,
            -am1 * a * a2 / 2.0,
            am1 * a * a1 / 6.0,
        ]
    )


class PolarStencil:
    """Precomputed 4x4 stencils for a batch of query points.

    Build once per set of query points, then apply to any number of fields
    defined on the same grid.
    """

    def __init__(self, grid: PolarGrid, r, theta):
        r = np.asarray(r, dtype=np.float64).ravel()
        theta = np.asarray(theta, dtype=np.float64).ravel()
        s = (r - grid.r[0]) / grid.dr
        i0 = np.clip(np.floor(s).astype(np.int64), 1, grid.n_r - 3)
        ar = s - i0
        t = np.mod(theta, 2.0 * np.pi) / grid.dtheta
        j0 = np.floor(t).astype(np.int64)
        at = t - j0
        self.grid = grid
        self._ic = np.clip(np.floor(s).astype(np.int64), 0, grid.n_r - 2)
        self._jc = np.mod(j0, grid.n_theta)
        ri = i0[None, :] + np.arange(-1, 3)[:, None]
        tj = np.mod(j0[None, :] + np.arange(-1, 3)[:, None], grid.n_theta)
        wr = _cubic_weights(ar)
        wt = _cubic_weights(at)
        # flattened 16-point stencil: index and combined weight per (a, b) pair
        self._idx = (ri[:, None, :] * grid.n_theta + tj[None, :, :]).reshape(16, -1)
        self._w = (wr[:, None, :] * wt[None, :, :]).reshape(16, -1)
        self.n = r.size

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Interpolate one field, shape (n_r, n_theta) -> (N,)."""
        v = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        return np.einsum("kn,kn->n", self._w, v[self._idx])

    def many(self, stack: np.ndarray) -> np.ndarray:
        """Interpolate a stack of fields, shape (k, n_r, n_theta) -> (k, N)."""
        st = np.asarray(stack)
        return np.stack([self(f) for f in st])

    def bounds(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Min and max over the two nearest radial and angular nodes (the enclosing cell)."""
        v = np.asarray(values).reshape(self.grid.shape)
        n_t = self.grid.n_theta
        corners = np.stack(
            [v[self._ic + a, (self._jc + b) % n_t] for a in (0, 1) for b in (0, 1)]
        )
        return corners.min(axis=0), corners.max(axis=0)


def interpolate(grid: PolarGrid, values: np.ndarray, r, theta) -> np.ndarray:
    return PolarStencil(grid, r, theta)(values)
