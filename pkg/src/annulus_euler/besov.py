"""Dyadic-shell Besov norm and Sobolev norm of grid functions on the 2-torus.

Fourier coefficients use ``fft2 / n**2`` so that ``exp(i xi . x)`` has
coefficient exactly 1. Shell ``k`` collects ``2^k <= |xi| < 2^(k+1)``; only
shells lying entirely inside the resolved band ``|xi|_inf < n/2`` are used by
the Besov norm, the rest are reported as unresolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_finite_array
from .exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class TorusField:
    """Samples on the uniform ``n x n`` grid of ``[0, 2 pi)^2`` (``values[j1, j2]`` at ``(x1, x2)``)."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValidationError(f"n must be a power of two >= 8, got {self.n!r}")
        v = np.asarray(self.values)
        if not np.iscomplexobj(v):
            v = v.astype(np.float64)
        if v.shape != (n, n):
            v = v.reshape(n, n) if v.size == n * n else None
            if v is None:
                raise ValidationError(f"values must have {n * n} entries")
        if not np.all(np.isfinite(v)):
            raise ValidationError("values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, n: int, func) -> "TorusField":
        x = 2.0 * np.pi * np.arange(n) / n
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        return cls(n, func(X1, X2))

    @classmethod
    def from_modes(cls, n: int, modes: dict) -> "TorusField":
        """Sum of ``c * exp(i xi . x)`` over ``{xi: c}`` (complex values)."""
        x = 2.0 * np.pi * np.arange(n) / n
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        v = np.zeros((n, n), dtype=complex)
        for (a, b), c in modes.items():
            v += c * np.exp(1j * (a * X1 + b * X2))
        return cls(n, v)

    def __mul__(self, alpha):
        return TorusField(self.n, self.values * alpha)

    __rmul__ = __mul__


def fourier_coefficients(w: TorusField) -> np.ndarray:
    return np.fft.fft2(w.values) / (w.n * w.n)


@lru_cache(maxsize=16)
def _geometry(n: int):
    k = np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(np.int64)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    m2 = K1 * K1 + K2 * K2
    mag = np.sqrt(m2.astype(np.float64))
    n_shells = int(math.log2(n // 2))
    # exact integer test 4^k <= |xi|^2 < 4^(k+1)
    shell = np.full((n, n), -1, dtype=np.int64)
    k = 0
    while 4**k <= m2.max():
        shell[(m2 >= 4**k) & (m2 < 4 ** (k + 1))] = k
        k += 1
    for arr in (mag, shell):
        arr.setflags(write=False)
    return mag, shell, n_shells


def shell_index(n: int) -> np.ndarray:
    """Shell number of every DFT mode (``-1`` for the mean)."""
    return _geometry(n)[1]


def shell_energies(w: TorusField) -> np.ndarray:
    """``sum_{shell k} |w~(xi)|^2`` for the resolved shells ``k = 0 .. log2(n/2) - 1``."""
    _, shell, n_shells = _geometry(w.n)
    e = np.abs(fourier_coefficients(w)) ** 2
    return np.bincount(shell[shell >= 0].ravel(), weights=e[shell >= 0].ravel(), minlength=n_shells + 2)[:n_shells]


def unresolved_energy(w: TorusField) -> float:
    """Energy in modes beyond the last complete shell."""
    _, shell, n_shells = _geometry(w.n)
    e = np.abs(fourier_coefficients(w)) ** 2
    return float(e[shell >= n_shells].sum())


def besov_norm(w: TorusField, s: float) -> float:
    """``sup_k (2^{2ks} * shell energy_k)^{1/2}`` over the resolved shells."""
    e = shell_energies(w)
    k = np.arange(e.size)
    return float(np.sqrt(np.max(2.0 ** (2 * k * s) * e)))


def sobolev_norm(w: TorusField, s: float) -> float:
    """``(sum_xi (1 + |xi|^2)^s |w~(xi)|^2)^{1/2}`` over every DFT mode, the mean included."""
    mag, _, _ = _geometry(w.n)
    e = np.abs(fourier_coefficients(w)) ** 2
    return float(np.sqrt(np.sum((1.0 + mag * mag) ** s * e)))


def grid_l2_norm(w: TorusField) -> float:
    """``(n^-2 sum |w_j|^2)^{1/2}``, the normalization matching :func:`sobolev_norm` at ``s = 0``."""
    return float(np.sqrt(np.mean(np.abs(w.values) ** 2)))


def embedding_constant(n: int, s: float, eps: float) -> float:
    """``C`` with ``||P w||_{H^{s-eps}} <= C ||w||_{B_s}`` for ``P`` the projection onto resolved shells."""
    mag, shell, n_shells = _geometry(n)
    total = 0.0
    for k in range(n_shells):
        m = mag[shell == k]
        total += float(np.max((1.0 + m * m) ** (s - eps))) * 2.0 ** (-2 * k * s)
    return math.sqrt(total)


def lower_constant(n: int, s: float) -> float:
    """``C`` with ``||w||_{B_s} <= C ||w||_{H^s}``; equals 1 for ``s >= 0``."""
    mag, shell, n_shells = _geometry(n)
    worst = 0.0
    for k in range(n_shells):
        m = mag[shell == k]
        worst = max(worst, float(np.max(2.0 ** (2 * k * s) / (1.0 + m * m) ** s)))
    return math.sqrt(worst)


def project_resolved(w: TorusField) -> TorusField:
    """Keep only modes in resolved shells (drops the mean and the unresolved band)."""
    _, shell, n_shells = _geometry(w.n)
    c = fourier_coefficients(w)
    c = np.where((shell >= 0) & (shell < n_shells), c, 0.0)
    v = np.fft.ifft2(c) * (w.n * w.n)
    return TorusField(w.n, v if np.iscomplexobj(w.values) else v.real)


@dataclass
class EmbeddingReport:
    s: float
    eps: float
    besov: float
    sobolev_s: float
    sobolev_s_minus_eps: float
    sobolev_s_minus_eps_resolved: float
    lower_constant: float
    upper_constant: float
    lower_holds: bool
    upper_holds: bool
    per_shell: list = field(default_factory=list)
    unresolved_energy: float = 0.0
    mean_energy: float = 0.0

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def embedding_check(w: TorusField, s: float, eps: float, rtol: float = 1e-12) -> EmbeddingReport:
    """Check ``||w||_{B_s} <= C_lo ||w||_{H^s}`` and ``||P w||_{H^{s-eps}} <= C_up ||w||_{B_s}``."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    b = besov_norm(w, s)
    hs = sobolev_norm(w, s)
    hse = sobolev_norm(w, s - eps)
    hse_res = sobolev_norm(project_resolved(w), s - eps)
    c_lo = lower_constant(w.n, s)
    c_up = embedding_constant(w.n, s, eps)
    e = shell_energies(w)
    per_shell = [
        {"k": int(k), "energy": float(e[k]), "weighted": float(2.0 ** (2 * k * s) * e[k])} for k in range(e.size)
    ]
    c0 = fourier_coefficients(w)[0, 0]
    return EmbeddingReport(
        s=float(s),
        eps=float(eps),
        besov=b,
        sobolev_s=hs,
        sobolev_s_minus_eps=hse,
        sobolev_s_minus_eps_resolved=hse_res,
        lower_constant=c_lo,
        upper_constant=c_up,
        lower_holds=b <= c_lo * hs * (1 + rtol) + 1e-300,
        upper_holds=hse_res <= c_up * b * (1 + rtol) + 1e-300,
        per_shell=per_shell,
        unresolved_energy=unresolved_energy(w),
        mean_energy=float(abs(c0) ** 2),
    )


def random_trig_polynomial(n: int, seed: int, max_freq: int | None = None) -> TorusField:
    """Seeded real trigonometric polynomial with frequencies ``|xi|_inf <= max_freq`` (default ``n/4``)."""
    rng = np.random.default_rng(seed)
    m = n // 4 if max_freq is None else int(max_freq)
    if not 0 < m < n // 2:
        raise ValidationError("max_freq must lie in 1 .. n/2 - 1")
    c = np.zeros((n, n), dtype=complex)
    idx = np.r_[0 : m + 1, n - m : n]
    sub = rng.normal(size=(idx.size, idx.size)) + 1j * rng.normal(size=(idx.size, idx.size))
    c[np.ix_(idx, idx)] = sub
    v = np.fft.ifft2(c).real * n * n
    return TorusField(n, v)


class BesovShellTransformer(TransformerMixin, BaseEstimator):
    """Map flattened ``n x n`` torus samples to their per-shell weighted energies ``2^{2ks} E_k``.

    ``fit`` only checks the sample size; ``transform`` returns shape
    ``(n_samples, log2(n/2))``.
    """

    def __init__(self, s: float = 0.0):
        self.s = s

    def fit(self, X, y=None):
        X = check_finite_array(np.asarray(X, dtype=float), "X", ndim=2)
        n = int(round(math.sqrt(X.shape[1])))
        if n * n != X.shape[1]:
            raise ValidationError("each sample must hold n*n values")
        TorusField(n, X[0])
        self.n_ = n
        self.n_features_in_ = X.shape[1]
        self.n_shells_ = int(math.log2(n // 2))
        return self

    def transform(self, X):
        if not hasattr(self, "n_"):
            raise ValidationError("BesovShellTransformer is not fitted")
        X = check_finite_array(np.asarray(X, dtype=float), "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        k = np.arange(self.n_shells_)
        return np.stack([2.0 ** (2 * k * self.s) * shell_energies(TorusField(self.n_, row)) for row in X])
