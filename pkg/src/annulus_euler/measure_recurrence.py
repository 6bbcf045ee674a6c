"""Recurrence on finite measure-preserving systems.

On a finite set with the uniform measure, the measure-preserving self-maps are
exactly the permutations, so every point of every set returns. Measures are
kept as exact fractions ``count / n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    """A permutation ``f`` of ``{0, ..., n-1}`` with uniform weights ``1/n``."""

    perm: tuple

    def __post_init__(self):
        p = tuple(int(v) for v in self.perm)
        n = len(p)
        if n == 0:
            raise ValidationError("a finite system needs at least one state")
        if sorted(p) != list(range(n)):
            raise ValidationError("map is not a bijection of {0..n-1}; it does not preserve counting measure")
        object.__setattr__(self, "perm", p)

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def random(cls, n: int, seed: int) -> "FiniteSystem":
        return cls(tuple(np.random.default_rng(seed).permutation(n).tolist()))

    @classmethod
    def shift(cls, n: int) -> "FiniteSystem":
        return cls(tuple((i + 1) % n for i in range(n)))

    @classmethod
    def identity(cls, n: int) -> "FiniteSystem":
        return cls(tuple(range(n)))

    def __call__(self, x: int) -> int:
        return self.perm[x]

    def measure(self, subset) -> Fraction:
        return Fraction(len(set(subset)), self.n)

    def preimage(self, subset) -> frozenset:
        s = set(subset)
        return frozenset(i for i, v in enumerate(self.perm) if v in s)

    def cycles(self) -> list[list[int]]:
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cyc = []
            x = start
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = self.perm[x]
            out.append(cyc)
        return out


def _check_subset(sys: FiniteSystem, E) -> frozenset:
    s = frozenset(int(e) for e in E)
    if not s:
        raise ValidationError("E must be nonempty")
    if min(s) < 0 or max(s) >= sys.n:
        raise ValidationError(f"E must lie in 0..{sys.n - 1}")
    return s


def recurrence_statistics(sys: FiniteSystem, E) -> dict[int, int]:
    """First return time to ``E`` for each ``x`` in ``E``, computed cycle by cycle."""
    E = _check_subset(sys, E)
    out = {}
    for cyc in sys.cycles():
        pos = [k for k, x in enumerate(cyc) if x in E]
        if not pos:
            continue
        L = len(cyc)
        for a, b in zip(pos, pos[1:] + [pos[0] + L]):
            out[cyc[a]] = b - a
    return dict(sorted(out.items()))


def brute_force_return_times(sys: FiniteSystem, E) -> dict[int, int]:
    """Reference: iterate ``f`` from each point until it lands in ``E`` again (at most ``n`` steps)."""
    E = _check_subset(sys, E)
    out = {}
    for x in sorted(E):
        y = x
        for k in range(1, sys.n + 1):
            y = sys.perm[y]
            if y in E:
                out[x] = k
                break
    return out


@dataclass
class AnSetReport:
    n_max: int
    measures: list[Fraction]
    e_subset_a0: bool
    nested: bool
    measures_equal: bool
    exceptional: frozenset
    sets: list[frozenset] = field(repr=False, default_factory=list)

    @property
    def ok(self) -> bool:
        return self.e_subset_a0 and self.nested and self.measures_equal and not self.exceptional


def an_set_check(sys: FiniteSystem, E, n_max: int) -> AnSetReport:
    """Build ``A_i = union_{k >= i} f^{-k}(E)`` for ``i = 0..n_max`` and check the recurrence argument.

    A point on a cycle of length ``L`` lies in ``f^{-k}(E)`` for a set of ``k``
    that is periodic mod ``L``, so ``P`` consecutive ``k`` with ``P`` the
    longest cycle length already give the whole union.
    """
    E = _check_subset(sys, E)
    if int(n_max) < 1:
        raise ValidationError("n_max must be >= 1")
    n_max = int(n_max)
    period = max(len(c) for c in sys.cycles())
    pre = [E]
    for _ in range(n_max + period):
        pre.append(sys.preimage(pre[-1]))
    sets = [frozenset().union(*pre[i : i + period]) for i in range(n_max + 1)]
    measures = [sys.measure(a) for a in sets]
    nested = all(sets[j] <= sets[i] for i in range(len(sets)) for j in range(i, len(sets)))
    inter = frozenset.intersection(*sets)
    return AnSetReport(
        n_max=n_max,
        measures=measures,
        e_subset_a0=E <= sets[0],
        nested=nested,
        measures_equal=len(set(measures)) == 1,
        exceptional=E - inter,
        sets=sets,
    )


def parse_subset(text: str) -> list[int]:
    """Parse ``"0..99"``, ``"1,5,7"`` or a mix such as ``"0..3,10"`` (ranges inclusive)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValidationError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValidationError("empty set specification")
    return sorted(set(out))
