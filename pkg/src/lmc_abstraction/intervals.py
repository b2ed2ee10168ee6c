"""Intervals of stochastic vectors: tightening, cardinality, membership and vertices.

An :class:`IntervalRow` ``[u, v]`` stands for the polytope
``{x : sum(x) = 1, u <= x <= v}``, i.e. a box intersected with the simplex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInterval, MalformedModel

TOL = 1e-12
SUM_TOL = 1e-9


def _vec(values) -> np.ndarray:
    a = np.array(values, dtype=float).reshape(-1)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class IntervalRow:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if lo.shape != hi.shape:
            raise DimensionMismatch(f"bounds of length {lo.size} and {hi.size}")
        if np.any(lo < -TOL) or np.any(hi > 1 + TOL):
            raise MalformedModel("interval bounds must lie in [0, 1]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_pairs(cls, pairs: Sequence) -> "IntervalRow":
        """Build from ``[[lo, hi], ...]``; a bare number is a degenerate interval."""
        lo, hi = [], []
        for p in pairs:
            if isinstance(p, (int, float)):
                lo.append(p)
                hi.append(p)
            else:
                a, b = p
                lo.append(a)
                hi.append(b)
        return cls(lo, hi)

    @property
    def m(self) -> int:
        return self.lower.size

    @property
    def is_empty(self) -> bool:
        return bool(
            np.any(self.lower > self.upper + TOL)
            or math.fsum(self.lower) > 1 + TOL
            or math.fsum(self.upper) < 1 - TOL
        )

    def pairs(self) -> list:
        return [[float(a), float(b)] for a, b in zip(self.lower, self.upper)]

    def __eq__(self, other):
        if not isinstance(other, IntervalRow):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    __hash__ = None

    def __repr__(self):
        body = ", ".join(
            f"{a:g}" if a == b else f"[{a:g},{b:g}]" for a, b in self.pairs()
        )
        return f"IntervalRow({body})"


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True, eq=False)
class Singleton:
    member: np.ndarray


@dataclass(frozen=True)
class Infinite:
    pass


CardinalityClass = Empty | Singleton | Infinite


@dataclass(frozen=True)
class IntervalMatrix:
    """Square matrix of interval rows, every row non-empty."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        for i, r in enumerate(rows):
            if r.m != len(rows):
                raise DimensionMismatch(f"row {i} has width {r.m}, expected {len(rows)}")
            if r.is_empty:
                raise EmptyInterval(f"row {i} is empty")
        object.__setattr__(self, "rows", rows)

    @property
    def lower(self) -> np.ndarray:
        return np.vstack([r.lower for r in self.rows])

    @property
    def upper(self) -> np.ndarray:
        return np.vstack([r.upper for r in self.rows])


def tighten(row: IntervalRow) -> IntervalRow:
    """Shrink every endpoint to the value actually attained by some member vector."""
    if row.is_empty:
        raise EmptyInterval(repr(row))
    u, v = row.lower, row.upper
    m = row.m
    lo = np.empty(m)
    hi = np.empty(m)
    for i in range(m):
        rest_v = math.fsum(v[j] for j in range(m) if j != i)
        rest_u = math.fsum(u[j] for j in range(m) if j != i)
        lo[i] = u[i] if u[i] + rest_v >= 1 - TOL else 1 - rest_v
        hi[i] = v[i] if v[i] + rest_u <= 1 + TOL else 1 - rest_u
    return IntervalRow(np.clip(lo, 0, 1), np.clip(hi, 0, 1))


def classify(row: IntervalRow) -> CardinalityClass:
    if row.is_empty:
        return Empty()
    t = tighten(row)
    if abs(math.fsum(t.lower) - 1) <= TOL:
        return Singleton(_vec(t.lower))
    if abs(math.fsum(t.upper) - 1) <= TOL:
        return Singleton(_vec(t.upper))
    free = np.flatnonzero(t.upper - t.lower > TOL)
    if len(free) <= 1:
        x = t.lower.copy()
        if len(free):
            i = free[0]
            x[i] = 1 - math.fsum(x[j] for j in range(t.m) if j != i)
        return Singleton(_vec(x))
    return Infinite()


def contains(row: IntervalRow, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (row.m,):
        raise DimensionMismatch(f"vector of shape {x.shape} for a row of width {row.m}")
    if abs(math.fsum(x) - 1) > SUM_TOL:
        return False
    return bool(np.all(row.lower - TOL <= x) and np.all(x <= row.upper + TOL))


def free_elements(row: IntervalRow, x) -> int:
    """Number of coordinates of ``x`` strictly inside the tightened bounds."""
    t = tighten(row)
    x = np.asarray(x, dtype=float)
    return int(np.sum((t.lower + TOL < x) & (x < t.upper - TOL)))


def _dedupe(vectors: list) -> list:
    kept: list = []
    for x in vectors:
        if not any(np.max(np.abs(x - y)) <= TOL for y in kept):
            kept.append(x)
    return kept


def vertices(row: IntervalRow) -> list[np.ndarray]:
    """All vertices of the polytope, each with at most one free coordinate.

    Works on the tightened row: every coordinate but one is pinned to an
    endpoint, the remaining one takes the leftover mass, and the candidate
    is kept when that mass fits its own bounds.
    """
    t = tighten(row)
    kind = classify(t)
    if isinstance(kind, Singleton):
        return [kind.member]
    lo, hi = t.lower, t.upper
    m = t.m
    choices = [(lo[j],) if hi[j] - lo[j] <= TOL else (lo[j], hi[j]) for j in range(m)]
    found = []
    for i in range(m):
        others = [j for j in range(m) if j != i]
        for combo in itertools.product(*(choices[j] for j in others)):
            xi = 1 - math.fsum(combo)
            if lo[i] - TOL <= xi <= hi[i] + TOL:
                x = np.empty(m)
                x[others] = combo
                x[i] = min(max(xi, lo[i]), hi[i])
                found.append(x)
    out = _dedupe(found)
    out.sort(key=tuple)
    for x in out:
        x.flags.writeable = False
    return out
