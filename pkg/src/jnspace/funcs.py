"""Piecewise-constant functions and the geometric primitives they live on.

Two function representations are used throughout the package:

* :class:`StepFunction` -- a 1-D step function on a half-open interval,
  stored as breakpoints, piece values and piece widths.  The widths are the
  authoritative measure of each piece; the breakpoints are only used to
  locate points.  This matters for the counterexample, whose pieces shrink
  far below the float spacing near 1.
* :class:`DyadicGridFunction` -- a function constant on the cells of a
  uniform dyadic grid over ``[0, 1)**d`` for ``d`` in {1, 2}.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class AlignmentError(ValueError):
    """A breakpoint or cube does not sit on the requested dyadic grid."""


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open interval ``[left, right)``."""

    left: float
    right: float

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"empty interval [{self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left

    def contains(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def overlaps(self, other: "Interval") -> bool:
        return min(self.right, other.right) > max(self.left, other.left)

    def as_list(self) -> list[float]:
        return [float(self.left), float(self.right)]


@dataclass(frozen=True, order=True)
class Cube:
    """Axis-aligned half-open cube ``corner + [0, side)**d``."""

    corner: tuple[float, ...]
    side: float

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(float(c) for c in self.corner))
        if not self.side > 0:
            raise ValueError("cube side must be positive")

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    def axis(self, k: int) -> Interval:
        return Interval(self.corner[k], self.corner[k] + self.side)

    def overlaps(self, other: "Cube") -> bool:
        return all(self.axis(k).overlaps(other.axis(k)) for k in range(self.dim))

    def contains(self, other: "Cube") -> bool:
        return all(self.axis(k).contains(other.axis(k)) for k in range(self.dim))

    @classmethod
    def dyadic(cls, level: int, index: Sequence[int]) -> "Cube":
        side = 2.0 ** -level
        return cls(tuple(i * side for i in index), side)

    def dyadic_address(self) -> tuple[int, tuple[int, ...]]:
        """Return ``(level, index)`` if this is a dyadic subcube of the unit cube."""
        level = -np.log2(self.side)
        if not float(level).is_integer() or level < 0:
            raise AlignmentError(f"side {self.side} is not a power of 1/2")
        level = int(level)
        index = []
        for c in self.corner:
            k = c * 2 ** level
            if not float(k).is_integer() or not 0 <= k < 2 ** level:
                raise AlignmentError(f"corner {self.corner} not on level-{level} grid")
            index.append(int(k))
        return level, tuple(index)

    def to_json(self) -> dict:
        return {"corner": list(self.corner), "side": float(self.side)}

    @classmethod
    def from_json(cls, obj: dict) -> "Cube":
        return cls(tuple(obj["corner"]), obj["side"])


def _check_disjoint(members: Sequence, what: str) -> None:
    for a, b in itertools.combinations(members, 2):
        if a.overlaps(b):
            raise ValueError(f"{what} members {a} and {b} overlap")


@dataclass(frozen=True)
class IntervalFamily:
    """Finite family of pairwise disjoint intervals."""

    members: tuple[Interval, ...] = ()

    def __post_init__(self):
        members = tuple(sorted(self.members))
        for a, b in zip(members, members[1:]):
            if a.right > b.left:
                raise ValueError(f"family members {a} and {b} overlap")
        object.__setattr__(self, "members", members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "IntervalFamily":
        return cls(tuple(Interval(float(a), float(b)) for a, b in pairs))

    def to_json(self) -> list[list[float]]:
        return [m.as_list() for m in self.members]


@dataclass(frozen=True)
class CubeFamily:
    """Finite family of pairwise disjoint cubes inside an ambient cube."""

    members: tuple[Cube, ...] = ()
    ambient: Cube | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if members:
            dims = {m.dim for m in members}
            if len(dims) != 1:
                raise ValueError("mixed dimensions in cube family")
        _check_disjoint(members, "cube family")
        if self.ambient is not None:
            for m in members:
                if not self.ambient.contains(m):
                    raise ValueError(f"{m} is not inside the ambient cube")
        object.__setattr__(self, "members", members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def to_json(self) -> dict:
        out = {"members": [m.to_json() for m in self.members]}
        if self.ambient is not None:
            out["ambient"] = self.ambient.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "CubeFamily":
        if isinstance(obj, list):
            # bare list of [a, b] pairs: 1-D intervals
            return cls(tuple(Cube((a,), b - a) for a, b in obj))
        ambient = Cube.from_json(obj["ambient"]) if "ambient" in obj else None
        return cls(tuple(Cube.from_json(m) for m in obj["members"]), ambient)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Step function ``f = values[k]`` on ``[breakpoints[k], breakpoints[k+1])``.

    ``widths`` defaults to ``diff(breakpoints)``.  When given explicitly it is
    trusted as the exact piece lengths and the breakpoints only need to be
    nondecreasing; every measure computed by this package uses the widths.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    widths: np.ndarray | None = None
    _prefix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.array(self.breakpoints, dtype=float)
        v = np.array(self.values, dtype=float)
        if x.ndim != 1 or v.ndim != 1 or len(x) != len(v) + 1 or len(v) == 0:
            raise ValueError("need len(breakpoints) == len(values) + 1 >= 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints and values must be finite")
        if self.widths is None:
            if np.any(np.diff(x) <= 0):
                raise ValueError("breakpoints must be strictly increasing")
            w = np.diff(x)
        else:
            w = np.array(self.widths, dtype=float)
            if w.shape != v.shape or np.any(w <= 0) or np.any(np.diff(x) < 0):
                raise ValueError("widths must be positive, breakpoints nondecreasing")
        for arr in (x, v, w):
            arr.setflags(write=False)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "widths", w)
        prefix = np.concatenate([[0.0], np.cumsum(v * w)])
        prefix.setflags(write=False)
        object.__setattr__(self, "_prefix", prefix)

    @property
    def domain(self) -> Interval:
        return Interval(self.breakpoints[0], self.breakpoints[-1])

    @property
    def measure(self) -> float:
        return float(np.sum(self.widths))

    def __len__(self):
        return len(self.values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (k >= 0) & (x < self.breakpoints[-1])
        k = np.clip(k, 0, len(self.values) - 1)
        out = np.where(inside, self.values[k], np.nan)
        return out if out.ndim else float(out)

    def integral(self, a: float | None = None, b: float | None = None) -> float:
        """Integral over ``[a, b)`` from prefix sums; O(log m)."""
        x = self.breakpoints
        a = x[0] if a is None else a
        b = x[-1] if b is None else b
        if a < x[0] or b > x[-1] or a > b:
            raise ValueError(f"[{a}, {b}) is not inside the domain")
        if a == b:
            return 0.0
        # pieces ia .. ib-1 lie inside [a, b) and contribute their stored width
        ia = int(np.searchsorted(x, a, side="left"))
        ib = int(np.searchsorted(x, b, side="right")) - 1
        if ia > ib:
            return float(self.values[ib] * (b - a))
        total = self._prefix[ib] - self._prefix[ia]
        if x[ia] > a:
            total += self.values[ia - 1] * (x[ia] - a)
        if ib < len(self.values) and x[ib] < b:
            total += self.values[ib] * (b - x[ib])
        return float(total)

    def mean(self, a: float | None = None, b: float | None = None) -> float:
        if a is None and b is None:
            return self.integral() / self.measure
        a = self.breakpoints[0] if a is None else a
        b = self.breakpoints[-1] if b is None else b
        return self.integral(a, b) / (b - a)

    def map_values(self, fn) -> "StepFunction":
        return StepFunction(self.breakpoints, fn(self.values), self.widths)

    def __add__(self, c: float) -> "StepFunction":
        return self.map_values(lambda v: v + c)

    def __mul__(self, c: float) -> "StepFunction":
        return self.map_values(lambda v: v * c)

    __rmul__ = __mul__

    def has_exact_widths(self) -> bool:
        return not np.array_equal(self.widths, np.diff(self.breakpoints))

    def to_json(self) -> dict:
        out = {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}
        if self.has_exact_widths():
            out["widths"] = self.widths.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        return cls(obj["breakpoints"], obj["values"], obj.get("widths"))

    @classmethod
    def indicator(cls, a: float, b: float, domain: tuple[float, float] = (0.0, 1.0),
                  height: float = 1.0) -> "StepFunction":
        lo, hi = domain
        xs = [lo]
        vs = []
        if a > lo:
            xs.append(a)
            vs.append(0.0)
        xs.append(b)
        vs.append(height)
        if b < hi:
            xs.append(hi)
            vs.append(0.0)
        return cls(xs, vs)


def canonicalize(f: StepFunction) -> StepFunction:
    """Merge adjacent pieces carrying equal values."""
    v = f.values
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    starts = np.flatnonzero(keep)
    widths = np.add.reduceat(f.widths, starts)
    breaks = np.concatenate([f.breakpoints[starts], f.breakpoints[-1:]])
    explicit = f.has_exact_widths()
    return StepFunction(breaks, v[starts], widths if explicit else None)


def piece_overlaps(f: StepFunction, J: Interval) -> np.ndarray:
    """Measure of ``J`` inside each piece of ``f``.

    Pieces lying entirely inside ``J`` contribute their stored width, so
    collapsed (sub-ulp) pieces keep their true measure.
    """
    x = f.breakpoints
    lo, hi = x[:-1], x[1:]
    full = (lo >= J.left) & (hi <= J.right)
    part = np.clip(np.minimum(hi, J.right) - np.maximum(lo, J.left), 0.0, None)
    return np.where(full, f.widths, part)


def restrict(f: StepFunction, J: Interval) -> StepFunction:
    """Restriction of ``f`` to ``J`` with breakpoints clipped to ``J``."""
    if not f.domain.contains(J):
        raise ValueError(f"{J} is not contained in the domain {f.domain}")
    w = piece_overlaps(f, J)
    keep = w > 0
    x = f.breakpoints
    lo = np.maximum(x[:-1][keep], J.left)
    breaks = np.concatenate([lo, [J.right]])
    return canonicalize(StepFunction(breaks, f.values[keep], w[keep]))


def common_refinement(*fs: StepFunction) -> np.ndarray:
    """Sorted union of the breakpoints of ``fs``."""
    return np.unique(np.concatenate([f.breakpoints for f in fs]))


def resample(f: StepFunction, breakpoints: np.ndarray) -> StepFunction:
    """Express ``f`` on a finer set of breakpoints (no merging)."""
    x = np.asarray(breakpoints, dtype=float)
    mids = 0.5 * (x[:-1] + x[1:])
    return StepFunction(x, f(mids))


@dataclass(frozen=True, eq=False)
class DyadicGridFunction:
    """Function constant on the dyadic cells of side ``2**-level`` in ``[0,1)**dim``.

    ``cells`` has shape ``(2**level,) * dim``; axis ``k`` is coordinate ``k``.
    """

    dim: int
    level: int
    cells: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        n = 2 ** self.level
        c = np.array(self.cells, dtype=float)
        if c.size != n ** self.dim:
            raise ValueError(f"expected {n ** self.dim} cells, got {c.size}")
        c = c.reshape((n,) * self.dim)
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)

    @property
    def n(self) -> int:
        return 2 ** self.level

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    def refined(self, level: int) -> "DyadicGridFunction":
        if level < self.level:
            raise ValueError("cannot refine to a coarser level")
        r = 2 ** (level - self.level)
        c = self.cells
        for ax in range(self.dim):
            c = np.repeat(c, r, axis=ax)
        return DyadicGridFunction(self.dim, level, c)

    def block(self, level: int, index: Sequence[int]) -> np.ndarray:
        """Cell values inside the dyadic cube ``(level, index)``."""
        if level > self.level:
            raise AlignmentError("cube finer than the grid")
        m = 2 ** (self.level - level)
        sl = tuple(slice(i * m, (i + 1) * m) for i in index)
        return self.cells[sl]

    def axis_weights(self, iv: Interval) -> np.ndarray:
        """Overlap lengths of ``iv`` with the cells along one axis."""
        edges = np.arange(self.n + 1) / self.n
        return np.clip(np.minimum(edges[1:], iv.right) - np.maximum(edges[:-1], iv.left), 0.0, None)

    def cube_weights(self, cube: Cube) -> np.ndarray:
        """Overlap measure of ``cube`` with every cell (same shape as ``cells``)."""
        if cube.dim != self.dim:
            raise ValueError("cube dimension mismatch")
        w = self.axis_weights(cube.axis(0))
        for k in range(1, self.dim):
            w = np.multiply.outer(w, self.axis_weights(cube.axis(k)))
        return w

    def to_step(self) -> StepFunction:
        if self.dim != 1:
            raise ValueError("only 1-D grid functions convert to step functions")
        return StepFunction(np.arange(self.n + 1) / self.n, self.cells)

    def to_json(self) -> dict:
        return {"dim": self.dim, "level": self.level, "cells": self.cells.ravel().tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicGridFunction":
        return cls(int(obj["dim"]), int(obj["level"]), obj["cells"])


def to_grid(f: StepFunction, level: int) -> DyadicGridFunction:
    """Sample a step function on ``[0, 1)`` onto the level-``level`` dyadic grid."""
    if f.breakpoints[0] != 0.0 or f.breakpoints[-1] != 1.0:
        raise AlignmentError("domain must be [0, 1)")
    scaled = f.breakpoints * 2 ** level
    if not np.all(scaled == np.round(scaled)):
        bad = f.breakpoints[scaled != np.round(scaled)][0]
        raise AlignmentError(f"breakpoint {bad} is not a multiple of 2**-{level}")
    n = 2 ** level
    return DyadicGridFunction(1, level, f((np.arange(n) + 0.5) / n))


def dyadic_level(f: StepFunction, max_level: int = 52) -> int:
    """Smallest level at which every breakpoint of ``f`` is grid aligned."""
    for level in range(max_level + 1):
        s = f.breakpoints * 2 ** level
        if np.all(s == np.round(s)):
            return level
    raise AlignmentError("breakpoints are not dyadic")


def load_function(path: str | Path):
    """Read a StepFunction or DyadicGridFunction from JSON."""
    obj = json.loads(Path(path).read_text())
    return function_from_json(obj)


def function_from_json(obj: dict):
    if "breakpoints" in obj:
        return StepFunction.from_json(obj)
    if "cells" in obj:
        return DyadicGridFunction.from_json(obj)
    raise ValueError("unrecognised function JSON")
