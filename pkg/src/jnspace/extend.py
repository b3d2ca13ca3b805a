"""Lifting one-dimensional functions to the unit square by ``F(x, t) = f(x)``.

On the unit square, every 2-D family of squares slices into 1-D families
(one per height ``t``), which gives the upper comparison.  Stacking copies of
each interval's square along ``t`` gives the lower one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .funcs import (Cube, CubeFamily, DyadicGridFunction, Interval, IntervalFamily, StepFunction,
                    dyadic_level, to_grid)
from .norms import family_objective, jn_term, jnp_dyadic, jnp_lower_bound, lp_norm


def extend_trivial(f: StepFunction | DyadicGridFunction, level: int | None = None) -> DyadicGridFunction:
    """Grid function on ``[0,1)**2`` with ``cells[x, t] = f(x)``."""
    if isinstance(f, StepFunction):
        if level is None:
            raise ValueError("a level is required for step functions")
        f = to_grid(f, level)
    elif level is not None and level != f.level:
        f = f.refined(level)
    if f.dim != 1:
        raise ValueError("only 1-D functions can be extended")
    cells = np.repeat(f.cells[:, None], f.n, axis=1)
    return DyadicGridFunction(2, f.level, cells)


def is_constant_in_t(g: DyadicGridFunction) -> bool:
    return g.dim == 2 and bool(np.all(g.cells == g.cells[:, :1]))


def base_of(g: DyadicGridFunction) -> DyadicGridFunction:
    """The 1-D function ``x -> g(x, t)`` of a function constant in ``t``."""
    if not is_constant_in_t(g):
        raise ValueError("g is not constant in t")
    return DyadicGridFunction(1, g.level, g.cells[:, 0])


def stack_count(side: float) -> int:
    """Largest ``N`` with ``N * side <= 1``."""
    if not 0 < side <= 1:
        raise ValueError("interval length must lie in (0, 1]")
    N = int(math.floor(1.0 / side))
    while N * side > 1.0:
        N -= 1
    while (N + 1) * side <= 1.0:
        N += 1
    return N


def stacked_family(family: IntervalFamily) -> CubeFamily:
    """Squares ``Q_i x [(n-1) l_i, n l_i)`` for ``n = 1..N_i`` with ``N_i l_i <= 1 < (N_i+1) l_i``."""
    unit = Interval(0.0, 1.0)
    squares = []
    for Q in family:
        if not unit.contains(Q):
            raise ValueError(f"{Q} is not inside [0, 1)")
        side = Q.length
        squares += [Cube((Q.left, n * side), side) for n in range(stack_count(side))]
    return CubeFamily(tuple(squares), ambient=Cube((0.0, 0.0), 1.0))


@dataclass(frozen=True)
class SliceReport:
    objective: float
    sliced: float
    rel_error: float
    slices_disjoint: bool
    ok: bool

    def to_json(self) -> dict:
        return {"objective": self.objective, "sliced": self.sliced, "relError": self.rel_error,
                "slicesDisjoint": self.slices_disjoint, "ok": self.ok}


def slice_identity(g: DyadicGridFunction, family: CubeFamily, p: float, rtol: float = 1e-12) -> SliceReport:
    """Compare ``objective(family on g)`` with ``int_0^1 objective(slice at t on the base) dt``.

    The slice family is constant between consecutive ``t``-edges of the grid
    and of the squares, so the integral is a finite sum.
    """
    base = base_of(g)
    members = family.members
    lhs = family_objective(g, members, p)
    edges = set(np.arange(g.n + 1) / g.n)
    for Q in members:
        edges.update(Q.axis(1).as_list())
    edges = np.array(sorted(edges))
    terms = {Q: jn_term(base, Q.axis(0), p) for Q in members}
    rhs = 0.0
    disjoint = True
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = 0.5 * (lo + hi)
        here = [Q for Q in members if Q.axis(1).left <= t < Q.axis(1).right]
        try:
            IntervalFamily(tuple(Q.axis(0) for Q in here))
        except ValueError:
            disjoint = False
        rhs += (hi - lo) * sum(terms[Q] for Q in here)
    err = abs(lhs - rhs) / max(abs(lhs), 1e-300) if lhs or rhs else 0.0
    return SliceReport(float(lhs), float(rhs), float(err), disjoint, bool(disjoint and err <= rtol))


@dataclass(frozen=True)
class ExtensionReport:
    p: float
    level: int
    lp_1d: float
    lp_2d: float
    dyadic_1d: float   # objective (p-th power) of the 1-D dyadic optimum
    dyadic_2d: float   # objective of the 2-D dyadic optimum
    stacked: float     # objective of the stacked 1-D optimum on the extension
    upper: float       # 1-D grid optimum over all grid intervals
    lower_ok: bool
    upper_ok: bool

    @property
    def slack(self) -> float:
        return self.upper - self.dyadic_2d

    def to_json(self) -> dict:
        return {"p": self.p, "level": self.level, "lp1d": self.lp_1d, "lp2d": self.lp_2d,
                "dyadic1d": self.dyadic_1d, "dyadic2d": self.dyadic_2d, "stacked": self.stacked,
                "upper": self.upper, "slack": self.slack,
                "lowerOk": self.lower_ok, "upperOk": self.upper_ok}


def extension_report(f: StepFunction | DyadicGridFunction, p: float, level: int | None = None) -> ExtensionReport:
    """Two-sided comparison of the 1-D and 2-D JN objectives of ``f`` and its extension."""
    if isinstance(f, StepFunction):
        g1 = to_grid(f, dyadic_level(f) if level is None else level)
    else:
        g1 = f if level is None else f.refined(level)
    g2 = extend_trivial(g1)
    d1 = jnp_dyadic(g1, p)
    d2 = jnp_dyadic(g2, p)
    stacked = family_objective(g2, stacked_family(d1.family).members, p) if d1.terms else 0.0
    upper = jnp_lower_bound(g1, p, 1.0, 1).objective
    return ExtensionReport(p, g1.level, lp_norm(g1, p), lp_norm(g2, p), d1.objective, d2.objective,
                           stacked, upper,
                           lower_ok=stacked >= 0.5 * d1.objective * (1 - 1e-12)
                           and d2.objective >= 0.5 * d1.objective * (1 - 1e-12),
                           upper_ok=d2.objective <= upper * (1 + 1e-6))
