"""Norm functionals: L^p, weak L^p, Lorentz, mean oscillation and JN_{p,q}.

The JN functional of ``f`` is the supremum, over finite families of pairwise
disjoint intervals (cubes) ``Q_i``, of

    sum_i |Q_i| * (avg_{Q_i} |f - avg_{Q_i} f|**q) ** (p/q)

and ``||f||_{JN_{p,q}}`` is its ``1/p``-th root.  Two optimizers are provided:
an exact quadtree recursion over dyadic families (:func:`jnp_dyadic`) and a
weighted-interval dynamic program over a refinable endpoint grid
(:func:`jnp_lower_bound`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .funcs import (
    Cube,
    CubeFamily,
    DyadicGridFunction,
    Interval,
    IntervalFamily,
    StepFunction,
    dyadic_level,
    piece_overlaps,
    to_grid,
)

Function = Union[StepFunction, DyadicGridFunction]
Region = Union[Interval, Cube]

TIE_RTOL = 1e-12


def _distribution(f: Function) -> tuple[np.ndarray, np.ndarray]:
    """Values and the measure carried by each of them (not merged)."""
    if isinstance(f, StepFunction):
        return f.values, f.widths
    return f.cells.ravel(), np.full(f.cells.size, f.cell_volume)


def _check_exponent(p: float, lo: float = 1.0, open_lo: bool = False) -> None:
    if not np.isfinite(p) or p < lo or (open_lo and p == lo):
        raise ValueError(f"exponent {p} out of range")


def _pow2(x: float) -> float:
    """Power of two within a factor 2 of ``x > 0``."""
    return math.ldexp(1.0, math.frexp(x)[1])


def lp_norm(f: Function, p: float) -> float:
    """``(sum_k |v_k|**p * width_k) ** (1/p)``."""
    _check_exponent(p)
    v, w = _distribution(f)
    top = float(np.max(np.abs(v)))
    if top == 0.0:
        return 0.0
    # homogeneous: rescale by a power of two (exact) so extreme values neither under- nor overflow
    scale = _pow2(top)
    return scale * float(np.sum((np.abs(v) / scale) ** p * w) ** (1.0 / p))


def _levels(f: Function) -> tuple[np.ndarray, np.ndarray]:
    """Distinct positive values of |f| (ascending) and the measure of each."""
    v, w = _distribution(f)
    a = np.abs(v)
    pos = a > 0
    levels, inv = np.unique(a[pos], return_inverse=True)
    mass = np.bincount(inv, weights=w[pos], minlength=len(levels))
    return levels, mass


def weak_lp_norm(f: Function, p: float) -> float:
    """``sup_t t * |{|f| > t}|**(1/p)``.

    The supremum is approached as ``t`` increases to one of the values of
    ``|f|``, where the distribution function equals ``|{|f| >= value}|``.
    """
    _check_exponent(p, open_lo=True)
    levels, mass = _levels(f)
    if len(levels) == 0:
        return 0.0
    at_least = np.cumsum(mass[::-1])[::-1]
    return float(np.max(levels * at_least ** (1.0 / p)))


def lorentz_norm(f: Function, p: float, q: float) -> float:
    """Lorentz quasi-norm ``(int_0^inf (t lambda(t)**(1/p))**q dt/t) ** (1/q)``.

    The distribution function is a right-continuous step function in ``t``,
    so the integral is a finite sum of ``lambda_j**(q/p) (t_{j+1}**q - t_j**q) / q``.
    """
    _check_exponent(p, open_lo=True)
    if not q > 0:
        raise ValueError("q must be positive")
    levels, mass = _levels(f)
    if len(levels) == 0:
        return 0.0
    # lambda on [t_j, t_{j+1}) with t_0 = 0
    lam = np.cumsum(mass[::-1])[::-1]
    scale = _pow2(levels[-1])
    t = np.concatenate([[0.0], levels / scale])
    total = np.sum(lam ** (q / p) * (t[1:] ** q - t[:-1] ** q)) / q
    return float(scale * total ** (1.0 / q))


def local_distribution(f: Function, Q: Region) -> tuple[np.ndarray, np.ndarray]:
    """Values of ``f`` on ``Q`` and their measures (zero-measure entries dropped)."""
    if isinstance(f, StepFunction):
        J = Q if isinstance(Q, Interval) else Q.axis(0)
        if not f.domain.contains(J):
            raise ValueError(f"{J} is not inside the domain {f.domain}")
        w = piece_overlaps(f, J)
        keep = w > 0
        return f.values[keep], w[keep]
    if isinstance(Q, Interval):
        Q = Cube((Q.left,), Q.length)
    unit = Cube((0.0,) * f.dim, 1.0)
    if not unit.contains(Q):
        raise ValueError(f"{Q} is not inside the unit cube")
    w = f.cube_weights(Q).ravel()
    keep = w > 0
    return f.cells.ravel()[keep], w[keep]


def _mean_deviation(v: np.ndarray, w: np.ndarray, q: float) -> tuple[float, float]:
    """Return ``(|Q|, avg |f - avg f|**q)`` from a local distribution."""
    total = float(np.sum(w))
    if np.all(v == v[0]):
        return total, 0.0
    m = float(np.sum(v * w)) / total
    return total, float(np.sum(np.abs(v - m) ** q * w)) / total


def oscillation(f: Function, J: Region, q: float = 1.0) -> float:
    """``(avg_J |f - avg_J f|**q) ** (1/q)``."""
    _check_exponent(q)
    v, w = local_distribution(f, J)
    _, dev = _mean_deviation(v, w, q)
    return dev ** (1.0 / q)


def best_constant_oscillation(f: Function, J: Region, q: float = 1.0) -> float:
    """``min_c (avg_J |f - c|**q) ** (1/q)``; for ``q = 1`` the minimiser is a median."""
    v, w = local_distribution(f, J)
    if q == 1.0:
        order = np.argsort(v)
        cw = np.cumsum(w[order])
        c = v[order][np.searchsorted(cw, 0.5 * cw[-1])]
    else:
        c = minimise_power_deviation(v, w, q)
    return float((np.sum(np.abs(v - c) ** q * w) / np.sum(w)) ** (1.0 / q))


def minimise_power_deviation(v: np.ndarray, w: np.ndarray, q: float,
                             rtol: float = 1e-10) -> float:
    """Minimiser of ``c -> sum w |v - c|**q`` for ``q > 1`` by bisection on the derivative."""
    lo, hi = float(np.min(v)), float(np.max(v))
    if lo == hi:
        return lo
    scale = np.sum(w * np.abs(v - 0.5 * (lo + hi)) ** (q - 1))

    def slope(c):
        d = v - c
        return float(np.sum(w * np.sign(d) * np.abs(d) ** (q - 1)))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = slope(mid)
        if abs(s) <= rtol * scale or mid in (lo, hi):
            return mid
        if s > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def jn_term(f: Function, Q: Region, p: float, q: float = 1.0) -> float:
    """One summand of the JN_{p,q} objective: ``|Q| * (avg_Q |f - avg_Q f|**q)**(p/q)``."""
    v, w = local_distribution(f, Q)
    total, dev = _mean_deviation(v, w, q)
    return total * dev ** (p / q)


def f_functional(f: Function, J: Region, p: float) -> float:
    """``F(J) = |J|**(1-p) * (int_J |f - avg_J f|)**p``."""
    return jn_term(f, J, p, 1.0)


def _as_members(family) -> tuple:
    if isinstance(family, (IntervalFamily, CubeFamily)):
        return family.members
    members = tuple(family)
    if members and isinstance(members[0], Interval):
        return IntervalFamily(members).members
    return CubeFamily(members).members


def family_objective(f: Function, family, p: float, q: float = 1.0) -> float:
    """``sum_i |Q_i| (avg |f - avg f|**q)**(p/q)`` over a disjoint family."""
    return float(sum(jn_term(f, Q, p, q) for Q in _as_members(family)))


def evaluate_family(f: Function, family, p: float, q: float = 1.0) -> float:
    """JN_{p,q} value ``objective**(1/p)`` of one disjoint family (a lower bound)."""
    return family_objective(f, family, p, q) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class JNEstimate:
    """Optimised JN_{p,q} value together with the family attaining it.

    Grid estimates keep the endpoint grid and index spans, because the float
    endpoints of very short members may coincide.
    """

    value: float
    p: float
    q: float
    terms: tuple[float, ...]
    grid_size: int
    cubes: tuple[Cube, ...] | None = None
    grid: np.ndarray | None = field(default=None, repr=False)
    spans: tuple[tuple[int, int], ...] = ()

    @property
    def objective(self) -> float:
        return self.value ** self.p

    def pairs(self) -> list[list[float]]:
        if self.cubes is not None and all(c.dim == 1 for c in self.cubes):
            return [[c.corner[0], c.corner[0] + c.side] for c in self.cubes]
        return [[float(self.grid[j]), float(self.grid[i])] for j, i in self.spans]

    @property
    def family(self) -> IntervalFamily | CubeFamily:
        if self.cubes is not None:
            if self.cubes and self.cubes[0].dim == 1:
                return IntervalFamily.from_pairs(self.pairs())
            return CubeFamily(self.cubes, Cube((0.0, 0.0), 1.0))
        return IntervalFamily.from_pairs(self.pairs())

    def to_json(self) -> dict:
        if self.cubes is not None and self.cubes and self.cubes[0].dim > 1:
            fam = [c.to_json() for c in self.cubes]
        else:
            fam = self.pairs()
        return {"value": self.value, "p": self.p, "q": self.q,
                "family": fam, "grid_size": self.grid_size}


def _check_pq(p: float, q: float) -> None:
    _check_exponent(p, open_lo=True)
    _check_exponent(q)
    if not q < p:
        raise ValueError("need 1 <= q < p")


def _block_view(cells: np.ndarray, dim: int, level: int) -> np.ndarray:
    """Cells grouped into level-``level`` dyadic blocks: shape ``(2**level,)*dim + (cells per block,)``."""
    n = cells.shape[0]
    k = 2 ** level
    m = n // k
    if dim == 1:
        return cells.reshape(k, m)
    return cells.reshape(k, m, k, m).transpose(0, 2, 1, 3).reshape(k, k, m * m)


def _block_terms(cells: np.ndarray, dim: int, level: int, p: float, q: float) -> np.ndarray:
    b = _block_view(cells, dim, level)
    vol = 2.0 ** (-level * dim)
    mean = b.mean(axis=-1, keepdims=True)
    dev = np.mean(np.abs(b - mean) ** q, axis=-1)
    const = np.all(b == b[..., :1], axis=-1)
    return np.where(const, 0.0, vol * dev ** (p / q))


def jnp_dyadic(f: Function, p: float, q: float = 1.0) -> JNEstimate:
    """Exact optimum over disjoint families of dyadic subcubes of ``[0,1)**d``.

    Uses ``best(Q) = max(term(Q), sum over children best(child))`` bottom-up;
    on ties the single cube (fewer members) wins.
    """
    _check_pq(p, q)
    if isinstance(f, StepFunction):
        f = to_grid(f, dyadic_level(f))
    dim, L = f.dim, f.level
    best = np.zeros((2 ** L,) * dim)
    count = np.zeros((2 ** L,) * dim, dtype=np.int64)
    take: list[np.ndarray] = [None] * (L + 1)
    terms_at: list[np.ndarray] = [None] * (L + 1)
    take[L] = np.zeros((2 ** L,) * dim, dtype=bool)
    for level in range(L - 1, -1, -1):
        k = 2 ** level
        if dim == 1:
            child = best.reshape(k, 2).sum(axis=1)
            ccount = count.reshape(k, 2).sum(axis=1)
        else:
            child = best.reshape(k, 2, k, 2).sum(axis=(1, 3))
            ccount = count.reshape(k, 2, k, 2).sum(axis=(1, 3))
        term = _block_terms(f.cells, dim, level, p, q)
        tol = TIE_RTOL * np.maximum(term, child)
        own = (term > 0) & ((term > child + tol) | ((np.abs(term - child) <= tol) & (ccount >= 1)))
        take[level] = own
        terms_at[level] = term
        best = np.where(own, term, child)
        count = np.where(own, 1, ccount)
    cubes: list[Cube] = []
    terms: list[float] = []

    def collect(level: int, index: tuple[int, ...]) -> None:
        if take[level][index]:
            cubes.append(Cube.dyadic(level, index))
            terms.append(float(terms_at[level][index]))
            return
        if level == L:
            return
        for off in np.ndindex(*(2,) * dim):
            collect(level + 1, tuple(2 * i + o for i, o in zip(index, off)))

    collect(0, (0,) * dim)
    objective = float(best.reshape(-1)[0]) if L > 0 else 0.0
    return JNEstimate(objective ** (1.0 / p), p, q, tuple(terms), f.cells.size,
                      cubes=tuple(cubes))


def refine_grid(f: StepFunction, refine: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split every piece of ``f`` into ``refine`` equal parts.

    Returns ``(positions, widths, values)`` of the refined segments.
    """
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    x = f.breakpoints
    frac = np.arange(refine) / refine
    starts = (x[:-1, None] + frac[None, :] * (x[1:] - x[:-1])[:, None]).ravel()
    positions = np.concatenate([starts, x[-1:]])
    positions = np.maximum.accumulate(positions)
    widths = np.repeat(f.widths / refine, refine)
    values = np.repeat(f.values, refine)
    return positions, widths, values


def jnp_lower_bound(f: Function, p: float, q: float = 1.0, refine: int = 1) -> JNEstimate:
    """Best disjoint family with endpoints on the refined breakpoint grid.

    Weighted-interval dynamic program
    ``dp[i] = max(dp[i-1], max_j dp[j] + term([g_j, g_i)))``; per-value running
    measures give each term in O(#distinct values).  Ties within a relative
    ``1e-12`` prefer fewer intervals, then the earliest option.
    """
    _check_pq(p, q)
    if isinstance(f, DyadicGridFunction):
        f = f.to_step()
    positions, widths, values = refine_grid(f, refine)
    n = len(widths)
    uniq, vidx = np.unique(values, return_inverse=True)
    V = len(uniq)
    mass = np.zeros((V, n))
    present = np.zeros((V, n), dtype=bool)
    total = np.zeros(n)
    first = np.zeros(n)
    dp = np.zeros(n + 1)
    cnt = np.zeros(n + 1, dtype=np.int64)
    choice = np.full(n + 1, -1, dtype=np.int64)
    term_at = np.zeros(n + 1)
    expo = p / q
    for i in range(1, n + 1):
        row, w = vidx[i - 1], widths[i - 1]
        mass[row, :i] += w
        present[row, :i] = True
        total[:i] += w
        first[:i] += uniq[row] * w
        T = total[:i]
        M = mass[:, :i]
        mean = first[:i] / T
        dev = np.einsum("vj,vj->j", np.abs(uniq[:, None] - mean[None, :]) ** q, M)
        F = T * (dev / T) ** expo
        F[present[:, :i].sum(axis=0) <= 1] = 0.0
        cand = dp[:i] + F
        skip = dp[i - 1]
        best = max(skip, float(cand.max()))
        tol = TIE_RTOL * best
        ok = (F > 0) & (cand >= best - tol)
        ccount = np.where(ok, cnt[:i] + 1, np.iinfo(np.int64).max)
        if skip >= best - tol and cnt[i - 1] <= ccount.min():
            dp[i], cnt[i], choice[i] = skip, cnt[i - 1], -1
        else:
            j = int(np.argmin(ccount))
            dp[i], cnt[i], choice[i], term_at[i] = cand[j], cnt[j] + 1, j, F[j]
    spans: list[tuple[int, int]] = []
    terms: list[float] = []
    i = n
    while i > 0:
        if choice[i] < 0:
            i -= 1
        else:
            spans.append((int(choice[i]), i))
            terms.append(float(term_at[i]))
            i = int(choice[i])
    spans.reverse()
    terms.reverse()
    return JNEstimate(float(dp[n]) ** (1.0 / p), p, q, tuple(terms), len(positions),
                      grid=positions, spans=tuple(spans))


def span_objective(f: StepFunction, estimate: JNEstimate, refine: int) -> float:
    """Recompute a grid estimate's objective from its index spans (exact widths)."""
    positions, widths, values = refine_grid(f, refine)
    total = 0.0
    for j, i in estimate.spans:
        v, w = values[j:i], widths[j:i]
        T, dev = _mean_deviation(v, w, estimate.q)
        total += T * dev ** (estimate.p / estimate.q)
    return total


