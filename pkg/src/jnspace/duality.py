"""Atoms, polymers, the dyadic Calderon-Zygmund decomposition and the JN/HK pairing.

Everything lives on dyadic grids over ``[0,1)**d``.  An atom stores its cube
and its values on a *local* grid (the cube rescaled to the unit cube), so an
atom on a cube of level ``k`` with a local grid of level ``m`` resolves the
global level ``k + m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .funcs import Cube, CubeFamily, DyadicGridFunction, StepFunction, dyadic_level, to_grid
from .norms import minimise_power_deviation

MEAN_TOL = 1e-12


def _parse_exponent(s) -> float:
    if isinstance(s, str):
        return math.inf if s.lower() in ("inf", "infinity") else float(s)
    return float(s)


def _dump_exponent(s: float):
    return "inf" if math.isinf(s) else s


def power_mean(v: np.ndarray, s: float) -> float:
    """``(avg |v|**s)**(1/s)`` over equal-volume cells; ``max |v|`` for ``s = inf``."""
    a = np.abs(np.asarray(v, dtype=float))
    if math.isinf(s):
        return float(a.max())
    return float(np.mean(a ** s) ** (1.0 / s))


@dataclass(frozen=True)
class Atom:
    """Mean-zero function supported on a dyadic cube."""

    cube: Cube
    grid: DyadicGridFunction  # values in cube-local coordinates

    def __post_init__(self):
        if self.grid.dim != self.cube.dim:
            raise ValueError("grid and cube dimensions differ")
        self.cube.dyadic_address()  # raises if the cube is not dyadic
        v = self.grid.cells
        scale = float(np.max(np.abs(v))) if v.size else 0.0
        if abs(float(np.mean(v))) > MEAN_TOL * max(scale, 1e-300):
            raise ValueError("atom must have mean zero")

    @classmethod
    def from_block(cls, level: int, index: Sequence[int], block: np.ndarray) -> "Atom":
        block = np.asarray(block, dtype=float)
        local = int(round(math.log2(block.shape[0])))
        return cls(Cube.dyadic(level, index), DyadicGridFunction(block.ndim, local, block))

    @property
    def dim(self) -> int:
        return self.cube.dim

    @property
    def cube_level(self) -> int:
        return self.cube.dyadic_address()[0]

    @property
    def level(self) -> int:
        """Global grid level resolving this atom."""
        return self.cube_level + self.grid.level

    def norm(self, s: float) -> float:
        return power_mean(self.grid.cells, s)

    def embed(self, level: int) -> np.ndarray:
        """Values on the global level-``level`` grid (zero off the cube)."""
        k, index = self.cube.dyadic_address()
        if level < self.level:
            raise ValueError(f"level {level} is coarser than the atom (needs {self.level})")
        local = self.grid.refined(level - k).cells
        out = np.zeros((2 ** level,) * self.dim)
        m = 2 ** (level - k)
        out[tuple(slice(i * m, (i + 1) * m) for i in index)] = local
        return out

    def to_json(self) -> dict:
        return {"cube": self.cube.to_json(), "grid": self.grid.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Atom":
        return cls(Cube.from_json(obj["cube"]), DyadicGridFunction.from_json(obj["grid"]))


@dataclass(frozen=True)
class Polymer:
    """Atoms on pairwise disjoint cubes with exponents ``1 < r < s <= inf``."""

    atoms: tuple[Atom, ...]
    r: float
    s: float

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not 1 < self.r < self.s:
            raise ValueError("need 1 < r < s")
        CubeFamily(tuple(a.cube for a in self.atoms))  # disjointness
        dims = {a.dim for a in self.atoms}
        if len(dims) > 1:
            raise ValueError("atoms of mixed dimension")

    @property
    def dim(self) -> int:
        return self.atoms[0].dim if self.atoms else 1

    @property
    def level(self) -> int:
        return max((a.level for a in self.atoms), default=0)

    def to_grid(self, level: int | None = None) -> DyadicGridFunction:
        """The pointwise sum of the atoms."""
        level = self.level if level is None else level
        total = np.zeros((2 ** level,) * self.dim)
        for a in self.atoms:
            total += a.embed(level)
        return DyadicGridFunction(self.dim, level, total)

    def to_json(self) -> dict:
        return {"r": self.r, "s": _dump_exponent(self.s), "atoms": [a.to_json() for a in self.atoms]}

    @classmethod
    def from_json(cls, obj: dict) -> "Polymer":
        return cls(tuple(Atom.from_json(a) for a in obj["atoms"]), float(obj["r"]),
                   _parse_exponent(obj["s"]))


def polymer_size(g: Polymer) -> float:
    """``(sum_j |Q_j| (avg_Q_j |a_j|**s)**(r/s))**(1/r)``."""
    total = sum(a.cube.volume * a.norm(g.s) ** g.r for a in g.atoms)
    return float(total ** (1.0 / g.r))


def polymers_to_grid(gs: Iterable[Polymer], level: int | None = None) -> DyadicGridFunction:
    gs = list(gs)
    if not gs:
        raise ValueError("no polymers given")
    level = max(g.level for g in gs) if level is None else level
    total = sum(g.to_grid(level).cells for g in gs)
    return DyadicGridFunction(gs[0].dim, level, total)


# ---------------------------------------------------------------------------
# Calderon-Zygmund decomposition


def block_means(cells: np.ndarray, level: int, target: int) -> np.ndarray:
    """Averages of ``cells`` over the dyadic cubes of level ``target``."""
    d = cells.ndim
    m = 2 ** (level - target)
    shape = []
    for _ in range(d):
        shape += [2 ** target, m]
    axes = tuple(range(1, 2 * d, 2))
    return cells.reshape(shape).mean(axis=axes)


def _upsample(a: np.ndarray, factor: int) -> np.ndarray:
    for ax in range(a.ndim):
        a = np.repeat(a, factor, axis=ax)
    return a


def maximal_function(f: DyadicGridFunction) -> np.ndarray:
    """Dyadic maximal function of ``|f|`` over subcubes of the unit cube, per finest cell."""
    a = np.abs(f.cells)
    out = np.zeros_like(a)
    for m in range(f.level + 1):
        out = np.maximum(out, _upsample(block_means(a, f.level, m), 2 ** (f.level - m)))
    return out


@dataclass(frozen=True)
class CZDecomposition:
    C: float
    lam: float
    level: int
    dim: int
    levels: tuple[tuple[Atom, ...], ...]  # levels[k] = atoms a_kj

    @property
    def cubes(self) -> list[list[Cube]]:
        return [[a.cube for a in atoms] for atoms in self.levels]

    def level_sum(self, k: int) -> np.ndarray:
        total = np.zeros((2 ** self.level,) * self.dim)
        for a in self.levels[k]:
            total += a.embed(self.level)
        return total

    def reconstruct(self) -> np.ndarray:
        return sum(self.level_sum(k) for k in range(len(self.levels)))

    def covered(self, k: int) -> np.ndarray:
        """Indicator of the union of the level-``k`` cubes on the finest grid."""
        mask = np.zeros((2 ** self.level,) * self.dim, dtype=bool)
        for Q in self.cubes[k]:
            lev, idx = Q.dyadic_address()
            m = 2 ** (self.level - lev)
            mask[tuple(slice(i * m, (i + 1) * m) for i in idx)] = True
        return mask

    def to_json(self) -> dict:
        return {"C": self.C, "lambda": self.lam, "levels": [
            [a.to_json() for a in atoms] for atoms in self.levels]}


def default_C(dim: int) -> float:
    return 2.0 ** dim + 1


def cz_decompose(f: DyadicGridFunction, lam: float | None = None, C: float | None = None) -> CZDecomposition:
    """Stopping-time decomposition ``f - <f> = sum_{k,j} a_kj``.

    ``Q_{k,j}`` are the maximal dyadic cubes with ``avg |f| > C**k lam``; the
    atom on ``Q_{k,j}`` is ``f - <f>_Q`` off the level-``k+1`` cubes and the
    jump of averages ``<f>_{Q'} - <f>_Q`` on each level-``k+1`` cube ``Q'``.
    ``lam`` defaults to ``avg |f|``.
    """
    d, L = f.dim, f.level
    C = default_C(d) if C is None else float(C)
    if not C > 2 ** d:
        raise ValueError(f"C must exceed 2**d = {2 ** d}")
    v = f.cells
    scale = float(np.max(np.abs(v)))
    if abs(float(np.mean(v))) > MEAN_TOL * max(scale, 1e-300):
        raise ValueError("f must have mean zero")
    avg_abs = float(np.mean(np.abs(v)))
    lam = avg_abs if lam is None else float(lam)
    if lam < avg_abs * (1 - 1e-12):
        raise ValueError(f"lambda = {lam} is below avg |f| = {avg_abs}")
    abs_means = [block_means(np.abs(v), L, m) for m in range(L + 1)]
    means = [block_means(v, L, m) for m in range(L + 1)]

    # selected[k] = list of (cube level, index) of the maximal cubes at level k
    selected: list[list[tuple[int, tuple[int, ...]]]] = [[(0, (0,) * d)]]
    k = 1
    while lam > 0:
        thr = C ** k * lam
        found = []
        above = np.zeros((1,) * d, dtype=bool)
        for m in range(L + 1):
            if m:
                above = _upsample(above, 2)
            hit = (abs_means[m] > thr) & ~above
            found += [(m, tuple(int(i) for i in idx)) for idx in np.argwhere(hit)]
            above |= hit
        if not found:
            break
        selected.append(found)
        k += 1

    # value of <f>_Q for the level-k cube Q containing each finest cell, and coverage
    def level_fields(cubes):
        mask = np.zeros(v.shape, dtype=bool)
        avg = np.zeros(v.shape)
        for m, idx in cubes:
            w = 2 ** (L - m)
            sl = tuple(slice(i * w, (i + 1) * w) for i in idx)
            mask[sl] = True
            avg[sl] = means[m][idx]
        return mask, avg

    fields = [level_fields(c) for c in selected]
    levels = []
    for k, cubes in enumerate(selected):
        mask_k, avg_k = fields[k]
        if k + 1 < len(fields):
            mask_next, avg_next = fields[k + 1]
        else:
            mask_next, avg_next = np.zeros(v.shape, dtype=bool), np.zeros(v.shape)
        field = np.where(mask_next, avg_next - avg_k, v - avg_k)
        atoms = []
        for m, idx in cubes:
            w = 2 ** (L - m)
            block = field[tuple(slice(i * w, (i + 1) * w) for i in idx)]
            block = block - block.mean()  # removes rounding drift only
            atoms.append(Atom.from_block(m, idx, block))
        levels.append(tuple(atoms))
    return CZDecomposition(C, lam, L, d, tuple(levels))


def atom_bound(dim: int, C: float, k: int, lam: float) -> float:
    """``2**d (C + 1) C**k lam``."""
    return 2.0 ** dim * (C + 1) * C ** k * lam


def cz_violations(f: DyadicGridFunction, dec: CZDecomposition) -> list[str]:
    """Check the decomposition invariants against a direct maximal-function computation."""
    out = []
    v = f.cells
    scale = max(float(np.max(np.abs(v))), 1e-300)
    err = float(np.max(np.abs(dec.reconstruct() - (v - v.mean()))))
    if err > 1e-12 * scale:
        out.append(f"reconstruction error {err}")
    M = maximal_function(f)
    for k, atoms in enumerate(dec.levels):
        bound = atom_bound(dec.dim, dec.C, k, dec.lam)
        for a in atoms:
            if abs(float(np.mean(a.grid.cells))) > MEAN_TOL * max(a.norm(math.inf), 1e-300):
                out.append(f"level {k}: atom mean not zero")
            if a.norm(math.inf) > bound * (1 + 1e-12):
                out.append(f"level {k}: |a| = {a.norm(math.inf)} exceeds {bound}")
        try:
            CubeFamily(tuple(a.cube for a in atoms))
        except ValueError:
            out.append(f"level {k}: cubes overlap")
        if k >= 1:
            if not np.array_equal(dec.covered(k), M > dec.C ** k * dec.lam):
                out.append(f"level {k}: cubes differ from {{M f > C^k lam}}")
            parents = dec.covered(k - 1)
            if np.any(dec.covered(k) & ~parents):
                out.append(f"level {k}: cube outside level {k - 1}")
    if np.any(M > dec.C ** len(dec.levels) * dec.lam):
        out.append("decomposition stopped early")
    seen = set()
    for atoms in dec.levels[1:]:
        for a in atoms:
            key = (a.cube.corner, a.cube.side)
            if key in seen:
                out.append(f"cube {a.cube} appears in two levels")
            seen.add(key)
    return out


# ---------------------------------------------------------------------------
# Flattening (r, s) polymers into (r, inf) polymers


def flatten_polymer(g: Polymer, C: float | None = None) -> list[Polymer]:
    """Split each ``s``-atom by CZ at ``lam = (avg |A|**s)**(1/s)`` and regroup by level.

    Returns ``[g_0, g_1, ...]`` with each ``g_k`` an ``(r, inf)`` polymer and
    ``sum_k g_k = g``.
    """
    if math.isinf(g.s):
        raise ValueError("polymer is already bounded (s = inf)")
    C = default_C(g.dim) if C is None else float(C)
    grouped: dict[int, list[Atom]] = {}
    for A in g.atoms:
        k0, idx0 = A.cube.dyadic_address()
        dec = cz_decompose(A.grid, A.norm(g.s), C)
        for k, atoms in enumerate(dec.levels):
            for a in atoms:
                m, idx = a.cube.dyadic_address()
                index = tuple(i0 * 2 ** m + i for i0, i in zip(idx0, idx))
                cube = Cube.dyadic(k0 + m, index)
                grouped.setdefault(k, []).append(Atom(cube, a.grid))
    depth = max(grouped, default=-1) + 1
    return [Polymer(tuple(grouped.get(k, ())), g.r, math.inf) for k in range(depth)]


def flattening_ratio(g: Polymer, parts: Sequence[Polymer]) -> float:
    """``sum_k size(g_k) / size(g)``."""
    base = polymer_size(g)
    return sum(polymer_size(p) for p in parts) / base if base > 0 else 0.0


# ---------------------------------------------------------------------------
# Pairing


def _grid_of(f) -> DyadicGridFunction:
    if isinstance(f, DyadicGridFunction):
        return f
    if isinstance(f, StepFunction):
        return to_grid(f, dyadic_level(f))
    raise TypeError(f"unsupported function type {type(f).__name__}")


def _atom_cell_integrals(f, a: Atom) -> tuple[np.ndarray, np.ndarray]:
    """``(a values, int of f over each atom cell)`` on a common grid."""
    if isinstance(f, StepFunction):
        if a.dim != 1:
            raise ValueError("step functions pair only with 1-D atoms")
        if f.breakpoints[0] > 0.0 or f.breakpoints[-1] < 1.0:
            raise ValueError("atom lies outside the domain of f")
        n = a.grid.n
        edges = a.cube.corner[0] + a.cube.side * np.arange(n + 1) / n
        ints = np.array([f.integral(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
        return a.grid.cells, ints
    if not isinstance(f, DyadicGridFunction):
        raise TypeError(f"unsupported function type {type(f).__name__}")
    if f.dim != a.dim:
        raise ValueError("dimension mismatch between f and atom")
    level = max(f.level, a.level)
    k, idx = a.cube.dyadic_address()
    local = a.grid.refined(level - k).cells
    fvals = f.refined(level).block(k, idx)
    return local, fvals * 2.0 ** (-level * f.dim)


def atom_pairing(f, a: Atom) -> float:
    """``int f a``."""
    av, fi = _atom_cell_integrals(f, a)
    return float(np.sum(av * fi))


def pairing(f, gs) -> float:
    """``sum_i sum_j int f a_ij`` over polymers ``g_i`` (a single polymer is accepted)."""
    if isinstance(gs, Polymer):
        gs = [gs]
    return float(sum(atom_pairing(f, a) for g in gs for a in g.atoms))


def truncate(f, N: float):
    """Radial truncation ``f_N = f`` where ``|f| <= N`` and ``N f/|f|`` elsewhere."""
    if not N > 0:
        raise ValueError("N must be positive")
    if isinstance(f, StepFunction):
        return f.map_values(lambda v: np.clip(v, -N, N))
    if isinstance(f, DyadicGridFunction):
        return DyadicGridFunction(f.dim, f.level, np.clip(f.cells, -N, N))
    raise TypeError(f"unsupported function type {type(f).__name__}")


def integral_against(f, g: DyadicGridFunction) -> float:
    """``int f g`` for a grid function ``g``."""
    fg = _grid_of(f)
    level = max(fg.level, g.level)
    return float(np.sum(fg.refined(level).cells * g.refined(level).cells) * 2.0 ** (-level * g.dim))


def _local_values(f, cube: Cube) -> np.ndarray:
    """Values of ``f`` on the cells of ``cube`` at the resolution of ``f``."""
    fg = _grid_of(f)
    k, idx = cube.dyadic_address()
    if k > fg.level:
        fg = fg.refined(k)
    return np.asarray(fg.block(k, idx), dtype=float)


def dual_exponent(s: float) -> float:
    if math.isinf(s):
        return 1.0
    return s / (s - 1)


@dataclass(frozen=True)
class HolderChain:
    """The terms of the bound ``|<f, g>| <= ... <= osc * size``, in order."""

    terms: tuple[float, ...]

    @property
    def slacks(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.terms, self.terms[1:]))

    @property
    def min_slack(self) -> float:
        """Smallest relative slack between consecutive terms."""
        scale = max(max(self.terms), 1e-300)
        return min(self.slacks) / scale


def holder_chain(f, g: Polymer) -> HolderChain:
    """Evaluate each inequality of the pairing bound for one polymer."""
    sp, rp = dual_exponent(g.s), g.r / (g.r - 1)
    t0 = abs(pairing(f, g))
    t1 = t2 = t3 = 0.0
    osc_sum = 0.0
    for a in g.atoms:
        av, fi = _atom_cell_integrals(f, a)
        vol = a.cube.volume
        t1 += abs(float(np.sum(av * fi)))
        cells = fi / (vol / av.size)  # average of f on each cell
        centred = cells - cells.mean()
        t2 += vol * abs(float(np.mean(centred * av)))
        osc = power_mean(centred, sp)
        t3 += vol * osc * a.norm(g.s)
        osc_sum += vol * osc ** rp
    t4 = osc_sum ** (1 / rp) * polymer_size(g)
    return HolderChain((t0, t1, t2, t3, t4))


def dual_value(f, cubes, r: float, s: float) -> float:
    """``[sum_j |Q_j| (min_c avg_Q_j |f - c|**s')**(r'/s')]**(1/r')``."""
    sp, rp = dual_exponent(s), r / (r - 1)
    total = 0.0
    for Q in _cube_list(cubes):
        v = _local_values(f, Q).ravel()
        w = np.ones_like(v)
        c = minimise_power_deviation(v, w, sp)
        total += Q.volume * power_mean(v - c, sp) ** rp
    return total ** (1 / rp)


def _cube_list(cubes) -> tuple[Cube, ...]:
    if isinstance(cubes, CubeFamily):
        return cubes.members
    return CubeFamily(tuple(cubes)).members


def near_optimal_polymer(f, cubes, r: float, s: float) -> Polymer:
    """Polymer of size at most 1 whose pairing with ``f`` attains :func:`dual_value`.

    On each cube ``b = sgn(f - c*)|f - c*|**(s'-1)`` with ``c*`` the best
    ``L**s'`` constant, normalised to unit ``L**s`` average; the weights
    ``lam_j`` are proportional to ``sigma_j**(r'/r)`` with
    ``sum |Q_j| lam_j**r = 1``.
    """
    if not 1 < r < s < math.inf:
        raise ValueError("need 1 < r < s < inf")
    sp = dual_exponent(s)
    members = _cube_list(cubes)
    parts = []
    for Q in members:
        v = _local_values(f, Q)
        flat = v.ravel()
        if np.all(flat == flat[0]):
            raise ValueError(f"f is constant on {Q}")
        c = minimise_power_deviation(flat, np.ones_like(flat), sp)
        d = v - c
        b = np.sign(d) * np.abs(d) ** (sp - 1)
        b = b - b.mean()
        b = b / power_mean(b, s)
        sigma = power_mean(d, sp)
        parts.append((Q, b, sigma))
    weights = np.array([sig ** (1.0 / (r - 1)) for _, _, sig in parts])
    vols = np.array([Q.volume for Q, _, _ in parts])
    weights = weights / np.sum(vols * weights ** r) ** (1.0 / r)
    atoms = []
    for (Q, b, _), lam in zip(parts, weights):
        k, idx = Q.dyadic_address()
        atoms.append(Atom.from_block(k, idx, lam * b))
    return Polymer(tuple(atoms), r, s)


def mean_centred_value(f, cubes, r: float, s: float) -> float:
    """As :func:`dual_value` but centred at the mean instead of the best constant."""
    sp, rp = dual_exponent(s), r / (r - 1)
    total = 0.0
    for Q in _cube_list(cubes):
        v = _local_values(f, Q).ravel()
        total += Q.volume * power_mean(v - v.mean(), sp) ** rp
    return total ** (1 / rp)
