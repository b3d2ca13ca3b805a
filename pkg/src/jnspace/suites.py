"""Seeded random inputs shared by the calibration script, the CLI reports and the tests."""
from __future__ import annotations

import math

import numpy as np

from .duality import Atom, Polymer
from .funcs import Cube, CubeFamily, DyadicGridFunction, Interval, IntervalFamily, StepFunction


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``, stable across runs and thread counts."""
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def random_step(rng: np.random.Generator, pieces: int | None = None,
                domain: tuple[float, float] = (0.0, 1.0)) -> StepFunction:
    pieces = int(rng.integers(1, 12)) if pieces is None else pieces
    lo, hi = domain
    inner = np.sort(rng.uniform(lo, hi, pieces - 1))
    xs = np.concatenate([[lo], inner, [hi]])
    if np.any(np.diff(xs) <= 0):
        return random_step(rng, pieces, domain)
    return StepFunction(xs, rng.normal(size=pieces))


def random_grid_step(rng: np.random.Generator, level: int, values: int | None = None) -> StepFunction:
    """Step function on ``[0,1)`` whose breakpoints lie on the level-``level`` grid."""
    n = 2 ** level
    cells = rng.integers(-3, 4, size=n).astype(float) if values is None else rng.normal(size=n)
    return DyadicGridFunction(1, level, cells).to_step()


def random_monotone(rng: np.random.Generator, pieces: int | None = None) -> StepFunction:
    """Nondecreasing mean-zero step function on ``[0, 1)`` with ``||f_+||_p`` not dominated.

    Level increments are heavy-tailed so that both small and good steps occur.
    """
    from .monotone import normalize

    if pieces is None and rng.random() < 0.5:
        # slowly growing power profile (1 - x)**-alpha on a geometric grid: many small steps
        K = int(rng.integers(8, 40))
        alpha = rng.uniform(0.03, 0.6)
        xs = np.concatenate([1.0 - 2.0 ** -np.arange(K), [1.0]])
        vals = 2.0 ** (alpha * np.arange(K)) + np.cumsum(rng.uniform(0, 0.05, K))
        return normalize(StepFunction(xs, vals), 2.0)
    pieces = int(rng.integers(2, 40)) if pieces is None else pieces
    inner = np.sort(rng.uniform(0.0, 1.0, pieces - 1))
    xs = np.concatenate([[0.0], inner, [1.0]])
    if np.any(np.diff(xs) <= 0):
        return random_monotone(rng, pieces)
    steps = rng.pareto(1.5, size=pieces) + 1e-3
    vals = np.cumsum(steps)
    return normalize(StepFunction(xs, vals), 2.0)


def random_interval_family(rng: np.random.Generator, domain: Interval, count: int | None = None) -> IntervalFamily:
    """Disjoint intervals with uniform random endpoints inside ``domain``."""
    count = int(rng.integers(1, 10)) if count is None else count
    pts = np.sort(rng.uniform(domain.left, domain.right, 2 * count))
    members = [Interval(a, b) for a, b in zip(pts[0::2], pts[1::2]) if a < b]
    return IntervalFamily(tuple(members))


def random_mean_zero_grid(rng: np.random.Generator, dim: int, level: int) -> DyadicGridFunction:
    v = rng.standard_t(3, size=(2 ** level,) * dim)
    return DyadicGridFunction(dim, level, v - v.mean())


def random_dyadic_cubes(rng: np.random.Generator, dim: int, max_level: int,
                        count: int | None = None) -> CubeFamily:
    """Disjoint dyadic cubes with levels in ``1..max_level``, drawn by rejection."""
    count = int(rng.integers(1, 6)) if count is None else count
    cubes: list[Cube] = []
    for _ in range(50 * count):
        if len(cubes) == count:
            break
        level = int(rng.integers(1, max_level + 1))
        idx = tuple(int(i) for i in rng.integers(0, 2 ** level, size=dim))
        cube = Cube.dyadic(level, idx)
        if not any(cube.overlaps(c) for c in cubes):
            cubes.append(cube)
    return CubeFamily(tuple(cubes), ambient=Cube((0.0,) * dim, 1.0))


def random_polymer(rng: np.random.Generator, dim: int = 1, atoms: int = 5, r: float = 2.0,
                   s: float = 4.0, max_level: int = 3, local_level: int = 3) -> Polymer:
    """Polymer of random heavy-tailed atoms on disjoint dyadic cubes."""
    family = random_dyadic_cubes(rng, dim, max_level, atoms)
    out = []
    for Q in family:
        k, idx = Q.dyadic_address()
        v = rng.standard_t(2, size=(2 ** local_level,) * dim)
        out.append(Atom.from_block(k, idx, v - v.mean()))
    return Polymer(tuple(out), r, s if not math.isinf(s) else math.inf)


def random_hat_family(rng: np.random.Generator, tree, count: int | None = None,
                      max_generation: int = 5) -> IntervalFamily:
    """Disjoint intervals on the counterexample with endpoints near hat edges.

    Each candidate straddles one edge of a random hat, reaching into the hat
    and outward by random multiples of the local scales ``l_i``, ``d_i``.
    Candidates overlapping an earlier pick are discarded.
    """
    from .construct import gap_float, length_float

    count = int(rng.integers(1, 12)) if count is None else count
    hull = tree.hull((0, 0))
    lo_dom, hi_dom = float(hull[0]), float(hull[1])
    picked: list[Interval] = []
    top = min(max_generation, tree.depth)
    for _ in range(20 * count):
        if len(picked) == count:
            break
        i = int(rng.integers(0, top + 1))
        j = int(rng.integers(0, 2 ** i))
        node = tree[(i, j)]
        a, b = float(node.left), float(node.right)
        scale = [length_float(i), gap_float(i), 2 * gap_float(i), 6 * gap_float(i)][int(rng.integers(0, 4))]
        inward = rng.uniform(0.01, 1.0) * (b - a)
        outward = rng.uniform(0.01, 1.5) * scale
        J = (a - outward, a + inward) if rng.random() < 0.5 else (b - inward, b + outward)
        if rng.random() < 0.2:
            J = (a - outward, b + rng.uniform(0.01, 1.5) * scale)
        lo, hi = max(J[0], lo_dom), min(J[1], hi_dom)
        if not lo < hi:
            continue
        cand = Interval(lo, hi)
        if not any(cand.overlaps(P) for P in picked):
            picked.append(cand)
    return IntervalFamily(tuple(picked))
