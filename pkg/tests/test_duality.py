import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import dyadic_maximal_function, grid1

from jnspace.calibration import FLATTEN_MAX_RATIO
from jnspace.duality import (Atom, Polymer, atom_bound, cz_decompose, cz_violations, default_C, dual_exponent,
                             dual_value, flatten_polymer, flattening_ratio, holder_chain, integral_against,
                             maximal_function, mean_centred_value, near_optimal_polymer, pairing, polymer_size,
                             polymers_to_grid, power_mean, truncate)
from jnspace.funcs import AlignmentError, Cube, DyadicGridFunction
from jnspace.suites import random_dyadic_cubes, random_mean_zero_grid, random_polymer, rng_for

seeds = st.integers(0, 2 ** 32 - 1)


def test_power_mean_and_dual_exponent():
    v = np.array([1.0, -3.0])
    assert power_mean(v, 2) == pytest.approx(math.sqrt(5))
    assert power_mean(v, math.inf) == 3.0
    assert dual_exponent(4.0) == pytest.approx(4 / 3)
    assert dual_exponent(math.inf) == 1.0


def test_atom_validation_and_embedding():
    a = Atom.from_block(1, (1,), [1.0, -1.0])
    assert a.level == 2 and a.cube_level == 1
    assert a.embed(2).tolist() == [0, 0, 1, -1]
    assert a.embed(3).tolist() == [0, 0, 0, 0, 1, 1, -1, -1]
    with pytest.raises(ValueError):
        a.embed(1)
    with pytest.raises(ValueError):
        Atom.from_block(0, (0,), [1.0, 0.0])
    with pytest.raises(AlignmentError):
        Atom(Cube((0.1,), 0.5), DyadicGridFunction(1, 1, [1, -1]))
    assert Atom.from_json(json.loads(json.dumps(a.to_json()))).embed(2).tolist() == a.embed(2).tolist()


def test_polymer_validation_size_and_json():
    a = Atom.from_block(1, (0,), [2.0, -2.0])
    b = Atom.from_block(2, (3,), [1.0, -1.0])
    g = Polymer((a, b), 2.0, 4.0)
    assert polymer_size(g) == pytest.approx(math.sqrt(0.5 * 4 + 0.25 * 1))
    assert g.to_grid().cells.tolist() == [2, 2, -2, -2, 0, 0, 1, -1]
    with pytest.raises(ValueError):
        Polymer((a, Atom.from_block(2, (1,), [1.0, -1.0])), 2.0, 4.0)
    with pytest.raises(ValueError):
        Polymer((a,), 4.0, 2.0)
    h = Polymer((a,), 2.0, math.inf)
    obj = json.loads(json.dumps(h.to_json()))
    assert obj["s"] == "inf" and Polymer.from_json(obj).s == math.inf
    with pytest.raises(ValueError):
        polymers_to_grid([])


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 2), st.integers(0, 4))
def test_maximal_function_matches_brute_force(seed, dim, level):
    if dim == 2:
        level = min(level, 3)
    f = random_mean_zero_grid(rng_for(seed), dim, level)
    assert np.allclose(maximal_function(f), dyadic_maximal_function(f.cells), rtol=1e-12, atol=0)


def test_cz_two_valued():
    f = grid1([1, -1])
    dec = cz_decompose(f)
    assert dec.C == 3 and dec.lam == 1
    assert len(dec.levels) == 1
    assert dec.levels[0][0].grid.cells.tolist() == [1, -1]
    assert cz_violations(f, dec) == []


def test_cz_spike():
    f = grid1([7, -1, -1, -1, -1, -1, -1, -1])
    dec = cz_decompose(f)
    assert dec.lam == pytest.approx(1.75)
    assert dec.cubes[1] == [Cube((0.0,), 0.125)]
    assert len(dec.levels) == 2
    assert np.allclose(dec.level_sum(0), f.cells)
    assert np.allclose(dec.level_sum(1), 0)
    assert cz_violations(f, dec) == []
    big = cz_decompose(f, lam=1.75, C=2.5)
    assert cz_violations(f, big) == []


def test_cz_rejects_bad_input():
    with pytest.raises(ValueError):
        cz_decompose(grid1([1, 0]))
    with pytest.raises(ValueError):
        cz_decompose(grid1([1, -1]), C=2.0)
    with pytest.raises(ValueError):
        cz_decompose(grid1([1, -1]), lam=0.5)
    assert default_C(2) == 5


def test_cz_exhaustive_small_grids():
    for L in (1, 2):
        for v in itertools.product(range(-2, 3), repeat=2 ** L):
            if sum(v) or not any(v):
                continue
            f = grid1(v)
            dec = cz_decompose(f)
            assert cz_violations(f, dec) == []
            M = dyadic_maximal_function(f.cells)
            for k in range(1, len(dec.levels)):
                assert np.array_equal(dec.covered(k), M > dec.C ** k * dec.lam)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 2), st.floats(1.0, 4.0))
def test_cz_random(seed, dim, lam_factor):
    f = random_mean_zero_grid(rng_for(seed), dim, 4 if dim == 1 else 3)
    lam = lam_factor * float(np.mean(np.abs(f.cells)))
    dec = cz_decompose(f, lam=lam)
    assert cz_violations(f, dec) == []
    for k, atoms in enumerate(dec.levels):
        for a in atoms:
            assert a.norm(math.inf) <= atom_bound(dim, dec.C, k, lam) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_flattening(seed):
    g = random_polymer(rng_for(seed), 1, 5, 2.0, 4.0)
    parts = flatten_polymer(g, 3.0)
    assert all(q.s == math.inf and q.r == 2.0 for q in parts)
    recon = polymers_to_grid(parts, g.level).cells
    assert np.allclose(recon, g.to_grid().cells, rtol=0, atol=1e-12 * np.max(np.abs(g.to_grid().cells)))
    assert math.isfinite(flattening_ratio(g, parts))


def test_flattening_rejects_bounded_polymer():
    with pytest.raises(ValueError):
        flatten_polymer(Polymer((Atom.from_block(0, (0,), [1.0, -1.0]),), 2.0, math.inf))
    assert FLATTEN_MAX_RATIO[(2.0, 4.0, 3.0)] > 1


def test_pairing_against_direct_integral():
    rng = rng_for(21)
    for _ in range(20):
        g = random_polymer(rng, 1, 4, 2.0, 4.0)
        f = random_mean_zero_grid(rng, 1, 5)
        assert pairing(f, g) == pytest.approx(integral_against(f, g.to_grid()), rel=1e-12, abs=1e-14)
        step = f.to_step()
        assert pairing(step, g) == pytest.approx(pairing(f, g), rel=1e-12, abs=1e-14)


def test_pairing_two_dimensional():
    rng = rng_for(22)
    g = random_polymer(rng, 2, 3, 2.0, 4.0, max_level=2, local_level=2)
    f = random_mean_zero_grid(rng, 2, 3)
    assert pairing(f, g) == pytest.approx(integral_against(f, g.to_grid()), rel=1e-12, abs=1e-14)
    chain = holder_chain(f, g)
    assert chain.min_slack >= -1e-12


def test_truncation():
    f = grid1([3.0, -1.0, -1.0, -1.0])
    assert truncate(f, 2.0).cells.tolist() == [2, -1, -1, -1]
    g = Polymer((Atom.from_block(0, (0,), [1.0, -1.0, 1.0, -1.0]),), 2.0, 4.0)
    assert pairing(truncate(f, 3.0), g) == pairing(f, g)
    with pytest.raises(ValueError):
        truncate(f, 0.0)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([(2.0, 4.0), (1.5, 3.0), (2.0, math.inf)]))
def test_holder_chain(seed, rs):
    rng = rng_for(seed)
    r, s = rs
    g = random_polymer(rng, 1, 4, r, s)
    f = random_mean_zero_grid(rng, 1, 6)
    chain = holder_chain(f, g)
    assert chain.min_slack >= -1e-12
    assert chain.terms[0] == pytest.approx(abs(pairing(f, g)))


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([(2.0, 4.0), (1.5, 3.0), (3.0, 6.0)]))
def test_near_optimal_polymer(seed, rs):
    rng = rng_for(seed)
    r, s = rs
    f = random_mean_zero_grid(rng, 1, 6)
    cubes = random_dyadic_cubes(rng, 1, 4)
    P = near_optimal_polymer(f, cubes, r, s)
    assert polymer_size(P) <= 1 + 1e-12
    value = dual_value(f, cubes, r, s)
    assert pairing(f, P) >= value * (1 - 1e-6)
    centred = mean_centred_value(f, cubes, r, s)
    assert value * (1 - 1e-12) <= centred <= 2 * value


def test_near_optimal_rejects_degenerate_input():
    f = grid1([1.0, 1.0, -1.0, -1.0])
    with pytest.raises(ValueError):
        near_optimal_polymer(f, [Cube((0.0,), 0.5)], 2.0, 4.0)
    with pytest.raises(ValueError):
        near_optimal_polymer(f, [Cube((0.0,), 1.0)], 2.0, math.inf)


def _slsqp_dual(f, cubes, r, s, starts=4):
    """Maximise <f, g> over polymers on ``cubes`` with size <= 1 by constrained optimisation."""
    from scipy.optimize import minimize

    blocks = []
    for Q in cubes:
        k, idx = Q.dyadic_address()
        blocks.append((Q.volume, f.block(k, idx).ravel()))
    sizes = [len(b) for _, b in blocks]
    cuts = np.cumsum([0] + sizes)

    def split(x):
        return [x[a:b] for a, b in zip(cuts[:-1], cuts[1:])]

    def objective(x):
        return -sum(vol * np.mean(fv * b) for (vol, fv), b in zip(blocks, split(x)))

    def size_left(x):
        return 1 - sum(vol * np.mean(np.abs(b) ** s) ** (r / s) for (vol, _), b in zip(blocks, split(x)))

    cons = [{"type": "ineq", "fun": size_left}]
    for a, b in zip(cuts[:-1], cuts[1:]):
        cons.append({"type": "eq", "fun": lambda x, a=a, b=b: np.mean(x[a:b])})
    rng = np.random.default_rng(0)
    best = -np.inf
    for _ in range(starts):
        x0 = rng.normal(size=cuts[-1]) * 0.1
        res = minimize(objective, x0, method="SLSQP", constraints=cons,
                       options={"ftol": 1e-12, "maxiter": 500})
        if size_left(res.x) >= -1e-8:
            best = max(best, -res.fun)
    return best


def test_dual_value_against_constrained_optimiser():
    for k in range(6):
        rng = rng_for(30, k)
        f = random_mean_zero_grid(rng, 1, 4)
        cubes = random_dyadic_cubes(rng, 1, 2, 2)
        for r, s in ((2.0, 4.0), (1.5, 3.0)):
            value = dual_value(f, cubes, r, s)
            assert _slsqp_dual(f, cubes, r, s) == pytest.approx(value, rel=1e-4)
