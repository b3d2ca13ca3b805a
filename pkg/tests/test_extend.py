import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jnspace.construct import dyadic_counterexample
from jnspace.extend import (base_of, extend_trivial, extension_report, is_constant_in_t, slice_identity,
                            stack_count, stacked_family)
from jnspace.funcs import Cube, CubeFamily, DyadicGridFunction, IntervalFamily, StepFunction
from jnspace.norms import family_objective, jnp_dyadic, lp_norm
from jnspace.suites import random_dyadic_cubes, random_grid_step, rng_for

seeds = st.integers(0, 2 ** 32 - 1)
exponents = st.sampled_from([1.5, 2.0, 3.0])


def test_extension_and_base():
    f = DyadicGridFunction(1, 2, [1, 2, 3, 4])
    g = extend_trivial(f)
    assert g.cells.shape == (4, 4) and is_constant_in_t(g)
    assert base_of(g).cells.tolist() == [1, 2, 3, 4]
    assert extend_trivial(f, 3).level == 3
    with pytest.raises(ValueError):
        extend_trivial(StepFunction([0, 1], [1.0]))
    with pytest.raises(ValueError):
        extend_trivial(g)
    with pytest.raises(ValueError):
        base_of(DyadicGridFunction(2, 1, [[1, 2], [3, 4]]))
    assert lp_norm(g, 3) == pytest.approx(lp_norm(f, 3))


def test_stack_count():
    assert stack_count(1.0) == 1
    assert stack_count(0.25) == 4
    assert stack_count(0.3) == 3
    for side in np.linspace(0.01, 1, 57):
        N = stack_count(side)
        assert N * side <= 1 < (N + 1) * side
        assert N * side >= 0.5
    with pytest.raises(ValueError):
        stack_count(0.0)


def test_stacked_family_is_disjoint_and_half_full():
    fam = IntervalFamily.from_pairs([[0, 0.25], [0.3, 0.7], [0.75, 1.0]])
    sq = stacked_family(fam)
    assert len(sq) == 4 + 2 + 4
    assert sq.ambient == Cube((0.0, 0.0), 1.0)
    for Q in fam:
        column = sum(S.volume for S in sq if S.corner[0] == Q.left)
        assert column >= 0.5 * Q.length
    with pytest.raises(ValueError):
        stacked_family(IntervalFamily.from_pairs([[0.5, 1.5]]))


@settings(max_examples=40, deadline=None)
@given(seeds, exponents)
def test_slice_identity(seed, p):
    rng = rng_for(seed)
    g = extend_trivial(random_grid_step(rng, 4, values=1), 4)
    fam = random_dyadic_cubes(rng, 2, 4)
    rep = slice_identity(g, fam, p)
    assert rep.ok and rep.slices_disjoint
    assert rep.rel_error <= 1e-12


def test_slice_identity_with_non_dyadic_squares():
    g = extend_trivial(random_grid_step(rng_for(2), 3, values=1), 3)
    fam = CubeFamily((Cube((0.1, 0.2), 0.3), Cube((0.5, 0.05), 0.45)))
    rep = slice_identity(g, fam, 2.0)
    assert rep.ok


@settings(max_examples=30, deadline=None)
@given(seeds, exponents)
def test_two_sided_comparison(seed, p):
    f = random_grid_step(rng_for(seed), 3, values=1)
    rep = extension_report(f, p)
    assert rep.lower_ok and rep.upper_ok
    assert rep.stacked >= 0.5 * rep.dyadic_1d
    assert rep.dyadic_2d <= rep.upper * (1 + 1e-6)
    assert rep.lp_2d == pytest.approx(rep.lp_1d, rel=1e-12)


def test_stacked_value_on_dyadic_counterexample():
    p = 2.0
    f = dyadic_counterexample(p, 4)
    rep = extension_report(f, p)
    d1 = jnp_dyadic(f, p)
    g = extend_trivial(f, 4)
    assert rep.stacked == pytest.approx(family_objective(g, stacked_family(d1.family).members, p))
    assert rep.to_json()["lowerOk"] and rep.slack >= -1e-12
