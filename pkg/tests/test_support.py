import math

import numpy as np
import pytest

from jnspace.calibrate import round_down, round_up
from jnspace.construct import counterexample
from jnspace.reports import counterexample_rows, format_cell, lorentz_partial_sum, to_csv
from jnspace.suites import (random_dyadic_cubes, random_hat_family, random_monotone, random_polymer, random_step,
                            rng_for)


def test_streams_are_reproducible_and_independent():
    a = rng_for(1, 2, 3).normal(size=4)
    assert np.array_equal(a, rng_for(1, 2, 3).normal(size=4))
    assert not np.array_equal(a, rng_for(1, 2, 4).normal(size=4))


def test_generators_produce_valid_objects():
    rng = rng_for(0)
    for _ in range(20):
        f = random_step(rng)
        assert f.domain.left == 0 and f.domain.right == 1
        m = random_monotone(rng)
        assert np.all(np.diff(m.values) >= 0) and abs(m.mean()) < 1e-12
        cubes = random_dyadic_cubes(rng, 2, 3)
        assert all(Q.dim == 2 for Q in cubes)
        g = random_polymer(rng)
        assert 1 < g.r < g.s
    from jnspace.construct import HatTree
    tree = HatTree(5)
    fam = random_hat_family(rng_for(1), tree, 6)
    lo, hi = tree.hull((0, 0))
    assert all(float(lo) <= J.left and J.right <= float(hi) for J in fam)


def test_rounding_helpers():
    assert round_up(0.123411) == 0.1235
    assert round_down(0.123499) == 0.1234
    assert round_up(1.6782) == 1.679
    assert round_up(0.0) == 0.0


def test_format_and_csv():
    assert format_cell(True) == "true" and format_cell(np.bool_(False)) == "false"
    assert format_cell(3) == "3" and format_cell(math.nan) == "nan"
    assert float(format_cell(0.1)) == 0.1 and format_cell(1 / 3) == "0.33333333333333331"
    text = to_csv([{"a": 1, "b": 0.5}], ["a", "b"], {"seed": 7})
    assert text == "# seed=7\r\na,b\r\n1,0.5\r\n"


def test_lorentz_partial_sums_grow_linearly():
    for p in (1.5, 2.0, 3.0):
        sums = [lorentz_partial_sum(counterexample(p, G), p, p) for G in range(8)]
        assert sums == pytest.approx([G + 1 for G in range(8)], rel=1e-12)


def test_counterexample_rows_threads_agree():
    a = counterexample_rows(2.0, 3, 1, threads=1)
    b = counterexample_rows(2.0, 3, 1, threads=3)
    assert a == b
