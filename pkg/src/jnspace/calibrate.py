"""Measure the empirical constants frozen in :mod:`jnspace.calibration`.

    python3 -m jnspace.calibrate

prints the dictionaries to paste into ``calibration.py``.  Minima are
rounded down and maxima up to four significant digits.
"""
from __future__ import annotations

import argparse
import math

from .calibration import CALIBRATION_SEED
from .construct import LONG, MEDIUM, SHORT, ZERO, HatTree, class_bound, classify_interval, counterexample
from .duality import flatten_polymer, flattening_ratio
from .monotone import monotone_lower_bound_check, normalize
from .suites import random_hat_family, random_monotone, random_polymer, rng_for

P_VALUES = (1.5, 2.0, 3.0)


def monotone_suite_ratios(p: float, trials: int = 100, seed: int = CALIBRATION_SEED) -> list[float]:
    out = []
    for k in range(trials):
        f = normalize(random_monotone(rng_for(seed, 1, k)), p)
        out.append(monotone_lower_bound_check(f, p, constant=0.0).ratio)
    return out


def flatten_suite_ratios(r: float = 2.0, s: float = 4.0, C: float = 3.0, trials: int = 100,
                         seed: int = CALIBRATION_SEED) -> list[float]:
    out = []
    for k in range(trials):
        g = random_polymer(rng_for(seed, 2, k), 1, 5, r, s)
        out.append(flattening_ratio(g, flatten_polymer(g, C)))
    return out


def class_suite(p: float, depth: int = 8, families: int = 200, seed: int = CALIBRATION_SEED):
    """Classified members of seeded random families on the depth-``depth`` counterexample."""
    tree = HatTree(depth)
    f = counterexample(p, depth, tree)
    out = []
    for k in range(families):
        fam = random_hat_family(rng_for(seed, 3, k), tree)
        out.append([classify_interval(tree, f, J, p) for J in fam])
    return tree, f, out


def class_ratios(p: float, **kw) -> dict[str, float]:
    _, _, suite = class_suite(p, **kw)
    worst = {SHORT: 0.0, MEDIUM: 0.0, LONG: 0.0}
    for fam in suite:
        for c in fam:
            if c.kind != ZERO:
                worst[c.kind] = max(worst[c.kind], c.F / class_bound(c.kind, c.node[0], p))
    return worst


def round_up(x: float, digits: int = 4) -> float:
    if x <= 0:
        return 0.0
    e = math.floor(math.log10(x)) - digits + 1
    return float(f"{math.ceil(x / 10 ** e)}e{e}")


def round_down(x: float, digits: int = 4) -> float:
    e = math.floor(math.log10(x)) - digits + 1
    return float(f"{math.floor(x / 10 ** e)}e{e}")


def main(argv=None) -> None:
    argparse.ArgumentParser(description=__doc__).parse_args(argv)
    mono = {p: round_down(min(monotone_suite_ratios(p))) for p in P_VALUES}
    flat = {(2.0, 4.0, 3.0): round_up(max(flatten_suite_ratios()))}
    classes = {p: {k: round_up(v) for k, v in class_ratios(p).items()} for p in P_VALUES}
    print(f"MONOTONE_MIN_RATIO = {mono!r}")
    print(f"FLATTEN_MAX_RATIO = {flat!r}")
    print(f"CLASS_CONSTANTS = {classes!r}")


if __name__ == "__main__":
    main()
