"""Tabular reports behind the ``report`` CLI commands.

Rows are computed independently per generation / trial, so they may run on
a thread pool; ``Executor.map`` keeps the row order fixed by index.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from . import construct
from .duality import (dual_value, flatten_polymer, flattening_ratio, holder_chain, near_optimal_polymer,
                      pairing, polymer_size, polymers_to_grid)
from .monotone import monotone_family, monotone_lower_bound_check, trace_violations
from .norms import jnp_lower_bound, lorentz_norm, lp_norm, weak_lp_norm
from .suites import random_dyadic_cubes, random_mean_zero_grid, random_monotone, random_polymer, rng_for


def _run(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def lorentz_partial_sum(f, p: float, q: float) -> float:
    """``q 2**(q/(4p)) ||f||_{p,q}**q``: the normalisation in which each generation adds about 1."""
    return q * 2.0 ** (q / (4 * p)) * lorentz_norm(f, p, q) ** q


COUNTEREXAMPLE_COLUMNS = ["G", "lp_p", "lp_p_closed", "jn_p", "ratio", "lorentz_partial", "weak_lp"]


def counterexample_rows(p: float, gmax: int, refine: int = 4, q: float | None = None,
                        threads: int = 1) -> list[dict]:
    q = p if q is None else q

    def row(G: int) -> dict:
        f = construct.counterexample(p, G)
        lp_p = lp_norm(f, p) ** p
        jn = jnp_lower_bound(f, p, 1.0, refine).objective
        return {"G": G, "lp_p": lp_p, "lp_p_closed": (G + 1) * 2 ** -0.25, "jn_p": jn,
                "ratio": jn / lp_p, "lorentz_partial": lorentz_partial_sum(f, p, q),
                "weak_lp": weak_lp_norm(f, p)}

    return _run(row, range(gmax + 1), threads)


DUALITY_COLUMNS = ["trial", "holder_slack", "holder_min_step", "flatten_ratio", "reconstruction_error",
                   "flat_pairing_error", "attainment", "nearopt_size"]


def duality_rows(seed: int, r: float, s: float, C: float | None, trials: int, threads: int = 1,
                 level: int = 6) -> list[dict]:
    def row(trial: int) -> dict:
        rng = rng_for(seed, trial)
        g = random_polymer(rng, 1, 5, r, s)
        f = random_mean_zero_grid(rng, 1, level)
        chain = holder_chain(f, g)
        top = max(chain.terms[-1], 1e-300)
        out = {"trial": trial, "holder_slack": (chain.terms[-1] - chain.terms[0]) / top,
               "holder_min_step": chain.min_slack}
        if math.isinf(s):
            out.update(flatten_ratio=math.nan, reconstruction_error=math.nan, flat_pairing_error=math.nan)
        else:
            parts = flatten_polymer(g, C)
            base = g.to_grid().cells
            recon = polymers_to_grid(parts, g.level).cells
            direct = pairing(f, g)
            flat = pairing(f, parts)
            out.update(flatten_ratio=flattening_ratio(g, parts),
                       reconstruction_error=float(np.max(np.abs(recon - base)) / np.max(np.abs(base))),
                       flat_pairing_error=abs(direct - flat) / max(abs(direct), 1e-300))
        cubes = random_dyadic_cubes(rng, 1, 4)
        s_atom = s if not math.isinf(s) else 2 * r
        P = near_optimal_polymer(f, cubes, r, s_atom)
        out.update(attainment=pairing(f, P) / dual_value(f, cubes, r, s_atom), nearopt_size=polymer_size(P))
        return out

    return _run(row, range(trials), threads)


MONOTONE_COLUMNS = ["trial", "steps", "small_steps", "stop", "violations", "family_value", "lp_norm",
                    "ratio", "jn_grid_value"]


def monotone_rows(seed: int, p: float, trials: int, threads: int = 1) -> list[dict]:
    def row(trial: int) -> dict:
        f = random_monotone(rng_for(seed, trial))
        run = monotone_family(f, p)
        rep = monotone_lower_bound_check(f, p, constant=0.0)
        return {"trial": trial, "steps": len(run.steps),
                "small_steps": sum(st.tag == "S" for st in run.steps), "stop": run.stop or "",
                "violations": len(trace_violations(f, run)), "family_value": rep.family_value,
                "lp_norm": rep.lp_norm, "ratio": rep.ratio,
                "jn_grid_value": jnp_lower_bound(f, p, 1.0, 1).value}

    return _run(row, range(trials), threads)


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def to_csv(rows: Iterable[dict], columns: Sequence[str], header: dict | None = None) -> str:
    """CSV text with 17 significant digits; ``header`` becomes a leading ``# k=v`` comment."""
    buf = io.StringIO()
    if header:
        buf.write("# " + " ".join(f"{k}={format_cell(v)}" for k, v in header.items()) + "\r\n")
    w = csv.writer(buf)
    w.writerow(columns)
    for row in rows:
        w.writerow([format_cell(row[c]) for c in columns])
    return buf.getvalue()
