"""Interval selection for nondecreasing functions and the lower bound it certifies.

For a nondecreasing, mean-zero step function ``f`` on ``[a, b)`` this runs
the level-set recursion: starting from ``lam_1 = max f``,

    A_k = {lam_k/2 < f <= lam_k} minus C_{k-1},    B_k = {lam_k/4 < f <= lam_k/2}

A step is *small* (``S``) when ``|A_k| <= 2**(-2p-1) |B_k|``; then ``I_k = A_k``
and ``lam_{k+1} = lam_k/2``.  Otherwise it is *good* (``G``):
``I_k = A_k + B_k + C_k`` where ``C_k`` is the interval of length ``|A_k|``
just left of ``B_k`` and ``lam_{k+1} = f(c_k-)``.  The run stops at a good
step whose ``c_k`` leaves the domain or has ``f(c_k-) <= 0``.

With half-open pieces every set above is an interval: ``A_k = [a_k, c_{k-1})``
where ``a_k`` is the first point with ``f > lam_k/2`` and ``c_0`` is the right
end of the domain, and ``B_k = [b_k, a_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcs import Interval, IntervalFamily, StepFunction, restrict
from .norms import evaluate_family, lp_norm

SMALL, GOOD = "S", "G"


class NotMonotoneError(ValueError):
    pass


@dataclass(frozen=True)
class MonotoneStep:
    lam: float
    A: Interval
    B: Interval | None
    C: Interval | None
    I: Interval
    tag: str


@dataclass(frozen=True)
class MonotoneRun:
    p: float
    steps: tuple[MonotoneStep, ...]
    stop: str | None  # "boundary", "sign" or None for an empty run

    @property
    def lambdas(self) -> list[float]:
        return [s.lam for s in self.steps]

    @property
    def family(self) -> IntervalFamily:
        return IntervalFamily(tuple(s.I for s in self.steps))

    @property
    def stop_index(self) -> int | None:
        return len(self.steps) if self.stop else None


def _interval(a: float, b: float) -> Interval | None:
    return Interval(a, b) if a < b else None


def is_nondecreasing(f: StepFunction) -> bool:
    return bool(np.all(np.diff(f.values) >= 0))


def normalize(f: StepFunction, p: float) -> StepFunction:
    """Subtract the mean; reflect so that ``f`` increases and ``||f_+||_p >= ||f_-||_p``."""
    x0, x1 = f.breakpoints[0], f.breakpoints[-1]

    def reflect(g: StepFunction, negate: bool) -> StepFunction:
        xs = (x0 + x1) - g.breakpoints[::-1]
        vs = g.values[::-1]
        return StepFunction(xs, -vs if negate else vs)

    if not is_nondecreasing(f):
        f = reflect(f, negate=False)
        if not is_nondecreasing(f):
            raise NotMonotoneError("f is not monotone")
    g = f + (-f.mean())
    pos = np.sum(np.clip(g.values, 0, None) ** p * g.widths)
    neg = np.sum(np.clip(-g.values, 0, None) ** p * g.widths)
    if pos < neg:
        g = reflect(g, negate=True)
    return g


def monotone_family(f: StepFunction, p: float) -> MonotoneRun:
    """Run the A/B/C recursion on a nondecreasing mean-zero step function."""
    if not is_nondecreasing(f):
        raise NotMonotoneError("f must be nondecreasing")
    scale = float(np.max(np.abs(f.values)))
    if abs(f.mean()) > 1e-12 * max(scale, 1.0):
        raise ValueError("f must have mean zero")
    x, v = f.breakpoints, f.values
    lo = float(x[0])
    lam = float(v[-1])
    if lam <= 0:
        return MonotoneRun(p, (), None)
    threshold = 2.0 ** (-2 * p - 1)

    def first_above(level: float) -> float:
        return float(x[np.searchsorted(v, level, side="right")])

    def left_value(c: float) -> float:
        return float(v[np.searchsorted(x, c, side="left") - 1])

    steps: list[MonotoneStep] = []
    right = float(x[-1])
    while True:
        a = first_above(lam / 2)
        b = first_above(lam / 4)
        A, B = Interval(a, right), _interval(b, a)
        if (right - a) <= threshold * (a - b):
            steps.append(MonotoneStep(lam, A, B, None, A, SMALL))
            right, lam = a, lam / 2
            continue
        c = b - (right - a)
        if c <= lo:
            C = _interval(lo, b)
            steps.append(MonotoneStep(lam, A, B, C, Interval(lo, right), GOOD))
            return MonotoneRun(p, tuple(steps), "boundary")
        C = Interval(c, b)
        steps.append(MonotoneStep(lam, A, B, C, Interval(c, right), GOOD))
        nxt = left_value(c)
        if nxt <= 0:
            return MonotoneRun(p, tuple(steps), "sign")
        right, lam = c, nxt


def _power_integral(f: StepFunction, J: Interval, p: float) -> float:
    g = restrict(f, J)
    return float(np.sum(np.abs(g.values) ** p * g.widths))


def _abs_dev_integral(f: StepFunction, J: Interval) -> float:
    g = restrict(f, J)
    m = np.sum(g.values * g.widths) / np.sum(g.widths)
    return float(np.sum(np.abs(g.values - m) * g.widths))


def trace_violations(f: StepFunction, run: MonotoneRun, rtol: float = 1e-12) -> list[str]:
    """Check the run's invariants; returns human-readable violations (empty if none)."""
    p = run.p
    out: list[str] = []
    steps = run.steps
    for k, s in enumerate(steps):
        last = k == len(steps) - 1
        if k > 0:
            prev = steps[k - 1]
            expected = prev.lam / 2 if prev.tag == SMALL else float(f(np.nextafter(s.A.right, -np.inf)))
            if not np.isclose(s.lam, expected, rtol=rtol, atol=0):
                out.append(f"step {k}: lambda {s.lam} != {expected}")
            if s.A.right != (prev.I.left):
                out.append(f"step {k}: A does not end where I_{k-1} starts")
        alen = s.A.length
        blen = s.B.length if s.B else 0.0
        small = alen <= 2.0 ** (-2 * p - 1) * blen
        if small != (s.tag == SMALL):
            out.append(f"step {k}: tag {s.tag} inconsistent with threshold")
        if s.tag == SMALL:
            if s.I != s.A:
                out.append(f"step {k}: small step with I != A")
            if last:
                out.append("run ends on a small step")
            else:
                lhs = _power_integral(f, s.A, p)
                rhs = 0.5 * _power_integral(f, steps[k + 1].A, p)
                if lhs > rhs * (1 + rtol):
                    out.append(f"step {k}: telescoping {lhs} > {rhs}")
            continue
        clen = s.C.length if s.C else 0.0
        stopped_at_boundary = last and run.stop == "boundary"
        if not stopped_at_boundary and not np.isclose(clen, alen, rtol=1e-9, atol=0):
            out.append(f"step {k}: |C| = {clen} != |A| = {alen}")
        if s.I.length > 2.0 ** (2 * p + 2) * alen * (1 + rtol):
            out.append(f"step {k}: |I| exceeds 2^(2p+2)|A|")
        if not last:
            osc = _abs_dev_integral(f, s.I)
            if osc < 0.25 * s.lam * alen * (1 - rtol):
                out.append(f"step {k}: oscillation {osc} < lam/4 |A|")
    members = [s.I for s in steps]
    for a, b in zip(members, members[1:]):
        if b.right > a.left:
            out.append(f"I-intervals {a} and {b} overlap")
    if members:
        start = members[-1].left
        left_part = f.values[f.breakpoints[1:] <= start]
        if np.any(left_part > 0):
            out.append("{f > 0} not covered by the I-intervals")
    return out


@dataclass(frozen=True)
class MonotoneReport:
    p: float
    family_value: float
    lp_norm: float
    ratio: float
    constant: float | None
    ok: bool | None

    def to_json(self) -> dict:
        return {"p": self.p, "familyValue": self.family_value, "lpNorm": self.lp_norm,
                "ratio": self.ratio, "constant": self.constant, "ok": self.ok}


def monotone_lower_bound_check(f: StepFunction, p: float, constant: float | None = None) -> MonotoneReport:
    """Compare the JN value of the selected family with ``||f - <f>||_p``.

    ``constant`` defaults to the frozen calibration for ``p`` when one exists.
    """
    from .calibration import MONOTONE_MIN_RATIO

    run = monotone_family(f, p)
    value = evaluate_family(f, run.family, p, 1.0)
    norm = lp_norm(f + (-f.mean()), p)
    ratio = value / norm if norm > 0 else float("nan")
    if constant is None:
        constant = MONOTONE_MIN_RATIO.get(float(p))
    ok = None if constant is None or norm == 0 else bool(ratio >= constant * (1 - 1e-12))
    return MonotoneReport(p, value, norm, ratio, constant, ok)


def truncate_symmetric(f: StepFunction, M: float) -> StepFunction:
    """``max(min(f, M), -M)``."""
    return f.map_values(lambda v: np.clip(v, -M, M))
