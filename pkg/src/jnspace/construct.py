"""The dyadic counterexample and the hat-interval counterexample in JN_p minus L^p.

Hat geometry is kept exact.  Every hat endpoint has the form ``a + b * 2**(-1/4)``
with dyadic rationals ``a, b`` (lengths ``2**-(i+1/2)**2`` carry the irrational
factor, gaps ``2**-(i+1)**2`` do not), so comparisons and distances are done
in that number field and only rounded to floats at the end.  Hats of
generation 7 and beyond are shorter than the float spacing near 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterator

import mpmath
import numpy as np

from .funcs import Interval, StepFunction

_MP_PREC = 400


@total_ordering
class Surd:
    """Exact number ``rat + irr * 2**(-1/4)`` with rational coefficients."""

    __slots__ = ("rat", "irr")

    def __init__(self, rat=0, irr=0):
        self.rat = Fraction(rat)
        self.irr = Fraction(irr)

    def __add__(self, other: "Surd") -> "Surd":
        other = _surd(other)
        return Surd(self.rat + other.rat, self.irr + other.irr)

    __radd__ = __add__

    def __sub__(self, other: "Surd") -> "Surd":
        other = _surd(other)
        return Surd(self.rat - other.rat, self.irr - other.irr)

    def __rsub__(self, other) -> "Surd":
        return _surd(other) - self

    def __neg__(self) -> "Surd":
        return Surd(-self.rat, -self.irr)

    def __mul__(self, k) -> "Surd":
        k = Fraction(k)
        return Surd(self.rat * k, self.irr * k)

    __rmul__ = __mul__

    def sign(self) -> int:
        a, b = self.rat, self.irr
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0 or (a > 0) == (b > 0):
            return 1 if (a > 0 or (a == 0 and b > 0)) else -1
        # opposite signs: compare |a| with |b| 2**(-1/4), i.e. 2 a**4 with b**4
        return (1 if a > 0 else -1) if 2 * a ** 4 > b ** 4 else (1 if b > 0 else -1)

    def __eq__(self, other) -> bool:
        return (self - other).sign() == 0

    def __lt__(self, other) -> bool:
        return (self - other).sign() < 0

    def __hash__(self):
        return hash((self.rat, self.irr))

    def __float__(self) -> float:
        with mpmath.workprec(_MP_PREC):
            t = mpmath.mpf(2) ** mpmath.mpf(-0.25)
            val = (mpmath.mpf(self.rat.numerator) / self.rat.denominator
                   + mpmath.mpf(self.irr.numerator) / self.irr.denominator * t)
            return float(val)

    def __repr__(self):
        return f"Surd({self.rat}, {self.irr})"


def _surd(x) -> Surd:
    if isinstance(x, Surd):
        return x
    if isinstance(x, float):
        return Surd(Fraction(x))
    return Surd(x)


def hat_length(i: int) -> Surd:
    """``l_i = 2**-(i+1/2)**2 = 2**(-i*i-i) * 2**(-1/4)``."""
    return Surd(0, Fraction(1, 2 ** (i * i + i)))


def gap(i: int) -> Surd:
    """``d_i = 2**-(i+1)**2``."""
    return Surd(Fraction(1, 2 ** ((i + 1) ** 2)))


def height(i: int, p: float) -> float:
    """``h_i = 2**(i*i/p)``."""
    return 2.0 ** (i * i / p)


def length_float(i: int) -> float:
    return 2.0 ** (-(i + 0.5) ** 2)


def gap_float(i: int) -> float:
    return 2.0 ** (-float((i + 1) ** 2))


def dyadic_counterexample(p: float, K: int) -> StepFunction:
    """``sum_{k=1}^K 2**(k/p) 1_[2**-k, 2**(1-k))``, zero on ``[0, 2**-K)``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    if K < 1:
        raise ValueError("K must be at least 1")
    xs = [0.0] + [2.0 ** -k for k in range(K, 0, -1)] + [1.0]
    vals = [0.0] + [2.0 ** (k / p) for k in range(K, 0, -1)]
    return StepFunction(xs, vals)


Node = tuple[int, int]  # (generation i, position j): I = [j 2**-i, (j+1) 2**-i)


@dataclass(frozen=True)
class HatNode:
    i: int
    j: int
    left: Surd
    right: Surd

    @property
    def dyadic(self) -> Interval:
        return Interval(self.j * 2.0 ** -self.i, (self.j + 1) * 2.0 ** -self.i)

    @property
    def hat(self) -> Interval:
        """Float view of the hat; raises once the hat is below float resolution."""
        return Interval(float(self.left), float(self.right))

    @property
    def length(self) -> float:
        return length_float(self.i)


class HatTree:
    """Hat intervals of every dyadic ``I`` with ``|I| >= 2**-depth``.

    The root hat is ``[-l_0/2, l_0/2)``; the hat of the left (right) half of
    ``I`` sits left (right) of ``hat(I)`` at distance ``d_I``.
    """

    def __init__(self, depth: int):
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        self.depth = depth
        half = hat_length(0) * Fraction(1, 2)
        self.nodes: dict[Node, HatNode] = {(0, 0): HatNode(0, 0, -half, half)}
        for i in range(depth):
            d, ell = gap(i), hat_length(i + 1)
            for j in range(2 ** i):
                parent = self.nodes[(i, j)]
                right_end = parent.left - d
                self.nodes[(i + 1, 2 * j)] = HatNode(i + 1, 2 * j, right_end - ell, right_end)
                left_end = parent.right + d
                self.nodes[(i + 1, 2 * j + 1)] = HatNode(i + 1, 2 * j + 1, left_end, left_end + ell)
        self._hull: dict[Node, tuple[Surd, Surd]] = {}
        for i in range(depth, -1, -1):
            for j in range(2 ** i):
                node = self.nodes[(i, j)]
                lo, hi = node.left, node.right
                if i < depth:
                    lo = self._hull[(i + 1, 2 * j)][0]
                    hi = self._hull[(i + 1, 2 * j + 1)][1]
                self._hull[(i, j)] = (lo, hi)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, key: Node) -> HatNode:
        return self.nodes[key]

    def __contains__(self, key) -> bool:
        return key in self.nodes

    def in_order(self) -> Iterator[HatNode]:
        """Hats from left to right (in-order traversal)."""
        def walk(i, j):
            if i < self.depth:
                yield from walk(i + 1, 2 * j)
            yield self.nodes[(i, j)]
            if i < self.depth:
                yield from walk(i + 1, 2 * j + 1)
        yield from walk(0, 0)

    def hull(self, key: Node) -> tuple[Surd, Surd]:
        """Exact convex hull of the hats of ``key`` and all its descendants."""
        return self._hull[key]

    def to_json(self) -> dict:
        return {"depth": self.depth,
                "nodes": [{"i": n.i, "j": n.j, "hat": [float(n.left), float(n.right)]}
                          for n in self.in_order()]}


def build_hat_tree(depth: int) -> HatTree:
    return HatTree(depth)


def tail_sum(i: int, start: int) -> float:
    """``sum_{k >= start} (d_{i+k} + l_{i+k+1})``, summed to double precision."""
    total = 0.0
    k = start
    while True:
        term = gap_float(i + k) + length_float(i + k + 1)
        if term < 1e-30 * max(total, 1e-300) or term == 0.0:
            return total
        total += term
        k += 1


def closed_form_D(i: int) -> float:
    """``D_i = sum_{k>=0} (d_{i+k} + l_{i+k+1})``."""
    return tail_sum(i, 0)


def delta_distances(tree: HatTree, key: Node) -> tuple[float, float]:
    """``(delta_I, D_I)``: nearest and farthest distance from ``hat(I)`` to descendant hats.

    Distances to descendants present in the tree come from exact geometry;
    the part of the descendant chain below the truncation depth is added from
    the closed-form series tail.
    """
    if key not in tree:
        raise KeyError(f"{key} is not a node of the tree")
    i, j = key
    node = tree[key]
    levels_below = tree.depth - i  # descendant generations present: i+1 .. depth
    tail = tail_sum(i, levels_below)
    if levels_below == 0:
        D = tail
        delta = gap_float(i) - closed_form_D(i + 1)
        return delta, D
    left_lo, left_hi = tree.hull((i + 1, 2 * j))
    right_lo, right_hi = tree.hull((i + 1, 2 * j + 1))
    near_l = float(node.left - left_hi)
    near_r = float(right_lo - node.right)
    far_l = float(node.left - left_lo)
    far_r = float(right_hi - node.right)
    # the inner chain of each half keeps approaching hat(I) below the truncation
    inner_tail = tail_sum(i + 1, levels_below - 1)
    delta = min(near_l, near_r) - inner_tail
    D = max(far_l, far_r) + tail
    return delta, D


def counterexample_pieces(tree: HatTree, p: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Breakpoints, values, exact widths and hat labels of ``f_G``.

    Pieces alternate hat, gap, hat, ...; the label of a hat piece is the
    generation ``i`` of its node and ``-1`` for gaps.
    """
    hats = list(tree.in_order())
    xs, vals, widths, labels = [], [], [], []
    for k, node in enumerate(hats):
        xs.append(float(node.left))
        vals.append(height(node.i, p))
        widths.append(node.length)
        labels.append(node.i)
        if k + 1 < len(hats):
            nxt = hats[k + 1]
            xs.append(float(node.right))
            vals.append(0.0)
            widths.append(float(nxt.left - node.right))
            labels.append(-1)
    xs.append(float(hats[-1].right))
    return np.array(xs), np.array(vals), np.array(widths), np.array(labels)


def counterexample(p: float, G: int, tree: HatTree | None = None) -> StepFunction:
    """``f_G = sum_{|I| >= 2**-G} h_I 1_{hat(I)}`` on the hull of its hats."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    tree = tree if tree is not None and tree.depth == G else HatTree(G)
    xs, vals, widths, _ = counterexample_pieces(tree, p)
    return StepFunction(np.maximum.accumulate(xs), vals, widths)


def counterexample_l1(p: float, G: int) -> float:
    """Closed form ``2**(-1/4) sum_{j<=G} 2**(-j*j/p')``."""
    pp = p / (p - 1)
    return 2 ** -0.25 * sum(2.0 ** (-j * j / pp) for j in range(G + 1))


def dyadic_bound(p: float) -> float:
    """``(2 / (2**(1/p') - 1))**p``, the per-interval bound for the dyadic counterexample."""
    pp = p / (p - 1)
    return (2.0 / (2.0 ** (1.0 / pp) - 1.0)) ** p


SHORT, MEDIUM, LONG, ZERO = "short", "medium", "long", "zero"


def _exact(x: float) -> Surd:
    return Surd(Fraction(x))


def _overlap(a_lo: Surd, a_hi: Surd, b_lo: Surd, b_hi: Surd) -> Surd:
    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
    return hi - lo if lo < hi else Surd(0)


def largest_hat(tree: HatTree, J: Interval) -> Node | None:
    """The unique largest ``I`` whose hat meets ``J`` in positive measure.

    Hats of a subtree sit between the hulls of its two halves, so an interval
    missing ``hat(I)`` lies entirely on one side and only that half can hold
    the answer.
    """
    lo, hi = _exact(J.left), _exact(J.right)
    key: Node = (0, 0)
    while True:
        node = tree[key]
        if _overlap(lo, hi, node.left, node.right).sign() > 0:
            return key
        if key[0] == tree.depth:
            return None
        i, j = key
        key = (i + 1, 2 * j) if hi <= node.left else (i + 1, 2 * j + 1)
        h_lo, h_hi = tree.hull(key)
        if _overlap(lo, hi, h_lo, h_hi).sign() <= 0:
            return None


@dataclass(frozen=True)
class IntervalClass:
    J: Interval
    node: Node | None
    kind: str
    F: float
    outside: float  # |J minus hat(I_J)|
    inside: float   # |J cap hat(I_J)|

    @property
    def dyadic(self) -> Interval | None:
        if self.node is None:
            return None
        i, j = self.node
        return Interval(j * 2.0 ** -i, (j + 1) * 2.0 ** -i)


def classify_interval(tree: HatTree, f: StepFunction, J: Interval, p: float) -> IntervalClass:
    """Identify ``I_J`` and sort ``J`` into short / medium / long (or zero when ``F(J) = 0``)."""
    from .norms import f_functional

    F = f_functional(f, J, p)
    if F == 0.0:
        return IntervalClass(J, None, ZERO, 0.0, 0.0, 0.0)
    key = largest_hat(tree, J)
    if key is None:
        raise ValueError(f"{J} carries oscillation but meets no hat of the tree")
    node = tree[key]
    inside = _overlap(_exact(J.left), _exact(J.right), node.left, node.right)
    outside = _exact(J.right) - _exact(J.left) - inside
    delta, D = delta_distances(tree, key)
    out = float(outside)
    if out < delta:
        kind = SHORT
    elif out < 2 * D:
        kind = MEDIUM
    else:
        kind = LONG
    return IntervalClass(J, key, kind, F, out, float(inside))


def class_bound(kind: str, i: int, p: float) -> float:
    """Shape of the per-class bound without its constant."""
    if kind == SHORT:
        return 2.0 ** (-2 * i)
    if kind == MEDIUM:
        return 2.0 ** (-i * p) + 2.0 ** (-2 * i)
    if kind == LONG:
        return 2.0 ** -i
    raise ValueError(f"no bound for class {kind!r}")


def two_term_bound(f: StepFunction, cls: IntervalClass, p: float) -> float:
    """``|J|**(1-p) (int_{J - hat} f)**p + min(|J cap hat|, |J - hat|) h**p``, no constant."""
    i = cls.node[0]
    h = height(i, p)
    J = cls.J
    outside_mass = max(f.integral(J.left, J.right) - h * cls.inside, 0.0)
    return J.length ** (1 - p) * outside_mass ** p + min(cls.inside, cls.outside) * h ** p


@dataclass(frozen=True)
class ClassBoundReport:
    kind: str
    node: Node
    F: float
    bound: float
    ok: bool
    two_term: float
    two_term_ok: bool

    def to_json(self) -> dict:
        return {"class": self.kind, "I": list(self.node), "F": self.F, "bound": self.bound,
                "ok": self.ok, "twoTerm": self.two_term, "twoTermOk": self.two_term_ok}


def class_bound_check(tree: HatTree, f: StepFunction, J: Interval, p: float,
                      constants: dict[str, float] | None = None) -> ClassBoundReport:
    """Evaluate ``F(J)`` against its class bound and against the two-term bound with constant ``4**p``.

    ``constants`` maps class names to the multiplicative constant; it defaults
    to the frozen calibration for ``p``.
    """
    from .calibration import class_constants

    cls = classify_interval(tree, f, J, p)
    if cls.kind == ZERO:
        raise ValueError("F(J) = 0; there is nothing to bound")
    constants = constants if constants is not None else class_constants(p)
    bound = constants[cls.kind] * class_bound(cls.kind, cls.node[0], p)
    two = 4.0 ** p * two_term_bound(f, cls, p)
    slack = 1 + 1e-9
    return ClassBoundReport(cls.kind, cls.node, cls.F, bound, cls.F <= bound * slack,
                            two, cls.F <= two * slack)


def long_carleson_sum(classes) -> float:
    """``sum |I|`` over the distinct ``I_J`` of the long intervals."""
    nodes = {c.node for c in classes if c.kind == LONG}
    return float(sum(2.0 ** -i for i, _ in nodes))


def family_total_bound(p: float, constants: dict[str, float]) -> float:
    """Uniform bound on ``sum_J F(J)`` implied by the class bounds.

    At most two members share an ``I_J`` and there are ``2**i`` nodes per
    generation; long ``I_J`` satisfy the Carleson packing ``sum |I| <= 2``.
    """
    short = 2 * constants[SHORT] * sum(2.0 ** -i for i in range(200))
    medium = 2 * constants[MEDIUM] * sum(2.0 ** (i - i * p) + 2.0 ** -i for i in range(200))
    long = 2 * constants[LONG] * 2.0
    return short + medium + long
