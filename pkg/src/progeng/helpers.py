"""Choosing which parity nodes to engage: accessing cost versus repair bandwidth.

The objective for a chosen set ``S`` of parity nodes is
``w1 * A(S) + w2 * gamma(|S|)`` where ``A(S)`` is the summed accessing cost.
In normalised mode ``A`` is divided by the total cost of all parities and
``gamma`` by the full-download bandwidth ``kL``; raw mode uses native units.
All arithmetic is exact (``Fraction``), so objectives compare without rounding.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .repair import BandwidthProfile

BRUTEFORCE_MAX = 20


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class Weights:
    access: Fraction
    bandwidth: Fraction

    def __post_init__(self):
        a, b = Fraction(self.access), Fraction(self.bandwidth)
        object.__setattr__(self, "access", a)
        object.__setattr__(self, "bandwidth", b)
        if a < 0 or b < 0:
            raise SelectionError("weights must be nonnegative")
        if a + b != 1:
            raise SelectionError(f"weights must sum to 1, got {a + b}")

    @classmethod
    def of(cls, w) -> Weights:
        if isinstance(w, Weights):
            return w
        a, b = w
        return cls(_frac(a), _frac(b))


@dataclass(frozen=True)
class SelectionResult:
    p: int
    selected: tuple[int, ...]
    access: Fraction
    objective: Fraction
    trace: tuple[Fraction, ...]  # objective of the best set of each size 1..m


def _frac(x) -> Fraction:
    if isinstance(x, float):
        # 0.5 stays 1/2, 0.1 becomes 1/10 rather than its binary expansion
        return Fraction(repr(x))
    return Fraction(x)


def _gamma_fn(gamma) -> Callable[[int], Fraction]:
    if isinstance(gamma, BandwidthProfile):
        g = gamma.gamma_bar
        return lambda p: g[p]
    if isinstance(gamma, Mapping):
        return lambda p: _frac(gamma[p])
    if isinstance(gamma, Sequence):
        return lambda p: _frac(gamma[p - 1])
    return lambda p: _frac(gamma(p))


class _Objective:
    def __init__(self, costs, gamma, weights, normalize, full_bandwidth):
        if len(costs) == 0:
            raise SelectionError("empty cost row")
        self.costs = [_frac(c) for c in costs]
        if any(c < 0 for c in self.costs):
            raise SelectionError("accessing costs must be nonnegative")
        self.m = len(self.costs)
        self.gamma = _gamma_fn(gamma)
        self.w = Weights.of(weights)
        self.access_scale = Fraction(1)
        self.bw_scale = Fraction(1)
        if normalize:
            total = sum(self.costs)
            self.access_scale = 1 / total if total else Fraction(1)
            full = _frac(full_bandwidth) if full_bandwidth is not None else self.gamma(1)
            self.bw_scale = 1 / full

    def access(self, subset) -> Fraction:
        return sum((self.costs[i] for i in subset), Fraction(0)) * self.access_scale

    def bandwidth(self, p: int) -> Fraction:
        return self.gamma(p) * self.bw_scale

    def total(self, subset, p=None) -> Fraction:
        p = len(subset) if p is None else p
        return self.w.access * self.access(subset) + self.w.bandwidth * self.bandwidth(p)


def select_helpers(costs, gamma, weights=(Fraction(1, 2), Fraction(1, 2)), normalize=True,
                   full_bandwidth=None) -> SelectionResult:
    """Sort once, then scan prefixes ``p = 1..m``; O(m log m).

    ``gamma`` is a callable ``p -> blocks``, a sequence indexed from ``p = 1``,
    a mapping, or a :class:`BandwidthProfile` (its averages are used).
    ``full_bandwidth`` (``kL``) defaults to ``gamma(1)``.
    """
    obj = _Objective(costs, gamma, weights, normalize, full_bandwidth)
    order = sorted(range(obj.m), key=lambda i: (obj.costs[i], i))
    trace = tuple(obj.total(order[:p]) for p in range(1, obj.m + 1))
    best_p = min(range(obj.m), key=lambda q: (trace[q], q)) + 1
    chosen = tuple(sorted(order[:best_p]))
    return SelectionResult(best_p, chosen, obj.access(chosen), trace[best_p - 1], trace)


def select_helpers_bruteforce(costs, gamma, weights=(Fraction(1, 2), Fraction(1, 2)),
                              normalize=True, full_bandwidth=None,
                              subset_gamma=None) -> SelectionResult:
    """Exhaustive search over nonempty parity subsets.

    ``subset_gamma``, when given, maps a tuple of parity indices to its
    bandwidth, for codes whose cost depends on which parities are engaged.
    Ties go to the smaller set, then the lexicographically smaller one.
    """
    obj = _Objective(costs, gamma, weights, normalize, full_bandwidth)
    if obj.m > BRUTEFORCE_MAX:
        raise SelectionError(f"brute force limited to m <= {BRUTEFORCE_MAX}")
    best = None
    trace = []
    for p in range(1, obj.m + 1):
        best_p = None
        for s in combinations(range(obj.m), p):
            if subset_gamma is not None:
                val = (obj.w.access * obj.access(s)
                       + obj.w.bandwidth * _frac(subset_gamma(s)) * obj.bw_scale)
            else:
                val = obj.total(s)
            if best_p is None or val < best_p[0]:
                best_p = (val, s)
        trace.append(best_p[0])
        if best is None or best_p[0] < best[0]:
            best = best_p
    val, s = best
    return SelectionResult(len(s), s, obj.access(s), val, tuple(trace))


def cost_curve(costs, gamma, weights=(Fraction(1, 2), Fraction(1, 2)), normalize=True,
               full_bandwidth=None) -> list[tuple[int, Fraction, Fraction, Fraction]]:
    """Rows ``(p, access, bandwidth, total)`` for the cost-sorted prefixes."""
    obj = _Objective(costs, gamma, weights, normalize, full_bandwidth)
    order = sorted(range(obj.m), key=lambda i: (obj.costs[i], i))
    rows = []
    for p in range(1, obj.m + 1):
        a = obj.access(order[:p])
        b = obj.bandwidth(p)
        rows.append((p, a, b, obj.w.access * a + obj.w.bandwidth * b))
    return rows
