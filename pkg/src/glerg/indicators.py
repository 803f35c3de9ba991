"""Indicator functions of sets defined by GL-functions, built as GL-functions.

Every constructor returns a ``UglExpr``: a GL-expression certified to take
only the values 0 and 1 on a window of integers.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from gmpy2 import mpq

from .errors import NotAnIndicator, NotBounded, NotIntegerValued, RangeEstimateUnstable
from .glf import (Floor, GlfExpr, Interval, Linear, Scale, Sum, compose, eval_exact_many,
                  is_bounded, linear_part, normalize, sup_abs_bound, to_text)
from .number_field import SymReal, floor_symreal

DEFAULT_WINDOW = 10_000


class UglExpr:
    """A {0,1}-valued GL-expression."""

    def __init__(self, expr: GlfExpr, window: int = DEFAULT_WINDOW, certify: bool = True):
        self.expr = normalize(expr)
        self.window = window
        if certify:
            ns = np.arange(-window, window + 1)
            v = eval_exact_many(self.expr, ns)
            ok = v.is_integer()
            if ok.all():
                iv = v.ints()
                ok = (iv == 0) | (iv == 1)
            if not np.all(ok):
                bad = int(ns[~np.asarray(ok, dtype=bool)][0])
                raise NotAnIndicator(f"value outside {{0,1}} at n={bad}")

    def values(self, ns) -> np.ndarray:
        return eval_exact_many(self.expr, ns).ints().astype(np.int64)

    @property
    def weight(self) -> int:
        return self.expr.weight

    def __str__(self):
        return to_text(self.expr)

    def __repr__(self):
        return f"UglExpr({self})"


def _raw(p) -> GlfExpr:
    return p.expr if isinstance(p, UglExpr) else p


def _ceil_q(q: mpq) -> int:
    return -((-q.numerator) // q.denominator)


def _ge_expr(phi: GlfExpr, a) -> GlfExpr:
    a = SymReal.of(a)
    if not is_bounded(phi):
        raise NotBounded(f"{to_text(phi)} is unbounded")
    if a.is_rational:
        abs_a = abs(a.q0)
    else:
        lo, hi = a.enclosure(64)
        abs_a = max(abs(lo), abs(hi))
    c = mpq(_ceil_q(sup_abs_bound(phi) + abs_a) + 1)
    inner = Sum((Scale(SymReal(1 / c), phi), Linear(SymReal(0), 1 - a * (1 / c))))
    return normalize(Floor(inner))


def indicator_ge(phi, a, window: int = DEFAULT_WINDOW) -> UglExpr:
    """1 where phi(n) >= a, else 0, as floor((phi - a)/c + 1) with c > sup|phi| + |a|."""
    return UglExpr(_ge_expr(_raw(phi), a), window)


def indicator_gt(phi, a, window: int = DEFAULT_WINDOW) -> UglExpr:
    return u_not(indicator_ge(Scale(SymReal(-1), _raw(phi)), -SymReal.of(a), window), window)


def indicator_le(phi, a, window: int = DEFAULT_WINDOW) -> UglExpr:
    return indicator_ge(Scale(SymReal(-1), _raw(phi)), -SymReal.of(a), window)


def indicator_lt(phi, a, window: int = DEFAULT_WINDOW) -> UglExpr:
    return u_not(indicator_ge(_raw(phi), a, window), window)


def u_not(p, window: int = DEFAULT_WINDOW) -> UglExpr:
    return UglExpr(Sum((Linear(SymReal(0), SymReal(1)), Scale(SymReal(-1), _raw(p)))), window)


def u_or(*ps, window: int = DEFAULT_WINDOW) -> UglExpr:
    """p1 or p2 or ... = [p1 + p2 + ... >= 1]."""
    if not ps:
        return UglExpr(Linear(SymReal(0), SymReal(0)), window)
    if len(ps) == 1:
        return ps[0] if isinstance(ps[0], UglExpr) else UglExpr(ps[0], window)
    return UglExpr(_ge_expr(normalize(Sum(tuple(_raw(p) for p in ps))), 1), window)


def u_and(*ps, window: int = DEFAULT_WINDOW) -> UglExpr:
    """p1 and ... and pk = [p1 + ... + pk >= k]."""
    if not ps:
        return UglExpr(Linear(SymReal(0), SymReal(1)), window)
    if len(ps) == 1:
        return ps[0] if isinstance(ps[0], UglExpr) else UglExpr(ps[0], window)
    return UglExpr(_ge_expr(normalize(Sum(tuple(_raw(p) for p in ps))), len(ps)), window)


def indicator_box(phis: Sequence[GlfExpr], box: Sequence[Interval],
                  window: int = DEFAULT_WINDOW) -> UglExpr:
    """1 where (phi_1(n), ..., phi_k(n)) lies in the product of intervals."""
    if len(phis) != len(box):
        raise ValueError("one interval per function")
    conds = []
    for phi, iv in zip(phis, box):
        phi = _raw(phi)
        if iv.lo is not None and iv.hi is not None:
            if iv.lo > iv.hi or (iv.lo == iv.hi and not (iv.lo_closed and iv.hi_closed)):
                return UglExpr(Linear(SymReal(0), SymReal(0)), window)
        if iv.lo is not None:
            f = indicator_ge if iv.lo_closed else indicator_gt
            conds.append(f(phi, iv.lo, window))
        if iv.hi is not None:
            f = indicator_le if iv.hi_closed else indicator_lt
            conds.append(f(phi, iv.hi, window))
    return u_and(*conds, window=window)


def _xi_values(phi: GlfExpr, a: SymReal, N: int):
    ns = np.arange(-N, N + 1)
    v = eval_exact_many(phi, ns)
    if not v.is_integer().all():
        bad = int(ns[~v.is_integer()][0])
        raise NotIntegerValued(f"{to_text(phi)} is not integer at n={bad}")
    base = eval_exact_many(Floor(Linear(a, SymReal(0))), ns)
    return set(int(t) for t in (v - base).ints())


def range_indicator(phi: GlfExpr, n0: int = DEFAULT_WINDOW,
                    window: int = DEFAULT_WINDOW) -> UglExpr:
    """Indicator of the range {phi(n) : n in Z} of an integer-valued unbounded phi.

    The finite set K of values of phi(n) - floor(a n) is estimated on
    [-n0, n0] and confirmed on [-4 n0, 4 n0].
    """
    phi = normalize(_raw(phi))
    a = linear_part(phi)
    if a == 0:
        raise NotBounded("range_indicator needs an unbounded phi")
    if a < 0:
        phi = compose(phi, Linear(SymReal(-1), SymReal(0)))
        a = -a
    K1 = _xi_values(phi, a, n0)
    K2 = _xi_values(phi, a, 4 * n0)
    if K1 != K2:
        raise RangeEstimateUnstable(f"range of the bounded remainder moved: {sorted(K1)} vs {sorted(K2)}")
    inv = a.inverse()
    top = int(floor_symreal(inv)) + 1
    hits = []
    for i in range(0, top + 1):
        for j in sorted(K1):
            inner = Sum((Floor(Linear(inv, -inv * j)), Linear(SymReal(0), SymReal(i))))
            delta = normalize(Sum((Linear(SymReal(1), SymReal(0)), Scale(SymReal(-1), compose(phi, inner)))))
            hits.append(indicator_box([delta], [Interval.point(0)], window))
    return u_or(*hits, window=window)
