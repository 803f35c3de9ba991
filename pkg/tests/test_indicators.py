import random
from fractions import Fraction
from math import isqrt

import numpy as np
import pytest

from _gen import S2, S3, ex_cmp, rand_bounded
from glerg.errors import NotAnIndicator, NotBounded, NotIntegerValued
from glerg.glf import Interval, X, floor_, frac_, weight
from glerg.indicators import (UglExpr, indicator_box, indicator_ge, indicator_gt, indicator_le,
                              indicator_lt, range_indicator, u_and, u_not, u_or)

W = 400
NS = np.arange(-W, W + 1)


def brute(e, op, a):
    return np.array([1 if op(ex_cmp(e, int(n), a)) else 0 for n in NS])


def test_comparisons_random():
    rng = random.Random(3)
    for _ in range(8):
        e = rand_bounded(rng, weight=2)
        a = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        assert (indicator_ge(e, a, W).values(NS) == brute(e, lambda c: c >= 0, a)).all()
        assert (indicator_gt(e, a, W).values(NS) == brute(e, lambda c: c > 0, a)).all()
        assert (indicator_le(e, a, W).values(NS) == brute(e, lambda c: c <= 0, a)).all()
        assert (indicator_lt(e, a, W).values(NS) == brute(e, lambda c: c < 0, a)).all()


def test_ties_at_threshold():
    # frac(x/3) hits 1/3 exactly on a residue class
    e = frac_(X * Fraction(1, 3))
    ge = indicator_ge(e, Fraction(1, 3), W).values(NS)
    gt = indicator_gt(e, Fraction(1, 3), W).values(NS)
    assert (ge == (NS % 3 != 0)).all()
    assert (gt == (NS % 3 == 2)).all()


def test_boolean_algebra():
    p = indicator_lt(frac_(S2 * X), Fraction(1, 2), W)
    q = indicator_ge(frac_(S3 * X), Fraction(1, 4), W)
    a, b = p.values(NS), q.values(NS)
    assert (u_not(p, W).values(NS) == 1 - a).all()
    assert (u_and(p, q, window=W).values(NS) == (a & b)).all()
    assert (u_or(p, q, window=W).values(NS) == (a | b)).all()
    assert weight(u_and(p, q, window=W).expr) <= 3


def test_box():
    e1, e2 = frac_(S2 * X), frac_(S3 * X + Fraction(1, 5))
    box = [Interval(Fraction(1, 4), Fraction(3, 4), True, False), Interval(None, Fraction(1, 2), False, True)]
    got = indicator_box([e1, e2], box, W).values(NS)
    want = brute(e1, lambda c: c >= 0, Fraction(1, 4)) & brute(e1, lambda c: c < 0, Fraction(3, 4)) \
        & brute(e2, lambda c: c <= 0, Fraction(1, 2))
    assert (got == want).all()
    empty = indicator_box([e1], [Interval(Fraction(1, 2), Fraction(1, 2), True, False)], W)
    assert not empty.values(NS).any()


def test_range_beatty():
    ind = range_indicator(floor_(S2 * X), n0=1000, window=3000)
    ms = np.arange(0, 3001)
    vals = {isqrt(2 * n * n) for n in range(0, 2200)}
    assert (ind.values(ms) == np.array([m in vals for m in ms])).all()


def test_range_negative_slope_and_shift():
    phi = floor_(-S3 * X + Fraction(1, 2)) * 2
    ind = range_indicator(phi, n0=600, window=1000)
    ms = np.arange(-1000, 1001)
    vals = set()
    for n in range(-700, 700):
        v = int(((-S3 * n + Fraction(1, 2)).floor())) * 2
        vals.add(v)
    assert (ind.values(ms) == np.array([m in vals for m in ms])).all()


def test_errors():
    with pytest.raises(NotAnIndicator):
        UglExpr(frac_(S2 * X), 100)
    with pytest.raises(NotBounded):
        indicator_ge(floor_(S2 * X), 0, 100)
    with pytest.raises(NotBounded):
        range_indicator(frac_(S2 * X) + 1)
    with pytest.raises(NotIntegerValued):
        range_indicator(S2 * X, n0=10, window=10)
