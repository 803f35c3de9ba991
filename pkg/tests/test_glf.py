import random
from fractions import Fraction

import numpy as np
import pytest

from _gen import BASIS, S2, S3, ex_eval, q4, rand_expr
from glerg.dsl import parse_expr
from glerg.errors import NotBounded, NotIntegerValued
from glerg.glf import (Linear, Scale, Sum, X, bound_interval, bounded_part,
                       compose, diff_derivative, eval_exact, eval_exact_many,
                       eval_float, eval_int_many, floor_, frac_, is_bounded, linear_part,
                       normalize, sup_abs_bound, to_json, to_text, weight)
from glerg.number_field import SymReal, SymVec


def lin(a, b=0):
    return Linear(SymReal.of(a), SymReal.of(b))


def test_exact_eval_matches_independent_oracle():
    rng = random.Random(11)
    for _ in range(40):
        e = rand_expr(rng, weight=3)
        ns = [rng.randint(-10 ** 6, 10 ** 6) for _ in range(8)] + [0, 1, -1]
        vec = eval_exact_many(e, ns)
        for i, n in enumerate(ns):
            v = eval_exact(e, n)
            assert vec.at(i) == v
            assert q4(v) == ex_eval(e, n)


def test_linear_plus_bounded_identity():
    rng = random.Random(12)
    ns = np.arange(-300, 301)
    for _ in range(30):
        e = rand_expr(rng)
        a = linear_part(e)
        psi = bounded_part(e)
        assert is_bounded(psi)
        lhs = eval_exact_many(e, ns)
        rhs = SymVec.linear(a, 0, ns) + eval_exact_many(psi, ns)
        assert lhs.equals(rhs).all()
        assert bound_interval(psi).bounded


def test_decomposition_by_hand():
    e = floor_(S2 * X + Fraction(1, 3))
    assert linear_part(e) == S2
    assert to_text(bounded_part(e)) == "1/3 - frac(sqrt2*x + 1/3)"
    iv = bound_interval(bounded_part(e))
    assert (iv.lo, iv.hi) == (Fraction(-2, 3), Fraction(1, 3))
    assert iv.hi_closed and not iv.lo_closed


def test_weight():
    assert weight(lin(S2)) == 0
    assert weight(floor_(S2 * X)) == 1
    assert weight(frac_(floor_(S2 * X) * S3)) == 2
    assert weight(lin(1) + frac_(frac_(frac_(S2 * X)))) == 3


def test_normalize_merges():
    e = normalize(Sum((lin(S2, 1), lin(1, -1), Scale(SymReal(0), floor_(X)))))
    assert e == lin(S2 + 1, 0)
    assert normalize(Scale(SymReal(2), Scale(SymReal(3), frac_(S2 * X)))) == 6 * frac_(S2 * X)


def test_compose_and_diff():
    e = floor_(S2 * X) + frac_(S3 * X) * 2
    g = compose(e, lin(3, 1))
    for n in range(-50, 50):
        assert eval_exact(g, n) == eval_exact(e, 3 * n + 1)
    d = diff_derivative(e, 5)
    for n in range(-50, 50):
        assert eval_exact(d, n) == eval_exact(e, n + 5) - eval_exact(e, n)
    # the difference of floor(sqrt2 x) is bounded
    assert is_bounded(diff_derivative(floor_(S2 * X), 1))


def test_eval_int_many():
    v = eval_int_many(floor_(S2 * X), np.arange(0, 6))
    assert v.tolist() == [0, 1, 2, 4, 5, 7]
    with pytest.raises(NotIntegerValued):
        eval_int_many(frac_(S2 * X), np.arange(1, 3))


def test_eval_float():
    rng = random.Random(13)
    ns = np.arange(-200, 201)
    for _ in range(10):
        e = rand_expr(rng, weight=2)
        f = eval_float(e, ns)
        ex = eval_exact_many(e, ns).to_float()
        assert np.allclose(f, ex, atol=1e-6)
    # rational near-integers are resolved exactly
    assert eval_float(floor_(lin(Fraction(1, 3)) * 3), 1) == 1.0


def test_sup_abs():
    assert sup_abs_bound(frac_(S2 * X) * 3 - 1) == 2
    with pytest.raises(NotBounded):
        sup_abs_bound(floor_(S2 * X))


def test_text_round_trip():
    rng = random.Random(14)
    for _ in range(60):
        e = rand_expr(rng)
        assert parse_expr(to_text(e), BASIS) == e


def test_json_shape():
    j = to_json(floor_(S2 * X + 1))
    assert j["node"] == "Floor"
    assert j["e"] == {"node": "Linear", "a": "sqrt2", "b": "1"}


def test_operators():
    e = 2 * floor_(X * S2) - frac_(X) + 1
    assert eval_exact(e, 3) == 2 * 4 + 1
    with pytest.raises(TypeError):
        X * X
