import math
import random
from fractions import Fraction

import numpy as np
import pytest

from _gen import S2, S3, rand_bounded
from glerg.errors import NotBounded, PieceExplosion
from glerg.glf import X, eval_exact, eval_exact_many, eval_float, floor_, frac_
from glerg.number_field import SymReal
from glerg.torus import (almost_linearity_witness, besicovitch_approx, build_rep, char_limit,
                         closure_group, eval_rep, eval_rep_many, exact_char_limit, mean_value)


def orbit_mean(e, N=200_000, beta=None):
    v = eval_float(e, np.arange(1, N + 1))
    if beta is None:
        return float(np.mean(v))
    return complex(np.mean(np.exp(2j * np.pi * float(beta) * v)))


def test_eval_rep_scalar_and_vector():
    rng = random.Random(21)
    ns = np.arange(-200, 201)
    for _ in range(10):
        e = rand_bounded(rng, weight=2)
        rep = build_rep(e)
        assert eval_rep_many(rep, ns).equals(eval_exact_many(e, ns)).all()
        for n in (-77, 0, 5, 1234567):
            assert eval_rep(rep, n) == eval_exact(e, n)


def test_rational_coordinates_hit_boundaries():
    # orbit points of x/3 and x/2 land exactly on piece boundaries
    e = frac_(X * Fraction(1, 3) + frac_(X * Fraction(1, 2)) * Fraction(2, 3)) + frac_(S2 * X)
    rep = build_rep(e)
    ns = np.arange(-300, 301)
    assert eval_rep_many(rep, ns).equals(eval_exact_many(e, ns)).all()


def test_closure_group():
    Z = closure_group([S2, 2 * S2 + Fraction(1, 3)])
    assert Z.dim == 1 and Z.q == 3 and not Z.finite
    F = closure_group([SymReal(Fraction(1, 4)), SymReal(Fraction(1, 6))])
    assert F.finite and F.q == 12
    assert closure_group([S2, S3]).dim == 2


def test_mean_values():
    est = mean_value(frac_(S2 * X))
    assert abs(est.value - 0.5) < 1e-3
    # finite closure group: exact enumeration
    assert mean_value(frac_(X * Fraction(1, 3))).value == pytest.approx(1 / 3, abs=1e-15)
    e = floor_(frac_(S2 * X) * 3) + frac_(S3 * X + frac_(S2 * X))
    assert abs(mean_value(e).value - orbit_mean(e)) < 5e-3
    # dependent coordinates: frac(sqrt2 x) and frac(2 sqrt2 x)
    d = floor_(frac_(S2 * X) * 2 + frac_(2 * S2 * X) + Fraction(1, 3))
    assert abs(mean_value(d).value - orbit_mean(d)) < 5e-3


def test_exact_limits():
    s2x = S2 * X
    lim = exact_char_limit(s2x, SymReal(1))
    assert lim.certificate == "linear:nonint" and lim.value == 0
    lim = exact_char_limit(X * 3 + Fraction(1, 4), SymReal(1))
    assert lim.certificate == "linear:integer"
    assert abs(lim.value - 1j) < 1e-12
    lim = exact_char_limit(floor_(s2x), S2)
    assert lim.certificate == "alfbet:in"
    assert lim.modulus == pytest.approx(abs(math.sin(math.pi * math.sqrt(2)) / (math.pi * math.sqrt(2))))
    assert exact_char_limit(floor_(s2x), Fraction(1, 2)).certificate == "alfbet:out"
    assert exact_char_limit(frac_(frac_(s2x) * S3), 1) is None


def test_alfbet_against_orbit():
    phi = floor_(S2 * X + Fraction(1, 3))
    for beta in (S2, S2 / 2, S2 + 1, SymReal(Fraction(1, 3))):
        lim = exact_char_limit(phi, beta)
        assert abs(lim.value - orbit_mean(phi, beta=beta)) < 0.01


def test_numeric_char_limit():
    e = frac_(S2 * X + frac_(S3 * X) * Fraction(1, 2))
    lim = char_limit(e, SymReal(1), M=1 << 15)
    assert not lim.exact
    assert abs(lim.value - orbit_mean(e, beta=1)) < 0.01


def test_errors():
    with pytest.raises(NotBounded):
        build_rep(floor_(S2 * X))
    with pytest.raises(PieceExplosion):
        build_rep(frac_(S2 * X + frac_(S3 * X) * 7), cap=2)


def test_besicovitch():
    poly, err = besicovitch_approx(frac_(S2 * X), 0.1, N=20_000)
    assert err < 0.1
    ns = np.arange(20_000)
    assert np.mean(np.abs(eval_float(frac_(S2 * X), ns) - poly(ns).real)) < 0.1


def test_almost_linearity():
    phis = [frac_(S2 * X), frac_(S3 * X) * 2]
    w = almost_linearity_witness(phis, 0.2, N=5000)
    assert min(w.densities) > 0.8
    ns = np.arange(5000)
    for h in w.H_sample:
        for p, c in zip(phis, w.C):
            lhs = eval_exact_many(p, ns + h)
            rhs = eval_exact_many(p, ns)
            ok = [lhs.at(i) == rhs.at(i) + eval_exact(p, h) + c for i in range(0, 5000, 97)]
            assert np.mean(ok) > 0.7
