import math
import random
from fractions import Fraction

import numpy as np
import pytest

from _catalog import CAT, fl, lin
from _gen import S2, S3, ex_eval, q4
from glerg.averaging import FORWARD, FolnerSchedule, cesaro_avg
from glerg.errors import NonCommuting, NotIntegerValued, UnknownHandle
from glerg.glf import X, eval_int_many, floor_, frac_
from glerg.systems import (FP_PRIMES, GlSeq, _mat_powers_mod, apply_glseq_to_character,
                           char_fn, char_key, char_mul, check_commuting,
                           cyclic_shift, eig_description, fn_eval, fn_integral, fn_l2, fn_sum,
                           glseq, int_matrix_power, inverse_times, lambda_multi_average_l2,
                           multi_average_l2, phase_expr, power_expr, prime_multi_average_l2,
                           product_fn, product_seq, product_system, record, static_chars,
                           toral_automorphism, torus_rotation)


def naive_power(A, m):
    M = np.eye(2, dtype=object)
    An = np.array(A, dtype=object)
    if m < 0:
        (a, b), (c, d) = A
        det = a * d - b * c
        An = np.array([[d * det, -b * det], [-c * det, a * det]], dtype=object)
        m = -m
    for _ in range(m):
        M = M.dot(An)
    return M


def test_orthonormality_grid():
    rot2 = torus_rotation({"T": (S2, S3)})
    g = (np.arange(64) + 0.5) / 64
    pts = [np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)]
    ks = [(0, 0), (1, 0), (0, 1), (2, -3), (-5, 7), (31, 1)]
    vals = {k: fn_eval(rot2, char_fn(rot2, k), pts) for k in ks}
    for a in ks:
        for b in ks:
            ip = np.mean(vals[a] * np.conj(vals[b]))
            assert abs(ip - (1 if a == b else 0)) < 1e-12


def test_cat_orbit_identity():
    rng = random.Random(1)
    At = ((2, 1), (1, 1))
    for m in range(-40, 41):
        P = int_matrix_power(CAT, m)
        assert np.array_equal(np.array(P, dtype=object), naive_power(CAT, m))
        # chi_k(A^m x) = chi_{(A^T)^m k}(x) on integer vectors
        Pt = int_matrix_power(At, m)
        for _ in range(3):
            k = (rng.randint(-9, 9), rng.randint(-9, 9))
            x = (rng.randint(-9, 9), rng.randint(-9, 9))
            Ax = (P[0][0] * x[0] + P[0][1] * x[1], P[1][0] * x[0] + P[1][1] * x[1])
            kt = (Pt[0][0] * k[0] + Pt[0][1] * k[1], Pt[1][0] * k[0] + Pt[1][1] * k[1])
            assert k[0] * Ax[0] + k[1] * Ax[1] == kt[0] * x[0] + kt[1] * x[1]
    assert int_matrix_power(CAT, 2) == ((5, 3), (3, 2))


def test_fingerprint_powers():
    Ps = np.array([-57, -3, 0, 1, 2, 40, 41, 999], dtype=np.int64)
    tab = _mat_powers_mod(((2, 1), (1, 1)), Ps)
    for i, P in enumerate(Ps):
        M = int_matrix_power(((2, 1), (1, 1)), int(P))
        for pi, p in enumerate(FP_PRIMES):
            assert tab[i, pi].tolist() == [[v % p for v in r] for r in M]


def test_phase_against_oracle():
    rot = torus_rotation({"T": S2, "S": S3 / 2})
    seq = GlSeq([("T", fl(S2)), ("S", lin(3))])
    for n in range(-30, 31):
        ph, k2 = apply_glseq_to_character(rot, seq, ((2,),), n)
        fn = int(ex_eval(floor_(S2 * X), n)[0])
        want = 2 * fn * S2 + 2 * 3 * n * S3 / 2
        assert ph == want.frac()
        assert k2 == ((2,),)
    # phase additivity: T^(a+b) = T^a T^b
    one = torus_rotation({"T": S2})
    for a, b in [(3, 4), (-7, 2), (10, -10)]:
        pa, _ = apply_glseq_to_character(one, GlSeq([("T", X)]), ((1,),), a)
        pb, _ = apply_glseq_to_character(one, GlSeq([("T", X)]), ((1,),), b)
        pab, _ = apply_glseq_to_character(one, GlSeq([("T", X)]), ((1,),), a + b)
        assert (pa + pb).frac() == pab
    # phase_expr reproduces the same numbers
    th = phase_expr(rot, seq, ((2,),))
    for n in range(-5, 6):
        ph, _ = apply_glseq_to_character(rot, seq, ((2,),), n)
        assert q4(ph) == ex_eval(frac_(th), n)


def test_flip_phase():
    flip = cyclic_shift(2, {"T": 1})
    seq = GlSeq([("T", fl(S2))])
    ph, _ = apply_glseq_to_character(flip, seq, ((1,),), 5)   # floor(5 sqrt2) = 7
    assert ph == Fraction(1, 2)


def test_cat_exact_action():
    cat = toral_automorphism(CAT)
    ph, k = apply_glseq_to_character(cat, GlSeq([("T", lin(2))]), ((1, 0),), 1)
    assert k == ((5, 3),) and ph == 0


def test_single_sequence_matches_cesaro():
    rot = torus_rotation({"T": S2})
    e = fl(S3)
    seq = GlSeq([("T", e)])
    N = 20000
    s2 = math.sqrt(2)
    for sched in (FORWARD, FolnerSchedule.window()):
        d = multi_average_l2(rot, [seq], [char_fn(rot, 1)], sched, N)
        ref = cesaro_avg(lambda n: np.exp(2j * np.pi * np.mod(eval_int_many(e, n) * s2, 1.0)), sched, N)
        assert d == pytest.approx(abs(ref), abs=1e-9)


def brute_defect(A, seqs, ks, ns):
    """Average of prod_i T^{P_i(n)} chi_{k_i} on a cat-map system, by exact
    integer frequency vectors, minus the product of integrals."""
    At = ((A[0][0], A[1][0]), (A[0][1], A[1][1]))
    acc = {}
    for n in ns:
        tot = [0, 0]
        for e, k in zip(seqs, ks):
            P = int(ex_eval(e, int(n))[0])
            M = int_matrix_power(At, P)
            tot[0] += M[0][0] * k[0] + M[0][1] * k[1]
            tot[1] += M[1][0] * k[0] + M[1][1] * k[1]
        acc[tuple(tot)] = acc.get(tuple(tot), 0) + 1 / len(ns)
    target = 1.0 if all(k == (0, 0) for k in ks) else 0.0
    acc[(0, 0)] = acc.get((0, 0), 0) - target
    return math.sqrt(sum(v * v for v in acc.values()))


def test_cat_average_against_brute_force():
    cat = toral_automorphism(CAT)
    exps = [fl(S2), fl(S3)]
    seqs = [GlSeq([("T", e)]) for e in exps]
    ns = np.arange(1, 61)
    for ks in [((1, 0), (0, 1)), ((1, 1), (-1, -1)), ((0, 0), (2, 1))]:
        d = multi_average_l2(cat, seqs, [char_fn(cat, k) for k in ks], FORWARD, 60)
        assert d == pytest.approx(brute_defect(CAT, exps, ks, ns), abs=1e-12)
    # T^n chi_k times T^n chi_{-k} is the constant 1
    same = [GlSeq([("T", X)]), GlSeq([("T", X)])]
    assert multi_average_l2(cat, same, [char_fn(cat, (1, 0)), char_fn(cat, (-1, 0))], FORWARD, 50) \
        == pytest.approx(1.0)


def test_rotation_pair_defects():
    rot = torus_rotation({"T": S2})
    seqs = [GlSeq([("T", X)]), GlSeq([("T", lin(2))])]
    d = multi_average_l2(rot, seqs, [char_fn(rot, 1), char_fn(rot, 1)], FORWARD, 10 ** 5)
    assert d < 1e-4
    w = multi_average_l2(rot, seqs, [char_fn(rot, 2), char_fn(rot, -1)], FORWARD, 10 ** 5)
    assert w == pytest.approx(1.0)


def test_prime_and_lambda_averages():
    rot = torus_rotation({"T": S2})
    seqs = [GlSeq([("T", X)])]
    assert prime_multi_average_l2(rot, seqs, [char_fn(rot, 1)], 10 ** 5) < 0.01
    assert lambda_multi_average_l2(rot, seqs, [char_fn(rot, 0)], 10 ** 5) == pytest.approx(0, abs=0.02)


def test_functions():
    rot = torus_rotation({"T": S2})
    f = fn_sum((2, char_fn(rot, 0)), (1j, char_fn(rot, 3)))
    assert fn_integral(rot, f) == 2
    assert fn_l2(f) == pytest.approx(math.sqrt(5))
    flip = cyclic_shift(2, {"T": 1})
    assert char_mul(flip, ((1,),), ((1,),)) == ((0,),)
    P = product_system([rot, flip])
    pf = product_fn([char_fn(rot, 1), fn_sum((1, char_fn(flip, 0)), (1, char_fn(flip, 1)))])
    assert len(pf) == 2 and all(len(k) == 2 for k in pf)
    assert P.handles == ["T@1", "T@2"]


def test_sequences():
    s = GlSeq([("T", X), ("S", lin(2)), ("T", lin(-1))])
    assert s.handles == ["S"]
    assert str(glseq("T", fl(S2))) == "T^(floor(sqrt2*x))"
    inv = inverse_times(GlSeq([("T", X)]), GlSeq([("T", lin(3))]))
    assert inv.exps["T"] == lin(2)
    ps = product_seq([GlSeq([("T", X)]), GlSeq([("T", lin(2))])])
    assert ps.handles == ["T@1", "T@2"]
    with pytest.raises(NotIntegerValued):
        GlSeq([("T", S2 * X)])
    c = GlSeq([("T", fl(S2))]).compose(lin(2) + 1)
    assert c.exps["T"] == floor_(2 * S2 * X + S2)


def test_system_errors_and_spectra():
    rot = torus_rotation({"T": S2})
    with pytest.raises(UnknownHandle):
        multi_average_l2(rot, [GlSeq([("S", X)])], [char_fn(rot, 1)], FORWARD, 10)
    with pytest.raises(ValueError):
        toral_automorphism([[2, 0], [0, 1]])
    with pytest.raises(NonCommuting):
        check_commuting(CAT, {"R": (S2, S3)})
    cat = toral_automorphism(CAT)
    assert cat.blocks[0].ergodic
    assert not toral_automorphism([[1, 1], [0, 1]]).blocks[0].ergodic
    assert not toral_automorphism([[0, -1], [1, 0]]).blocks[0].ergodic
    assert eig_description(cat, "T").describe()["trivial"]
    flip = cyclic_shift(4, {"T": 1})
    chars = static_chars(flip, 2, halve=True)
    assert chars == [((1,),), ((2,),)]
    assert power_expr(cat.blocks[0], GlSeq([("T", lin(3))])) == lin(3)
    assert char_key(cat, ((1, 0),))[:2] == (1, 0)


def test_record_shape():
    rot = torus_rotation({"T": S2})
    r = record(rot, [GlSeq([("T", X)])], [char_fn(rot, 1)], 100, 0.01)
    assert r["seqs"] == [{"T": "x"}] and r["fns"][0][0]["freq"] == [[1]]
