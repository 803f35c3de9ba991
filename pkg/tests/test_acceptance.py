"""Acceptance criteria 1-10, one test each.  Every test records a single
PASS/FAIL line (printed at the end of the pytest run) and asserts it."""
import itertools
import math
import random
import time
from fractions import Fraction
from math import isqrt

import numpy as np

from conftest import ACCEPTANCE
from _catalog import cases, S2 as C_S2, S3 as C_S3
from _gen import S2, S3, S6, ex_cmp, rand_bounded, rand_expr

from glerg.averaging import (FolnerSchedule, gowers_norm, lambda_prime_average,
                             prime_average, substitution_check, vdc_finitary)
from glerg.glf import (X, Floor, Interval, Linear, bound_interval, bounded_part,
                       eval_exact_many, eval_int_many, linear_part)
from glerg.indicators import indicator_box, indicator_ge, range_indicator
from glerg.joint import (JOINT, NOT_JOINT, check_joint, empirical_validate,
                         flip_counterexample, prime_joint_check)
from glerg.number_field import SymReal, SymVec
from glerg.systems import GlSeq, char_fn, prime_multi_average_l2, torus_rotation
from glerg.torus import build_rep, eval_rep_many, exact_char_limit


def report(num, ok, detail, secs, limit):
    within = secs < limit
    status = "PASS" if ok and within else "FAIL"
    line = f"criterion {num:>2}: {status}  {detail}  ({secs:.1f} s, limit {limit} s)"
    ACCEPTANCE[num] = line
    print(line)
    assert status == "PASS", line


def test_criterion_01_decomposition():
    t = time.time()
    rng = random.Random(20240101)
    ns = np.arange(-10 ** 4, 10 ** 4 + 1)
    bad = 0
    for _ in range(100):
        e = rand_expr(rng, weight=3)
        a = linear_part(e)
        iv = bound_interval(bounded_part(e))
        rest = eval_exact_many(e, ns) - SymVec.linear(a, SymReal(0), ns)
        bad += int((~iv.contains_many(rest)).sum())
    report(1, bad == 0, f"100 expressions x 20001 points, {bad} outside bound_interval",
           time.time() - t, 30)


def test_criterion_02_representation():
    t = time.time()
    rng = random.Random(7)
    ns = np.arange(-1000, 1001)
    bad = 0
    for _ in range(50):
        e = rand_bounded(rng, weight=3)
        rep = build_rep(e)
        bad += int((~eval_rep_many(rep, ns).equals(eval_exact_many(e, ns))).sum())
    report(2, bad == 0, f"50 bounded expressions x 2001 points, {bad} mismatches",
           time.time() - t, 60)


# (alpha, beta) catalog; the exact decision comes from exact_char_limit
ALFBET = [
    ("sqrt2", "sqrt2", S2, S2),
    ("sqrt2", "1", S2, SymReal(1)),
    ("sqrt2", "1/2", S2, SymReal(Fraction(1, 2))),
    ("sqrt2", "1/3", S2, SymReal(Fraction(1, 3))),
    ("sqrt2", "sqrt3", S2, S3),
    ("sqrt2", "sqrt2/2", S2, S2 / 2),
    ("sqrt2", "sqrt2/4", S2, S2 / 4),
    ("sqrt2", "1+sqrt2", S2, S2 + 1),
    ("sqrt2", "sqrt6", S2, S6),
    ("sqrt2", "sqrt3/2", S2, S3 / 2),
    ("sqrt3", "sqrt3", S3, S3),
    ("sqrt3", "1/2", S3, SymReal(Fraction(1, 2))),
    ("sqrt6", "sqrt6/3", S6, S6 / 3),
    ("1+sqrt2", "2-sqrt2", S2 + 1, 2 - S2),
    ("sqrt2/2", "sqrt2", S2 / 2, S2),
]


def test_criterion_03_alfbet():
    t = time.time()
    N = 10 ** 6
    ns = np.arange(1, N + 1)
    rows = []
    for an, bn, alpha, beta in ALFBET:
        phi = Floor(Linear(alpha, SymReal(0)))
        lim = exact_char_limit(phi, beta)
        m = eval_int_many(phi, ns).astype(np.float64)
        A = abs(np.mean(np.exp(2j * np.pi * np.mod(float(beta) * m, 1.0))))
        zero = lim.modulus < 1e-12
        ok = A < 0.01 if zero else A > 0.05
        rows.append(ok)
        print(f"  alpha={an:8s} beta={bn:8s} {lim.certificate:12s} |limit|={lim.modulus:.4f} |A_N|={A:.5f}")
    report(3, len(rows) >= 12 and all(rows),
           f"{sum(rows)}/{len(rows)} (alpha, beta) pairs agree at N=1e6", time.time() - t, 120)


def _brute_ge(e, a, ns):
    return np.array([1 if ex_cmp(e, int(n), a) >= 0 else 0 for n in ns])


def _brute_in(e, iv, ns):
    out = []
    for n in ns:
        ok = True
        if iv.lo is not None:
            c = ex_cmp(e, int(n), Fraction(int(iv.lo.numerator), int(iv.lo.denominator)))
            ok &= c > 0 or (c == 0 and iv.lo_closed)
        if iv.hi is not None:
            c = ex_cmp(e, int(n), Fraction(int(iv.hi.numerator), int(iv.hi.denominator)))
            ok &= c < 0 or (c == 0 and iv.hi_closed)
        out.append(1 if ok else 0)
    return np.array(out)


def _beatty_range(lo, hi):
    """Integers in [lo, hi] of the form floor(sqrt2 n), by integer arithmetic."""
    vals = set()
    top = hi + 2
    for n in range(0, top + 1):
        vals.add(isqrt(2 * n * n))
        vals.add(-isqrt(2 * n * n) - (0 if n == 0 else 1))
    return np.array([1 if m in vals else 0 for m in range(lo, hi + 1)])


def test_criterion_04_indicators():
    t = time.time()
    rng = random.Random(44)
    W = 1500
    ns = np.arange(-W, W + 1)
    bad = 0
    checked = 0
    for i in range(6):
        e = rand_bounded(rng, weight=2)
        a = Fraction(rng.randint(-3, 3), rng.randint(1, 4))
        ind = indicator_ge(e, a, window=W)
        bad += int((ind.values(ns) != _brute_ge(e, a, ns)).sum())
        checked += len(ns)
    for i in range(3):
        e1, e2 = rand_bounded(rng, weight=2), rand_bounded(rng, weight=1)
        box = [Interval(Fraction(-1, 2), Fraction(1, 2), True, False),
               Interval(Fraction(0), Fraction(1, 3), False, True)]
        ind = indicator_box([e1, e2], box, window=W)
        brute = _brute_in(e1, box[0], ns) & _brute_in(e2, box[1], ns)
        bad += int((ind.values(ns) != brute).sum())
        checked += len(ns)
    # Beatty range of floor(sqrt2 n)
    beatty = range_indicator(Floor(Linear(S2, SymReal(0))), n0=2000, window=5000)
    ms = np.arange(-5000, 5001)
    bad += int((beatty.values(ms) != _beatty_range(-5000, 5000)).sum())
    checked += len(ms)
    report(4, bad == 0, f"{checked} indicator values, {bad} mismatches", time.time() - t, 60)


def test_criterion_05_vdc():
    t = time.time()
    rng = random.Random(5)
    nrng = np.random.default_rng(5)
    bad = 0
    for i in range(1000):
        if i % 2 == 0:
            N, d = rng.randint(1, 12), rng.randint(1, 4)
            us = [[Fraction(rng.randint(-9, 9), rng.randint(1, 6)) for _ in range(d)] for _ in range(N)]
            lhs, rhs = vdc_finitary(us, exact=True)
        else:
            N = rng.randint(1, 60)
            U = nrng.normal(size=(N, 8)) + 1j * nrng.normal(size=(N, 8))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            lhs, rhs = vdc_finitary(U)
        bad += not (lhs <= rhs)
    report(5, bad == 0, f"1000 instances (500 exact rational), {bad} violations", time.time() - t, 10)


def brute_gowers(b, k, N):
    """Independent evaluator: plain loops, sum over n empty when N - |h| <= 0."""
    total = 0.0
    for h in itertools.product(range(1, N + 1), repeat=k):
        top = N - sum(h)
        s = 0.0
        for n in range(1, top + 1):
            p = 1.0
            for eps in itertools.product((0, 1), repeat=k):
                p *= b[n + sum(e * hh for e, hh in zip(eps, h)) - 1]
            s += p
        total += abs(s / N)
    return (total / N ** k) ** (1.0 / 2 ** k)


def test_criterion_06_gowers():
    t = time.time()
    rng = random.Random(6)
    worst = 0.0
    for _ in range(100):
        k = rng.randint(1, 3)
        N = rng.randint(1, 32)
        b = [rng.uniform(-1, 1) for _ in range(N)]
        worst = max(worst, abs(gowers_norm(b, k, N) - brute_gowers(b, k, N)))
    hand = abs(gowers_norm([1, 1, 1, 1], 1, 4) - math.sqrt(3 / 8))
    ok = worst <= 1e-12 and hand <= 1e-12
    report(6, ok, f"max diff {worst:.2e} over 100 instances, hand value diff {hand:.2e}",
           time.time() - t, 30)


def test_criterion_07_joint_catalog():
    t = time.time()
    ok = True
    for name, sys_, seqs, expected in cases():
        v = check_joint(sys_, seqs)
        rep = empirical_validate(sys_, seqs, N=10 ** 5, verdict=v)
        good = v.decision == expected and (v.decision not in (JOINT, NOT_JOINT) or rep["agree"])
        ok &= good
        print(f"  {name:45s} {v.decision:18s} max defect {rep['max_defect']:.5f} {rep['class']}")
    report(7, ok, f"{len(cases())} catalog cases, verdicts match defect classes at N=1e5",
           time.time() - t, 180)


def test_criterion_08_folner_independence():
    t = time.time()
    ok = True
    n = 0
    for name, sys_, seqs, expected in cases():
        v = check_joint(sys_, seqs)
        if v.decision not in (JOINT, NOT_JOINT):
            continue
        n += 1
        a = empirical_validate(sys_, seqs, N=10 ** 5, verdict=v)
        b = empirical_validate(sys_, seqs, N=10 ** 5, verdict=v,
                               schedule=FolnerSchedule.window())
        ok &= a["class"] == b["class"]
        print(f"  {name:45s} [1..N] {a['class']}  [N+1..2N] {b['class']}")
    report(8, ok and n > 0, f"{n} definite cases classified identically on both windows",
           time.time() - t, 120)


def test_criterion_09_primes():
    t = time.time()
    N = 10 ** 6
    s2 = float(np.sqrt(2))
    seqs_a = {
        "1": lambda n: np.ones(len(n)),
        "(-1)^n": lambda n: np.where(n % 2 == 0, 1.0, -1.0),
        "e(sqrt2 n)": lambda n: np.exp(2j * np.pi * np.mod(s2 * n, 1.0)),
        "frac(sqrt2 n)": lambda n: np.mod(s2 * n, 1.0),
        "1[frac(sqrt3 n) < 1/3]": lambda n: (np.mod(np.sqrt(3) * n, 1.0) < 1 / 3).astype(float),
    }
    da = max(abs(prime_average(f, N) - lambda_prime_average(f, N)) for f in seqs_a.values())

    # (b) rotation sqrt2, (T^p, T^2p), measured on f1 = f2 = chi_1
    rot = torus_rotation({"T": C_S2})
    rseq = [GlSeq([("T", X)]), GlSeq([("T", Linear(SymReal(2), SymReal(0)))])]
    chi = char_fn(rot, 1)
    db = prime_multi_average_l2(rot, rseq, [chi, chi], N)
    # full bank: witness (2, -1) shows the pair is not jointly ergodic
    full = prime_joint_check(rot, rseq, N=N, Ws=(1,))
    # a genuinely totally jointly ergodic pair on one circle
    pair = torus_rotation({"T1": C_S2, "T2": C_S3}, name="pair")
    pseq = [GlSeq([("T1", X)]), GlSeq([("T2", X)])]
    good = prime_joint_check(pair, pseq, N=N)

    # (c) flip map
    fc = flip_counterexample(N)
    ok_a = da < 0.05
    ok_b = db < 0.05 and not full["hypothesis"] and full["max_prime_defect"] > 0.4 \
        and good["hypothesis"] and good["max_prime_defect"] < 0.05
    ok_c = fc["defect_vs_Tf1_int_f2"] < 0.05 and fc["defect_vs_product_of_integrals"] > 0.4
    print(f"  (a) max |prime avg - Lambda' avg| = {da:.5f}")
    print(f"  (b) (T^p, T^2p) chi_1 x chi_1 defect {db:.5f}; full bank {full['max_prime_defect']:.3f}"
          f" (hypothesis {full['hypothesis']}); sqrt2/sqrt3 pair {good['max_prime_defect']:.5f}")
    print(f"  (c) flip: vs T f1 int f2 {fc['defect_vs_Tf1_int_f2']:.5f},"
          f" vs product of integrals {fc['defect_vs_product_of_integrals']:.3f}")
    report(9, ok_a and ok_b and ok_c,
           f"(a) {da:.4f} (b) {db:.4f}/{good['max_prime_defect']:.4f} "
           f"(c) {fc['defect_vs_Tf1_int_f2']:.4f}/{fc['defect_vs_product_of_integrals']:.3f}",
           time.time() - t, 180)


def test_criterion_10_substitution():
    t = time.time()
    s2 = math.sqrt(2)
    f = lambda s: np.sin(2 * np.pi * np.mod(s2 * s, 1.0))
    chk = substitution_check(f, lambda t: t ** 2, lambda s: 0.5 / np.sqrt(s), 1.0, 100.0)
    report(10, chk.diff < 0.02, f"plain {chk.plain:.6f} weighted {chk.weighted:.6f} diff {chk.diff:.2e}",
           time.time() - t, 30)
