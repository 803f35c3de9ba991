"""Random GL-expressions and an independent mpmath evaluator."""
import random
from fractions import Fraction

import mpmath

from glerg.glf import Floor, Frac, Linear, Scale, Sum, normalize
from glerg.number_field import SymReal, standard_basis

BASIS = standard_basis()
S2, S3, S6 = BASIS.gen("sqrt2"), BASIS.gen("sqrt3"), BASIS.gen("sqrt6")

mpmath.mp.dps = 60
_GEN = {"sqrt2": mpmath.sqrt(2), "sqrt3": mpmath.sqrt(3), "sqrt6": mpmath.sqrt(6)}
_IDX = {(): 0, ("sqrt2",): 1, ("sqrt3",): 2, ("sqrt6",): 3}
_RT = [mpmath.mpf(1), _GEN["sqrt2"], _GEN["sqrt3"], _GEN["sqrt6"]]
# e_i * e_j = c * e_k on the basis 1, sqrt2, sqrt3, sqrt6
_MUL = {(0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 1): (2, 0), (1, 2): (1, 3), (1, 3): (2, 2),
        (2, 2): (3, 0), (2, 3): (3, 1), (3, 3): (6, 0)}


def mp_of(c: SymReal):
    v = mpmath.mpf(int(c.q0.numerator)) / int(c.q0.denominator)
    for mono, q in c.terms:
        t = mpmath.mpf(1)
        for g in mono:
            t *= _GEN[g]
        v += t * int(q.numerator) / int(q.denominator)
    return v


def q4(c: SymReal):
    """Coordinates of c on 1, sqrt2, sqrt3, sqrt6 as Fractions."""
    out = [Fraction(int(c.q0.numerator), int(c.q0.denominator)), Fraction(0), Fraction(0), Fraction(0)]
    for mono, q in c.terms:
        out[_IDX[mono]] += Fraction(int(q.numerator), int(q.denominator))
    return tuple(out)


def _mul4(x, y):
    out = [Fraction(0)] * 4
    for i in range(4):
        if x[i] == 0:
            continue
        for j in range(4):
            if y[j] == 0:
                continue
            c, k = _MUL[(min(i, j), max(i, j))]
            out[k] += c * x[i] * y[j]
    return tuple(out)


def _floor4(x):
    if x[1] == x[2] == x[3] == 0:
        return x[0].numerator // x[0].denominator
    v = mpmath.fsum(mpmath.mpf(q.numerator) / q.denominator * r for q, r in zip(x, _RT))
    # an irrational number is never an integer; 60 digits leave a wide margin
    return int(mpmath.floor(v))


def ex_eval(e, n: int):
    """Exact value in Q(sqrt2, sqrt3) by independent coordinate arithmetic."""
    if isinstance(e, Linear):
        a, b = q4(e.a), q4(e.b)
        return tuple(ai * n + bi for ai, bi in zip(a, b))
    if isinstance(e, Sum):
        acc = (Fraction(0),) * 4
        for t in e.terms:
            acc = tuple(u + v for u, v in zip(acc, ex_eval(t, n)))
        return acc
    if isinstance(e, Scale):
        return _mul4(q4(e.c), ex_eval(e.e, n))
    v = ex_eval(e.e, n)
    f = _floor4(v)
    if isinstance(e, Floor):
        return (Fraction(f), Fraction(0), Fraction(0), Fraction(0))
    return (v[0] - f,) + v[1:]


def ex_sign(x) -> int:
    if x[1] == x[2] == x[3] == 0:
        return (x[0] > 0) - (x[0] < 0)
    return int(mpmath.sign(mpmath.fsum(mpmath.mpf(q.numerator) / q.denominator * r
                                       for q, r in zip(x, _RT))))


def ex_cmp(e, n: int, a) -> int:
    """Sign of e(n) - a for a rational a."""
    v = ex_eval(e, n)
    return ex_sign((v[0] - Fraction(a),) + v[1:])


def mp_eval(e, n: int):
    """High-precision float of ex_eval."""
    return mpmath.fsum(mpmath.mpf(q.numerator) / q.denominator * r for q, r in zip(ex_eval(e, n), _RT))


def rand_rational(rng, big=7):
    return SymReal(Fraction(rng.randint(-big, big), rng.randint(1, 5)))


def rand_coef(rng):
    k = rng.random()
    q = rand_rational(rng)
    if k < 0.3:
        return q if q != 0 else SymReal(1)
    g = S2 if rng.random() < 0.5 else S3
    c = SymReal(Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 4)))
    return c * g + (q if k > 0.7 else 0)


def rand_expr(rng, weight=3, bounded=False):
    """Random expression of weight <= weight (nesting depth of brackets)."""
    terms = []
    a = SymReal(0) if bounded else rand_coef(rng)
    terms.append(Linear(a, rand_rational(rng)))
    if weight > 0:
        for _ in range(rng.randint(1, 2)):
            inner = rand_expr(rng, rng.randint(0, weight - 1))
            node = Frac(inner) if (bounded or rng.random() < 0.5) else Floor(inner)
            terms.append(Scale(rand_coef(rng), node))
    return normalize(Sum(tuple(terms)))


def rand_bounded(rng, weight=3):
    return rand_expr(rng, weight, bounded=True)


def gen_exprs(seed, count, **kw):
    rng = random.Random(seed)
    return [rand_expr(rng, **kw) for _ in range(count)]
