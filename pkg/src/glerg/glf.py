"""Generalized linear functions of one integer variable.

Nodes: Linear(a, b) = a*x + b, Sum, Scale(c, e), Floor(e), Frac(e).
Coefficients are SymReals.  ``normalize`` flattens sums, fuses scales and
merges like terms, but never moves anything across a Floor or Frac.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from gmpy2 import mpq

from .errors import NotBounded
from .number_field import DEFAULT_BUDGET, Q, SymReal, SymVec, _merge_basis, floor_symreal

Num = Union[int, str, SymReal]

FLOAT_GUARD = 1e-6  # distance to an integer below which eval_float goes exact


class GlfExpr:
    """Base node.  Arithmetic operators build normalized expressions."""

    def __add__(self, other):
        return normalize(Sum((self, as_expr(other))))

    def __radd__(self, other):
        return normalize(Sum((as_expr(other), self)))

    def __neg__(self):
        return normalize(Scale(SymReal(-1), self))

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, c):
        if isinstance(c, GlfExpr):
            raise TypeError("only multiplication by constants keeps a GL-function")
        return normalize(Scale(SymReal.of(c), self))

    __rmul__ = __mul__

    @cached_property
    def weight(self) -> int:
        return weight(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Linear(GlfExpr):
    a: SymReal
    b: SymReal

    def __post_init__(self):
        object.__setattr__(self, "a", SymReal.of(self.a))
        object.__setattr__(self, "b", SymReal.of(self.b))


@dataclass(frozen=True)
class Sum(GlfExpr):
    terms: Tuple[GlfExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class Scale(GlfExpr):
    c: SymReal
    e: GlfExpr

    def __post_init__(self):
        object.__setattr__(self, "c", SymReal.of(self.c))


@dataclass(frozen=True)
class Floor(GlfExpr):
    e: GlfExpr


@dataclass(frozen=True)
class Frac(GlfExpr):
    e: GlfExpr


ZERO = Linear(SymReal(0), SymReal(0))
X = Linear(SymReal(1), SymReal(0))


def var() -> Linear:
    return X


def const(c: Num) -> Linear:
    return Linear(SymReal(0), SymReal.of(c))


def as_expr(v) -> GlfExpr:
    return v if isinstance(v, GlfExpr) else const(v)


def floor_(e) -> Floor:
    return Floor(normalize(as_expr(e)))


def frac_(e) -> Frac:
    return Frac(normalize(as_expr(e)))


# normalization -------------------------------------------------------------

def normalize(e: GlfExpr) -> GlfExpr:
    if isinstance(e, Linear):
        return e
    if isinstance(e, Floor):
        return Floor(normalize(e.e))
    if isinstance(e, Frac):
        return Frac(normalize(e.e))
    if isinstance(e, Scale):
        c = e.c
        if c == 0:
            return ZERO
        inner = normalize(e.e)
        if isinstance(inner, Linear):
            return Linear(c * inner.a, c * inner.b)
        if isinstance(inner, Scale):
            c = c * inner.c
            inner = inner.e
            if c == 0:
                return ZERO
        if c == 1:
            return inner
        return Scale(c, inner)
    if isinstance(e, Sum):
        flat = []
        for t in e.terms:
            t = normalize(t)
            if isinstance(t, Sum):
                flat.extend(t.terms)
            else:
                flat.append(t)
        a, b = SymReal(0), SymReal(0)
        order = []
        coef: Dict[GlfExpr, SymReal] = {}
        for t in flat:
            if isinstance(t, Linear):
                a, b = a + t.a, b + t.b
                continue
            c, core = (t.c, t.e) if isinstance(t, Scale) else (SymReal(1), t)
            if core in coef:
                coef[core] = coef[core] + c
            else:
                coef[core] = c
                order.append(core)
        out = []
        if a != 0 or b != 0:
            out.append(Linear(a, b))
        for core in order:
            c = coef[core]
            if c == 0:
                continue
            out.append(core if c == 1 else Scale(c, core))
        if not out:
            return ZERO
        if len(out) == 1:
            return out[0]
        return Sum(tuple(out))
    raise TypeError(f"not a GL-function node: {e!r}")


# structural operations -----------------------------------------------------

def weight(e: GlfExpr) -> int:
    if isinstance(e, Linear):
        return 0
    if isinstance(e, Sum):
        return max((weight(t) for t in e.terms), default=0)
    if isinstance(e, Scale):
        return weight(e.e)
    return 1 + weight(e.e)


def linear_part(e: GlfExpr) -> SymReal:
    """The slope a with e(n) = a*n + bounded."""
    if isinstance(e, Linear):
        return e.a
    if isinstance(e, Sum):
        acc = SymReal(0)
        for t in e.terms:
            acc = acc + linear_part(t)
        return acc
    if isinstance(e, Scale):
        return e.c * linear_part(e.e)
    if isinstance(e, Floor):
        return linear_part(e.e)
    return SymReal(0)


def _bp(e: GlfExpr) -> GlfExpr:
    if isinstance(e, Linear):
        return Linear(SymReal(0), e.b)
    if isinstance(e, Sum):
        return Sum(tuple(_bp(t) for t in e.terms))
    if isinstance(e, Scale):
        return Scale(e.c, _bp(e.e))
    if isinstance(e, Frac):
        return e
    # floor(f) = f - {f}
    return Sum((_bp(e.e), Scale(SymReal(-1), Frac(e.e))))


def bounded_part(e: GlfExpr) -> GlfExpr:
    """psi with e(n) = linear_part(e)*n + psi(n); built only from Fracs and constants."""
    return normalize(_bp(e))


def is_bounded(e: GlfExpr) -> bool:
    return linear_part(e) == 0


def compose(e: GlfExpr, inner: GlfExpr) -> GlfExpr:
    """Substitute ``inner`` for x."""

    def go(t):
        if isinstance(t, Linear):
            return Sum((Scale(t.a, inner), Linear(SymReal(0), t.b)))
        if isinstance(t, Sum):
            return Sum(tuple(go(s) for s in t.terms))
        if isinstance(t, Scale):
            return Scale(t.c, go(t.e))
        if isinstance(t, Floor):
            return Floor(go(t.e))
        return Frac(go(t.e))
    return normalize(go(e))


def diff_derivative(e: GlfExpr, h) -> GlfExpr:
    """n -> e(n + h) - e(n)."""
    shifted = compose(e, Linear(SymReal(1), SymReal.of(h)))
    return normalize(Sum((shifted, Scale(SymReal(-1), e))))


def basis_of(e: GlfExpr):
    """The irrational basis used by any coefficient, or None."""
    stack = [e]
    found = None
    while stack:
        t = stack.pop()
        if isinstance(t, Linear):
            found = _merge_basis(found, t.a.basis)
            found = _merge_basis(found, t.b.basis)
        elif isinstance(t, Sum):
            stack.extend(t.terms)
        elif isinstance(t, Scale):
            found = _merge_basis(found, t.c.basis)
            stack.append(t.e)
        else:
            stack.append(t.e)
    return found


def nodes(e: GlfExpr) -> Iterable[GlfExpr]:
    stack = [e]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, Sum):
            stack.extend(t.terms)
        elif not isinstance(t, Linear):
            stack.append(t.e)


# intervals -----------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Real interval with rational (or infinite, None) endpoints."""
    lo: Optional[mpq]
    hi: Optional[mpq]
    lo_closed: bool = True
    hi_closed: bool = True

    @staticmethod
    def everything() -> "Interval":
        return Interval(None, None, False, False)

    @staticmethod
    def point(q) -> "Interval":
        q = Q(q)
        return Interval(q, q, True, True)

    @property
    def bounded(self) -> bool:
        return self.lo is not None and self.hi is not None

    def __add__(self, o: "Interval") -> "Interval":
        lo = None if self.lo is None or o.lo is None else self.lo + o.lo
        hi = None if self.hi is None or o.hi is None else self.hi + o.hi
        return Interval(lo, hi, lo is not None and self.lo_closed and o.lo_closed,
                        hi is not None and self.hi_closed and o.hi_closed)

    def scale(self, c: SymReal) -> "Interval":
        if c.is_rational:
            q = c.q0
            if q == 0:
                return Interval.point(0)
            lo = None if self.lo is None else self.lo * q
            hi = None if self.hi is None else self.hi * q
            if q > 0:
                return Interval(lo, hi, self.lo_closed, self.hi_closed)
            return Interval(hi, lo, self.hi_closed, self.lo_closed)
        cl, ch = c.enclosure(64)
        if not self.bounded:
            if cl > 0 or ch < 0:
                pos = cl > 0
                lo, hi = (self.lo, self.hi) if pos else (self.hi, self.lo)
                def mulend(v, side):
                    if v is None:
                        return None
                    ps = (v * cl, v * ch)
                    return min(ps) if side == "lo" else max(ps)
                lo2 = mulend(lo, "lo")
                hi2 = mulend(hi, "hi")
                return Interval(lo2, hi2, lo2 is not None, hi2 is not None)
            return Interval.everything()
        ps = (self.lo * cl, self.lo * ch, self.hi * cl, self.hi * ch)
        return Interval(min(ps), max(ps), True, True)

    def contains(self, x) -> bool:
        x = SymReal.of(x)
        if self.lo is not None:
            s = (x - self.lo).sign()
            if s < 0 or (s == 0 and not self.lo_closed):
                return False
        if self.hi is not None:
            s = (x - self.hi).sign()
            if s > 0 or (s == 0 and not self.hi_closed):
                return False
        return True

    def contains_many(self, v: SymVec) -> np.ndarray:
        ok = np.ones(v.size, dtype=bool)
        if self.lo is not None:
            s = (v - SymVec.const(self.lo, v.size)).sign()
            ok &= (s > 0) | ((s == 0) & self.lo_closed)
        if self.hi is not None:
            s = (v - SymVec.const(self.hi, v.size)).sign()
            ok &= (s < 0) | ((s == 0) & self.hi_closed)
        return ok

    def sup_abs(self) -> mpq:
        if not self.bounded:
            raise NotBounded("interval is unbounded")
        return max(abs(self.lo), abs(self.hi))

    def __str__(self):
        l = "[" if self.lo_closed else "("
        r = "]" if self.hi_closed else ")"
        lo = "-inf" if self.lo is None else _q(self.lo)
        hi = "inf" if self.hi is None else _q(self.hi)
        return f"{l}{lo}, {hi}{r}"


def _q(q) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def bound_interval(e: GlfExpr) -> Interval:
    """Sound (not tight) enclosure of the range of e over all integers."""
    if isinstance(e, Linear):
        if e.a != 0:
            return Interval.everything()
        if e.b.is_rational:
            return Interval.point(e.b.q0)
        lo, hi = e.b.enclosure(64)
        return Interval(lo, hi)
    if isinstance(e, Sum):
        acc = Interval.point(0)
        for t in e.terms:
            acc = acc + bound_interval(t)
        return acc
    if isinstance(e, Scale):
        return bound_interval(e.e).scale(e.c)
    if isinstance(e, Frac):
        return Interval(mpq(0), mpq(1), True, False)
    inner = bound_interval(e.e)
    if not inner.bounded:
        return Interval.everything()
    lo = mpq(inner.lo.numerator // inner.lo.denominator)
    h = inner.hi
    hi = mpq(h.numerator // h.denominator)
    if not inner.hi_closed and h.denominator == 1:
        hi -= 1
    return Interval(lo, hi)


def sup_abs_bound(e: GlfExpr) -> mpq:
    """Rational upper bound for sup |e| of a bounded expression."""
    if not is_bounded(e):
        raise NotBounded(f"{to_text(e)} is unbounded")
    direct = bound_interval(e)
    if direct.bounded:
        return direct.sup_abs()
    return bound_interval(bounded_part(e)).sup_abs()


# evaluation ----------------------------------------------------------------

def eval_exact(e: GlfExpr, n: int, budget: int = DEFAULT_BUDGET) -> SymReal:
    n = int(n)
    if isinstance(e, Linear):
        return e.a * n + e.b
    if isinstance(e, Sum):
        acc = SymReal(0)
        for t in e.terms:
            acc = acc + eval_exact(t, n, budget)
        return acc
    if isinstance(e, Scale):
        return e.c * eval_exact(e.e, n, budget)
    v = eval_exact(e.e, n, budget)
    f = floor_symreal(v, budget)
    if isinstance(e, Floor):
        return SymReal(f)
    return v - f


def eval_exact_many(e: GlfExpr, ns, budget: int = DEFAULT_BUDGET) -> SymVec:
    """Exact values at many integers at once."""
    ns = np.asarray(ns)
    obj = np.empty(len(ns), dtype=object)
    obj[:] = [int(v) for v in ns]
    memo: Dict[int, SymVec] = {}

    def go(t) -> SymVec:
        k = id(t)
        if k in memo:
            return memo[k]
        if isinstance(t, Linear):
            r = SymVec.linear(t.a, t.b, obj)
        elif isinstance(t, Sum):
            r = go(t.terms[0])
            for s in t.terms[1:]:
                r = r + go(s)
        elif isinstance(t, Scale):
            r = go(t.e).scale(t.c)
        else:
            v = go(t.e)
            f = v.floor(budget)
            r = f if isinstance(t, Floor) else v - f
        memo[k] = r
        return r
    return go(e)


def eval_int_many(e: GlfExpr, ns) -> np.ndarray:
    """Exact integer values as int64; raises if some value is not an integer."""
    from .errors import NotIntegerValued
    v = eval_exact_many(e, ns)
    ok = v.is_integer()
    if not ok.all():
        bad = int(np.asarray(ns)[~ok][0])
        raise NotIntegerValued(f"{to_text(e)} is not an integer at n={bad}")
    return v.ints().astype(np.int64)


def eval_float(e: GlfExpr, n, budget: int = DEFAULT_BUDGET):
    """Float evaluation; floors of near-integers are decided exactly.

    Accepts a scalar or an integer array.
    """
    scalar = np.ndim(n) == 0
    ns = np.atleast_1d(np.asarray(n, dtype=np.int64))
    nf = ns.astype(float)

    def go(t):
        if isinstance(t, Linear):
            return float(t.a) * nf + float(t.b)
        if isinstance(t, Sum):
            acc = go(t.terms[0])
            for s in t.terms[1:]:
                acc = acc + go(s)
            return acc
        if isinstance(t, Scale):
            return float(t.c) * go(t.e)
        v = go(t.e)
        f = np.floor(v)
        near = np.abs(v - np.rint(v)) < FLOAT_GUARD
        for i in np.flatnonzero(near):
            f[i] = float(floor_symreal(eval_exact(t.e, int(ns[i]), budget), budget))
            v[i] = float(eval_exact(t.e, int(ns[i]), budget))
        return f if isinstance(t, Floor) else v - f
    out = go(e)
    return float(out[0]) if scalar else out


# canonical text ------------------------------------------------------------

def _coef(c: SymReal) -> str:
    s = str(c)
    if len(c.terms) + (1 if c.q0 != 0 else 0) <= 1:
        return s
    return f"({s})"


def _atom(e: GlfExpr) -> str:
    s = to_text(e)
    return s if isinstance(e, (Floor, Frac)) else f"({s})"


def _term_texts(e: GlfExpr):
    if isinstance(e, Linear):
        out = []
        if e.a != 0:
            if e.a == 1:
                out.append("x")
            elif e.a == -1:
                out.append("-x")
            else:
                out.append(f"{_coef(e.a)}*x")
        if e.b != 0 or e.a == 0:
            out.append(_coef(e.b))
        return out
    if isinstance(e, Scale):
        if e.c == -1:
            return ["-" + _atom(e.e)]
        return [f"{_coef(e.c)}*{_atom(e.e)}"]
    if isinstance(e, Sum):
        out = []
        for t in e.terms:
            out.extend(_term_texts(t))
        return out
    name = "floor" if isinstance(e, Floor) else "frac"
    return [f"{name}({to_text(e.e)})"]


def to_text(e: GlfExpr) -> str:
    """DSL text that parses back to the same normalized expression."""
    parts = _term_texts(e)
    out = parts[0]
    for p in parts[1:]:
        out += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
    return out


def to_json(e: GlfExpr):
    """Tree form for machine consumption."""
    if isinstance(e, Linear):
        return {"node": "Linear", "a": str(e.a), "b": str(e.b)}
    if isinstance(e, Sum):
        return {"node": "Sum", "terms": [to_json(t) for t in e.terms]}
    if isinstance(e, Scale):
        return {"node": "Scale", "c": str(e.c), "e": to_json(e.e)}
    return {"node": type(e).__name__, "e": to_json(e.e)}
