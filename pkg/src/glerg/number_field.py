"""Exact arithmetic in finite Q-spans of declared irrational reals.

A ``SymReal`` is ``q0 + sum c_m * m`` where ``m`` runs over monomials of
degree at most two in the generators of an ``IrrationalBasis``.  Floors and
signs are decided by refining rational interval enclosures of the
generators, never by trusting a float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import gmpy2
import mpmath
import numpy as np
from gmpy2 import mpq, mpz

from .errors import (BasisMismatch, RefinementBudgetExceeded,
                     UnsupportedInverse, UnsupportedProduct)

Mono = Tuple[str, ...]
Oracle = Callable[[int], Tuple[mpq, mpq]]

DEFAULT_BUDGET = 256


def Q(x) -> mpq:
    """Coerce ints, Fractions, decimal strings or 'p/q' strings to mpq."""
    if isinstance(x, type(mpq())):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("non-finite rational")
        return mpq(Fraction(x))
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    return mpq(x)


def _qstr(q: mpq) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _raw_to_mpq(raw) -> mpq:
    sign, man, exp, _ = raw
    man = -int(man) if sign else int(man)
    if exp >= 0:
        return mpq(int(man) << exp)
    return mpq(int(man), 1 << (-exp))


def quadratic_oracle(n: int) -> Oracle:
    """Nested dyadic enclosures of sqrt(n) from integer square roots."""
    n = int(n)
    if n <= 0 or gmpy2.is_square(n):
        raise ValueError(f"sqrt({n}) is not an irrational square root")

    def oracle(bits: int):
        s = gmpy2.isqrt(mpz(n) << (2 * bits))
        d = mpz(1) << bits
        return mpq(s, d), mpq(s + 1, d)
    return oracle


def pi_oracle() -> Oracle:
    def oracle(bits: int):
        ctx = mpmath.iv
        old = ctx.prec
        ctx.prec = bits + 20
        try:
            a, b = ctx.pi._mpi_
        finally:
            ctx.prec = old
        return _raw_to_mpq(a), _raw_to_mpq(b)
    return oracle


def _imul(a, b):
    ps = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(ps), max(ps)


class IrrationalBasis:
    """Named generators, their enclosure oracles and product rules.

    Generators are assumed linearly independent over Q together with 1 and
    with every formal degree-2 monomial that has no rule.
    """

    def __init__(self, allow_formal: bool = True):
        self.allow_formal = allow_formal
        self._oracles: Dict[str, Oracle] = {}
        self._kinds: Dict[str, str] = {}
        self._rules: Dict[Mono, "SymReal"] = {}
        self._encl: Dict[Tuple[str, int], Tuple[mpq, mpq]] = {}
        self._flt: Dict[Mono, float] = {}

    # declarations
    def add_quadratic(self, name: str, n: int) -> "SymReal":
        self._declare(name, quadratic_oracle(n), f"quadratic({int(n)})")
        return self.gen(name)

    def add_pi(self, name: str = "pi") -> "SymReal":
        self._declare(name, pi_oracle(), "pi")
        return self.gen(name)

    def add_custom(self, name: str, oracle: Oracle) -> "SymReal":
        self._declare(name, oracle, "custom")
        return self.gen(name)

    def _declare(self, name, oracle, kind):
        if not name.isidentifier() or name == "x":
            raise ValueError(f"bad generator name {name!r}")
        if name in self._oracles:
            raise ValueError(f"generator {name!r} already declared")
        self._oracles[name] = oracle
        self._kinds[name] = kind

    def add_rule(self, a: str, b: str, value) -> None:
        for g in (a, b):
            if g not in self._oracles:
                raise KeyError(g)
        value = self.coerce(value)
        key = tuple(sorted((a, b)))
        self._rules[key] = value
        self._flt.pop(key, None)

    @property
    def names(self) -> List[str]:
        return list(self._oracles)

    def kind(self, name: str) -> str:
        return self._kinds[name]

    @property
    def rules(self) -> Dict[Mono, "SymReal"]:
        return dict(self._rules)

    def gen(self, name: str) -> "SymReal":
        if name not in self._oracles:
            raise KeyError(name)
        return SymReal(0, {(name,): 1}, self)

    def coerce(self, x) -> "SymReal":
        if isinstance(x, SymReal):
            if x.basis is not None and x.basis is not self:
                raise BasisMismatch("value belongs to another basis")
            return x
        return SymReal(x)

    # products
    def mul_mono(self, m1: Mono, m2: Mono) -> "SymReal":
        gens = tuple(sorted(m1 + m2))
        return self._reduce(gens)

    def _reduce(self, gens: Mono) -> "SymReal":
        if len(gens) == 0:
            return SymReal(1)
        if len(gens) == 1:
            return SymReal(0, {gens: 1}, self)
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                key = (gens[i], gens[j])
                if key in self._rules:
                    rest = gens[:i] + gens[i + 1:j] + gens[j + 1:]
                    val = self._rules[key]
                    if not rest:
                        return val
                    return val * self._reduce(rest)
        if len(gens) == 2 and self.allow_formal:
            return SymReal(0, {gens: 1}, self)
        raise UnsupportedProduct("no rule for product " + "*".join(gens))

    # enclosures
    def gen_enclosure(self, name: str, bits: int) -> Tuple[mpq, mpq]:
        key = (name, bits)
        e = self._encl.get(key)
        if e is None:
            lo, hi = self._oracles[name](bits)
            lo, hi = Q(lo), Q(hi)
            if lo > hi:
                raise ValueError(f"oracle for {name} returned an empty interval")
            e = (lo, hi)
            self._encl[key] = e
        return e

    def mono_enclosure(self, m: Mono, bits: int) -> Tuple[mpq, mpq]:
        iv = self.gen_enclosure(m[0], bits)
        for g in m[1:]:
            iv = _imul(iv, self.gen_enclosure(g, bits))
        return iv

    def mono_float(self, m: Mono) -> float:
        v = self._flt.get(m)
        if v is None:
            lo, hi = self.mono_enclosure(m, 80)
            v = float((lo + hi) / 2)
            self._flt[m] = v
        return v


def standard_basis(allow_formal: bool = True) -> IrrationalBasis:
    """sqrt2, sqrt3, sqrt6 with the rules that close Q(sqrt2, sqrt3)."""
    B = IrrationalBasis(allow_formal=allow_formal)
    B.add_quadratic("sqrt2", 2)
    B.add_quadratic("sqrt3", 3)
    B.add_quadratic("sqrt6", 6)
    s2, s3, s6 = B.gen("sqrt2"), B.gen("sqrt3"), B.gen("sqrt6")
    B.add_rule("sqrt2", "sqrt2", 2)
    B.add_rule("sqrt3", "sqrt3", 3)
    B.add_rule("sqrt6", "sqrt6", 6)
    B.add_rule("sqrt2", "sqrt3", s6)
    B.add_rule("sqrt2", "sqrt6", s3 * 2)
    B.add_rule("sqrt3", "sqrt6", s2 * 3)
    return B


def _merge_basis(a, b):
    if a is None:
        return b
    if b is None or a is b:
        return a
    raise BasisMismatch("operands come from different irrational bases")


class SymReal:
    """Immutable element q0 + sum c_m m of a declared Q-span."""

    __slots__ = ("q0", "terms", "basis", "_h")

    def __init__(self, q0=0, terms=None, basis: Optional[IrrationalBasis] = None):
        self.q0 = Q(q0)
        items = []
        if terms:
            it = terms.items() if isinstance(terms, dict) else terms
            for m, c in it:
                c = Q(c)
                if c != 0:
                    items.append((tuple(m), c))
        items.sort()
        self.terms: Tuple[Tuple[Mono, mpq], ...] = tuple(items)
        if self.terms and basis is None:
            raise BasisMismatch("irrational terms need a basis")
        self.basis = basis if self.terms else None
        self._h = None

    # construction helpers
    @staticmethod
    def of(x) -> "SymReal":
        return x if isinstance(x, SymReal) else SymReal(x)

    @staticmethod
    def _coerce_op(x):
        if isinstance(x, (SymReal, int, Fraction, str)) or isinstance(x, type(mpq())) or isinstance(x, type(mpz())):
            return SymReal.of(x)
        return None

    @property
    def is_rational(self) -> bool:
        return not self.terms

    @property
    def coeffs(self) -> Dict[Mono, mpq]:
        return dict(self.terms)

    def rational(self) -> mpq:
        if self.terms:
            raise ValueError(f"{self} is not rational")
        return self.q0

    def irrational_part(self) -> "SymReal":
        return SymReal(0, self.terms, self.basis)

    # arithmetic
    def __add__(self, other):
        other = SymReal._coerce_op(other)
        if other is None:
            return NotImplemented
        basis = _merge_basis(self.basis, other.basis)
        d = dict(self.terms)
        for m, c in other.terms:
            d[m] = d.get(m, 0) + c
        return SymReal(self.q0 + other.q0, d, basis)

    __radd__ = __add__

    def __neg__(self):
        return SymReal(-self.q0, [(m, -c) for m, c in self.terms], self.basis)

    def __sub__(self, other):
        other = SymReal._coerce_op(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = SymReal._coerce_op(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if not isinstance(other, SymReal):
            if SymReal._coerce_op(other) is None:
                return NotImplemented
            q = Q(other)
            return SymReal(self.q0 * q, [(m, c * q) for m, c in self.terms], self.basis)
        if other.is_rational:
            return self * other.q0
        if self.is_rational:
            return other * self.q0
        basis = _merge_basis(self.basis, other.basis)
        acc: Dict[Mono, mpq] = {}
        q0 = self.q0 * other.q0
        for m, c in self.terms:
            acc[m] = acc.get(m, 0) + c * other.q0
        for m, c in other.terms:
            acc[m] = acc.get(m, 0) + c * self.q0
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                p = basis.mul_mono(m1, m2)
                q0 += c1 * c2 * p.q0
                for m, c in p.terms:
                    acc[m] = acc.get(m, 0) + c1 * c2 * c
        return SymReal(q0, acc, basis)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SymReal):
            if other.is_rational:
                return self * (1 / other.q0)
            return self * other.inverse()
        return self * (1 / Q(other))

    def __rtruediv__(self, other):
        return SymReal.of(other) * self.inverse()

    def inverse(self) -> "SymReal":
        """Multiplicative inverse inside the span closed under the rules."""
        if self.is_rational:
            if self.q0 == 0:
                raise ZeroDivisionError("inverse of 0")
            return SymReal(1 / self.q0)
        B = self.basis
        monos: List[Mono] = [()]
        seen = {()}
        frontier = [()]
        mine = [m for m, _ in self.terms]
        try:
            while frontier:
                nxt = []
                for a in frontier:
                    for b in mine:
                        p = B.mul_mono(a, b) if a else SymReal(0, {b: 1}, B)
                        for m, _ in p.terms:
                            if m not in seen:
                                seen.add(m)
                                monos.append(m)
                                nxt.append(m)
                if len(monos) > 32:
                    raise UnsupportedInverse(f"span of {self} does not close")
                frontier = nxt
        except UnsupportedProduct as exc:
            raise UnsupportedInverse(str(exc)) from None
        idx = {m: i for i, m in enumerate(monos)}
        k = len(monos)
        # column j holds self * monos[j]
        M = [[mpq(0)] * k for _ in range(k)]
        for j, m in enumerate(monos):
            basis_el = SymReal(1) if not m else SymReal(0, {m: 1}, B)
            prod = self * basis_el
            M[0][j] += prod.q0
            for mm, c in prod.terms:
                if mm not in idx:
                    raise UnsupportedInverse(f"span of {self} does not close")
                M[idx[mm]][j] += c
        rhs = [mpq(0)] * k
        rhs[0] = mpq(1)
        sol = _solve_rational(M, rhs)
        if sol is None:
            raise UnsupportedInverse(f"{self} is not invertible in its span")
        return SymReal(sol[0], {monos[i]: sol[i] for i in range(1, k)}, B)

    # comparisons and hashing (structural == value under independence)
    def _key(self):
        return (self.q0, self.terms)

    def __eq__(self, other):
        if isinstance(other, SymReal):
            return self._key() == other._key()
        try:
            o = Q(other)
        except (TypeError, ValueError):
            return NotImplemented
        return not self.terms and self.q0 == o

    def __hash__(self):
        if self._h is None:
            self._h = hash(self._key()) if self.terms else hash(Fraction(int(self.q0.numerator), int(self.q0.denominator)))
        return self._h

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __float__(self):
        v = float(self.q0)
        for m, c in self.terms:
            v += float(c) * self.basis.mono_float(m)
        return v

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # exact decisions
    def enclosure(self, bits: int) -> Tuple[mpq, mpq]:
        lo = hi = self.q0
        for m, c in self.terms:
            a, b = self.basis.mono_enclosure(m, bits)
            if c > 0:
                lo += c * a
                hi += c * b
            else:
                lo += c * b
                hi += c * a
        return lo, hi

    def _float_err(self):
        v = float(self.q0)
        mag = abs(v)
        for m, c in self.terms:
            t = float(c) * self.basis.mono_float(m)
            v += t
            mag += abs(t)
        return v, mag * 1e-14 * (len(self.terms) + 2) + 1e-300

    def floor(self, budget: int = DEFAULT_BUDGET) -> mpz:
        return floor_symreal(self, budget)

    def frac(self, budget: int = DEFAULT_BUDGET) -> "SymReal":
        return self - floor_symreal(self, budget)

    def sign(self, budget: int = DEFAULT_BUDGET) -> int:
        if not self.terms:
            return (self.q0 > 0) - (self.q0 < 0)
        v, err = self._float_err()
        if abs(v) > err:
            return 1 if v > 0 else -1
        bits = 32
        while bits <= budget:
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2
        raise RefinementBudgetExceeded(f"cannot decide sign of {self} within {budget} bits")

    # printing
    def __str__(self):
        return format_symreal(self)

    def __repr__(self):
        return f"SymReal({self})"


def _solve_rational(M, rhs):
    """Gaussian elimination over Q; None when singular."""
    k = len(rhs)
    A = [list(M[i]) + [rhs[i]] for i in range(k)]
    for col in range(k):
        piv = next((r for r in range(col, k) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(k):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [A[i][k] for i in range(k)]


def format_symreal(x: SymReal) -> str:
    """Canonical text form; parses back to the same value."""
    parts = []
    if x.q0 != 0 or not x.terms:
        parts.append(_qstr(x.q0))
    for m, c in x.terms:
        name = "*".join(m)
        if c == 1:
            s = name
        elif c == -1:
            s = "-" + name
        else:
            s = f"{_qstr(c)}*{name}"
        parts.append(s)
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def floor_symreal(x, budget: int = DEFAULT_BUDGET) -> mpz:
    """Exact floor.  Raises RefinementBudgetExceeded if precision runs out."""
    x = SymReal.of(x)
    if not x.terms:
        return mpz(x.q0.numerator // x.q0.denominator)
    v, err = x._float_err()
    if math.isfinite(v):
        a, b = math.floor(v - err), math.floor(v + err)
        if a == b:
            return mpz(a)
    bits = 32
    while bits <= budget:
        lo, hi = x.enclosure(bits)
        fl = lo.numerator // lo.denominator
        if hi < fl + 1:
            return mpz(fl)
        bits *= 2
    raise RefinementBudgetExceeded(f"cannot decide floor of {x} within {budget} bits")


def add(a, b) -> SymReal:
    return SymReal.of(a) + SymReal.of(b)


def scale(q, a) -> SymReal:
    return SymReal.of(a) * Q(q)


def mul(a, b) -> SymReal:
    return SymReal.of(a) * SymReal.of(b)


# membership tests of the form  alpha*beta in Z*alpha + (Q or Z)

def split_on(alpha: SymReal, x: SymReal) -> Optional[Tuple[mpq, mpq]]:
    """Return rationals (m, q) with x = m*alpha + q, or None.

    alpha must have an irrational part.
    """
    alpha, x = SymReal.of(alpha), SymReal.of(x)
    if alpha.is_rational:
        raise ValueError("alpha must be irrational")
    ac = alpha.coeffs
    xc = x.coeffs
    if set(xc) - set(ac):
        return None
    m0, c0 = alpha.terms[0]
    m = xc.get(m0, mpq(0)) / c0
    for mono, c in ac.items():
        if xc.get(mono, 0) != m * c:
            return None
    q = x.q0 - m * alpha.q0
    return m, q


def in_z_alpha_plus_q(alpha, beta) -> bool:
    """Decide alpha*beta in Z*alpha + Q."""
    s = split_on(alpha, SymReal.of(alpha) * SymReal.of(beta))
    return s is not None and s[0].denominator == 1


def in_z_alpha_plus_z(alpha, beta) -> bool:
    """Decide alpha*beta in Z*alpha + Z."""
    s = split_on(alpha, SymReal.of(alpha) * SymReal.of(beta))
    return s is not None and s[0].denominator == 1 and s[1].denominator == 1


# integer relations

def integer_kernel(rows: Sequence[Sequence[int]], d: int) -> List[List[int]]:
    """Basis of {m in Z^d : A m = 0} via unimodular column operations."""
    A = [[int(v) for v in r] for r in rows]
    cols = [[A[i][j] for i in range(len(A))] for j in range(d)]
    U = [[1 if i == j else 0 for i in range(d)] for j in range(d)]  # U[j] = column j
    k = 0
    for i in range(len(A)):
        if k >= d:
            break
        while True:
            nz = [j for j in range(k, d) if cols[j][i] != 0]
            if not nz:
                break
            p = min(nz, key=lambda j: abs(cols[j][i]))
            cols[k], cols[p] = cols[p], cols[k]
            U[k], U[p] = U[p], U[k]
            done = True
            for j in range(k + 1, d):
                if cols[j][i] != 0:
                    f = cols[j][i] // cols[k][i]
                    cols[j] = [a - f * b for a, b in zip(cols[j], cols[k])]
                    U[j] = [a - f * b for a, b in zip(U[j], U[k])]
                    if cols[j][i] != 0:
                        done = False
            if done:
                k += 1
                break
    return [list(u) for u in U[k:]]


@dataclass(frozen=True)
class RelationLattice:
    basis: Tuple[Tuple[int, ...], ...]
    values: Tuple[mpq, ...]

    @property
    def rank(self) -> int:
        return len(self.basis)


def relation_lattice(vs: Sequence) -> RelationLattice:
    """Lattice of m in Z^d with m.v rational, plus the value m.v per basis vector."""
    vs = [SymReal.of(v) for v in vs]
    d = len(vs)
    monos = sorted({m for v in vs for m, _ in v.terms})
    rows = []
    for mono in monos:
        r = [v.coeffs.get(mono, mpq(0)) for v in vs]
        l = 1
        for c in r:
            l = l * c.denominator // math.gcd(l, int(c.denominator))
        rows.append([int(c * l) for c in r])
    ker = integer_kernel(rows, d)
    ker = _size_reduce(ker)
    vals = tuple(sum((vs[j].q0 * m[j] for j in range(d)), mpq(0)) for m in ker)
    return RelationLattice(tuple(tuple(m) for m in ker), vals)


def _size_reduce(basis: List[List[int]]) -> List[List[int]]:
    """Cheap pairwise reduction so basis vectors stay short."""
    B = [list(b) for b in basis]
    changed = True
    while changed:
        changed = False
        for i in range(len(B)):
            for j in range(len(B)):
                if i == j:
                    continue
                nj = sum(x * x for x in B[j])
                if nj == 0:
                    continue
                dot = sum(x * y for x, y in zip(B[i], B[j]))
                f = round(dot / nj)
                if f:
                    cand = [x - f * y for x, y in zip(B[i], B[j])]
                    if sum(x * x for x in cand) < sum(x * x for x in B[i]):
                        B[i] = cand
                        changed = True
    for b in B:
        first = next((x for x in b if x), 0)
        if first < 0:
            b[:] = [-x for x in b]
    return B


# vectorized exact values ----------------------------------------------------

def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _obj(a) -> np.ndarray:
    arr = np.empty(len(a), dtype=object)
    arr[:] = [int(v) for v in a]
    return arr


def _mono_times(basis, m: Mono, k: Mono) -> SymReal:
    if m and k:
        return basis.mul_mono(m, k)
    if m or k:
        return SymReal(0, {m or k: 1}, basis)
    return SymReal(1)


class SymVec:
    """A vector of SymReals sharing one denominator: parts[m] / den.

    The monomial () carries the rational part.  Arrays hold python ints.
    """

    __slots__ = ("den", "parts", "basis", "size")

    def __init__(self, den: int, parts: Dict[Mono, np.ndarray], basis, size: int):
        self.den = int(den)
        self.parts = parts
        self.basis = basis
        self.size = size

    @staticmethod
    def const(x, size: int) -> "SymVec":
        x = SymReal.of(x)
        den = int(x.q0.denominator)
        for _, c in x.terms:
            den = _lcm(den, int(c.denominator))
        parts = {}
        parts[()] = np.full(size, int(x.q0 * den), dtype=object)
        for m, c in x.terms:
            parts[m] = np.full(size, int(c * den), dtype=object)
        return SymVec(den, parts, x.basis, size)

    @staticmethod
    def linear(a, b, ns: np.ndarray) -> "SymVec":
        """a*n + b for each n."""
        a, b = SymReal.of(a), SymReal.of(b)
        basis = _merge_basis(a.basis, b.basis)
        ns = _obj(ns) if not (isinstance(ns, np.ndarray) and ns.dtype == object) else ns
        den = int(a.q0.denominator * b.q0.denominator)
        for _, c in a.terms + b.terms:
            den = _lcm(den, int(c.denominator))
        ac, bc = a.coeffs, b.coeffs
        ac[()] = a.q0
        bc[()] = b.q0
        parts = {}
        for m in set(ac) | set(bc):
            ca, cb = ac.get(m, mpq(0)), bc.get(m, mpq(0))
            parts[m] = ns * int(ca * den) + int(cb * den)
        if () not in parts:
            parts[()] = np.zeros(len(ns), dtype=object)
        return SymVec(den, parts, basis, len(ns))

    @staticmethod
    def from_ints(vals) -> "SymVec":
        v = vals if (isinstance(vals, np.ndarray) and vals.dtype == object) else _obj(vals)
        return SymVec(1, {(): v}, None, len(v))

    def _rescale(self, den: int) -> Dict[Mono, np.ndarray]:
        f = den // self.den
        return {m: a * f for m, a in self.parts.items()} if f != 1 else dict(self.parts)

    def __add__(self, other: "SymVec") -> "SymVec":
        basis = _merge_basis(self.basis, other.basis)
        den = _lcm(self.den, other.den)
        p = self._rescale(den)
        for m, a in other._rescale(den).items():
            p[m] = p[m] + a if m in p else a
        return SymVec(den, p, basis, self.size)._reduce()

    def __neg__(self):
        return SymVec(self.den, {m: -a for m, a in self.parts.items()}, self.basis, self.size)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SymVec":
        c = SymReal.of(c)
        if c.is_rational:
            q = c.q0
            p = {m: a * int(q.numerator) for m, a in self.parts.items()}
            return SymVec(self.den * int(q.denominator), p, self.basis, self.size)._reduce()
        basis = _merge_basis(self.basis, c.basis)
        cterms = [((), c.q0)] + list(c.terms)
        contrib = []  # (mono, coeff mpq, source array)
        for m, a in self.parts.items():
            for k, r in cterms:
                if r == 0:
                    continue
                prod = _mono_times(basis, m, k)
                if prod.q0 != 0:
                    contrib.append(((), r * prod.q0, a))
                for mm, cc in prod.terms:
                    contrib.append((mm, r * cc, a))
        l = 1
        for _, w, _ in contrib:
            l = _lcm(l, int(w.denominator))
        out: Dict[Mono, np.ndarray] = {}
        for mm, w, a in contrib:
            t = a * int(w * l)
            out[mm] = out[mm] + t if mm in out else t
        if () not in out:
            out[()] = np.zeros(self.size, dtype=object)
        return SymVec(self.den * l, out, basis, self.size)._reduce()

    def _reduce(self) -> "SymVec":
        if self.den == 1:
            return self
        g = self.den
        for a in self.parts.values():
            for v in a:
                g = math.gcd(g, int(v))
                if g == 1:
                    return self
        if g > 1:
            return SymVec(self.den // g, {m: a // g for m, a in self.parts.items()}, self.basis, self.size)
        return self

    def irrational_zero(self) -> np.ndarray:
        z = np.ones(self.size, dtype=bool)
        for m, a in self.parts.items():
            if m:
                z &= (a == 0).astype(bool)
        return z

    def approx(self) -> Tuple[np.ndarray, np.ndarray]:
        """Float values and a rigorous-in-practice error bound."""
        v = np.zeros(self.size)
        mag = np.zeros(self.size)
        for m, a in self.parts.items():
            g = 1.0 if not m else self.basis.mono_float(m)
            t = a.astype(float) * g
            v += t
            mag += np.abs(t)
        v /= self.den
        mag /= self.den
        return v, mag * 1e-14 * (len(self.parts) + 2) + 1e-300

    def to_float(self) -> np.ndarray:
        return self.approx()[0]

    def at(self, i: int) -> SymReal:
        q0 = mpq(int(self.parts[()][i]), self.den)
        terms = {m: mpq(int(a[i]), self.den) for m, a in self.parts.items() if m}
        return SymReal(q0, terms, self.basis)

    def floor(self, budget: int = DEFAULT_BUDGET) -> "SymVec":
        rat = self.irrational_zero()
        out = np.empty(self.size, dtype=object)
        if rat.any():
            out[rat] = self.parts[()][rat] // self.den
        rest = np.flatnonzero(~rat)
        if rest.size:
            v, err = self.approx()
            lo = np.floor(v[rest] - err[rest])
            hi = np.floor(v[rest] + err[rest])
            ok = lo == hi
            for i, good, f in zip(rest, ok, lo):
                out[i] = int(f) if good else int(floor_symreal(self.at(i), budget))
        return SymVec(1, {(): out}, None, self.size)

    def frac(self, budget: int = DEFAULT_BUDGET) -> "SymVec":
        return self - self.floor(budget)

    def sign(self, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        out = np.zeros(self.size, dtype=np.int64)
        rat = self.irrational_zero()
        if rat.any():
            r = self.parts[()][rat]
            out[rat] = (r > 0).astype(np.int64) - (r < 0).astype(np.int64)
        rest = np.flatnonzero(~rat)
        if rest.size:
            v, err = self.approx()
            for i in rest:
                if abs(v[i]) > err[i]:
                    out[i] = 1 if v[i] > 0 else -1
                else:
                    out[i] = self.at(i).sign(budget)
        return out

    def is_integer(self) -> np.ndarray:
        return self.irrational_zero() & (self.parts[()] % self.den == 0).astype(bool)

    def ints(self) -> np.ndarray:
        """Integer values as an object array; caller ensures integrality."""
        return self.parts[()] // self.den

    def equals(self, other: "SymVec") -> np.ndarray:
        d = self - other
        z = np.ones(self.size, dtype=bool)
        for a in d.parts.values():
            z &= (a == 0).astype(bool)
        return z

    def take(self, idx) -> "SymVec":
        idx = np.asarray(idx)
        p = {m: a[idx] for m, a in self.parts.items()}
        return SymVec(self.den, p, self.basis, len(idx))
