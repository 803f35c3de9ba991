"""Dynamical representation of GL-functions on a torus.

A bounded GL-function psi is written psi(n) = F(n u mod 1) with F piecewise
affine on convex pieces of [0,1)^d.  Pieces are cut by half-spaces whose
normals and offsets are SymReals, closed on the lower side of a level and
open on the upper side.  Along the orbit n u, values are exact.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from gmpy2 import mpq
from scipy.optimize import linprog
from scipy.stats import qmc

from .errors import (CutoffExceeded, NoInteriorPiece, NotBounded, PieceExplosion,
                     PointOnNoPiece)
from .glf import (Floor, Frac, GlfExpr, Linear, Scale, Sum, eval_exact_many, eval_float,
                  is_bounded, normalize, to_text)
from .number_field import (RelationLattice, SymReal, SymVec, floor_symreal, integer_kernel,
                           relation_lattice, split_on)

PIECE_CAP = 10_000
LP_TOL = 1e-9
SNAP = 1e-9
ROBUST = 1e-9


@dataclass(frozen=True)
class HalfSpace:
    """normal . v < offset (strict) or <= offset."""
    normal: Tuple[SymReal, ...]
    offset: SymReal
    strict: bool


@dataclass(frozen=True)
class Piece:
    constraints: Tuple[HalfSpace, ...]
    L: Tuple[SymReal, ...]
    E: SymReal


@dataclass
class TorusRep:
    """phi(n) = slope*n + F(n u mod 1); F = L.v + E on each piece."""
    dim: int
    u: Tuple[SymReal, ...]
    pieces: Tuple[Piece, ...]
    slope: SymReal = SymReal(0)
    _compiled: Optional[tuple] = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "u": [str(x) for x in self.u],
            "slope": str(self.slope),
            "pieces": [{
                "constraints": [{"normal": [str(c) for c in h.normal], "offset": str(h.offset),
                                 "strict": h.strict} for h in p.constraints],
                "L": [str(c) for c in p.L],
                "E": str(p.E),
            } for p in self.pieces],
        }

    # float machinery
    def _compile(self):
        if self._compiled is None:
            rows, offs, strict, owner = [], [], [], []
            for k, p in enumerate(self.pieces):
                cons = p.constraints or (HalfSpace(tuple(SymReal(0) for _ in range(self.dim)), SymReal(1), False),)
                for h in cons:
                    rows.append([float(c) for c in h.normal])
                    offs.append(float(h.offset))
                    strict.append(h.strict)
                    owner.append(k)
            A = np.array(rows, dtype=float).reshape(len(rows), self.dim)
            starts = np.searchsorted(np.array(owner), np.arange(len(self.pieces)))
            Lm = np.array([[float(c) for c in p.L] for p in self.pieces], dtype=float).reshape(len(self.pieces), self.dim)
            Ev = np.array([float(p.E) for p in self.pieces])
            self._compiled = (A, np.array(offs), np.array(strict), starts, Lm, Ev)
        return self._compiled

    def locate_float(self, pts: np.ndarray) -> np.ndarray:
        """Piece index for each float point (rows of pts); -1 if none."""
        A, b, strict, starts, _, _ = self._compile()
        pts = _as_points(pts, self.dim)
        s = pts @ A.T - b
        s[np.abs(s) < SNAP] = 0.0
        ok = np.where(strict, s < 0, s <= 0)
        inside = np.logical_and.reduceat(ok, starts, axis=1) if len(starts) else np.zeros((len(pts), 0), bool)
        idx = np.argmax(inside, axis=1)
        idx[~inside.any(axis=1)] = -1
        return idx

    def eval_points(self, pts: np.ndarray) -> np.ndarray:
        """F at float torus points (the slope is ignored)."""
        _, _, _, _, Lm, Ev = self._compile()
        pts = _as_points(pts, self.dim)
        idx = self.locate_float(pts)
        if (idx < 0).any():
            # snapping can leave a boundary point outside every piece; nudge it
            bad = np.flatnonzero(idx < 0)
            idx[bad] = self.locate_float(np.mod(pts[bad] + 1e-9, 1.0))
            if (idx < 0).any():
                raise PointOnNoPiece(f"{int((idx < 0).sum())} sample points fell outside all pieces")
        return np.einsum("ij,ij->i", pts, Lm[idx]) + Ev[idx]


def _as_points(pts, d: int) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if d else pts.reshape(-1, 0)
    if pts.shape[1] != d:
        raise ValueError(f"points must have {d} coordinates")
    return pts


# building ------------------------------------------------------------------

class _Coords:
    """Registry of rotation numbers in [0,1), deduplicated by exact value."""

    def __init__(self):
        self.u: List[SymReal] = []
        self.index: Dict[SymReal, int] = {}

    def get(self, a: SymReal) -> int:
        if a not in self.index:
            self.index[a] = len(self.u)
            self.u.append(a)
        return self.index[a]


# a build-time piece: (constraints, L, E) with sparse dict normals
_HS = Tuple[Dict[int, SymReal], SymReal, bool]


@dataclass
class _P:
    cons: Tuple[_HS, ...]
    L: Dict[int, SymReal]
    E: SymReal


@dataclass
class _R:
    slope: SymReal
    pieces: List[_P]


def _addL(a: Dict[int, SymReal], b: Dict[int, SymReal], cb=None) -> Dict[int, SymReal]:
    out = dict(a)
    for k, v in b.items():
        v = v if cb is None else v * cb
        out[k] = out[k] + v if k in out else v
    return {k: v for k, v in out.items() if v != 0}


def _rational_ratio(x: SymReal, y: SymReal) -> Optional[mpq]:
    """lam in Q with x = lam*y, else None (y != 0)."""
    if y.is_rational:
        return x.q0 / y.q0 if x.is_rational and y.q0 != 0 else None
    m0, c0 = y.terms[0]
    lam = x.coeffs.get(m0, mpq(0)) / c0
    return lam if x == y * lam else None


def _parallel_empty(cons: Sequence[_HS]) -> bool:
    """Exact emptiness from pairs of opposite parallel constraints, box included."""
    allc = list(cons)
    for (n, o, s) in cons:
        if len(n) == 1:
            (j, c), = n.items()
            if c.is_rational:
                t = o * (1 / c.q0)
                if c.q0 > 0:  # x_j <= t  with x_j >= 0
                    sg = t.sign()
                    if sg < 0 or (sg == 0 and s):
                        return True
                else:  # x_j >= t with x_j < 1
                    if (t - 1).sign() >= 0:
                        return True
    for i in range(len(allc)):
        n1, o1, s1 = allc[i]
        if not n1:
            sg = o1.sign()
            if sg < 0 or (sg == 0 and s1):
                return True
            continue
        for j in range(i + 1, len(allc)):
            n2, o2, s2 = allc[j]
            if set(n1) != set(n2):
                continue
            k0 = next(iter(n1))
            lam = _rational_ratio(n2[k0], n1[k0])
            if lam is None or lam >= 0:
                continue
            if any(n2[k] != n1[k] * lam for k in n1):
                continue
            # n1.v <= o1 and n1.v >= o2/lam
            gap = (o2 * (1 / lam) - o1).sign()
            if gap > 0 or (gap == 0 and (s1 or s2)):
                return True
    return False


def _lp_arrays(cons: Sequence[_HS]):
    idx = sorted({k for n, _, _ in cons for k in n})
    pos = {k: i for i, k in enumerate(idx)}
    A = np.zeros((len(cons), len(idx)))
    b = np.zeros(len(cons))
    st = np.zeros(len(cons), bool)
    for r, (n, o, s) in enumerate(cons):
        for k, c in n.items():
            A[r, pos[k]] = float(c)
        b[r] = float(o)
        st[r] = s
    return idx, pos, A, b, st


def _feasible(cons: Sequence[_HS]) -> bool:
    """False only when the piece is certainly empty."""
    if not cons:
        return True
    if _parallel_empty(cons):
        return False
    idx, _, A, b, st = _lp_arrays(cons)
    d = len(idx)
    # maximize slack t on strict rows; non-strict rows relaxed a little
    A2 = np.hstack([A, st[:, None].astype(float)])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A2, b_ub=b + LP_TOL, bounds=[(0, 1)] * d + [(None, 1)], method="highs")
    if res.status == 2:
        return False
    if res.status != 0:
        return True
    return -res.fun > -LP_TOL


def _range(cons: Sequence[_HS], L: Dict[int, SymReal]) -> Tuple[float, float]:
    """Float range of L.v over the (relaxed) piece."""
    keys = sorted(set(L) | {k for n, _, _ in cons for k in n})
    if not cons:
        lo = sum(min(0.0, float(c)) for c in L.values())
        hi = sum(max(0.0, float(c)) for c in L.values())
        return lo, hi
    pos = {k: i for i, k in enumerate(keys)}
    A = np.zeros((len(cons), len(keys)))
    b = np.zeros(len(cons))
    for r, (n, o, _) in enumerate(cons):
        for k, cc in n.items():
            A[r, pos[k]] = float(cc)
        b[r] = float(o)
    cvec = np.zeros(len(keys))
    for k, cc in L.items():
        cvec[pos[k]] = float(cc)
    out = []
    for sgn in (1.0, -1.0):
        res = linprog(sgn * cvec, A_ub=A, b_ub=b + LP_TOL, bounds=[(0, 1)] * len(keys), method="highs")
        if res.status != 0:
            # treat as the box range; sound because it only adds levels
            lo = sum(min(0.0, float(c)) for c in L.values())
            hi = sum(max(0.0, float(c)) for c in L.values())
            return lo, hi
        out.append(sgn * res.fun)
    return out[0], out[1]


class _Builder:
    def __init__(self, cap: int = PIECE_CAP):
        self.coords = _Coords()
        self.cap = cap

    def _check(self, n):
        if n > self.cap:
            raise PieceExplosion(f"more than {self.cap} pieces")

    def build(self, e: GlfExpr) -> _R:
        if isinstance(e, Linear):
            return _R(e.a, [_P((), {}, e.b)])
        if isinstance(e, Scale):
            r = self.build(e.e)
            c = e.c
            return _R(r.slope * c, [_P(p.cons, {k: v * c for k, v in p.L.items()}, p.E * c) for p in r.pieces])
        if isinstance(e, Sum):
            acc = self.build(e.terms[0])
            for t in e.terms[1:]:
                acc = self._sum(acc, self.build(t))
            return acc
        r = self.build(e.e)
        return self._fracfloor(r, isinstance(e, Floor))

    def _sum(self, r1: _R, r2: _R) -> _R:
        out = []
        for p in r1.pieces:
            s1 = {k for n, _, _ in p.cons for k in n}
            for q in r2.pieces:
                s2 = {k for n, _, _ in q.cons for k in n}
                cons = p.cons + q.cons
                if (s1 & s2) and not _feasible(cons):
                    continue
                out.append(_P(cons, _addL(p.L, q.L), p.E + q.E))
                self._check(len(out))
        return _R(r1.slope + r2.slope, out)

    def _fracfloor(self, r: _R, is_floor: bool) -> _R:
        a = r.slope
        ap = a - floor_symreal(a)
        xk = None
        if ap != 0:
            xk = self.coords.get(ap)
        out = []
        for p in r.pieces:
            G_L = dict(p.L)
            if xk is not None:
                G_L = _addL(G_L, {xk: SymReal(1)})
            G_E = p.E
            if not G_L:
                k = floor_symreal(G_E)
                levels = [(int(k), p.cons)]
            else:
                lo, hi = _range(p.cons, G_L)
                lo += float(G_E)
                hi += float(G_E)
                levels = []
                for k in range(math.floor(lo - 1e-7), math.floor(hi + 1e-7) + 1):
                    neg = {i: -c for i, c in G_L.items()}
                    cons = p.cons + ((neg, G_E - k, False), (dict(G_L), SymReal(k + 1) - G_E, True))
                    if _feasible(cons):
                        levels.append((k, cons))
            for k, cons in levels:
                if is_floor:
                    # floor(f)(n) = slope*n + k - x_k on this sub-piece
                    L = {xk: SymReal(-1)} if xk is not None else {}
                    out.append(_P(cons, L, SymReal(k)))
                else:
                    out.append(_P(cons, G_L, G_E - k))
                self._check(len(out))
        return _R(a if is_floor else SymReal(0), out)

    def finish(self, r: _R) -> TorusRep:
        d = len(self.coords.u)

        def dense(m: Dict[int, SymReal]):
            return tuple(m.get(i, SymReal(0)) for i in range(d))
        pieces = tuple(Piece(tuple(HalfSpace(dense(n), o, s) for n, o, s in p.cons), dense(p.L), p.E)
                       for p in r.pieces)
        return TorusRep(d, tuple(self.coords.u), pieces, r.slope)


def build_rep(phi: GlfExpr, cap: int = PIECE_CAP, allow_unbounded: bool = False) -> TorusRep:
    """Torus representation of a bounded GL-function (or of its bounded part
    plus slope when allow_unbounded)."""
    phi = normalize(phi)
    if not allow_unbounded and not is_bounded(phi):
        raise NotBounded(f"{to_text(phi)} is unbounded")
    b = _Builder(cap)
    return b.finish(b.build(phi))


def build_joint(phis: Sequence[GlfExpr], cap: int = PIECE_CAP) -> List[TorusRep]:
    """Representations of several functions over one shared coordinate set."""
    b = _Builder(cap)
    raws = [b.build(normalize(p)) for p in phis]
    return [b.finish(r) for r in raws]


# evaluation ----------------------------------------------------------------

def orbit_point(rep: TorusRep, n: int) -> Tuple[SymReal, ...]:
    return tuple((a * n).frac() for a in rep.u)


def _piece_contains(p: Piece, v: Sequence[SymReal]) -> bool:
    for h in p.constraints:
        s = SymReal(0)
        for c, x in zip(h.normal, v):
            if c != 0:
                s = s + c * x
        sg = (s - h.offset).sign()
        if sg > 0 or (sg == 0 and h.strict):
            return False
    return True


def eval_rep(rep: TorusRep, n: int) -> SymReal:
    """Exact value slope*n + F(n u) at one integer."""
    v = orbit_point(rep, n)
    vf = np.array([[float(x) for x in v]]) if rep.dim else np.zeros((1, 0))
    # float prefilter, exact confirmation
    A, b, strict, starts, _, _ = rep._compile()
    s = (vf @ A.T - b)[0]
    order = list(range(len(rep.pieces)))
    hits = []
    for k in order:
        lo = starts[k]
        hi = starts[k + 1] if k + 1 < len(starts) else len(s)
        if np.any(s[lo:hi] > 1e-7):
            continue
        if _piece_contains(rep.pieces[k], v):
            hits.append(k)
            break
    if not hits:
        raise PointOnNoPiece(f"orbit point of n={n} lies in no piece")
    p = rep.pieces[hits[0]]
    val = rep.slope * n + p.E
    for c, x in zip(p.L, v):
        if c != 0:
            val = val + c * x
    return val


def _robust_owner(rep: TorusRep, coords: List[SymVec]) -> np.ndarray:
    """Piece index for points that lie inside a piece with a float margin
    that dominates rounding error; -1 where the exact test is needed."""
    A, b, _, starts, _, _ = rep._compile()
    N = coords[0].size if coords else 0
    owner = np.full(N, -1)
    if not coords or len(b) == 0:
        return owner
    pf = np.column_stack([c.to_float() for c in coords])
    margin = ROBUST * (1.0 + np.abs(A).sum(axis=1) + np.abs(b))
    chunk = max(1, 4_000_000 // len(b))
    for i0 in range(0, N, chunk):
        s = pf[i0:i0 + chunk] @ A.T - b
        inside = np.logical_and.reduceat(s < -margin, starts, axis=1)
        hit = inside.any(axis=1)
        blk = owner[i0:i0 + chunk]
        blk[hit] = np.argmax(inside[hit], axis=1)
    return owner


def eval_rep_many(rep: TorusRep, ns) -> SymVec:
    """Exact values along the orbit at many integers (vectorized).

    A float pass settles points that are clear of every boundary; the
    rest are placed by exact sign tests.
    """
    ns = np.asarray(ns)
    N = len(ns)
    coords = []
    for a in rep.u:
        v = SymVec.linear(a, 0, ns)
        coords.append(v - v.floor())
    owner = _robust_owner(rep, coords) if rep.dim else np.full(N, -1)
    remaining = np.flatnonzero(owner < 0)
    for k, p in enumerate(rep.pieces):
        if remaining.size == 0:
            break
        inside = np.ones(remaining.size, bool)
        for h in p.constraints:
            acc = SymVec.const(-h.offset, remaining.size)
            for c, x in zip(h.normal, coords):
                if c != 0:
                    acc = acc + x.take(remaining).scale(c)
            sg = acc.sign()
            inside &= (sg < 0) | ((sg == 0) & (not h.strict))
        owner[remaining[inside]] = k
        remaining = remaining[~inside]
    if remaining.size:
        raise PointOnNoPiece(f"orbit point of n={int(ns[remaining[0]])} lies in no piece")
    parts = []
    for k in np.unique(owner):
        p = rep.pieces[int(k)]
        sel = np.flatnonzero(owner == k)
        acc = SymVec.const(p.E, sel.size)
        for c, x in zip(p.L, coords):
            if c != 0:
                acc = acc + x.take(sel).scale(c)
        parts.append((sel, acc))
    return SymVec.linear(rep.slope, 0, ns) + _assemble(N, parts)


def _assemble(N: int, parts) -> SymVec:
    """SymVec of length N from disjoint (indices, values) parts."""
    from .number_field import _lcm, _merge_basis
    if not parts:
        return SymVec.const(0, N)
    den = 1
    basis = None
    for _, v in parts:
        den = _lcm(den, v.den)
        basis = v.basis if basis is None else _merge_basis(basis, v.basis)
    out: Dict = {}
    for sel, v in parts:
        for m, arr in v._rescale(den).items():
            if m not in out:
                out[m] = np.zeros(N, dtype=object)
            out[m][sel] = arr
    out.setdefault((), np.zeros(N, dtype=object))
    return SymVec(den, out, basis, N)


# closure group ---------------------------------------------------------------

@dataclass
class ClosureGroup:
    """Closure of Z u in T^d: the union over j < q of j*u + Z0, with Z0 a
    subtorus parametrized by the integer rows of W."""
    u: Tuple[SymReal, ...]
    lattice: RelationLattice
    q: int
    W: Tuple[Tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.W)

    @property
    def finite(self) -> bool:
        return len(self.W) == 0

    def shifts(self) -> np.ndarray:
        return np.array([[float((a * j).frac()) for a in self.u] for j in range(self.q)]).reshape(self.q, len(self.u))

    def sample(self, M: int = 1 << 16, seed: int = 0) -> np.ndarray:
        """Points equidistributed for Haar measure; exact list when finite."""
        d = len(self.u)
        sh = self.shifts()
        if self.finite:
            return sh
        halton = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        t = halton.random(M)
        W = np.array(self.W, dtype=float).reshape(self.dim, d)
        j = np.arange(M) % self.q
        return np.mod(sh[j] + t @ W, 1.0)


def closure_group(u: Sequence[SymReal]) -> ClosureGroup:
    u = tuple(SymReal.of(a) for a in u)
    lat = relation_lattice(u)
    q = 1
    for v in lat.values:
        vr = v - (v.numerator // v.denominator)
        q = q * int(vr.denominator) // math.gcd(q, int(vr.denominator))
    W = integer_kernel([list(m) for m in lat.basis], len(u)) if lat.basis else [
        [1 if i == j else 0 for i in range(len(u))] for j in range(len(u))]
    return ClosureGroup(u, lat, q, tuple(tuple(w) for w in W))


# integrals over the closure group -------------------------------------------

@dataclass
class Estimate:
    value: complex
    stderr: float

    @property
    def real(self):
        return self.value.real


def _haar_mean(rep: TorusRep, fn, M: int, seed: int, reps: int = 8) -> Estimate:
    Z = closure_group(rep.u)
    if Z.finite:
        pts = Z.sample()
        return Estimate(complex(np.mean(fn(rep.eval_points(pts), pts))), 0.0)
    means = []
    per = max(M // reps, 64)
    for r in range(reps):
        pts = Z.sample(per, seed=seed * 1009 + r)
        means.append(np.mean(fn(rep.eval_points(pts), pts)))
    means = np.array(means)
    return Estimate(complex(means.mean()), float(np.std(means, ddof=1) / math.sqrt(reps)))


def mean_value(phi, M: int = 1 << 16, seed: int = 0) -> Estimate:
    """Cesaro mean of a bounded GL-function, as a Haar integral over the closure group."""
    rep = phi if isinstance(phi, TorusRep) else build_rep(phi)
    return _haar_mean(rep, lambda F, _p: F, M, seed)


@dataclass
class CharLimit:
    value: complex
    exact: bool
    certificate: Optional[str]
    stderr: float = 0.0

    @property
    def modulus(self) -> float:
        return abs(self.value)


def _sinc_int(s: float) -> complex:
    """Integral of exp(2 pi i s y) over [0,1)."""
    if s == 0:
        return 1.0 + 0j
    return (cmath.exp(2j * math.pi * s) - 1) / (2j * math.pi * s)


def _match_floor_form(theta: GlfExpr):
    """theta = A*x + B + c*floor(alpha*x + b) with alpha irrational, else None."""
    terms = theta.terms if isinstance(theta, Sum) else (theta,)
    lin = None
    fl = None
    for t in terms:
        if isinstance(t, Linear) and lin is None:
            lin = t
            continue
        c, core = (t.c, t.e) if isinstance(t, Scale) else (SymReal(1), t)
        if isinstance(core, Floor) and isinstance(core.e, Linear) and fl is None:
            fl = (c, core.e)
            continue
        return None
    if fl is None:
        return None
    c, inner = fl
    if inner.a.is_rational:
        return None
    A = lin.a if lin else SymReal(0)
    B = lin.b if lin else SymReal(0)
    return A, B, c, inner.a, inner.b


def exact_char_limit(phi: GlfExpr, beta) -> Optional[CharLimit]:
    """Closed-form limit of exp(2 pi i beta phi(n)) when phi has a recognized shape."""
    theta = normalize(Scale(SymReal.of(beta), phi))
    if isinstance(theta, Linear):
        if theta.a.is_rational and theta.a.q0.denominator == 1:
            return CharLimit(cmath.exp(2j * math.pi * float(theta.b.frac())), True, "linear:integer")
        return CharLimit(0j, True, "linear:nonint")
    form = _match_floor_form(theta)
    if form is None:
        return None
    A, B, c, alpha, b = form
    gamma = A + alpha * c
    sp = split_on(alpha, gamma)
    if sp is None or sp[0].denominator != 1 or sp[1].denominator != 1:
        return CharLimit(0j, True, "alfbet:out")
    m = sp[0]
    phase = (B + c * b - b * m).frac()
    val = cmath.exp(2j * math.pi * float(phase)) * _sinc_int(float(SymReal(m) - c))
    return CharLimit(val, True, "alfbet:in")


def char_limit(phi: GlfExpr, beta, M: int = 1 << 16, seed: int = 0,
               exact_first: bool = True) -> CharLimit:
    """Cesaro limit of exp(2 pi i beta phi(n))."""
    if exact_first:
        ex = exact_char_limit(phi, beta)
        if ex is not None:
            return ex
    theta = normalize(Frac(Scale(SymReal.of(beta), phi)))
    rep = build_rep(theta)
    est = _haar_mean(rep, lambda F, _p: np.exp(2j * np.pi * F), M, seed)
    return CharLimit(est.value, False, None, est.stderr)


# Besicovitch approximation ---------------------------------------------------

@dataclass
class TrigPoly:
    freqs: Tuple[SymReal, ...]
    coeffs: Tuple[complex, ...]

    def __call__(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        out = np.zeros(len(ns), dtype=complex)
        for w, c in zip(self.freqs, self.coeffs):
            # reduce n*w mod 1 with an exact integer part to keep precision
            wf = float(w)
            out += c * np.exp(2j * np.pi * np.mod(ns * wf, 1.0))
        return out


def besicovitch_approx(phi: GlfExpr, eps: float, N: int = 100_000, kmax: int = 64,
                       M: int = 1 << 16, seed: int = 0, max_chars: int = 4000):
    """Trigonometric polynomial q with (1/N) sum_{n<N} |phi(n) - q(n)| < eps."""
    rep = build_rep(phi)
    Z = closure_group(rep.u)
    pts = Z.sample(M, seed)
    F = rep.eval_points(pts)
    ns = np.arange(N)
    target = eval_float(phi, ns)
    d = rep.dim
    K = 1
    last = None
    while K <= kmax:
        seen = {}
        rng = range(-K, K + 1)
        grid = np.array(np.meshgrid(*([list(rng)] * d), indexing="ij")).reshape(d, -1).T if d else np.zeros((1, 0), int)
        if len(grid) > max_chars:
            break
        for m in grid:
            w = SymReal(0)
            for mi, a in zip(m, rep.u):
                if mi:
                    w = w + a * int(mi)
            w = w.frac()
            if w in seen:
                continue
            chi = np.exp(-2j * np.pi * (pts @ m)) if d else np.ones(len(pts))
            seen[w] = complex(np.mean(F * chi))
        poly = TrigPoly(tuple(seen), tuple(seen.values()))
        err = float(np.mean(np.abs(target - poly(ns).real)))
        last = (poly, err)
        if err < eps:
            return poly, err
        K *= 2
    raise CutoffExceeded(f"no approximation within {eps} up to frequency cutoff {kmax}"
                         + (f" (best {last[1]:.4g})" if last else ""))


# almost linearity ----------------------------------------------------------

@dataclass
class LinearityWitness:
    C: Tuple[SymReal, ...]
    delta: float
    direction: Tuple[float, ...]
    pieces: Tuple[int, ...]
    H_sample: Tuple[int, ...]
    densities: Tuple[float, ...]


def almost_linearity_witness(phis: Sequence[GlfExpr], eps: float, N: int = 20_000,
                             n_h: int = 5, scan: int = 400_000, seed: int = 0) -> LinearityWitness:
    """Constants C_i and a set H of positive density such that for h in H,
    phi_i(n + h) = phi_i(n) + phi_i(h) + C_i for all i on a set of n of
    density > 1 - eps."""
    reps = build_joint(phis)
    rep0 = reps[0]
    d = rep0.dim
    Z = closure_group(rep0.u)
    rng = np.random.default_rng(seed)
    if Z.finite:
        direction = np.zeros(d)
        probes = [np.zeros((1, d))]
    else:
        direction = rng.uniform(0.2, 1.0, Z.dim) @ np.array(Z.W, dtype=float)
        probes = [np.mod(t * direction, 1.0)[None, :] for t in (1e-3, 1e-4, 1e-5, 1e-6)]
    # the piece of every phi containing the points t*direction for small t > 0
    chosen = []
    for rep in reps:
        ids = {int(rep.locate_float(pt)[0]) for pt in probes}
        if len(ids) != 1 or -1 in ids:
            raise NoInteriorPiece("no single piece has 0 as a limit point of its interior")
        chosen.append(ids.pop())
    # refine by the dyadic cell of side 1/8 holding the probes, so that
    # differences of points in one cell never wrap around the torus
    cell0 = np.floor(8 * probes[-1][0])
    C = tuple(-rep.pieces[k].E for rep, k in zip(reps, chosen))
    ns = np.arange(N)
    exact = [eval_exact_many(normalize(p), ns) for p in phis]
    delta = min(1 / 16, eps / 4)
    period = 1
    for a in rep0.u:
        if a.is_rational:
            den = int(a.q0.denominator)
            period = period * den // math.gcd(period, den)
    for _ in range(6):
        if Z.finite:
            H = [period * k for k in range(1, n_h + 1)]
        else:
            H = []
            uf = np.array([float(a) for a in rep0.u])
            for lo in range(1, scan + 1, 50_000):
                blk = np.arange(lo, min(lo + 50_000, scan + 1))
                pts = np.mod(np.outer(blk, uf), 1.0)
                dist = np.max(np.minimum(pts, 1 - pts), axis=1)
                cand = blk[dist < delta]
                if cand.size:
                    cp = np.mod(np.outer(cand, uf), 1.0)
                    good = np.all(np.floor(8 * cp) == cell0, axis=1)
                    for rep, k in zip(reps, chosen):
                        good &= rep.locate_float(cp) == k
                    H.extend(int(h) for h in cand[good])
                if len(H) >= n_h:
                    break
            H = H[:n_h]
        if not H:
            raise NoInteriorPiece("no return times found near 0")
        dens = []
        for h in H:
            ok = np.ones(N, bool)
            for p, ex, c in zip(phis, exact, C):
                shifted = eval_exact_many(normalize(p), ns + h)
                at_h = eval_exact_many(normalize(p), np.array([h]))
                rhs = ex + SymVec.const(at_h.at(0) + c, N)
                ok &= shifted.equals(rhs)
            dens.append(float(ok.mean()))
        if min(dens) > 1 - eps:
            return LinearityWitness(C, delta, tuple(float(x) for x in direction), tuple(chosen),
                                    tuple(H), tuple(dens))
        delta /= 4
    raise NoInteriorPiece(f"densities stayed below 1 - eps: {dens}")
