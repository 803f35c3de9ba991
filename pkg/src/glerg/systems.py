"""Concrete commuting measure-preserving systems with character dynamics.

A system is a product of blocks.  Each block is a torus rotation, a cyclic
shift or a 2x2 toral automorphism, and every named transformation (handle)
acts on each block by its own parameter (zero / identity when absent).
Functions are finite sums of characters, so every multiple ergodic average
is computed by bookkeeping: a character is pushed forward to a phase times a
new character.

Convention: T f(x) = f(x + alpha) for rotations, f(x + s) for shifts and
f(A x) for automorphisms.  So T^e chi_k = e(e k.alpha) chi_k on a rotation
block and T^e chi_k = chi_{(A^T)^e k} on an automorphism block.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NonCommuting, UnknownHandle
from .glf import (GlfExpr, Scale, Sum, ZERO, as_expr, compose, eval_exact, eval_int_many,
                  normalize, to_text)
from .number_field import SymReal, floor_symreal

# primes below 2^31, so that products of residues fit in int64
FP_PRIMES = (2147483647, 2147483629, 2147483587)
INT_WINDOW = 2000

Char = Tuple[Tuple[int, ...], ...]


# -- blocks -----------------------------------------------------------------

def _params(d) -> Tuple[Tuple[str, object], ...]:
    return tuple(sorted(dict(d).items()))


@dataclass(frozen=True)
class RotationBlock:
    dim: int
    alphas: Tuple[Tuple[str, Tuple[SymReal, ...]], ...]
    kind = "rotation"

    def param(self, h):
        return dict(self.alphas).get(h)

    @property
    def fdim(self) -> int:
        return self.dim

    def norm_freq(self, k) -> Tuple[int, ...]:
        return tuple(int(v) for v in k)

    def describe(self):
        return {"kind": "torus", "dim": self.dim,
                "handles": {h: [str(a) for a in v] for h, v in self.alphas}}


@dataclass(frozen=True)
class CyclicBlock:
    m: int
    shifts: Tuple[Tuple[str, int], ...]
    kind = "cyclic"

    def param(self, h):
        return dict(self.shifts).get(h)

    @property
    def fdim(self) -> int:
        return 1

    def norm_freq(self, k) -> Tuple[int, ...]:
        return (int(k[0]) % self.m,)

    def describe(self):
        return {"kind": "cyclic", "m": self.m, "handles": dict(self.shifts)}


@dataclass(frozen=True)
class AutomorphismBlock:
    A: Tuple[Tuple[int, int], Tuple[int, int]]
    powers: Tuple[Tuple[str, int], ...]
    kind = "automorphism"

    def __post_init__(self):
        (a, b), (c, d) = self.A
        if abs(a * d - b * c) != 1:
            raise ValueError(f"automorphism matrix {self.A} has |det| != 1")

    def param(self, h):
        return dict(self.powers).get(h)

    @property
    def fdim(self) -> int:
        return 2

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.A
        return a * d - b * c

    @property
    def trace(self) -> int:
        return self.A[0][0] + self.A[1][1]

    @property
    def ergodic(self) -> bool:
        # an integer matrix with |det| = 1 is ergodic iff no eigenvalue is a
        # root of unity; in dimension 2 that is a trace/determinant condition
        if self.det == 1:
            return abs(self.trace) > 2
        return self.trace != 0

    def norm_freq(self, k) -> Tuple[int, ...]:
        return (int(k[0]), int(k[1]))

    def describe(self):
        return {"kind": "automorphism", "A": [list(r) for r in self.A], "handles": dict(self.powers)}


Block = Union[RotationBlock, CyclicBlock, AutomorphismBlock]


def rotation_block(dim: int, alphas: Mapping[str, Sequence]) -> RotationBlock:
    out = {}
    for h, v in alphas.items():
        v = (v,) if not isinstance(v, (tuple, list)) else tuple(v)
        if len(v) != dim:
            raise ValueError(f"rotation vector for {h} has length {len(v)}, expected {dim}")
        out[h] = tuple(SymReal.of(a) for a in v)
    return RotationBlock(dim, _params(out))


def cyclic_block(m: int, shifts: Mapping[str, int]) -> CyclicBlock:
    if m < 1:
        raise ValueError("modulus must be positive")
    return CyclicBlock(m, _params({h: int(s) % m for h, s in shifts.items()}))


def automorphism_block(A, powers: Mapping[str, int]) -> AutomorphismBlock:
    A = tuple(tuple(int(v) for v in r) for r in A)
    if len(A) != 2 or any(len(r) != 2 for r in A):
        raise ValueError("only 2x2 automorphisms are supported")
    return AutomorphismBlock(A, _params({h: int(p) for h, p in powers.items()}))


def check_commuting(A, alphas: Mapping[str, Sequence]) -> None:
    """A rotation and an automorphism on the same coordinates commute iff
    A alpha = alpha mod Z^d.  Such mixed blocks are rejected either way."""
    for h, al in alphas.items():
        al = [SymReal.of(a) for a in al]
        for i, row in enumerate(A):
            v = sum((SymReal(c) * a for c, a in zip(row, al)), SymReal(0)) - al[i]
            if not v.is_rational or v.q0.denominator != 1:
                raise NonCommuting(f"rotation {h} does not commute with the automorphism {A}")
    raise NonCommuting("rotations and automorphisms on the same coordinates are not supported")


@dataclass(frozen=True)
class SystemSpec:
    blocks: Tuple[Block, ...]
    name: str = "sys"

    @property
    def handles(self) -> List[str]:
        hs = []
        for b in self.blocks:
            for h, _ in (b.alphas if b.kind == "rotation" else b.shifts if b.kind == "cyclic" else b.powers):
                if h not in hs:
                    hs.append(h)
        return hs

    def check_handle(self, h: str) -> None:
        if h not in self.handles:
            raise UnknownHandle(f"{h!r} is not a transformation of system {self.name}")

    def char(self, *parts) -> Char:
        """Character from per-block frequencies; a bare int is allowed for
        one-dimensional blocks."""
        if len(parts) != len(self.blocks):
            raise ValueError(f"need {len(self.blocks)} block frequencies, got {len(parts)}")
        out = []
        for b, k in zip(self.blocks, parts):
            k = (k,) if isinstance(k, (int, np.integer)) else tuple(k)
            if len(k) != b.fdim:
                raise ValueError(f"block {b.kind} needs {b.fdim} frequency entries")
            out.append(b.norm_freq(k))
        return tuple(out)

    def zero_char(self) -> Char:
        return tuple((0,) * b.fdim for b in self.blocks)

    def to_json(self):
        return {"name": self.name, "blocks": [b.describe() for b in self.blocks]}


def torus_rotation(alphas: Mapping[str, Sequence], dim: Optional[int] = None, name="rot") -> SystemSpec:
    if dim is None:
        v = next(iter(alphas.values()))
        dim = len(v) if isinstance(v, (tuple, list)) else 1
    return SystemSpec((rotation_block(dim, alphas),), name)


def cyclic_shift(m: int, shifts: Mapping[str, int], name="cyc") -> SystemSpec:
    return SystemSpec((cyclic_block(m, shifts),), name)


def toral_automorphism(A, powers: Optional[Mapping[str, int]] = None, name="aut") -> SystemSpec:
    return SystemSpec((automorphism_block(A, powers or {"T": 1}),), name)


def product_system(systems: Sequence[SystemSpec], name: Optional[str] = None) -> SystemSpec:
    """X_1 x ... x X_k; handle h of factor i becomes 'h@i' (1-based)."""
    blocks = []
    for i, s in enumerate(systems, 1):
        for b in s.blocks:
            blocks.append(_rename_block(b, lambda h, i=i: f"{h}@{i}"))
    return SystemSpec(tuple(blocks), name or "x".join(s.name for s in systems))


def _rename_block(b: Block, f) -> Block:
    if b.kind == "rotation":
        return RotationBlock(b.dim, _params({f(h): v for h, v in b.alphas}))
    if b.kind == "cyclic":
        return CyclicBlock(b.m, _params({f(h): v for h, v in b.shifts}))
    return AutomorphismBlock(b.A, _params({f(h): v for h, v in b.powers}))


# -- functions --------------------------------------------------------------

@dataclass(frozen=True)
class CharacterFn:
    freq: Char

    @property
    def mean_zero(self) -> bool:
        return any(any(v != 0 for v in k) for k in self.freq)


Fn = Dict[Char, complex]


def char_fn(sys: SystemSpec, *parts) -> Fn:
    return {sys.char(*parts): 1.0 + 0j}


def fn_sum(*terms: Tuple[complex, Fn]) -> Fn:
    out: Fn = {}
    for c, f in terms:
        for k, v in f.items():
            out[k] = out.get(k, 0) + c * v
    return {k: v for k, v in out.items() if v != 0}


def fn_integral(sys: SystemSpec, f: Fn) -> complex:
    return complex(f.get(sys.zero_char(), 0))


def fn_l2(f: Fn) -> float:
    return math.sqrt(sum(abs(v) ** 2 for v in f.values()))


def fn_eval(sys: SystemSpec, f: Fn, pts: Sequence[np.ndarray]) -> np.ndarray:
    """Pointwise values; pts holds one coordinate array per block
    (shape (M, fdim))."""
    acc = 0j
    for k, c in f.items():
        ph = 0.0
        for b, kb, x in zip(sys.blocks, k, pts):
            x = np.asarray(x, dtype=float).reshape(len(x), -1)
            if b.kind == "cyclic":
                ph = ph + kb[0] * x[:, 0] / b.m
            else:
                ph = ph + x @ np.array(kb, dtype=float)
        acc = acc + c * np.exp(2j * np.pi * ph)
    return acc


def product_fn(fns: Sequence[Fn]) -> Fn:
    """f_1 (x) ... (x) f_k on the product system."""
    out: Fn = {}
    for combo in itertools.product(*[f.items() for f in fns]):
        k = tuple(itertools.chain.from_iterable(c[0] for c in combo))
        out[k] = out.get(k, 0) + np.prod([c[1] for c in combo])
    return out


def char_mul(sys: SystemSpec, a: Char, b: Char) -> Char:
    return tuple(bl.norm_freq([x + y for x, y in zip(ka, kb)]) for bl, ka, kb in zip(sys.blocks, a, b))


# -- GL-sequences -----------------------------------------------------------

@lru_cache(maxsize=512)
def _certify_integer(text: str, e: GlfExpr, window: int) -> None:
    ns = np.arange(-window, window + 1)
    eval_int_many(e, ns)


class GlSeq:
    """T_1^{phi_1(n)} ... T_r^{phi_r(n)}; equal handles are merged."""

    def __init__(self, factors: Iterable[Tuple[str, object]], certify: bool = True,
                 window: int = INT_WINDOW):
        merged: Dict[str, GlfExpr] = {}
        for h, e in factors:
            e = as_expr(e)
            merged[h] = normalize(merged[h] + e) if h in merged else normalize(e)
        self.exps: Dict[str, GlfExpr] = {h: e for h, e in merged.items() if e != ZERO}
        if certify:
            for e in self.exps.values():
                _certify_integer(to_text(e), e, window)

    @property
    def factors(self) -> List[Tuple[str, GlfExpr]]:
        return list(self.exps.items())

    @property
    def handles(self) -> List[str]:
        return list(self.exps)

    def __eq__(self, other):
        return isinstance(other, GlSeq) and self.exps == other.exps

    def __hash__(self):
        return hash(tuple(sorted((h, to_text(e)) for h, e in self.exps.items())))

    def __repr__(self):
        return f"GlSeq({self})"

    def __str__(self):
        if not self.exps:
            return "Id"
        return " ".join(f"{h}^({to_text(e)})" for h, e in self.exps.items())

    def renamed(self, f) -> "GlSeq":
        return GlSeq(((f(h), e) for h, e in self.exps.items()), certify=False)

    def inverse(self) -> "GlSeq":
        return GlSeq(((h, normalize(Scale(SymReal(-1), e))) for h, e in self.exps.items()),
                     certify=False)

    def compose(self, inner: GlfExpr) -> "GlSeq":
        """n -> T(inner(n)), e.g. inner = W x + r."""
        return GlSeq(((h, compose(e, inner)) for h, e in self.exps.items()), certify=False)

    def then(self, other: "GlSeq") -> "GlSeq":
        return GlSeq(self.factors + other.factors, certify=False)

    def to_json(self):
        return {h: to_text(e) for h, e in self.exps.items()}


def glseq(*factors, certify: bool = True) -> GlSeq:
    """glseq(('T', expr), ('S', expr)) or glseq('T', expr)."""
    if len(factors) == 2 and isinstance(factors[0], str):
        factors = (factors,)
    return GlSeq(factors, certify=certify)


def inverse_times(seq_i: GlSeq, seq_j: GlSeq) -> GlSeq:
    """T_i^{-1} T_j."""
    return seq_i.inverse().then(seq_j)


def product_seq(seqs: Sequence[GlSeq]) -> GlSeq:
    """T_1 x ... x T_k acting on the product system (handles 'h@i')."""
    out: List[Tuple[str, GlfExpr]] = []
    for i, s in enumerate(seqs, 1):
        out.extend((f"{h}@{i}", e) for h, e in s.exps.items())
    return GlSeq(out, certify=False)


# -- spectral data ----------------------------------------------------------

def _check_seq(sys: SystemSpec, seq: GlSeq) -> None:
    for h in seq.handles:
        sys.check_handle(h)


def char_frequency(block: Block, h: str, k: Sequence[int]) -> Optional[SymReal]:
    """Frequency beta in [0,1) with T_h chi_k = e(beta) chi_k on a rotation
    or cyclic block; None on automorphism blocks."""
    p = block.param(h)
    if block.kind == "automorphism":
        return None
    if p is None:
        return SymReal(0)
    if block.kind == "cyclic":
        return SymReal.of(f"{(k[0] * p) % block.m}/{block.m}")
    v = sum((SymReal(int(c)) * a for c, a in zip(k, p)), SymReal(0))
    return v.frac()


@dataclass
class EigSet:
    """Eigenvalues e(beta) of one handle.  Rotation blocks contribute the
    frequency lattice k.alpha_T, cyclic blocks j s / m, automorphism blocks
    only 1."""
    system: SystemSpec
    handle: str

    def generators(self) -> List[SymReal]:
        out = []
        for b in self.system.blocks:
            p = b.param(self.handle)
            if p is None or b.kind == "automorphism":
                continue
            if b.kind == "cyclic":
                out.append(SymReal.of(f"{p}/{b.m}"))
            else:
                out.extend(p)
        return out

    def enumerate(self, cutoff: int = 8) -> List[Tuple[Char, SymReal]]:
        sys = self.system
        return [(k, total_frequency(sys, self.handle, k)) for k in static_chars(sys, cutoff)]

    def describe(self) -> Dict:
        gens = self.generators()
        return {"handle": self.handle, "generators": [str(g) for g in gens],
                "trivial": not gens}


def eig_description(sys: SystemSpec, T: str) -> EigSet:
    sys.check_handle(T)
    return EigSet(sys, T)


def static_chars(sys: SystemSpec, cutoff: int, nonzero: bool = True,
                 halve: bool = False) -> List[Char]:
    """Characters supported on rotation and cyclic blocks with |k_i| <= cutoff.
    halve keeps one of each +-k pair."""
    ranges = []
    for b in sys.blocks:
        if b.kind == "rotation":
            ranges.append([tuple(t) for t in itertools.product(range(-cutoff, cutoff + 1), repeat=b.dim)])
        elif b.kind == "cyclic":
            ranges.append([(j,) for j in range(b.m)])
        else:
            ranges.append([(0, 0)])
    def size(k):
        flat = []
        for bl, kb in zip(sys.blocks, k):
            flat.extend(min(v, bl.m - v) if bl.kind == "cyclic" else abs(v) for v in kb)
        return (max(flat, default=0), sum(flat))

    out = []
    seen = set()
    for k in sorted(itertools.product(*ranges), key=lambda k: (size(k), k)):
        if nonzero and all(all(v == 0 for v in kb) for kb in k):
            continue
        if halve:
            neg = tuple(b.norm_freq([-v for v in kb]) for b, kb in zip(sys.blocks, k))
            if neg in seen:
                continue
        seen.add(k)
        out.append(k)
    return out


def total_frequency(sys: SystemSpec, h: str, k: Char) -> SymReal:
    acc = SymReal(0)
    for b, kb in zip(sys.blocks, k):
        f = char_frequency(b, h, kb)
        if f is not None:
            acc = acc + f
    return acc.frac()


def phase_expr(sys: SystemSpec, seq: GlSeq, k: Char) -> GlfExpr:
    """theta with T(n) chi_k = e(theta(n)) chi_k' (static blocks only)."""
    parts = []
    for h, e in seq.exps.items():
        beta = total_frequency(sys, h, k)
        if beta != 0:
            parts.append(Scale(beta, e))
    return normalize(Sum(tuple(parts))) if parts else ZERO


def power_expr(block: AutomorphismBlock, seq: GlSeq) -> GlfExpr:
    """Total power P(n) of A acting on an automorphism block."""
    parts = [Scale(SymReal(block.param(h)), e) for h, e in seq.exps.items() if block.param(h)]
    return normalize(Sum(tuple(parts))) if parts else ZERO


# -- exact action -----------------------------------------------------------

def _matmul(X, Y):
    return tuple(tuple(sum(X[i][t] * Y[t][j] for t in range(2)) for j in range(2)) for i in range(2))


def int_matrix_power(A, e: int):
    """Exact A^e for a 2x2 integer matrix with |det| = 1 (e may be negative)."""
    (a, b), (c, d) = A
    det = a * d - b * c
    if e < 0:
        A = ((d * det, -b * det), (-c * det, a * det))
        e = -e
    R = ((1, 0), (0, 1))
    while e:
        if e & 1:
            R = _matmul(R, A)
        A = _matmul(A, A)
        e >>= 1
    return R


def _transpose(A):
    return ((A[0][0], A[1][0]), (A[0][1], A[1][1]))


def apply_glseq_to_character(sys: SystemSpec, seq: GlSeq, k: Char, n: int):
    """(phase in [0,1) as a SymReal, new character) with T(n) chi_k = e(phase) chi_k'."""
    _check_seq(sys, seq)
    ex = {h: int(floor_symreal(eval_exact(e, n))) for h, e in seq.exps.items()}
    phase = SymReal(0)
    out = []
    for b, kb in zip(sys.blocks, k):
        if b.kind == "automorphism":
            P = sum(b.param(h) * v for h, v in ex.items() if b.param(h))
            M = int_matrix_power(_transpose(b.A), P)
            out.append((M[0][0] * kb[0] + M[0][1] * kb[1], M[1][0] * kb[0] + M[1][1] * kb[1]))
            continue
        for h, v in ex.items():
            f = char_frequency(b, h, kb)
            if f is not None and f != 0:
                phase = phase + SymReal(v) * f
        out.append(tuple(kb))
    return phase.frac(), tuple(out)


# -- multiple averages ------------------------------------------------------

_mod_inv_cache: Dict = {}


def _powmod(M, e: int, p: int):
    """M^e mod p for a 2x2 matrix with |det| = 1, e of any sign."""
    if e < 0:
        (a, b), (c, d) = M
        det = a * d - b * c
        M = ((d * det, -b * det), (-c * det, a * det))
        e = -e
    M = tuple(tuple(v % p for v in r) for r in M)
    R = ((1, 0), (0, 1))
    while e:
        if e & 1:
            R = tuple(tuple(v % p for v in r) for r in _matmul(R, M))
        M = tuple(tuple(v % p for v in r) for r in _matmul(M, M))
        e >>= 1
    return R


_POW_CACHE: Dict = {}


def _mat_powers_mod(M, Ps: np.ndarray) -> np.ndarray:
    """(M^P mod p) for every P in Ps and every fingerprint prime; shape
    (len(Ps), nprimes, 2, 2).  Baby steps M^j (j < S) and giant steps
    M^(Pmin + S i) are tabulated, then combined in one vectorized product."""
    Ps = np.asarray(Ps, dtype=np.int64)
    if len(Ps) == 0:
        return np.zeros((0, len(FP_PRIMES), 2, 2), dtype=np.int64)
    key = (M, Ps.tobytes())
    if key in _POW_CACHE:
        return _POW_CACHE[key]
    lo = int(Ps.min())
    off = Ps - lo
    span = int(off.max()) + 1
    S = max(1, int(math.isqrt(span)) + 1)
    out = np.empty((len(Ps), len(FP_PRIMES), 2, 2), dtype=np.int64)
    for pi, p in enumerate(FP_PRIMES):
        baby = np.empty((S, 2, 2), dtype=np.int64)
        cur = ((1, 0), (0, 1))
        Mp = tuple(tuple(v % p for v in r) for r in M)
        for j in range(S):
            baby[j] = cur
            cur = tuple(tuple(v % p for v in r) for r in _matmul(cur, Mp))
        step = cur  # M^S
        G = span // S + 1
        giant = np.empty((G, 2, 2), dtype=np.int64)
        cur = _powmod(M, lo, p)
        for i in range(G):
            giant[i] = cur
            cur = tuple(tuple(v % p for v in r) for r in _matmul(cur, step))
        out[:, pi] = _mm_mod(giant[off // S], baby[off % S], p)
    if len(_POW_CACHE) > 16:
        _POW_CACHE.clear()
    _POW_CACHE[key] = out
    return out


def _mm_mod(X: np.ndarray, Y: np.ndarray, p: int) -> np.ndarray:
    Z = np.empty_like(X)
    for i in range(2):
        for j in range(2):
            Z[:, i, j] = ((X[:, i, 0] * Y[:, 0, j]) % p + (X[:, i, 1] * Y[:, 1, j]) % p) % p
    return Z


def _block_key_width(b: Block) -> int:
    return 2 * len(FP_PRIMES) if b.kind == "automorphism" else b.fdim


def char_key(sys: SystemSpec, k: Char) -> Tuple[int, ...]:
    """Key of a character as used by the averaging bookkeeping.  Automorphism
    frequencies are stored as residues modulo the fingerprint primes."""
    out: List[int] = []
    for b, kb in zip(sys.blocks, k):
        if b.kind == "automorphism":
            for p in FP_PRIMES:
                out.extend((kb[0] % p, kb[1] % p))
        else:
            out.extend(b.norm_freq(kb))
    return tuple(out)


class _ExpCache:
    def __init__(self):
        self.store: Dict = {}

    def get(self, e: GlfExpr, ns: np.ndarray) -> np.ndarray:
        key = (to_text(e), ns.tobytes().__hash__(), len(ns))
        if key not in self.store:
            if len(self.store) > 64:
                self.store.clear()
            self.store[key] = eval_int_many(e, ns)
        return self.store[key]


_EXP = _ExpCache()


def average_coefficients(sys: SystemSpec, seqs: Sequence[GlSeq], fns: Sequence[Fn], ns,
                         weights=None) -> Dict[Tuple[int, ...], complex]:
    """Coefficients of sum_n w_n prod_i T_i(n) f_i as a character sum
    (keys from char_key).  Without weights, w_n = 1/len(ns)."""
    if len(seqs) != len(fns):
        raise ValueError("need one function per sequence")
    for s in seqs:
        _check_seq(sys, s)
    ns = np.asarray(ns, dtype=np.int64)
    L = len(ns)
    if L == 0:
        return {}
    w = np.full(L, 1.0 / L) if weights is None else np.asarray(weights, dtype=float)
    exps = [{h: _EXP.get(e, ns) for h, e in s.exps.items()} for s in seqs]
    aut = [i for i, b in enumerate(sys.blocks) if b.kind == "automorphism"]
    # powers per automorphism block and sequence
    powers = {}
    tables = {}
    for bi in aut:
        b = sys.blocks[bi]
        Ps = []
        for ex in exps:
            P = np.zeros(L, dtype=np.int64)
            for h, v in ex.items():
                if b.param(h):
                    P = P + b.param(h) * v
            Ps.append(P)
        powers[bi] = Ps
        allP = np.unique(np.concatenate(Ps)) if Ps else np.zeros(0, dtype=np.int64)
        tables[bi] = (allP, _mat_powers_mod(_transpose(b.A), allP))

    acc: Dict[Tuple[int, ...], complex] = {}
    rows, vals = [], []
    for combo in itertools.product(*[list(f.items()) for f in fns]):
        coef = complex(np.prod([c for _, c in combo])) if combo else 1.0 + 0j
        if coef == 0:
            continue
        theta = np.zeros(L)
        static_key: List[object] = []
        for bi, b in enumerate(sys.blocks):
            if b.kind == "automorphism":
                static_key.append(None)
                continue
            tot = [0] * b.fdim
            for (k, _), ex in zip(combo, exps):
                kb = k[bi]
                tot = [x + y for x, y in zip(tot, kb)]
                for h, v in ex.items():
                    p = b.param(h)
                    if p is None:
                        continue
                    if b.kind == "cyclic":
                        r = (kb[0] * p) % b.m
                        if r:
                            theta += ((v % b.m) * r % b.m) / b.m
                    else:
                        f = char_frequency(b, h, kb)
                        if f != 0:
                            theta += np.mod(v * float(f), 1.0)
            static_key.append(b.norm_freq(tot))
        phase = coef * w * np.exp(2j * np.pi * theta)
        if not aut:
            key = tuple(itertools.chain.from_iterable(static_key))
            acc[key] = acc.get(key, 0) + complex(phase.sum())
            continue
        cols = []
        for bi, b in enumerate(sys.blocks):
            if b.kind != "automorphism":
                cols.extend(np.full(L, v, dtype=np.int64) for v in static_key[bi])
                continue
            allP, tab = tables[bi]
            fp = np.zeros((L, len(FP_PRIMES), 2), dtype=np.int64)
            for (k, _), P in zip(combo, powers[bi]):
                kb = k[bi]
                if kb == (0, 0):
                    continue
                M = tab[np.searchsorted(allP, P)]
                for pi, p in enumerate(FP_PRIMES):
                    k0, k1 = kb[0] % p, kb[1] % p
                    fp[:, pi, 0] += (M[:, pi, 0, 0] * k0 + M[:, pi, 0, 1] * k1) % p
                    fp[:, pi, 1] += (M[:, pi, 1, 0] * k0 + M[:, pi, 1, 1] * k1) % p
            for pi, p in enumerate(FP_PRIMES):
                cols.append(fp[:, pi, 0] % p)
                cols.append(fp[:, pi, 1] % p)
        rows.append(np.stack(cols, axis=1))
        vals.append(phase)
    if rows:
        R = np.concatenate(rows)
        V = np.concatenate(vals)
        uniq, inv = np.unique(R, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        re = np.bincount(inv, weights=V.real, minlength=len(uniq))
        im = np.bincount(inv, weights=V.imag, minlength=len(uniq))
        for r, a, b_ in zip(uniq.tolist(), re.tolist(), im.tolist()):
            key = tuple(r)
            acc[key] = acc.get(key, 0) + complex(a, b_)
    return acc


def _defect(sys: SystemSpec, coeffs: Dict, fns: Sequence[Fn], target: Optional[Fn]) -> float:
    if target is None:
        t = complex(np.prod([fn_integral(sys, f) for f in fns])) if fns else 1.0 + 0j
        target = {sys.zero_char(): t}
    diff = dict(coeffs)
    for k, v in target.items():
        key = char_key(sys, k)
        diff[key] = diff.get(key, 0) - v
    return math.sqrt(sum(abs(v) ** 2 for v in diff.values()))


def multi_average_l2(sys: SystemSpec, seqs: Sequence[GlSeq], fns: Sequence[Fn],
                     schedule=None, N: int = 1000, target: Optional[Fn] = None) -> float:
    """|| avg_{n in Phi_N} prod_i T_i(n) f_i - prod_i int f_i ||_2 (or - target)."""
    from .averaging import FORWARD
    schedule = schedule or FORWARD
    if not seqs:
        return 0.0 if target is None else _defect(sys, {char_key(sys, sys.zero_char()): 1.0}, [], target)
    coeffs = average_coefficients(sys, seqs, fns, schedule.indices(N))
    return _defect(sys, coeffs, fns, target)


def prime_multi_average_l2(sys: SystemSpec, seqs: Sequence[GlSeq], fns: Sequence[Fn], N: int,
                           target: Optional[Fn] = None) -> float:
    """Same defect for (1/pi(N)) sum_{p <= N} prod_i T_i(p) f_i."""
    from .averaging import primes_upto
    if not seqs:
        return 0.0 if target is None else _defect(sys, {char_key(sys, sys.zero_char()): 1.0}, [], target)
    coeffs = average_coefficients(sys, seqs, fns, primes_upto(N))
    return _defect(sys, coeffs, fns, target)


def lambda_multi_average_l2(sys: SystemSpec, seqs: Sequence[GlSeq], fns: Sequence[Fn], N: int,
                            target: Optional[Fn] = None) -> float:
    """Same defect for (1/N) sum_{n <= N} Lambda'(n) prod_i T_i(n) f_i."""
    from .averaging import primes_upto
    ps = primes_upto(N)
    coeffs = average_coefficients(sys, seqs, fns, ps, np.log(ps.astype(float)) / N)
    return _defect(sys, coeffs, fns, target)


def record(sys: SystemSpec, seqs: Sequence[GlSeq], fns: Sequence[Fn], N: int, defect: float) -> Dict:
    return {
        "system": sys.to_json(),
        "seqs": [s.to_json() for s in seqs],
        "fns": [[{"freq": [list(kb) for kb in k], "coef": [c.real, c.imag]}
                 for k, c in ((k, complex(c)) for k, c in f.items())] for f in fns],
        "N": N,
        "l2_defect": defect,
    }
