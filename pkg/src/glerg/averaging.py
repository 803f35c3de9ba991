"""Finite averaging engine.

Everything here is finitary: an average is taken over one finite set
Phi_N of a Folner schedule and reported with an error proxy.  Functions
may be vectorized (accept an int64 array) or plain scalar callables.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .errors import ComplexityRefusal, NonMonotoneWeight, NotFolner

GOWERS_LIMIT = 10 ** 10
SIEVE_CACHE = 10 ** 7


# -- Folner schedules --------------------------------------------------------

@dataclass
class FolnerSchedule:
    """Indexed finite sets Phi_N.

    kind 'forward' is [1..N]; 'window' is [M+1..M+L] with M = shift(N) and
    L = length(N); 'custom' calls gen(N) for an integer array.
    """
    kind: str = "forward"
    shift: Optional[Callable[[int], int]] = None
    length: Optional[Callable[[int], int]] = None
    gen: Optional[Callable[[int], Iterable[int]]] = None
    name: str = ""

    @classmethod
    def forward(cls) -> "FolnerSchedule":
        return cls("forward", name="forward")

    @classmethod
    def window(cls, shift=None, length=None) -> "FolnerSchedule":
        # default drift: [N+1..2N]
        return cls("window", shift=shift or (lambda N: N), length=length or (lambda N: N),
                   name="window")

    @classmethod
    def custom(cls, gen, name: str = "custom", check: bool = True) -> "FolnerSchedule":
        s = cls("custom", gen=gen, name=name)
        if check:
            s.check()
        return s

    def indices(self, N: int) -> np.ndarray:
        if self.kind == "forward":
            return np.arange(1, N + 1, dtype=np.int64)
        if self.kind == "window":
            M, L = int(self.shift(N)), int(self.length(N))
            return np.arange(M + 1, M + L + 1, dtype=np.int64)
        if self.kind == "custom":
            g = self.gen(N)
            return np.unique(np.asarray(g if isinstance(g, np.ndarray) else list(g), dtype=np.int64))
        raise ValueError(f"unknown schedule kind {self.kind!r}")

    def defect(self, N: int, h: int) -> float:
        """|(Phi_N - h) symmetric-difference Phi_N| / |Phi_N|."""
        A = self.indices(N)
        if len(A) == 0:
            return 1.0
        return len(np.setxor1d(A, A - h, assume_unique=True)) / len(A)

    def check(self, Ns: Sequence[int] = (100, 1000, 10000), hs: Sequence[int] = (1, 2, 7),
              tol: float = 0.05) -> None:
        """Empirical Folner check: defects at the last index must be small and
        must not grow along the three indices."""
        for h in hs:
            d = [self.defect(N, h) for N in Ns]
            if d[-1] > tol or d[-1] > d[0] + 1e-12:
                raise NotFolner(f"schedule {self.name or self.kind}: shift {h} defects {d}")

    @classmethod
    def parse(cls, s: str) -> "FolnerSchedule":
        if s in ("forward", "", None):
            return cls.forward()
        if s == "window":
            return cls.window()
        if s.startswith("window:"):
            # window:a,b  means M = a*N, L = b*N
            a, b = (float(t) for t in s[7:].split(","))
            return cls.window(lambda N: int(a * N), lambda N: max(1, int(b * N)))
        if s == "odd":
            return cls.custom(lambda N: np.arange(1, 2 * N, 2, dtype=np.int64), name="odd", check=False)
        raise ValueError(f"unknown Folner schedule {s!r}")


FORWARD = FolnerSchedule.forward()


def _apply(f, ns: np.ndarray) -> np.ndarray:
    """Evaluate f on ns, preferring a vectorized call."""
    try:
        v = f(ns)
        v = np.asarray(v)
        if v.shape[:1] == ns.shape:
            return v
        if v.ndim == 0:
            return np.broadcast_to(v, ns.shape)
    except Exception:
        pass
    return np.asarray([f(int(n)) for n in ns])


def _norms(v: np.ndarray) -> np.ndarray:
    if v.ndim == 1:
        return np.abs(v)
    return np.sqrt(np.sum(np.abs(v) ** 2, axis=tuple(range(1, v.ndim))))


# -- basic averages ----------------------------------------------------------

@dataclass
class Avg:
    """An average at one schedule index plus an error proxy.

    The proxy is the change from the half-index estimate."""
    value: object
    N: int
    size: int
    error_proxy: float


def cesaro_avg(f, schedule: FolnerSchedule = FORWARD, N: int = 1000):
    """(1/|Phi_N|) sum over Phi_N of f(n); scalars, complex or vectors."""
    ns = schedule.indices(N)
    if len(ns) == 0:
        return 0.0
    return _apply(f, ns).mean(axis=0)


def cesaro_estimate(f, schedule: FolnerSchedule = FORWARD, N: int = 1000) -> Avg:
    v = cesaro_avg(f, schedule, N)
    half = cesaro_avg(f, schedule, max(1, N // 2))
    err = float(np.linalg.norm(np.atleast_1d(np.asarray(v) - np.asarray(half))))
    return Avg(v, N, len(schedule.indices(N)), err)


def density_est(pred, schedule: FolnerSchedule = FORWARD, N: int = 1000) -> float:
    ns = schedule.indices(N)
    if len(ns) == 0:
        return 0.0
    return float(np.count_nonzero(_apply(pred, ns)) / len(ns))


def dlim_test(f, u, eps: float, schedule: FolnerSchedule = FORWARD, N: int = 1000,
              threshold: float = 0.01):
    """Density of {n in Phi_N : |f(n) - u| >= eps}; (passes, defect)."""
    ns = schedule.indices(N)
    if len(ns) == 0:
        return True, 0.0
    v = _apply(f, ns)
    d = _norms(v - np.asarray(u))
    defect = float(np.count_nonzero(d >= eps) / len(ns))
    return defect < threshold, defect


# -- van der Corput ---------------------------------------------------------

def vdc_finitary(us, exact: bool = False):
    """(lhs, rhs) of the finitary van der Corput inequality.

    lhs = |(1/N) sum u_n|^2,
    rhs = (2/N) sum_{h=1}^{N-1} |sum_{n=1}^{N-h} <u_n, u_{n+h}>| + (1/N^2) sum |u_n|^2.
    With exact=True the vectors must have rational entries and Fractions
    are returned.
    """
    if exact:
        U = [[Fraction(c) for c in np.atleast_1d(u)] for u in us]
        N = len(U)
        if N == 0:
            return Fraction(0), Fraction(0)
        dim = len(U[0])
        s = [sum(u[i] for u in U) for i in range(dim)]
        lhs = sum(c * c for c in s) / (N * N)
        dot = lambda a, b: sum(x * y for x, y in zip(a, b))
        cross = sum(abs(sum(dot(U[n], U[n + h]) for n in range(N - h))) for h in range(1, N))
        rhs = Fraction(2, N) * cross + Fraction(1, N * N) * sum(dot(u, u) for u in U)
        return lhs, rhs
    U = np.asarray(us)
    if U.ndim == 1:
        U = U[:, None]
    N = U.shape[0]
    if N == 0:
        return 0.0, 0.0
    m = U.mean(axis=0)
    lhs = float(np.real(np.vdot(m, m)))
    G = U @ U.conj().T
    # sum of the h-th superdiagonal of the Gram matrix
    diag = np.array([np.trace(G, offset=h) for h in range(1, N)]) if N > 1 else np.zeros(0)
    rhs = 2.0 / N * float(np.abs(diag).sum()) + float(np.real(np.trace(G))) / N ** 2
    return lhs, rhs


def vdc_fixed_D(f, D: Sequence[int], N: int):
    """Infinitary-style bound with a fixed finite set D of shifts, at index N.

    Returns (|avg_{n<=N} f(n)|^2, average over d1, d2 in D of
    Re avg_n <f(n+d1), f(n+d2)>), the second being the large-N limit
    of the upper bound.
    """
    ns = np.arange(1, N + 1, dtype=np.int64)
    v = _apply(f, ns)
    lhs = float(np.abs(np.mean(v)) ** 2)
    D = list(D)
    acc = 0.0
    for d1 in D:
        a = _apply(f, ns + d1)
        for d2 in D:
            b = _apply(f, ns + d2)
            acc += float(np.real(np.mean(a * np.conj(b))))
    return lhs, acc / len(D) ** 2


# -- Gowers norms -----------------------------------------------------------

def gowers_norm(b, k: int, N: int) -> float:
    """Finite k-th Gowers norm of b on {1..N} (b is a sequence of length N
    indexed from 1, or a callable).

    ((1/N^k) sum_{h in [1,N]^k} |(1/N) sum_{n=1}^{N-|h|} prod_e b(n+e.h)|)^(1/2^k)
    """
    if k < 1 or N < 1:
        raise ValueError("need k >= 1 and N >= 1")
    if N ** (k + 1) > GOWERS_LIMIT:
        raise ComplexityRefusal(f"N^(k+1) = {N ** (k + 1)} exceeds {GOWERS_LIMIT}")
    if callable(b):
        vals = _apply(b, np.arange(1, N + 1, dtype=np.int64)).astype(float)
    else:
        vals = np.asarray(b, dtype=float)[:N]
    # 1-based with zero padding; padded entries are never reached since
    # n + e.h <= N - |h| + |h|
    B = np.zeros(N + 1)
    B[1:] = vals
    cubes = [np.array(e) for e in np.ndindex(*(2,) * k)]
    total = 0.0
    n = np.arange(1, N + 1)
    for h in np.ndindex(*(N,) * k):
        h = np.array(h) + 1
        top = N - int(h.sum())
        if top <= 0:
            continue
        nn = n[:top]
        prod = np.ones(top)
        for e in cubes:
            prod *= B[nn + int(e @ h)]
        total += abs(prod.sum() / N)
    return float((total / N ** k) ** (1.0 / 2 ** k))


# -- primes -----------------------------------------------------------------

_sieve: Optional[np.ndarray] = None


def prime_mask(N: int) -> np.ndarray:
    """Boolean array of length N+1, True at primes.  Cached up to SIEVE_CACHE,
    segmented beyond."""
    global _sieve
    if N <= SIEVE_CACHE:
        if _sieve is None or len(_sieve) <= N:
            _sieve = _eratosthenes(max(N, 1 << 16))
        return _sieve[:N + 1]
    return _segmented(N)


def _eratosthenes(N: int) -> np.ndarray:
    s = np.ones(N + 1, dtype=bool)
    s[:2] = False
    for p in range(2, math.isqrt(N) + 1):
        if s[p]:
            s[p * p::p] = False
    return s


def _segmented(N: int, seg: int = 1 << 22) -> np.ndarray:
    base = _eratosthenes(math.isqrt(N) + 1)
    small = np.nonzero(base)[0]
    out = np.zeros(N + 1, dtype=bool)
    out[:len(base)] = base
    lo = len(base)
    while lo <= N:
        hi = min(N + 1, lo + seg)
        blk = np.ones(hi - lo, dtype=bool)
        for p in small:
            start = max(p * p, ((lo + p - 1) // p) * p)
            blk[start - lo::p] = False
        out[lo:hi] = blk
        lo = hi
    return out


def primes_upto(N: int) -> np.ndarray:
    return np.nonzero(prime_mask(N))[0].astype(np.int64)


@dataclass
class WeightSeq:
    """Weights on the integers: uniform, lambda_prime (log n on primes) or
    prime_indicator."""
    kind: str = "uniform"

    def values(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if self.kind == "uniform":
            return np.ones(len(ns))
        top = int(ns.max()) if len(ns) else 1
        m = prime_mask(max(top, 2))
        isp = np.zeros(len(ns), dtype=bool)
        ok = ns >= 0
        isp[ok] = m[ns[ok]]
        if self.kind == "prime_indicator":
            return isp.astype(float)
        if self.kind == "lambda_prime":
            return np.where(isp, np.log(np.maximum(ns, 1)), 0.0)
        raise ValueError(f"unknown weight kind {self.kind!r}")


def prime_average(f, N: int):
    """(1/pi(N)) sum_{p <= N} f(p)."""
    ps = primes_upto(N)
    if len(ps) == 0:
        raise ValueError("no primes up to N")
    return _apply(f, ps).mean(axis=0)


def lambda_prime_average(f, N: int):
    """(1/N) sum_{n <= N} Lambda'(n) f(n), Lambda' = log on primes."""
    ps = primes_upto(N)
    w = np.log(ps.astype(float))
    v = _apply(f, ps)
    if v.ndim > 1:
        w = w.reshape((-1,) + (1,) * (v.ndim - 1))
    return (w * v).sum(axis=0) / N


def weighted_average(f, weights: WeightSeq, N: int, ns=None):
    """sum w(n) f(n) / sum w(n) over [1..N] (or the given index set)."""
    ns = np.arange(1, N + 1, dtype=np.int64) if ns is None else np.asarray(ns, dtype=np.int64)
    w = weights.values(ns)
    keep = w != 0
    v = _apply(f, ns[keep])
    w = w[keep]
    if v.ndim > 1:
        w = w.reshape((-1,) + (1,) * (v.ndim - 1))
    return (w * v).sum(axis=0) / w.sum()


# -- continuous weighted averages -------------------------------------------

def _grid(a: float, b: float, step: float) -> np.ndarray:
    n = max(1, int(math.ceil((b - a) / step)))
    return np.linspace(a, b, n + 1)


def weighted_uniform_cesaro(f, omega, a: float, b: float, step: float = 1e-3) -> float:
    """(int_a^b f w) / (int_a^b w) by the composite trapezoid rule."""
    t = _grid(a, b, step)
    w = np.asarray(omega(t), dtype=float)
    if np.any(w <= 0):
        raise NonMonotoneWeight("weight must be positive on the grid")
    dw = np.diff(w)
    if not (np.all(dw >= 0) or np.all(dw <= 0)):
        raise NonMonotoneWeight("weight is not monotone on the grid")
    fv = np.asarray(f(t), dtype=float)
    return float(_trap(fv * w, t) / _trap(w, t))


@dataclass
class SubstitutionCheck:
    plain: float
    weighted: float

    @property
    def diff(self) -> float:
        return abs(self.plain - self.weighted)


def substitution_check(f, sigma, sigma_inv_prime, t0: float, t1: float,
                       step_t: float = 1e-4, step_s: float = 1e-3) -> SubstitutionCheck:
    """Compare the plain average of f(sigma(t)) over [t0,t1] with the
    (sigma^-1)'-weighted average of f over [sigma(t0), sigma(t1)].

    The two agree exactly by change of variables; numerically the check
    measures how well both grids resolve f.
    """
    t = _grid(t0, t1, step_t)
    plain = float(_trap(np.asarray(f(sigma(t)), dtype=float), t) / (t1 - t0))
    s0, s1 = float(sigma(np.array([t0]))[0]), float(sigma(np.array([t1]))[0])
    weighted = weighted_uniform_cesaro(f, sigma_inv_prime, s0, s1, step_s)
    return SubstitutionCheck(plain, weighted)


def _trap(y, x):
    tz = getattr(np, "trapezoid", None) or np.trapz
    return tz(y, x)


# -- traces -----------------------------------------------------------------

def convergence_trace(op: Callable[[int], object], Ns: Sequence[int]) -> List[tuple]:
    """Rows (N, re, im, error_proxy); error proxy is the change from the
    previous row (nan on the first)."""
    rows = []
    prev = None
    for N in Ns:
        v = complex(np.asarray(op(N)).reshape(-1)[0])
        err = abs(v - prev) if prev is not None else float("nan")
        rows.append((int(N), v.real, v.imag, err))
        prev = v
    return rows


def write_trace_csv(path: str, rows: Sequence[tuple]) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "estimate_re", "estimate_im", "error_proxy"])
        for N, re, im, err in rows:
            w.writerow([N, f"{re:.12g}", f"{im:.12g}", f"{err:.12g}"])
    os.replace(tmp, path)
