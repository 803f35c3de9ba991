"""Ergodicity and joint ergodicity of GL-sequences on concrete systems.

The spectral side works character by character.  For a character chi_k on
the rotation and cyclic blocks, T(n) chi_k = e(theta_k(n)) chi_k with theta_k
a GL-function, so the sequence is ergodic on that character iff the Cesaro
limit of e(theta_k(n)) vanishes.  On an ergodic automorphism block the
frequencies (A^T)^{P(n)} k never repeat, so the average dies iff the total
power P(n) is unbounded.  The empirical side compares against
multi_average_l2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .averaging import FORWARD, FolnerSchedule
from .errors import HypothesisFailed, UnboundedRequired
from .glf import Floor, GlfExpr, Linear, X, eval_int_many, linear_part, normalize, to_text
from .number_field import SymReal, relation_lattice, split_on
from .systems import (Char, Fn, GlSeq, SystemSpec, char_fn, fn_sum, inverse_times, multi_average_l2,
                      phase_expr, power_expr, prime_multi_average_l2, product_seq, product_system,
                      cyclic_shift, static_chars, total_frequency)
from .torus import CharLimit, char_limit, exact_char_limit

EPS_ZERO = 0.01
EPS_NONZERO = 0.05
EPS_PASS = 0.05
EPS_FAIL = 0.15
DEFAULT_CUTOFF = 8

ERGODIC, NOT_ERGODIC = "Ergodic", "NotErgodic"
JOINT, NOT_JOINT = "JointlyErgodic", "NotJointlyErgodic"
INCONCLUSIVE = "Inconclusive"


@dataclass
class Witness:
    freq: object          # character, or a frequency beta for the spectral criterion
    modulus: float        # |C-lim|, or a lower bound
    certificate: Optional[str]
    exact: bool

    def to_json(self):
        f = self.freq
        if isinstance(f, SymReal):
            f = str(f)
        elif isinstance(f, tuple):
            f = [list(kb) if isinstance(kb, tuple) else kb for kb in f]
        return {"freq": f, "modulus": self.modulus, "certificate": self.certificate,
                "exact": self.exact}


@dataclass
class Verdict:
    decision: str
    witnesses: List[Witness] = field(default_factory=list)
    sub: Dict[str, "Verdict"] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    gray: List[Witness] = field(default_factory=list)
    tested: int = 0
    empirical: Optional[Dict] = None

    @property
    def definite(self) -> bool:
        return self.decision != INCONCLUSIVE

    def to_json(self):
        out = {"decision": self.decision, "witnesses": [w.to_json() for w in self.witnesses],
               "tested": self.tested}
        if self.gray:
            out["gray"] = [w.to_json() for w in self.gray]
        if self.notes:
            out["notes"] = list(self.notes)
        if self.sub:
            out["sub"] = {k: v.to_json() for k, v in self.sub.items()}
        if self.empirical is not None:
            out["empirical"] = self.empirical
        return out


def _classify(lim: CharLimit) -> str:
    m = lim.modulus
    if lim.exact:
        return "nonzero" if m > 1e-12 else "zero"
    if m < EPS_ZERO:
        return "zero"
    if m > EPS_NONZERO:
        return "nonzero"
    return "gray"


# -- base ergodicity --------------------------------------------------------

def base_ergodicity(sys: SystemSpec, T: str) -> Tuple[bool, Optional[Witness]]:
    """Closed-form ergodicity of one transformation, block by block."""
    for bi, b in enumerate(sys.blocks):
        p = b.param(T)
        if b.kind == "rotation":
            al = list(p) if p is not None else [SymReal(0)] * b.dim
            lat = relation_lattice(al)
            if lat.rank:
                m, v = lat.basis[0], lat.values[0]
                q = int(v.denominator)
                k = tuple(q * c for c in m)
                return False, Witness(_block_char(sys, bi, k), 1.0, "base:rotation-relation", True)
        elif b.kind == "cyclic":
            s = p or 0
            g = math.gcd(s, b.m)
            if g != 1:
                return False, Witness(_block_char(sys, bi, (b.m // g,)), 1.0, "base:cyclic-gcd", True)
        else:
            if not b.ergodic or not p:
                return False, Witness(_block_char(sys, bi, (1, 0)), 1.0, "base:automorphism", True)
    return True, None


def _block_char(sys: SystemSpec, bi: int, k) -> Char:
    z = list(sys.zero_char())
    z[bi] = tuple(k)
    return tuple(z)


# -- ergodicity of a GL-sequence -----------------------------------------------

def check_ergodic(sys: SystemSpec, seq: GlSeq, freq_cutoff: int = DEFAULT_CUTOFF,
                  M: int = 1 << 15, seed: int = 0, stop_early: bool = True) -> Verdict:
    """Spectral test of C-lim T(n) f = int f over the truncated character set."""
    for h in seq.handles:
        sys.check_handle(h)
    v = Verdict(ERGODIC)
    for bi, b in enumerate(sys.blocks):
        if b.kind != "automorphism":
            continue
        if not b.ergodic:
            # an orbit sum of characters under A^T is A-invariant
            v.witnesses.append(Witness(_block_char(sys, bi, (1, 0)), 1.0, "automorphism:not-ergodic", True))
        elif linear_part(power_expr(b, seq)) == 0:
            v.witnesses.append(Witness(_block_char(sys, bi, (1, 0)), _bounded_power_mass(b, seq),
                                       "automorphism:bounded-power", True))
        if v.witnesses and stop_early:
            v.decision = NOT_ERGODIC
            return v
    for k in static_chars(sys, freq_cutoff, halve=True):
        theta = phase_expr(sys, seq, k)
        lim = char_limit(theta, 1, M=M, seed=seed)
        v.tested += 1
        c = _classify(lim)
        if c == "nonzero":
            v.witnesses.append(Witness(k, lim.modulus, lim.certificate or "numeric", lim.exact))
            if stop_early:
                break
        elif c == "gray":
            v.gray.append(Witness(k, lim.modulus, None, False))
    if v.witnesses:
        v.decision = NOT_ERGODIC
    elif v.gray:
        v.decision = INCONCLUSIVE
    return v


def _bounded_power_mass(b, seq: GlSeq, n: int = 4096) -> float:
    """sqrt(sum_v dens(P = v)^2), a lower bound for the average of a character."""
    P = eval_int_many(power_expr(b, seq), np.arange(1, n + 1))
    _, cnt = np.unique(P, return_counts=True)
    return float(math.sqrt(np.sum((cnt / n) ** 2)))


def check_single(sys: SystemSpec, seq: GlSeq, freq_cutoff: int = DEFAULT_CUTOFF, **kw) -> Verdict:
    """T^{phi(n)} for a single handle with unbounded phi."""
    if len(seq.handles) != 1:
        raise ValueError("check_single needs a sequence of one transformation")
    T, phi = seq.factors[0]
    if linear_part(phi) == 0:
        raise UnboundedRequired(f"exponent {to_text(phi)} is bounded")
    ok, w = base_ergodicity(sys, T)
    if not ok:
        return Verdict(NOT_ERGODIC, [w], notes=[f"{T} is not ergodic"])
    return check_ergodic(sys, seq, freq_cutoff, **kw)


def check_joint(sys: SystemSpec, seqs: Sequence[GlSeq], freq_cutoff: int = DEFAULT_CUTOFF,
                **kw) -> Verdict:
    """Pairwise quotients T_i^{-1} T_j and the product T_1 x ... x T_k must all be ergodic."""
    v = Verdict(JOINT)
    k = len(seqs)
    for i in range(k):
        for j in range(i + 1, k):
            q = inverse_times(seqs[i], seqs[j])
            v.sub[f"quotient {i + 1},{j + 1}"] = check_ergodic(sys, q, freq_cutoff, **kw)
    if k:
        P = product_system([sys] * k)
        v.sub["product"] = check_ergodic(P, product_seq(seqs), freq_cutoff, **kw)
    decisions = [s.decision for s in v.sub.values()]
    if NOT_ERGODIC in decisions:
        v.decision = NOT_JOINT
    elif INCONCLUSIVE in decisions:
        v.decision = INCONCLUSIVE
    for name, s in v.sub.items():
        v.witnesses.extend(s.witnesses)
        v.tested += s.tested
    return v


# witnesses as test functions ------------------------------------------------

def witness_fns(sys: SystemSpec, k: int, verdict: Verdict) -> List[Tuple[Fn, ...]]:
    """Function tuples (f_1..f_k) exhibiting each witness of a joint verdict."""
    one = char_fn(sys, *sys.zero_char())
    out = []
    for name, s in verdict.sub.items():
        for w in s.witnesses:
            if not isinstance(w.freq, tuple):
                continue
            fs = [one] * k
            if name == "product":
                nb = len(sys.blocks)
                fs = [char_fn(sys, *w.freq[i * nb:(i + 1) * nb]) for i in range(k)]
            else:
                i, j = (int(t) - 1 for t in name.split()[1].split(","))
                neg = tuple(tuple(-c for c in kb) for kb in w.freq)
                fs[i] = char_fn(sys, *neg)
                fs[j] = char_fn(sys, *w.freq)
            out.append(tuple(fs))
    return out


def default_bank(sys: SystemSpec, k: int, cutoff: int = 1) -> List[Tuple[Fn, ...]]:
    """All k-tuples of small characters, at least one mean-zero."""
    import itertools
    chars = [sys.zero_char()] + static_chars(sys, cutoff)
    for bi, b in enumerate(sys.blocks):
        if b.kind == "automorphism":
            chars += [_block_char(sys, bi, kb) for kb in ((1, 0), (0, 1), (1, 1))]
    z = sys.zero_char()
    out = []
    for combo in itertools.product(chars, repeat=k):
        if all(c == z for c in combo):
            continue
        out.append(tuple({c: 1.0 + 0j} for c in combo))
    return out


# -- spectral criterion for a shared exponent ------------------------------------

def spec_criterion(sys: SystemSpec, handles: Sequence[str], phi: GlfExpr,
                   freq_cutoff: int = DEFAULT_CUTOFF, M: int = 1 << 15, seed: int = 0) -> Verdict:
    """Joint ergodicity of T_1^{phi(n)},...,T_k^{phi(n)} for jointly ergodic T_i."""
    base = check_joint(sys, [GlSeq([(h, X)]) for h in handles], freq_cutoff)
    if base.decision != JOINT:
        raise HypothesisFailed(f"{', '.join(handles)} are not jointly ergodic ({base.decision})")
    phi = normalize(phi)
    if linear_part(phi) == 0:
        raise UnboundedRequired(f"exponent {to_text(phi)} is bounded")
    P = product_system([sys] * len(handles))
    ph = [f"{h}@{i}" for i, h in enumerate(handles, 1)]
    v = Verdict(JOINT, sub={"base": base})
    alpha = phi.e.a if isinstance(phi, Floor) and isinstance(phi.e, Linear) and not phi.e.a.is_rational else None
    if alpha is not None:
        v.notes.append("exponent floor(alpha x + b): exact membership test")
    seen = set()
    for k in static_chars(P, freq_cutoff, halve=True):
        beta = sum((total_frequency(P, h, k) for h in ph), SymReal(0)).frac()
        if beta == 0 or beta in seen:
            continue
        seen.add(beta)
        v.tested += 1
        if alpha is not None:
            s = split_on(alpha, alpha * beta)
            if s is None or s[0].denominator != 1:
                continue
            # alpha beta = m alpha + p/q, so alpha (q beta) lies in Z alpha + Z
            q = int(s[1].denominator)
            b2 = (beta * q).frac()
            if b2 == 0:
                continue
            lim = exact_char_limit(phi, b2)
            if lim is not None and lim.modulus > 1e-12:
                v.witnesses.append(Witness(b2, lim.modulus, lim.certificate, True))
                break
            continue
        lim = char_limit(phi, beta, M=M, seed=seed)
        c = _classify(lim)
        if c == "nonzero":
            v.witnesses.append(Witness(beta, lim.modulus, lim.certificate or "numeric", lim.exact))
            break
        if c == "gray":
            v.gray.append(Witness(beta, lim.modulus, None, False))
    if v.witnesses:
        v.decision = NOT_JOINT
    elif v.gray:
        v.decision = INCONCLUSIVE
    return v


# -- empirical side ---------------------------------------------------------

def classify_defect(d: float) -> str:
    if d < EPS_PASS:
        return "pass"
    if d > EPS_FAIL:
        return "fail"
    return "gray"


def empirical_validate(sys: SystemSpec, seqs: Sequence[GlSeq], bank: Optional[Sequence] = None,
                       schedule: FolnerSchedule = FORWARD, N: int = 10 ** 5,
                       verdict: Optional[Verdict] = None) -> Dict:
    """Max L2 defect over a bank of function tuples and its agreement with a verdict."""
    if bank is None:
        bank = default_bank(sys, len(seqs))
        if verdict is not None:
            bank = witness_fns(sys, len(seqs), verdict) + list(bank)
    defects = [multi_average_l2(sys, seqs, list(fs), schedule, N) for fs in bank]
    mx = max(defects) if defects else 0.0
    cls = classify_defect(mx)
    rep = {"N": N, "schedule": schedule.name or schedule.kind, "bank_size": len(bank),
           "max_defect": mx, "class": cls}
    if verdict is not None:
        d = verdict.decision
        if d in (JOINT, ERGODIC):
            rep["consistent"] = cls != "fail"
            rep["agree"] = cls == "pass"
        elif d in (NOT_JOINT, NOT_ERGODIC):
            rep["consistent"] = cls != "pass"
            rep["agree"] = cls == "fail"
        else:
            rep["consistent"] = True
            rep["agree"] = None
    return rep


# -- primes -----------------------------------------------------------------

def reduced_residues(W: int) -> List[int]:
    return [r for r in range(W) if math.gcd(r, W) == 1] if W > 1 else [0]


def prime_joint_check(sys: SystemSpec, seqs: Sequence[GlSeq], bank: Optional[Sequence] = None,
                      N: int = 10 ** 6, Ws: Sequence[int] = (1, 2, 6, 30),
                      r_samples: Optional[int] = None, freq_cutoff: int = 4, eps: float = EPS_PASS) -> Dict:
    """Check joint ergodicity of every T_i(W n + r) and measure the prime average."""
    hyp = {}
    ok = True
    wit: List = []
    for W in Ws:
        rs = reduced_residues(W)
        if r_samples:
            rs = rs[:r_samples]
        for r in rs:
            inner = normalize(Linear(SymReal(W), SymReal(r)))
            sub = [s.compose(inner) for s in seqs]
            v = check_joint(sys, sub, freq_cutoff)
            hyp[f"W={W},r={r}"] = v.decision
            if W == 1:
                wit = witness_fns(sys, len(seqs), v)
            ok = ok and v.decision == JOINT
    if bank is None:
        bank = wit + default_bank(sys, len(seqs))
    if not seqs:
        defects = [0.0]
    else:
        defects = [prime_multi_average_l2(sys, seqs, list(fs), N) for fs in bank]
    mx = max(defects) if defects else 0.0
    return {"hypothesis": ok, "checks": hyp, "N": N, "max_prime_defect": mx,
            "consistent": (not ok) or mx < eps}


def flip_counterexample(N: int = 10 ** 6) -> Dict:
    """Flip x -> x+1 on Z/2 with (T^n, T^{floor(sqrt2 n)}) and f1 = f2 = 1 + chi.

    Along primes T^p f1 -> T f1 = 1 - chi, while T^{floor(sqrt2 p)} f2 averages
    to its integral, so the limit is T f1 * int f2 instead of int f1 int f2.
    """
    from .number_field import standard_basis
    s2 = standard_basis().gen("sqrt2")
    flip = cyclic_shift(2, {"T": 1}, name="flip")
    seqs = [GlSeq([("T", X)]), GlSeq([("T", Floor(Linear(s2, SymReal(0))))])]
    f = fn_sum((1, char_fn(flip, 0)), (1, char_fn(flip, 1)))
    tf1 = fn_sum((1, char_fn(flip, 0)), (-1, char_fn(flip, 1)))
    to_tf = prime_multi_average_l2(flip, seqs, [f, f], N, target=tf1)
    naive = prime_multi_average_l2(flip, seqs, [f, f], N)
    hyp = check_joint(flip, [s.compose(Linear(SymReal(2), SymReal(1))) for s in seqs], 4)
    return {"N": N, "defect_vs_Tf1_int_f2": to_tf, "defect_vs_product_of_integrals": naive,
            "hypothesis_W2_r1": hyp.decision}
