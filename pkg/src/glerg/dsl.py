"""Plain-text experiment language.

A program is a sequence of statements:

    irrational q5 = quadratic(5);
    rule sqrt2*q5 = ...;            (product rule, value is a constant)
    expr f = floor(sqrt2*x + 1/3);
    system rot { torus dim 1; T: alpha = sqrt2; }
    limit beta=1/2 of floor(sqrt2*x);
    check-joint rot : T^(x), T^(2*x);

Expressions use the single variable x.  Errors carry line and column.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

from .errors import DslSyntaxError, UnknownName
from .glf import GlfExpr, Linear, Scale, X, as_expr, floor_, frac_, normalize, to_text
from .number_field import IrrationalBasis, SymReal, format_symreal, standard_basis
from .systems import (GlSeq, SystemSpec, automorphism_block, check_commuting, cyclic_block,
                      rotation_block)

KEYWORDS = {"floor", "frac", "x"}
COMMANDS = ("decompose", "rep", "limit", "density", "check-joint", "prime-avg", "gowers",
            "report", "criterion")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)|
    (?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<str>"[^"\n]*")|
    (?P<op>[-+*/()\[\]{};:,=^])|(?P<bad>.)
""", re.X)


@dataclass(frozen=True)
class Tok:
    kind: str   # num, name, str, op, eof
    text: str
    line: int
    col: int

    @property
    def end(self) -> int:
        return self.col + len(self.text)


def tokenize(text: str) -> List[Tok]:
    out: List[Tok] = []
    line, start = 1, 0
    for m in _TOKEN.finditer(text):
        k = m.lastgroup
        col = m.start() - start + 1
        if k == "nl":
            line += 1
            start = m.end()
            continue
        if k in ("ws", "comment"):
            continue
        if k == "bad":
            raise DslSyntaxError(line, col, {"token"}, m.group())
        out.append(Tok(k, m.group(), line, col))
    last_col = len(text) - start + 1
    out.append(Tok("eof", "", line, last_col))
    return out


# -- statements -------------------------------------------------------------

def _vec_text(v: Sequence[SymReal]) -> str:
    if len(v) == 1:
        return _const_text(v[0])
    return "(" + ", ".join(_const_text(a) for a in v) + ")"


def _const_text(c: SymReal) -> str:
    return format_symreal(c)


@dataclass(frozen=True)
class IrrDecl:
    name: str
    kind: str            # quadratic | pi | custom
    arg: Optional[str] = None

    def text(self) -> str:
        if self.kind == "quadratic":
            return f"irrational {self.name} = quadratic({self.arg});"
        if self.kind == "pi":
            return f"irrational {self.name} = pi;"
        return f'irrational {self.name} = custom("{self.arg}");'


@dataclass(frozen=True)
class RuleDecl:
    a: str
    b: str
    value: SymReal

    def text(self) -> str:
        return f"rule {self.a}*{self.b} = {_const_text(self.value)};"


@dataclass(frozen=True)
class ExprDecl:
    name: str
    expr: GlfExpr

    def text(self) -> str:
        return f"expr {self.name} = {to_text(self.expr)};"


@dataclass(frozen=True)
class SystemDecl:
    name: str
    items: Tuple[tuple, ...]
    spec: SystemSpec = field(compare=False, hash=False, repr=False, default=None)

    def text(self) -> str:
        parts = []
        for it in self.items:
            if it[0] == "torus":
                parts.append(f"torus dim {it[1]};")
            elif it[0] == "cyclic":
                parts.append(f"cyclic mod {it[1]};")
            elif it[0] == "automorphism":
                A = it[1]
                parts.append(f"automorphism [[{A[0][0]}, {A[0][1]}], [{A[1][0]}, {A[1][1]}]];")
            else:
                _, h, key, val = it
                v = _vec_text(val) if key == "alpha" else str(val)
                parts.append(f"{h}: {key} = {v};")
        return f"system {self.name} {{ " + " ".join(parts) + " }"


@dataclass(frozen=True)
class Command:
    name: str
    expr: Optional[GlfExpr] = None
    beta: Optional[SymReal] = None
    interval: Optional[Tuple[SymReal, SymReal]] = None
    system: Optional[str] = None
    seqs: Tuple[GlSeq, ...] = ()
    handles: Tuple[str, ...] = ()
    k: Optional[int] = None
    N: Optional[int] = None
    line: int = field(default=0, compare=False)

    def text(self) -> str:
        n = self.name
        if n in ("decompose", "rep"):
            return f"{n} {to_text(self.expr)};"
        if n == "limit":
            return f"limit beta={_const_text(self.beta)} of {to_text(self.expr)};"
        if n == "density":
            a, b = self.interval
            return f"density of {to_text(self.expr)} in [{_const_text(a)}, {_const_text(b)});"
        if n in ("check-joint", "prime-avg"):
            return f"{n} {self.system} : " + ", ".join(seq_text(s) for s in self.seqs) + ";"
        if n == "criterion":
            return f"criterion {self.system} : {', '.join(self.handles)} of {to_text(self.expr)};"
        if n == "gowers":
            return f"gowers k={self.k} N={self.N} of {to_text(self.expr)};"
        return "report;"


def seq_text(s: GlSeq) -> str:
    if not s.exps:
        return "id"
    return "*".join(f"{h}^({to_text(e)})" for h, e in s.exps.items())


Stmt = Union[IrrDecl, RuleDecl, ExprDecl, SystemDecl, Command]


@dataclass
class DslProgram:
    basis: IrrationalBasis
    stmts: List[Stmt]
    exprs: Dict[str, GlfExpr]
    systems: Dict[str, SystemSpec]

    @property
    def commands(self) -> List[Command]:
        return [s for s in self.stmts if isinstance(s, Command)]

    def text(self) -> str:
        return "\n".join(s.text() for s in self.stmts) + ("\n" if self.stmts else "")

    def __eq__(self, other):
        return isinstance(other, DslProgram) and self.stmts == other.stmts


# -- parser -----------------------------------------------------------------

class Parser:
    def __init__(self, text: str, basis: Optional[IrrationalBasis] = None):
        self.toks = tokenize(text)
        self.i = 0
        self.basis = basis or standard_basis()
        self.exprs: Dict[str, GlfExpr] = {}
        self.systems: Dict[str, SystemSpec] = {}

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def _fail(self, expected, tok: Optional[Tok] = None):
        t = tok or self.tok
        raise DslSyntaxError(t.line, t.col, expected, t.text if t.kind != "eof" else "end of input")

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "name") and t.text == text

    def accept(self, text: str) -> Optional[Tok]:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Tok:
        t = self.accept(text)
        if t is None:
            self._fail({text})
        return t

    def expect_kind(self, kind: str, what: str) -> Tok:
        t = self.tok
        if t.kind != kind:
            self._fail({what})
        self.i += 1
        return t

    def integer(self) -> int:
        neg = self.accept("-") is not None
        v = int(self.expect_kind("num", "integer").text)
        return -v if neg else v

    # program
    def program(self) -> DslProgram:
        stmts: List[Stmt] = []
        while self.tok.kind != "eof":
            stmts.append(self.statement())
        return DslProgram(self.basis, stmts, dict(self.exprs), dict(self.systems))

    def statement(self) -> Stmt:
        t = self.tok
        if t.kind != "name":
            self._fail({"irrational", "rule", "expr", "system", *COMMANDS})
        w = t.text
        if w == "irrational":
            return self.irrational()
        if w == "rule":
            return self.rule()
        if w == "expr":
            return self.expr_decl()
        if w == "system":
            return self.system()
        return self.command()

    def irrational(self) -> IrrDecl:
        self.expect("irrational")
        nt = self.expect_kind("name", "name")
        name = nt.text
        if name in KEYWORDS or name in self.basis.names or name in self.exprs:
            raise DslSyntaxError(nt.line, nt.col, {"fresh name"}, name)
        self.expect("=")
        if self.accept("quadratic"):
            self.expect("(")
            n = self.integer()
            self.expect(")")
            try:
                self.basis.add_quadratic(name, n)
            except ValueError as e:
                raise DslSyntaxError(nt.line, nt.col, {"non-square positive integer"}, str(n)) from e
            d = IrrDecl(name, "quadratic", str(n))
        elif self.accept("pi"):
            self.basis.add_pi(name)
            d = IrrDecl(name, "pi")
        elif self.accept("custom"):
            self.expect("(")
            s = self.expect_kind("str", "decimal string").text[1:-1]
            self.expect(")")
            self.basis.add_custom(name, decimal_oracle(s))
            d = IrrDecl(name, "custom", s)
        else:
            self._fail({"quadratic", "pi", "custom"})
        self.expect(";")
        return d

    def rule(self) -> RuleDecl:
        self.expect("rule")
        a = self.expect_kind("name", "generator")
        self.expect("*")
        b = self.expect_kind("name", "generator")
        for g in (a, b):
            if g.text not in self.basis.names:
                raise UnknownName(g.text, g.line, g.col)
        self.expect("=")
        v = self.constant()
        self.expect(";")
        self.basis.add_rule(a.text, b.text, v)
        x, y = sorted((a.text, b.text))
        return RuleDecl(x, y, v)

    def expr_decl(self) -> ExprDecl:
        self.expect("expr")
        nt = self.expect_kind("name", "name")
        if nt.text in KEYWORDS or nt.text in self.basis.names:
            raise DslSyntaxError(nt.line, nt.col, {"fresh name"}, nt.text)
        self.expect("=")
        e = self.expression()
        self.expect(";")
        self.exprs[nt.text] = e
        return ExprDecl(nt.text, e)

    def system(self) -> SystemDecl:
        self.expect("system")
        name = self.expect_kind("name", "system name").text
        self.expect("{")
        items: List[tuple] = []
        blocks: List[list] = []   # [kind, arg, params]
        while not self.accept("}"):
            t = self.tok
            if self.accept("torus"):
                self.expect("dim")
                d = self.integer()
                items.append(("torus", d))
                blocks.append(["torus", d, {}])
            elif self.accept("cyclic"):
                self.expect("mod")
                m = self.integer()
                items.append(("cyclic", m))
                blocks.append(["cyclic", m, {}])
            elif self.accept("automorphism"):
                A = self.matrix()
                items.append(("automorphism", A))
                blocks.append(["automorphism", A, {}])
            elif t.kind == "name":
                self.i += 1
                self.expect(":")
                if not blocks:
                    self._fail({"torus", "cyclic", "automorphism"}, t)
                kind = blocks[-1][0]
                key = {"torus": "alpha", "cyclic": "shift", "automorphism": "power"}[kind]
                kt = self.tok
                if self.accept("alpha") or self.accept("shift") or self.accept("power"):
                    if kt.text != key:
                        if kind == "automorphism" and kt.text == "alpha":
                            self.expect("=")
                            val = self.vector()
                            check_commuting(blocks[-1][1], {t.text: val})
                        raise DslSyntaxError(kt.line, kt.col, {key}, kt.text)
                else:
                    self._fail({key})
                self.expect("=")
                val = self.vector() if key == "alpha" else self.integer()
                if key == "alpha" and len(val) != blocks[-1][1]:
                    raise DslSyntaxError(kt.line, kt.col, {f"vector of length {blocks[-1][1]}"},
                                         str(len(val)))
                blocks[-1][2][t.text] = val
                items.append(("handle", t.text, key, val))
            else:
                self._fail({"torus", "cyclic", "automorphism", "handle", "}"})
            self.expect(";")
        built = []
        for kind, arg, params in blocks:
            if kind == "torus":
                built.append(rotation_block(arg, params))
            elif kind == "cyclic":
                built.append(cyclic_block(arg, params))
            else:
                built.append(automorphism_block(arg, params))
        spec = SystemSpec(tuple(built), name)
        self.systems[name] = spec
        return SystemDecl(name, tuple(items), spec)

    def matrix(self):
        self.expect("[")
        rows = []
        while True:
            self.expect("[")
            r = [self.integer()]
            while self.accept(","):
                r.append(self.integer())
            self.expect("]")
            rows.append(tuple(r))
            if not self.accept(","):
                break
        self.expect("]")
        t = self.tok
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise DslSyntaxError(t.line, t.col, {"2x2 integer matrix"}, str(rows))
        (a, b), (c, d) = rows
        if abs(a * d - b * c) != 1:
            raise DslSyntaxError(t.line, t.col, {"matrix with determinant +-1"}, str(rows))
        return tuple(rows)

    def vector(self) -> Tuple[SymReal, ...]:
        if self.at("(") :
            save = self.i
            self.i += 1
            v = [self.constant()]
            if self.accept(","):
                v.append(self.constant())
                while self.accept(","):
                    v.append(self.constant())
                self.expect(")")
                return tuple(v)
            self.i = save
        return (self.constant(),)

    # commands
    def command(self) -> Command:
        t = self.tok
        w = t.text
        if w in ("check", "prime"):
            self.i += 1
            self.expect("-")
            w2 = self.expect(("joint" if w == "check" else "avg")).text
            w = f"{w}-{w2}"
        elif w in COMMANDS:
            self.i += 1
        else:
            self._fail({"irrational", "rule", "expr", "system", *COMMANDS})
        line = t.line
        if w in ("decompose", "rep"):
            c = Command(w, expr=self.expression(), line=line)
        elif w == "limit":
            self.expect("beta")
            self.expect("=")
            beta = self.constant()
            self.expect("of")
            c = Command(w, expr=self.expression(), beta=beta, line=line)
        elif w == "density":
            self.expect("of")
            e = self.expression()
            self.expect("in")
            self.expect("[")
            a = self.constant()
            self.expect(",")
            b = self.constant()
            self.expect(")")
            c = Command(w, expr=e, interval=(a, b), line=line)
        elif w in ("check-joint", "prime-avg"):
            sysname = self.system_ref()
            self.expect(":")
            seqs = [self.seq()]
            while self.accept(","):
                seqs.append(self.seq())
            for s in seqs:
                for h in s.handles:
                    self.systems[sysname].check_handle(h)
            c = Command(w, system=sysname, seqs=tuple(seqs), line=line)
        elif w == "criterion":
            sysname = self.system_ref()
            self.expect(":")
            hs = [self.handle_ref(sysname)]
            while self.accept(","):
                hs.append(self.handle_ref(sysname))
            self.expect("of")
            c = Command(w, system=sysname, handles=tuple(hs), expr=self.expression(), line=line)
        elif w == "gowers":
            self.expect("k")
            self.expect("=")
            k = self.integer()
            self.expect("N")
            self.expect("=")
            N = self.integer()
            self.expect("of")
            c = Command(w, expr=self.expression(), k=k, N=N, line=line)
        else:
            c = Command("report", line=line)
        self.expect(";")
        return c

    def system_ref(self) -> str:
        t = self.expect_kind("name", "system name")
        if t.text not in self.systems:
            raise UnknownName(t.text, t.line, t.col)
        return t.text

    def handle_ref(self, sysname: str) -> str:
        t = self.expect_kind("name", "transformation")
        if t.text not in self.systems[sysname].handles:
            raise UnknownName(t.text, t.line, t.col)
        return t.text

    def seq(self) -> GlSeq:
        if self.accept("id"):
            return GlSeq([], certify=False)
        factors = [self.seq_factor()]
        while self.accept("*"):
            factors.append(self.seq_factor())
        t = self.tok
        try:
            return GlSeq(factors)
        except Exception as e:
            raise DslSyntaxError(t.line, t.col, {"integer-valued exponent"}, str(e)) from e

    def seq_factor(self):
        h = self.expect_kind("name", "transformation").text
        self.expect("^")
        if self.accept("("):
            e = self.expression()
            self.expect(")")
        elif self.tok.kind == "num":
            e = as_expr(int(self.tok.text))
            self.i += 1
        else:
            self.expect("x")
            e = X
        return h, e

    # expressions
    def constant(self) -> SymReal:
        t = self.tok
        v = self._sum()
        if isinstance(v, GlfExpr):
            raise DslSyntaxError(t.line, t.col, {"constant"}, "expression in x")
        return v

    def expression(self) -> GlfExpr:
        v = self._sum()
        return normalize(as_expr(v))

    def _sum(self):
        v = self._term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            w = self._term()
            v = _add(v, w if op == "+" else _neg(w))
        return v

    def _term(self):
        v = self._unary()
        while self.at("*") or self.at("/"):
            op = self.tok
            self.i += 1
            wt = self.tok
            w = self._unary()
            if op.text == "*":
                if isinstance(v, GlfExpr) and isinstance(w, GlfExpr):
                    raise DslSyntaxError(wt.line, wt.col, {"constant factor"}, "expression in x")
                v = _mul(v, w)
            else:
                if isinstance(w, GlfExpr):
                    raise DslSyntaxError(wt.line, wt.col, {"constant divisor"}, "expression in x")
                if w == 0:
                    raise DslSyntaxError(wt.line, wt.col, {"nonzero divisor"}, "0")
                v = _mul(v, w.inverse())
        return v

    def _unary(self):
        if self.accept("-"):
            return _neg(self._unary())
        if self.accept("+"):
            return self._unary()
        return self._factor()

    def _factor(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            nxt = self.tok
            # implicit product "2x"
            if nxt.kind == "name" and nxt.text == "x" and nxt.line == t.line and nxt.col == t.end:
                self.i += 1
                return normalize(Linear(SymReal(int(t.text)), SymReal(0)))
            return SymReal(int(t.text))
        if t.kind == "name":
            self.i += 1
            if t.text in ("floor", "frac"):
                self.expect("(")
                e = self.expression()
                self.expect(")")
                return floor_(e) if t.text == "floor" else frac_(e)
            if t.text == "x":
                return X
            if t.text in self.basis.names:
                return self.basis.gen(t.text)
            if t.text in self.exprs:
                return self.exprs[t.text]
            raise UnknownName(t.text, t.line, t.col)
        if self.accept("("):
            v = self._sum()
            self.expect(")")
            return v
        self._fail({"number", "name", "x", "floor", "frac", "("})


def _add(a, b):
    if isinstance(a, SymReal) and isinstance(b, SymReal):
        return a + b
    return normalize(as_expr(a) + as_expr(b))


def _neg(a):
    return -a


def _mul(a, b):
    if isinstance(a, SymReal) and isinstance(b, SymReal):
        return a * b
    if isinstance(a, SymReal):
        a, b = b, a
    return normalize(Scale(b, a))


def decimal_oracle(s: str):
    """Enclosure oracle for a number known to the given decimal digits.

    The value is taken to lie within one unit of the last digit."""
    s = s.strip()
    if not re.fullmatch(r"-?\d+(\.\d+)?", s):
        raise ValueError(f"bad decimal {s!r}")
    digits = len(s.split(".")[1]) if "." in s else 0
    v = mpq(Fraction(s))
    eps = mpq(1, 10 ** digits)
    lo, hi = v - eps, v + eps

    def oracle(bits: int):
        return lo, hi
    return oracle


def parse(text: str, basis: Optional[IrrationalBasis] = None) -> DslProgram:
    return Parser(text, basis).program()


def parse_expr(text: str, basis: Optional[IrrationalBasis] = None) -> GlfExpr:
    p = Parser(text, basis)
    e = p.expression()
    if p.tok.kind != "eof":
        p._fail({"+", "-", "*", "/", "end of input"})
    return e
