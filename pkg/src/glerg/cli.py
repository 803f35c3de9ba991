"""Command line front end: parse a program, run its commands, write JSON/CSV."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import Dict, List, Optional

import numpy as np

from . import averaging as avg
from .dsl import Command, DslProgram, parse, seq_text
from .errors import GlergError
from .glf import (bound_interval, bounded_part, eval_float, is_bounded, linear_part, to_text,
                  weight)
from .indicators import indicator_ge, indicator_lt, u_and
from .joint import (INCONCLUSIVE, NOT_JOINT, check_joint, empirical_validate,
                    prime_joint_check, spec_criterion)
from .torus import build_rep, char_limit, exact_char_limit, mean_value

EXIT_OK, EXIT_ERROR, EXIT_NOT_JOINT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class Options:
    def __init__(self, seed: int = 0, n: int = 100_000, folner: str = "forward",
                 freq_cutoff: int = 8, out: Optional[str] = None):
        self.seed = seed
        self.n = n
        self.folner = folner
        self.freq_cutoff = freq_cutoff
        self.out = out

    @property
    def schedule(self) -> avg.FolnerSchedule:
        return avg.FolnerSchedule.parse(self.folner)


# -- serialization ----------------------------------------------------------

def _clean(o):
    """Round floats to 12 significant digits; turn numpy/complex values into JSON."""
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (complex, np.complexfloating)):
        return {"re": _clean(float(o.real)), "im": _clean(float(o.imag))}
    if isinstance(o, (float, np.floating)):
        o = float(o)
        if not math.isfinite(o):
            return None
        v = float(f"{o:.12g}")
        return 0.0 if v == 0 else v
    if o is None or isinstance(o, str):
        return o
    return str(o)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _trace_Ns(N: int) -> List[int]:
    Ns = []
    v = 100
    while v < N:
        Ns.append(v)
        v *= 4
    Ns.append(N)
    return Ns


# -- commands ---------------------------------------------------------------

class Runner:
    def __init__(self, prog: DslProgram, opt: Options):
        self.prog = prog
        self.opt = opt
        self.records: List[Dict] = []
        self.traces: Dict[str, list] = {}

    def run(self) -> int:
        for i, c in enumerate(self.prog.commands):
            rec = {"index": i, "command": c.name, "text": c.text(), "line": c.line}
            try:
                rec["result"] = getattr(self, "do_" + c.name.replace("-", "_"))(c, i)
            except GlergError as e:
                rec["error"] = {"type": type(e).__name__, "message": str(e)}
            self.records.append(rec)
        decisions = [r["result"].get("decision") for r in self.records
                     if r["command"] == "check-joint" and "result" in r]
        if any(r.get("error") for r in self.records):
            return EXIT_ERROR
        if NOT_JOINT in decisions:
            return EXIT_NOT_JOINT
        if INCONCLUSIVE in decisions:
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def _trace(self, name: str, op) -> None:
        if self.opt.out:
            self.traces[name] = avg.convergence_trace(op, _trace_Ns(self.opt.n))

    def do_decompose(self, c: Command, i: int):
        e = c.expr
        psi = bounded_part(e)
        iv = bound_interval(psi)
        return {"expr": to_text(e), "weight": weight(e), "linear_part": str(linear_part(e)),
                "bounded_part": to_text(psi), "bound": {"lo": str(iv.lo), "hi": str(iv.hi),
                                                        "lo_closed": iv.lo_closed,
                                                        "hi_closed": iv.hi_closed}}

    def do_rep(self, c: Command, i: int):
        r = build_rep(c.expr)
        return {"expr": to_text(c.expr), "dim": r.dim, "pieces": len(r.pieces), "rep": r.to_json()}

    def do_limit(self, c: Command, i: int):
        ex = exact_char_limit(c.expr, c.beta)
        out = {"expr": to_text(c.expr), "beta": str(c.beta),
               "exact": None if ex is None else ex.value,
               "certificate": None if ex is None else ex.certificate}
        b = float(c.beta)
        f = lambda ns: np.exp(2j * np.pi * b * eval_float(c.expr, ns))
        sched = self.opt.schedule
        try:
            num = char_limit(c.expr, c.beta, seed=self.opt.seed, exact_first=False)
            out["numeric"] = {"value": num.value, "stderr": num.stderr}
        except GlergError as e:
            out["numeric"] = {"error": str(e)}
        out["empirical"] = {"N": self.opt.n, "value": complex(avg.cesaro_avg(f, sched, self.opt.n))}
        self._trace(f"limit_{i}", lambda N: avg.cesaro_avg(f, sched, N))
        return out

    def do_density(self, c: Command, i: int):
        a, b = c.interval
        e = c.expr
        pred = lambda ns: (lambda v: (v >= float(a)) & (v < float(b)))(eval_float(e, ns))
        sched = self.opt.schedule
        out = {"expr": to_text(e), "interval": [str(a), str(b)]}
        if is_bounded(e):
            ind = u_and(indicator_ge(e, a), indicator_lt(e, b))
            out["limit"] = mean_value(ind.expr, seed=self.opt.seed).value.real
        out["empirical"] = {"N": self.opt.n, "value": avg.density_est(pred, sched, self.opt.n)}
        self._trace(f"density_{i}", lambda N: avg.density_est(pred, sched, N))
        return out

    def do_check_joint(self, c: Command, i: int):
        sys_ = self.prog.systems[c.system]
        v = check_joint(sys_, list(c.seqs), self.opt.freq_cutoff, seed=self.opt.seed)
        emp = empirical_validate(sys_, list(c.seqs), schedule=self.opt.schedule, N=self.opt.n, verdict=v)
        v.empirical = emp
        out = v.to_json()
        out["system"] = c.system
        out["seqs"] = [seq_text(s) for s in c.seqs]
        return out

    def do_prime_avg(self, c: Command, i: int):
        sys_ = self.prog.systems[c.system]
        rep = prime_joint_check(sys_, list(c.seqs), N=self.opt.n,
                                freq_cutoff=min(self.opt.freq_cutoff, 4))
        rep["system"] = c.system
        rep["seqs"] = [seq_text(s) for s in c.seqs]
        return rep

    def do_criterion(self, c: Command, i: int):
        sys_ = self.prog.systems[c.system]
        v = spec_criterion(sys_, list(c.handles), c.expr, self.opt.freq_cutoff, seed=self.opt.seed)
        out = v.to_json()
        out["system"] = c.system
        return out

    def do_gowers(self, c: Command, i: int):
        ns = np.arange(1, c.N + 1)
        b = np.asarray(eval_float(c.expr, ns), dtype=float)
        return {"expr": to_text(c.expr), "k": c.k, "N": c.N, "value": avg.gowers_norm(b, c.k, c.N)}

    def do_report(self, c: Command, i: int):
        rows = []
        for r in self.records:
            if r["command"] == "report":
                continue
            res = r.get("result", {})
            head = res.get("decision") or res.get("value") or res.get("exact") or res.get("limit")
            rows.append({"command": r["command"], "text": r["text"],
                         "headline": head, "error": r.get("error")})
        return {"report": rows}

    # output
    def emit(self) -> str:
        doc = {"seed": self.opt.seed, "n": self.opt.n, "folner": self.opt.folner,
               "freq_cutoff": self.opt.freq_cutoff, "results": self.records}
        text = dumps(doc)
        if self.opt.out:
            write_atomic(os.path.join(self.opt.out, "results.json"), text)
            for name, rows in self.traces.items():
                avg.write_trace_csv(os.path.join(self.opt.out, f"{name}.csv"), rows)
        return text


def summary_line(rec: Dict) -> str:
    if "error" in rec:
        return f"[{rec['index']}] {rec['text']}  ERROR {rec['error']['type']}: {rec['error']['message']}"
    r = rec["result"]
    if "decision" in r:
        tail = r["decision"]
    elif "value" in r:
        tail = f"value {_clean(r['value'])}"
    elif "exact" in r:
        tail = f"exact {_clean(r['exact'])} ({r.get('certificate')})"
    elif "report" in r:
        tail = f"{len(r['report'])} entries"
    elif "max_prime_defect" in r:
        tail = f"hypothesis {r['hypothesis']}, prime defect {_clean(r['max_prime_defect'])}"
    elif "empirical" in r:
        tail = f"empirical {_clean(r['empirical']['value'])}"
    else:
        tail = "ok"
    return f"[{rec['index']}] {rec['text']}  {tail}"


def run_text(text: str, opt: Optional[Options] = None):
    """Parse and run; returns (exit code, runner)."""
    opt = opt or Options()
    prog = parse(text)
    r = Runner(prog, opt)
    code = r.run()
    return code, r


# -- argparse ---------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for quasi-random sampling")
    p.add_argument("--n", type=int, default=100_000, help="averaging index N")
    p.add_argument("--folner", default="forward", help="forward | window | window:a,b | odd")
    p.add_argument("--freq-cutoff", type=int, default=8, help="max |k| per coordinate")
    p.add_argument("--out", default=None, help="directory for results.json and CSV traces")
    p.add_argument("--json", action="store_true", help="print the JSON document to stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glerg", description="Generalized linear functions and ergodic averages")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run every command of a program")
    p.add_argument("program", nargs="?", help="program file ('-' for stdin)")
    p.add_argument("-e", "--expr", dest="text", help="program text")
    _common(p)
    p = sub.add_parser("parse", help="print the canonical form of a program")
    p.add_argument("program", nargs="?")
    p.add_argument("-e", "--expr", dest="text")
    for name in ("decompose", "rep", "limit", "density", "check-joint", "prime-avg", "gowers",
                 "criterion", "report"):
        p = sub.add_parser(name, help=f"run one '{name}' command")
        p.add_argument("args", nargs="*", help="command body in program syntax")
        p.add_argument("-p", "--program", help="file with declarations")
        p.add_argument("-d", "--define", action="append", default=[], help="declarations text")
        _common(p)
    return ap


def _read(path: Optional[str], text: Optional[str]) -> str:
    if text is not None:
        return text
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "parse":
            sys.stdout.write(parse(_read(args.program, args.text)).text())
            return EXIT_OK
        if args.cmd == "run":
            text = _read(args.program, args.text)
        else:
            decls = [_read(args.program, None)] if args.program else []
            decls += args.define
            text = "\n".join(decls + [f"{args.cmd} {' '.join(args.args)};"])
        opt = Options(args.seed, args.n, args.folner, args.freq_cutoff, args.out)
        code, runner = run_text(text, opt)
    except GlergError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    doc = runner.emit()
    if args.json or not args.out:
        sys.stdout.write(doc)
    else:
        for rec in runner.records:
            print(summary_line(rec))
    return code


if __name__ == "__main__":
    sys.exit(main())
