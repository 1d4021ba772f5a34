"""Command line front end.

Exit codes: 0 ok, 1 usage or protocol errors, 2 enumeration/dimension cap
violations, 3 spec-file or matrix-file parse errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classical import cost, run_classical
from .compiler import compile_protocol, verify_theorem1
from .core import InputMatrix, forehead_view, gip_eval, pad_to_k, random_matrix
from .errors import CapExceeded, ProtocolError, SpecFormatError
from .fourier import extract_parity_referee
from .gip import build_quantum_gip, grolmusz
from .quantum import qcost, run_quantum
from .specfile import compiled_to_json, dump, load_classical, load_compiled
from .sweep import SweepConfig, parse_range, rows_to_csv, run_sweep, separation_table, separation_to_csv

EXIT_USAGE, EXIT_CAP, EXIT_PARSE = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _matrix_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", help="matrix file: k lines of n characters from {0,1}")
    p.add_argument("--random", action="store_true", help="draw a uniformly random matrix")
    p.add_argument("--k", type=int, help="rows for --random")
    p.add_argument("--n", type=int, help="columns for --random")
    p.add_argument("--seed", type=int, default=0)


def _load_matrix(args, k: Optional[int] = None, n: Optional[int] = None) -> InputMatrix:
    if args.matrix and args.random:
        raise UsageError("give either --matrix or --random, not both")
    if args.matrix:
        try:
            text = Path(args.matrix).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {args.matrix}: {exc}") from exc
        return InputMatrix.parse(text)
    if args.random:
        k = args.k if args.k is not None else k
        n = args.n if args.n is not None else n
        if k is None or n is None:
            raise UsageError("--random needs --k and --n")
        return random_matrix(k, n, np.random.default_rng(args.seed))
    raise UsageError("an input is required: --matrix FILE or --random")


def _emit(obj, out: Optional[str]) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nofq", description="Number-on-the-Forehead protocol workbench")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gip", help="GIP evaluation and protocols")
    g.add_argument("action", choices=["eval", "grolmusz", "quantum"])
    _matrix_args(g)
    g.add_argument("--out")

    rc = sub.add_parser("run-classical", help="run a classical protocol spec on one matrix")
    rc.add_argument("--spec", required=True)
    _matrix_args(rc)
    rc.add_argument("--out")

    rq = sub.add_parser("run-quantum", help="run a compiled quantum protocol spec on one matrix")
    rq.add_argument("--spec", required=True)
    _matrix_args(rq)
    rq.add_argument("--out")

    cp = sub.add_parser("compile", help="compile a classical spec into a quantum spec")
    cp.add_argument("--spec", required=True)
    cp.add_argument("--out", help="quantum spec output path (default stdout)")
    cp.add_argument("--report", help="also verify the simulation bound and write the JSON report here")

    vt = sub.add_parser("verify-theorem1", help="exact end-to-end check of the simulation bound (f = GIP)")
    vt.add_argument("--spec", required=True)
    vt.add_argument("--out")

    sw = sub.add_parser("sweep", help="success/cost table over (k, n)")
    sw.add_argument("--protocol", required=True, help="grolmusz | quantum-gip | compiled:<file>")
    sw.add_argument("--k", required=True, help="range such as 3..5 or 3,5")
    sw.add_argument("--n", required=True, help="range such as 3..15")
    sw.add_argument("--mode", choices=["exhaustive", "sampled"], default="sampled")
    sw.add_argument("--samples", type=int, default=1000)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--timing", action="store_true", help="record wall_ms (output no longer reproducible)")
    sw.add_argument("--out")

    sp = sub.add_parser("separation", help="quantum cost vs the cited classical lower bound")
    sp.add_argument("--n", nargs="+", type=int, default=[3, 15, 255, 65535])
    sp.add_argument("--out")
    return parser


def _cmd_gip(args) -> None:
    m = _load_matrix(args)
    if args.action == "eval":
        _emit({"output": gip_eval(m), "cost": 0, "transcript": []}, args.out)
    elif args.action == "grolmusz":
        res = grolmusz(m)
        transcript = [{"w": format(b.w, f"0{m.k - 1}b"), "flag": int(b.flag), "bits": list(b.bits)}
                      for b in res.blocks]
        _emit({"output": res.output, "cost": res.cost, "transcript": transcript}, args.out)
    else:
        kq = m.k if m.k % 2 else m.k + 1   # even k: all-ones padding keeps GIP
        padded = pad_to_k(m, kq)
        q = build_quantum_gip(kq, m.n)
        dist = run_quantum(q, padded)
        preamble = q.preamble.message(forehead_view(padded, 1))
        _emit({"output": int(np.argmax(dist)), "distribution": [float(p) for p in dist],
               "cost": asdict(qcost(q)), "padded_k": kq,
               "transcript": {"preamble": format(preamble, f"0{q.preamble.width}b")}},
              args.out)


def _cmd_run_classical(args) -> None:
    p = load_classical(args.spec)
    m = _load_matrix(args, p.k, p.n)
    if (m.k, m.n) != (p.k, p.n):
        raise UsageError(f"spec is for {p.k}x{p.n} matrices, got {m.k}x{m.n}")
    out, answers = run_classical(p, m)
    _emit({"output": out, "cost": cost(p),
           "transcript": [format(a, f"0{w}b") if w else "" for a, w in zip(answers, p.widths)]}, args.out)


def _cmd_run_quantum(args) -> None:
    c = load_compiled(args.spec)
    q = c.quantum
    m = _load_matrix(args, q.k, q.n)
    if (m.k, m.n) != (q.k, q.n):
        raise UsageError(f"spec is for {q.k}x{q.n} matrices, got {m.k}x{m.n}")
    dist = run_quantum(q, m)
    _emit({"distribution": [float(p) for p in dist], "cost": asdict(qcost(q))}, args.out)


def _cmd_compile(args) -> None:
    src = load_classical(args.spec)
    if args.report:
        report = verify_theorem1(src, gip_eval)
        parity = report.extraction.parity
        Path(args.report).write_text(json.dumps(report.to_json(), indent=1) + "\n")
    else:
        parity = extract_parity_referee(src, gip_eval).parity
    compiled = compile_protocol(src, parity)
    text = dump(compiled_to_json(compiled))
    _emit(text, args.out)


def _cmd_verify(args) -> None:
    src = load_classical(args.spec)
    _emit(verify_theorem1(src, gip_eval).to_json(), args.out)


def _cmd_sweep(args) -> None:
    try:
        cfg = SweepConfig(parse_range(args.k), parse_range(args.n), args.protocol, args.mode,
                          args.samples, args.seed, args.out, args.timing)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(rows_to_csv(run_sweep(cfg)), args.out)


def _cmd_separation(args) -> None:
    _emit(separation_to_csv(separation_table(args.n)), args.out)


COMMANDS = {
    "gip": _cmd_gip, "run-classical": _cmd_run_classical, "run-quantum": _cmd_run_quantum,
    "compile": _cmd_compile, "verify-theorem1": _cmd_verify, "sweep": _cmd_sweep,
    "separation": _cmd_separation,
}


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except CapExceeded as exc:
        return _fail(EXIT_CAP, "cap", str(exc))
    except SpecFormatError as exc:
        return _fail(EXIT_PARSE, "parse", str(exc))
    except ProtocolError as exc:
        return _fail(EXIT_USAGE, "protocol", str(exc))
    return 0


def main() -> None:
    sys.exit(run_cli())
