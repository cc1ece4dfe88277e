"""Command-line front end: `mzc check` and `mzc run`."""
from __future__ import annotations

import argparse
import os
import sys
import threading
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

from . import facts as F
from .driver import compile_text
from .facts import FactMismatch, MeetUndefined
from .interp import AbandonFailure, RuntimeFailure, StuckState, evaluate
from .kindcheck import KindError
from .parser import ParseError
from .permissions import DEFAULT_BUDGET
from .syntax import reset_fresh
from .typecheck import TypeCheckError

EXIT_OK = 0
EXIT_TYPE = 1
EXIT_KIND = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4
EXIT_INTERNAL = 5


@dataclass(frozen=True)
class RunConfig:
    mode: str
    file: str
    dump_perms: bool = False
    dump_facts: bool = False
    unchecked: bool = False
    depth_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.mode not in ("check", "run"):
            raise ValueError(f"unknown mode {self.mode}")
        if self.depth_budget < 1:
            raise ValueError("depth budget must be at least 1")


def dump_facts(compiled) -> str:
    return F.dump(compiled.facts, sorted(compiled.user_types))


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def parse_args(argv: Sequence[str]) -> RunConfig:
    ap = argparse.ArgumentParser(prog="mzc", description="Permission checker and interpreter.")
    sub = ap.add_subparsers(dest="mode", required=True)
    c = sub.add_parser("check", help="parse, kind-check and type-check a program")
    c.add_argument("file")
    c.add_argument("--dump-perms", action="store_true", help="print permissions at each program point")
    c.add_argument("--dump-facts", action="store_true", help="print the inferred datatype facts")
    c.add_argument("--depth", type=_positive, default=DEFAULT_BUDGET,
                   help="fold/unfold depth budget for subsumption")
    r = sub.add_parser("run", help="check and evaluate a program")
    r.add_argument("file")
    r.add_argument("--unchecked", action="store_true", help="skip type checking")
    r.add_argument("--depth", type=_positive, default=DEFAULT_BUDGET, help=argparse.SUPPRESS)
    a = ap.parse_args(list(argv))
    return RunConfig(a.mode, a.file, getattr(a, "dump_perms", False), getattr(a, "dump_facts", False),
                     getattr(a, "unchecked", False), a.depth)


def _diag(err: TextIO, file: str, loc, rule: str, message: str) -> None:
    line, col = loc or (0, 0)
    print(f"{file}:{line}:{col}: error[{rule}]: {message}", file=err)


def execute(cfg: RunConfig, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    reset_fresh(int(os.environ.get("MZC_SEED", "0")))
    try:
        with open(cfg.file) as fh:
            text = fh.read()
    except OSError as e:
        print(f"mzc: {e}", file=err)
        return EXIT_INTERNAL
    check = cfg.mode == "check" or not cfg.unchecked
    try:
        compiled = compile_text(text, typecheck=False)
        if cfg.dump_facts:
            print(dump_facts(compiled), file=out)
        if check:
            from .typecheck import check_program
            compiled.checked = check_program(compiled.program, cfg.depth_budget, cfg.dump_perms)
            if cfg.dump_perms:
                for d in compiled.checked.dumps:
                    print(d.render(), file=out)
    except ParseError as e:
        _diag(err, cfg.file, (e.line, e.col), "Parse", str(e.message) +
              (f" (expected {', '.join(sorted(e.expected))})" if e.expected else ""))
        return EXIT_PARSE
    except KindError as e:
        _diag(err, cfg.file, e.loc, "Kind", e.message)
        return EXIT_KIND
    except FactMismatch as e:
        _diag(err, cfg.file, e.loc, "Fact", str(e))
        return EXIT_TYPE
    except TypeCheckError as e:
        print(e.render(cfg.file), file=err)
        return EXIT_TYPE
    except (MeetUndefined, RecursionError) as e:
        print(f"{cfg.file}: internal error: {e}", file=err)
        return EXIT_INTERNAL
    if cfg.mode == "check":
        if not (cfg.dump_perms or cfg.dump_facts):
            print(f"{cfg.file}: ok", file=out)
        return EXIT_OK
    try:
        machine, value = evaluate(compiled.program)
    except AbandonFailure as e:
        print(f"abandon failed at {e.line}", file=err)
        return EXIT_RUNTIME
    except StuckState as e:
        print(f"{cfg.file}: stuck: {e}", file=err)
        return EXIT_INTERNAL
    except RuntimeFailure as e:
        print(f"{cfg.file}: runtime error: {e}", file=err)
        return EXIT_RUNTIME
    print(machine.show(value), file=out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else argv)
    # deep recursion in user programs needs a larger native stack
    sys.setrecursionlimit(1_000_000)
    threading.stack_size(512 * 1024 * 1024)
    result: list[int] = []
    t = threading.Thread(target=lambda: result.append(execute(cfg)))
    t.start()
    t.join()
    return result[0] if result else EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
