from __future__ import annotations

from pathlib import Path

import pytest

from mzc.syntax import reset_fresh

ROOT = Path(__file__).resolve().parents[1]
PROGRAMS = ROOT / "programs"


@pytest.fixture(autouse=True)
def _fresh_names():
    reset_fresh()
    yield


def program_text(name: str) -> str:
    return (PROGRAMS / name).read_text()


# Each rejected program and the rule its diagnostic must name.
NEGATIVE = {
    "aliased_args": "Application",
    "write_immutable": "Write",
    "read_dynamic": "Read",
    "writetag_arity": "WriteTag",
    "bad_consumes_rhs": "Kind",
    "capture": "Function",
    "double_consume": "Application",
    "give_no_adopts": "Give",
    "lost_argument": "Sub",
    "match_no_perm": "Match",
    "unsolved_flexible": "Instantiation",
    "retag_immutable": "WriteTag",
    "fact_mismatch": "Fact",
    "prim_bool": "Prim",
    "take_no_adopts": "Take",
    "bad_syntax": "Parse",
    "oneshot_twice": "Application",
}

ACCEPTED = ["fig1_append.mz", "fig4_bag.mz", "oneshot.mz", "swap.mz", "length.mz", "counter.mz",
            "map.mz", "runtime/fig4_bag_doubletake.mz",
            "runtime/give_take_roundtrip.mz", "runtime/take_never_given.mz"]


def diagnose(text: str) -> str:
    """The rule that rejects a program, or "ok"."""
    from mzc.driver import compile_text
    from mzc.facts import FactMismatch
    from mzc.kindcheck import KindError
    from mzc.parser import ParseError
    from mzc.typecheck import TypeCheckError
    try:
        compile_text(text)
    except ParseError:
        return "Parse"
    except KindError:
        return "Kind"
    except FactMismatch:
        return "Fact"
    except TypeCheckError as e:
        return e.rule
    return "ok"


class BagMachine:
    """Drives the compiled bag functions of the FIFO example from Python."""

    def __init__(self):
        from mzc.driver import compile_text
        from mzc.interp import evaluate
        compiled = compile_text(program_text("fig4_bag.mz"))
        self.m, _ = evaluate(compiled.program)
        self.reset()

    def reset(self) -> None:
        from mzc.interp import UNIT_V
        self.bag = self.m.call(self.m.globals["create"], UNIT_V)

    def insert(self, n: int) -> None:
        from mzc.interp import IntV, TupleV
        self.m.call(self.m.globals["insert"], TupleV((IntV(n), self.bag)))

    def retrieve(self):
        tag, fields = self.m.to_python(self.m.call(self.m.globals["retrieve"], self.bag))
        return None if tag == "None" else fields["value"]
