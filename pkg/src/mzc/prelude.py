"""Builtin types available to every program."""
from __future__ import annotations

from functools import lru_cache

from .syntax import Program

PRELUDE = """\
abstract int
fact duplicable int
abstract bool
fact duplicable bool
data mutable ref a = Ref { contents: a }
data option a = None | Some { value: a }
"""


@lru_cache(maxsize=1)
def prelude() -> Program:
    from .parser import parse_program
    return parse_program(PRELUDE)


def with_prelude(program: Program) -> Program:
    return Program(prelude().items + program.items)
