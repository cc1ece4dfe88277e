"""The checking pipeline: parse, kind-check, desugar, facts, type-check."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import facts as F
from .desugar import translate_program
from .kindcheck import check_program as kind_check
from .parser import BUILTIN_TYPES, parse_program
from .permissions import DEFAULT_BUDGET
from .prelude import with_prelude
from .syntax import AbstractDef, DataTypeDef, FactDecl, Program
from .typecheck import CheckResult, check_program as type_check


@dataclass
class Compiled:
    source: Program
    program: Program
    facts: F.FactEnv
    checked: Optional[CheckResult] = None
    user_types: list[str] = field(default_factory=list)


def parse(text: str) -> Program:
    return with_prelude(parse_program(text, BUILTIN_TYPES))


def check_facts(program: Program) -> F.FactEnv:
    """Infer datatype facts and reject declarations that claim more than
    the inferred fact."""
    defs = program.datatypes()
    env = F.infer_datatype_facts(defs, F.base_env(defs, program.abstracts()))
    by_name = {d.name: d for d in defs}
    for decl in program.facts():
        d = by_name.get(decl.name)
        if d is None:
            continue
        params = [p for p, _ in d.params]
        F.check_exposed_fact(F.fact_of_decl(decl, params), env.types[d.name], d.name, decl.loc)
    return env


def compile_text(text: str, typecheck: bool = True, budget: int = DEFAULT_BUDGET,
                 dump_perms: bool = False) -> Compiled:
    """Run the pipeline; each stage raises its own error type."""
    source = parse(text)
    kind_check(source)
    program = translate_program(source)
    fenv = check_facts(program)
    user = [i.name for i in source.items[len(_prelude_items()):]
            if isinstance(i, (DataTypeDef, AbstractDef))]
    out = Compiled(source, program, fenv, None, user)
    if typecheck:
        out.checked = type_check(program, budget, dump_perms)
    return out


def _prelude_items():
    from .prelude import prelude
    return prelude().items


__all__ = ["Compiled", "parse", "check_facts", "compile_text", "FactDecl"]
