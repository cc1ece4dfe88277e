from __future__ import annotations

import re

import pytest
from hypothesis import given, settings, strategies as st

from mzc.driver import compile_text, parse
from mzc.interp import IntV, evaluate
from mzc.desugar import translate_program
from mzc.parser import parse_expr
from mzc.syntax import (
    EAnnot, EApply, EConstruct, EGive, EIf, ELet, EMatch, EPrim, ERead, ETake, ETuple,
    ETypeApp, EVar, EWrite, EWriteTag, ELambda, ETypeAbs, is_shallow,
)
from mzc.typecheck import TypeCheckError, check_program, normalize

from conftest import ACCEPTED, NEGATIVE, diagnose, program_text


def is_anf(e) -> bool:
    if isinstance(e, ELet):
        return is_shallow(e.pattern) and is_anf(e.bound) and is_anf(e.body)
    if isinstance(e, (ELambda, ETypeAbs)):
        return is_anf(e.body)
    if isinstance(e, EMatch):
        return (isinstance(e.scrutinee, EVar)
                and all(is_shallow(p) and is_anf(b) for p, b in e.arms))
    if isinstance(e, EIf):
        return isinstance(e.cond, EVar) and is_anf(e.then) and is_anf(e.orelse)
    if isinstance(e, EApply):
        return isinstance(e.fn, EVar) and isinstance(e.arg, EVar)
    if isinstance(e, ETuple):
        return all(isinstance(i, EVar) for i in e.items)
    if isinstance(e, EConstruct):
        return all(isinstance(v, EVar) for _, v in e.fields)
    if isinstance(e, EPrim):
        return all(isinstance(a, EVar) for a in e.args)
    if isinstance(e, (ERead, EWriteTag)):
        return isinstance(e.target, EVar)
    if isinstance(e, EWrite):
        return isinstance(e.target, EVar) and isinstance(e.value, EVar)
    if isinstance(e, (EGive, ETake)):
        return isinstance(e.adoptee, EVar) and isinstance(e.adopter, EVar)
    if isinstance(e, (ETypeApp, EAnnot)):
        return isinstance(e.expr, EVar)
    return True


def test_normalize_names_operands():
    e = normalize(parse_expr("f (g 1, (2, 3))"))
    assert is_anf(e)
    assert isinstance(e, ELet)


def test_normalize_flattens_deep_patterns():
    e = normalize(parse_expr("let (a, (b, c)) = t in a"))
    assert is_anf(e)


@pytest.mark.parametrize("name", ["fig1_append.mz", "fig4_bag.mz"])
def test_normalized_programs_are_anf(name):
    prog = translate_program(parse(program_text(name)))
    for v in prog.values():
        if v.expr is not None:
            assert is_anf(normalize(v.expr))


# random integer expressions: normalization must keep their value
def _arith(depth: int):
    leaf = st.integers(-5, 5).map(lambda n: (str(n) if n >= 0 else f"(0 - {-n})", n))
    if depth == 0:
        return leaf

    def combine(op, l, r):
        f = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b}[op]
        return (f"({l[0]} {op} {r[0]})", f(l[1], r[1]))

    def let_(l, r):
        return (f"(let v = {l[0]} in (v + {r[0]}))", l[1] + r[1])

    sub = _arith(depth - 1)
    return st.one_of(leaf, st.builds(combine, st.sampled_from("+-*"), sub, sub),
                     st.builds(let_, sub, sub))


@given(_arith(3))
@settings(max_examples=100, deadline=None)
def test_normalized_arithmetic_keeps_its_value(case):
    src, expected = case
    assert is_anf(normalize(parse_expr(src)))
    c = compile_text(f"val main = {src}")
    _, v = evaluate(c.program)
    assert v == IntV(expected)


@pytest.mark.parametrize("name", ACCEPTED)
def test_accepted_programs(name):
    assert diagnose(program_text(name)) == "ok"


@pytest.mark.parametrize("name", sorted(NEGATIVE))
def test_rejected_programs(name):
    assert diagnose(program_text(f"neg/{name}.mz")) == NEGATIVE[name]


def test_diagnostic_format():
    with pytest.raises(TypeCheckError) as info:
        compile_text(program_text("neg/write_immutable.mz"))
    text = info.value.render("w.mz")
    assert re.match(r"w\.mz:\d+:\d+: error\[Write\]: ", text)


def test_function_types_are_recorded():
    c = compile_text(program_text("fig1_append.mz"))
    assert {"append", "appendAux"} <= set(c.checked.types)


def canon(atoms: list[str]) -> list[str]:
    """Rename generated names in order of first appearance."""
    names: dict[str, str] = {}

    def sub(m):
        return names.setdefault(m.group(0), f"#{len(names)}")
    out = []
    for a in sorted(atoms, key=lambda s: re.sub(r"~\d+", "", s)):
        out.append(re.sub(r"[A-Za-z_']+~\d+", sub, a))
    return out


def dumps_of(name: str, fn: str):
    c = compile_text(program_text(name), dump_perms=True)
    out, on = [], False
    for d in c.checked.dumps:
        if d.label.startswith("entry of"):
            on = d.label == f"entry of {fn}"
        if on:
            out.append(d)
    return out


def test_append_entry_and_arms():
    ds = dumps_of("fig1_append.mz", "append")
    assert ds[0].atoms == ["xs @ list a", "ys @ list a"]
    nil = next(d for d in ds if d.label == "arm Nil")
    assert nil.atoms == ["xs @ Nil", "ys @ list a"]
    cons = next(d for d in ds if d.label == "arm Cons")
    assert canon(cons.atoms) == canon([
        "xs @ Cons { head = hd~1; tail = tl~2 }", "hd~1 @ a", "tl~2 @ list a", "ys @ list a"])


def test_dumps_require_the_flag():
    c = compile_text(program_text("fig1_append.mz"))
    assert c.checked.dumps == []


def test_give_and_take_atoms():
    c = compile_text(program_text("runtime/give_take_roundtrip.mz"), dump_perms=True)
    by_line = {d.line: d.atoms for d in c.checked.dumps}
    # after give: c is only known to be dynamic
    assert "c @ dynamic" in by_line[15]
    # after take: the exclusive permission is back
    assert "c @ cell int" in by_line[16]
    assert "b @ bag int" in by_line[16]


def test_fail_has_any_type():
    assert diagnose("val f (x: int) : bool = fail\nval main = 1") == "ok"


def test_branching_top_level_value_needs_annotation():
    assert diagnose("val main = if true then 1 else 2") == "Let"
    assert diagnose("val main : int = if true then 1 else 2") == "ok"


def test_annotated_branching_value_drops_exclusive_globals():
    src = ("val r = Ref { contents = 1 }\n"
           "val x : int = if true then 1 else 2\n"
           "val main = r.contents")
    assert diagnose(src) == "Read"
