from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings

from mzc.desugar import (
    carve_consumes, erase_consumes, read_internal, translate_arrow, translate_extended,
    translate_program, type_to_pattern,
)
from mzc.driver import parse
from mzc.kindcheck import KindEnv, KindError, kind_of_extended
from mzc.parser import BUILTIN_TYPES, parse_type
from mzc.syntax import (
    TERM, TYPE, Anchored, Arrow, ArrowKind, Bar, EArrow, EFun, ELambda, ETypeAbs, Exists, PTuple,
    PVar, Singleton, TTuple, TVar, UNKNOWN, ValDef, alpha_equal, has_surface_nodes,
)

from conftest import program_text
from strategies import surface_types

KNOWN = set(BUILTIN_TYPES) | {"list", "bag", "mpair"}

# (surface type, internal type written with internal arrows)
GOLDENS = {
    "assign": ("[a, b] (consumes x: ref a, consumes b) -> (| x @ ref b)",
               "[a, b] [x: term] ((=x | x @ ref a), b) -> (| x @ ref b)"),
    "length": ("[a] list a -> int",
               "[a] [x: term] (=x | x @ list a) -> (int | x @ list a)"),
    "insert": ("[a] (consumes a, bag a) -> ()",
               "[a] [x: term] (=x | x @ (a, bag a)) -> (| x @ (unknown, bag a))"),
    "swap": ("[a, b] (consumes x: mpair a b) -> (| x @ mpair b a)",
             "[a, b] [x: term] (=x | x @ mpair a b) -> (| x @ mpair b a)"),
}


def golden_pair(name: str):
    surface, internal = GOLDENS[name]
    return (translate_extended(parse_type(surface, KNOWN)),
            read_internal(parse_type(internal, KNOWN)))


@pytest.mark.parametrize("name", sorted(GOLDENS))
def test_golden_translation(name):
    got, want = golden_pair(name)
    assert alpha_equal(got, want)
    assert not has_surface_nodes(got)


def test_golden_is_not_trivially_equal():
    got, _ = golden_pair("length")
    _, other = golden_pair("insert")
    assert not alpha_equal(got, other)


def test_name_introduction_in_tuple():
    t = translate_extended(parse_type("(x: int, =x)", KNOWN))
    want = Exists("x", TERM, TTuple((Bar(Singleton("x"), parse_anchored("x", "int")), Singleton("x"))))
    assert alpha_equal(t, want)


def parse_anchored(x: str, ty: str):
    return Anchored(x, parse_type(ty, KNOWN))


def test_erase_and_carve():
    t = parse_type("(consumes a, b)", KNOWN)
    assert erase_consumes(t) == TTuple((TVar("a"), TVar("b")))
    assert carve_consumes(t) == TTuple((UNKNOWN, TVar("b")))


def test_consumed_permission_becomes_empty():
    t = translate_extended(parse_type("[p: perm] (consumes (| p)) -> ()", KNOWN))
    assert not has_surface_nodes(t)
    # nothing is handed back, so no argument name is introduced
    body = t.body
    assert isinstance(body, Arrow)


def test_fully_consumed_argument_is_not_named():
    t = translate_arrow(parse_type("consumes int", KNOWN), TTuple(()))
    assert isinstance(t, Arrow)


def test_type_to_pattern():
    p = type_to_pattern(parse_type("(consumes x: ref a, y: int)", KNOWN))
    assert p == PTuple((PVar("x"), PVar("y")))
    anon = type_to_pattern(TVar("a"))
    assert isinstance(anon, PVar) and "~" in anon.name


def test_functions_become_type_abstractions_over_a_lambda():
    prog = translate_program(parse(program_text("fig1_append.mz")))
    for item in prog.items:
        if isinstance(item, ValDef) and item.expr is not None:
            e = item.expr
            while isinstance(e, ETypeAbs):
                e = e.body
            assert not isinstance(e, EFun)
    names = {i.name for i in prog.items if isinstance(i, ValDef)}
    assert {"append", "appendAux"} <= names


def test_append_aux_signature():
    prog = translate_program(parse(program_text("fig1_append.mz")))
    aux = next(i for i in prog.items if isinstance(i, ValDef) and i.name == "appendAux")
    e = aux.expr
    binders = []
    while isinstance(e, ETypeAbs):
        binders.append((e.binder, e.kind))
        e = e.body
    assert isinstance(e, ELambda)
    assert binders[0] == ("a", TYPE)
    assert {k for _, k in binders[1:]} == {TERM}
    assert not has_surface_nodes(e.arg) and not has_surface_nodes(e.ret)


def test_read_internal_only_changes_arrows():
    t = parse_type("a -> b", KNOWN)
    assert isinstance(t, EArrow)
    assert read_internal(t) == Arrow(TVar("a"), TVar("b"))


BASE = KindEnv((("int", TYPE), ("bool", TYPE), ("ref", ArrowKind((TYPE,), TYPE)),
                ("option", ArrowKind((TYPE,), TYPE)), ("list", ArrowKind((TYPE,), TYPE))))
ABXY = BASE.extend(("a", TYPE), ("b", TYPE), ("x", TERM), ("y", TERM))


@given(surface_types)
@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_translation_preserves_kinds(t):
    try:
        k = kind_of_extended(ABXY, t)
    except KindError:
        return
    out = translate_extended(t)
    assert not has_surface_nodes(out)
    assert kind_of_extended(ABXY, out) == k


@given(surface_types)
@settings(max_examples=200, deadline=None)
def test_translation_is_idempotent_on_internal_output(t):
    try:
        kind_of_extended(ABXY, t)
    except KindError:
        return
    out = translate_extended(t)
    assert alpha_equal(translate_extended(out), out)
