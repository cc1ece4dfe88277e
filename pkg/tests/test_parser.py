from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from mzc.parser import ParseError, parse_expr, parse_program, parse_type, tokenize
from mzc.pretty import show_type
from mzc.syntax import (
    BOTTOM, TERM, TYPE, UNIT, Bar, Branch, Consumes, DataTypeDef, EArrow, ELet, EMatch,
    EWriteTag, Forall, Mode, ModeAnd, NameIntro, Singleton, Structural, TApp, TTuple, TVar,
    ValDef, alpha_equal,
)

from conftest import program_text
from strategies import KNOWN, surface_types


def test_list_definition():
    prog = parse_program("data list a =\n   Nil |  Cons { head: a; tail: list a }")
    (d,) = prog.items
    assert d == DataTypeDef("list", False, (("a", TYPE),), (
        Branch("Nil", ()),
        Branch("Cons", (("head", TVar("a")), ("tail", TApp("list", (TVar("a"),))))),
    ))


def test_mode_assumption_wraps_arrow_domain():
    prog = parse_program("val f: [a] duplicable a => (list a, a -> bool) -> option a",
                         {"list", "bool", "option"})
    (v,) = prog.items
    assert isinstance(v, ValDef) and v.expr is None
    t = v.sig
    assert isinstance(t, Forall) and t.binder == "a"
    assert isinstance(t.body, EArrow)
    dom = t.body.dom
    assert isinstance(dom, ModeAnd) and dom.mode is Mode.DUPLICABLE and dom.subject == "a"
    assert t.body.cod == TApp("option", (TVar("a"),))


def test_assign_type_uses_surface_constructs():
    t = parse_type("(consumes x: ref a, consumes b) -> (| x @ ref b)")
    assert isinstance(t, EArrow)
    first, second = t.dom.items
    assert first == Consumes(NameIntro("x", TApp("ref", (TVar("a"),))))
    assert second == Consumes(TVar("b"))
    assert isinstance(t.cod, Bar) and t.cod.type == UNIT


def test_singleton_and_default_adopts():
    assert parse_type("=x") == Singleton("x")
    s = parse_type("MCons { head: a; tail: () }")
    assert isinstance(s, Structural) and s.adopts == BOTTOM


def test_shared_field_declaration():
    prog = parse_program(program_text("fig4_bag.mz"))
    bag = next(i for i in prog.items if isinstance(i, DataTypeDef) and i.name == "bag")
    assert [f for f, _ in bag.branches[1].fields] == ["head", "tail"]
    assert bag.adopts == TApp("cell", (TVar("a"),))


def test_example_programs_parse():
    for name in ("fig1_append.mz", "fig4_bag.mz"):
        parse_program(program_text(name))


def test_tag_update_and_sequence():
    e = parse_expr("match xs with | Nil -> dst.tail <- ys; tag of dst <- Cons end")
    assert isinstance(e, EMatch)
    body = e.arms[0][1]
    assert isinstance(body, ELet) and isinstance(body.body, EWriteTag)


def test_term_binders_in_type_parameters():
    t = parse_type("[a, x: term] (=x | x @ a) -> ()")
    assert isinstance(t, Forall) and t.body.kind == TERM


@pytest.mark.parametrize("text", [
    "data d = A { f: }",
    "val x = let in 3",
    "val f (x: int) : int = (x",
    "data = A",
])
def test_parse_errors_carry_position(text):
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert exc.value.line >= 1 and exc.value.col >= 1


def test_nested_comments():
    toks = tokenize("(* a (* nested *) comment *) val")
    assert [t.text for t in toks][:1] == ["val"]


@given(st.text(max_size=40))
@settings(max_examples=300)
def test_parser_never_panics(text):
    try:
        parse_program(text)
    except ParseError:
        pass


@given(surface_types)
@settings(max_examples=200)
def test_printing_is_idempotent_through_parser(t):
    once = show_type(t)
    twice = show_type(parse_type(once, KNOWN))
    assert once == twice


@given(surface_types)
@settings(max_examples=200)
def test_parse_inverts_print(t):
    assert alpha_equal(parse_type(show_type(t), KNOWN), _as_surface(t))


def _as_surface(t):
    """The parser reads every arrow as a surface arrow."""
    from mzc.syntax import Arrow, subst_many  # noqa: F401
    from dataclasses import fields, is_dataclass, replace
    if isinstance(t, Arrow):
        return EArrow(_as_surface(t.dom), _as_surface(t.cod))
    if is_dataclass(t):
        changes = {}
        for f in fields(t):
            v = getattr(t, f.name)
            if isinstance(v, tuple):
                v = tuple(_as_surface(x) if not isinstance(x, tuple) else
                          tuple(_as_surface(y) if not isinstance(y, str) else y for y in x) for x in v)
            elif not isinstance(v, (str, int)) and is_dataclass(v):
                v = _as_surface(v)
            changes[f.name] = v
        return replace(t, **changes)
    return t


def test_name_introduction_extends_over_arrows():
    t = parse_type("(f: a -> b, consumes xs: a)")
    assert isinstance(t, TTuple)
    f = t.items[0]
    assert isinstance(f, NameIntro) and isinstance(f.inner, EArrow)
    assert parse_type(show_type(t)) == t
