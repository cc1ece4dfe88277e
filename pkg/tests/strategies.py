"""Shared generators of types and data type definitions."""
from __future__ import annotations

import random

from hypothesis import strategies as st

from mzc.syntax import (
    PERM, TERM, TYPE, Anchored, Arrow, Bar, Branch, Consumes, DataTypeDef, Dynamic, EArrow,
    Exists, Forall, NameIntro, Singleton, Star, Structural, TApp, TTuple, TVar, Unknown,
)

TYPE_VARS = ("a", "b")
TERM_VARS = ("x", "y")
KNOWN = frozenset({"int", "bool", "ref", "option", "list"})

_leaf = st.sampled_from([TVar("a"), TVar("b"), TApp("int", ()), TTuple(()), Dynamic(), Unknown(),
                         Singleton("x"), Singleton("y")])


def _grow(children):
    perms = st.builds(Anchored, st.sampled_from(TERM_VARS), children)
    return st.one_of(
        st.builds(lambda a, b: TTuple((a, b)), children, children),
        st.builds(lambda t: TApp("list", (t,)), children),
        st.builds(lambda t: TApp("ref", (t,)), children),
        st.builds(lambda h, t: Structural("Cons", (("head", h), ("tail", t))), children, children),
        st.builds(Arrow, children, children),
        st.builds(Bar, children, perms),
        st.builds(lambda p, q: Bar(TTuple(()), Star(p, q)), perms, perms),
        st.builds(lambda t: Forall("c", TYPE, TTuple((TVar("c"), t))), children),
        st.builds(lambda t: Exists("z", TERM, Bar(Singleton("z"), Anchored("z", t))), children),
    )


internal_types = st.recursive(_leaf, _grow, max_leaves=8)


# Surface types that are well-kinded under a, b : type and x, y : term.

def _surface_dom(children):
    named = st.builds(NameIntro, st.sampled_from(["u", "v"]), children)
    one = st.one_of(children, named, st.builds(Consumes, children),
                    st.builds(lambda n, t: Consumes(NameIntro(n, t)), st.sampled_from(["u", "v"]), children))
    return st.one_of(one, st.builds(lambda p, q: TTuple((p, q)), one, one).filter(_distinct_names))


def _names(t) -> list[str]:
    if isinstance(t, NameIntro):
        return [t.var] + _names(t.inner)
    if isinstance(t, Consumes):
        return _names(t.inner)
    if isinstance(t, TTuple):
        return [n for i in t.items for n in _names(i)]
    return []


def _distinct_names(t) -> bool:
    ns = _names(t)
    return len(ns) == len(set(ns))


def _surface_grow(children):
    return st.one_of(
        _grow(children),
        st.builds(EArrow, _surface_dom(children), children),
    )


surface_types = st.recursive(_leaf, _surface_grow, max_leaves=8)


# Random data type definitions for the duplicability oracle.

def random_field_type(rng: random.Random, params: list[str], self_name: str, arity: int,
                      depth: int):
    choices = ["int", "dynamic"] + params
    if depth > 0:
        choices += ["ref", "list", "self", "tuple", "arrow"]
    c = rng.choice(choices)
    if c == "int":
        return TApp("int", ())
    if c == "dynamic":
        return Dynamic()
    if c in params:
        return TVar(c)
    sub = lambda: random_field_type(rng, params, self_name, arity, depth - 1)
    if c == "ref":
        return TApp("ref", (sub(),))
    if c == "list":
        return TApp("list", (sub(),))
    if c == "self":
        return TApp(self_name, tuple(sub() for _ in range(arity)))
    if c == "tuple":
        return TTuple((sub(), sub()))
    return Arrow(sub(), sub())


def random_datatype(rng: random.Random, name: str = "t") -> DataTypeDef:
    arity = rng.randint(0, 2)
    params = ["a", "b"][:arity]
    mutable = rng.random() < 0.2
    branches = []
    for i in range(rng.randint(1, 2)):
        fields = tuple((f"f{j}", random_field_type(rng, params, name, arity, 3))
                       for j in range(rng.randint(0, 2)))
        branches.append(Branch(f"{name.upper()}{i}", fields))
    return DataTypeDef(name, mutable, tuple((p, TYPE) for p in params), tuple(branches))


__all__ = ["internal_types", "surface_types", "random_datatype", "KNOWN", "PERM"]


def random_surface_type(rng: random.Random, depth: int = 3):
    """Seeded counterpart of surface_types, for fixed-size samples."""
    leaves = [TVar("a"), TVar("b"), TApp("int", ()), TTuple(()), Dynamic(), Unknown(),
              Singleton("x"), Singleton("y")]
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(leaves)
    sub = lambda: random_surface_type(rng, depth - 1)  # noqa: E731
    perm = lambda: Anchored(rng.choice(TERM_VARS), sub())  # noqa: E731
    c = rng.randrange(11)
    if c == 0:
        return TTuple((sub(), sub()))
    if c == 1:
        return TApp("list", (sub(),))
    if c == 2:
        return TApp("ref", (sub(),))
    if c == 3:
        return Structural("Cons", (("head", sub()), ("tail", sub())))
    if c == 4:
        return Arrow(sub(), sub())
    if c == 5:
        return Bar(sub(), perm())
    if c == 6:
        return Bar(TTuple(()), Star(perm(), perm()))
    if c == 7:
        return Forall("c", TYPE, TTuple((TVar("c"), sub())))
    if c == 8:
        return Exists("z", TERM, Bar(Singleton("z"), Anchored("z", sub())))
    return EArrow(_random_dom(rng, depth - 1), sub())


def _random_dom(rng: random.Random, depth: int):
    def one(name: str):
        t = random_surface_type(rng, depth)
        c = rng.randrange(4)
        if c == 1:
            return NameIntro(name, t)
        if c == 2:
            return Consumes(t)
        if c == 3:
            return Consumes(NameIntro(name, t))
        return t
    if rng.random() < 0.5:
        return one("u")
    return TTuple((one("u"), one("v")))
