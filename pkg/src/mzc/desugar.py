"""Translation from the surface syntax to the internal syntax.

Removes name introductions, `consumes` markers and external arrows from
types, and turns external function definitions into type abstractions
around a single-argument internal lambda.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .kindcheck import collect_bound_names
from .syntax import (
    EMPTY, PERM, TERM, UNKNOWN, Anchored, Branch, DataTypeDef, Arrow, Bar, Consumes, Dynamic, EAnnot, EApply,
    EArrow, EConstruct, EFun, EGive, EIf, ELambda, ELet, EMatch, Empty, EPrim, ERead,
    ETake, ETaking, ETuple, ETypeAbs, ETypeApp, EVar, EWrite, EWriteTag, Exists, Expr,
    Forall, Kind, ModeAnd, NameIntro, Pattern, PConstruct, Program, PTuple, PVar,
    Singleton, Star, Structural, TApp, TTuple, TVar, TypeExpr, Unknown, ValDef,
    exists_many, forall_many, fresh, has_surface_nodes,
)

PermVars = frozenset


def _is_perm(t: TypeExpr, perm_vars: PermVars) -> bool:
    if isinstance(t, (Anchored, Star, Empty)):
        return True
    if isinstance(t, TVar):
        return t.name in perm_vars
    if isinstance(t, (ModeAnd, Forall, Exists)):
        return _is_perm(t.body, perm_vars)
    return False


def _binders(t: TypeExpr) -> list[tuple[str, Kind]]:
    return list(collect_bound_names(t).bindings)


def _scope(perm_vars: PermVars, name: str, kind: Kind) -> PermVars:
    return perm_vars | {name} if kind == PERM else perm_vars - {name}


def translate_type(t: TypeExpr, perm_vars: PermVars = frozenset()) -> TypeExpr:
    """The single-step translation; names introduced by t stay free."""
    pv = perm_vars
    if isinstance(t, (TVar, Dynamic, Singleton, Empty, Unknown)):
        return t
    if isinstance(t, TTuple):
        return TTuple(tuple(translate_type(c, pv) for c in t.items))
    if isinstance(t, Structural):
        return Structural(t.ctor, tuple((f, translate_type(ft, pv)) for f, ft in t.fields),
                          translate_extended(t.adopts, pv))
    if isinstance(t, TApp):
        return TApp(t.head, tuple(translate_extended(a, pv) for a in t.args))
    if isinstance(t, NameIntro):
        return Bar(Singleton(t.var), Anchored(t.var, translate_type(t.inner, pv)))
    if isinstance(t, Consumes):
        return Consumes(translate_type(t.inner, pv))
    if isinstance(t, Forall):
        return Forall(t.binder, t.kind, translate_extended(t.body, _scope(pv, t.binder, t.kind)))
    if isinstance(t, Exists):
        return Exists(t.binder, t.kind, translate_extended(t.body, _scope(pv, t.binder, t.kind)))
    if isinstance(t, Bar):
        return Bar(translate_type(t.type, pv), translate_type(t.perm, pv))
    if isinstance(t, ModeAnd):
        return ModeAnd(t.mode, t.subject, translate_type(t.body, pv))
    if isinstance(t, Star):
        return Star(translate_type(t.left, pv), translate_type(t.right, pv))
    if isinstance(t, Anchored):
        return Anchored(t.var, translate_extended(t.type, pv))
    if isinstance(t, Arrow):
        return Arrow(translate_extended(t.dom, pv), translate_extended(t.cod, pv))
    if isinstance(t, EArrow):
        return translate_arrow(t.dom, t.cod, pv)
    raise TypeError(f"translate_type: unexpected {t!r}")


def translate_extended(t: TypeExpr, perm_vars: PermVars = frozenset()) -> TypeExpr:
    """Translate t and bind the names it introduces existentially."""
    return exists_many(_binders(t), translate_type(t, perm_vars))


def erase_consumes(t: TypeExpr) -> TypeExpr:
    """Copy of t with every `consumes` marker dropped."""
    return _map_consumes(t, lambda inner, pv: erase_consumes(inner), frozenset())


def carve_consumes(t: TypeExpr, perm_vars: PermVars = frozenset()) -> TypeExpr:
    """Copy of t where each consumed component is replaced with top."""
    return _map_consumes(t, lambda inner, pv: EMPTY if _is_perm(inner, pv) else UNKNOWN, perm_vars)


def _map_consumes(t: TypeExpr, on_consumes, pv: PermVars) -> TypeExpr:
    if isinstance(t, Consumes):
        return on_consumes(t.inner, pv)
    rec = lambda u: _map_consumes(u, on_consumes, pv)  # noqa: E731
    if isinstance(t, TTuple):
        return TTuple(tuple(rec(c) for c in t.items))
    if isinstance(t, Structural):
        return Structural(t.ctor, tuple((f, rec(ft)) for f, ft in t.fields), t.adopts)
    if isinstance(t, Bar):
        return Bar(rec(t.type), rec(t.perm))
    if isinstance(t, Star):
        return Star(rec(t.left), rec(t.right))
    if isinstance(t, ModeAnd):
        return ModeAnd(t.mode, t.subject, rec(t.body))
    if isinstance(t, Anchored):
        return Anchored(t.var, rec(t.type))
    return t


def _trivial(t: TypeExpr) -> bool:
    """Carries no permission at all: only tops, possibly in tuples."""
    if isinstance(t, (Unknown, Empty)):
        return True
    if isinstance(t, TTuple):
        return all(_trivial(c) for c in t.items)
    if isinstance(t, Star):
        return _trivial(t.left) and _trivial(t.right)
    return False


def _with_perm(cod: TypeExpr, perm: TypeExpr) -> TypeExpr:
    if isinstance(cod, Bar):
        return Bar(cod.type, Star(cod.perm, perm))
    return Bar(cod, perm)


def translate_arrow(dom: TypeExpr, cod: TypeExpr, perm_vars: PermVars = frozenset()) -> TypeExpr:
    """Internal form of an external arrow.  Names introduced by the domain are
    universally bound above the arrow; the argument itself is named r, and
    whatever the domain does not consume is handed back through r.

    Two sound shortcuts keep the output close to hand-written types: a domain
    that is a single named argument `x: t` uses x itself as r, and when
    nothing is handed back, r is not introduced at all."""
    gamma = _binders(dom)
    cod_t = translate_extended(cod, perm_vars)

    core, consumed = dom, False
    if isinstance(core, Consumes):
        core, consumed = core.inner, True
    if isinstance(core, NameIntro):
        x = core.var
        inner = translate_type(core.inner, perm_vars)
        left = Bar(Singleton(x), Anchored(x, erase_consumes(inner)))
        right = None if consumed else carve_consumes(inner, perm_vars)
        if right is None or _trivial(right):
            arrow = Arrow(left, cod_t)
        else:
            arrow = Arrow(left, _with_perm(cod_t, Anchored(x, right)))
        return forall_many(gamma, arrow)

    t1 = translate_type(dom, perm_vars)
    t1l = erase_consumes(t1)
    t1r = carve_consumes(t1, perm_vars)
    if _trivial(t1r):
        return forall_many(gamma, Arrow(t1l, cod_t))
    taken = {n for n, _ in gamma}
    r = fresh("r")
    while r in taken:
        r = fresh("r")
    arrow = Arrow(Bar(Singleton(r), Anchored(r, t1l)), _with_perm(cod_t, Anchored(r, t1r)))
    return forall_many(gamma, Forall(r, TERM, arrow))


# ---------------------------------------------------------------------------
# expressions

def type_to_pattern(t: TypeExpr) -> Pattern:
    """Pattern that binds the names a function's domain introduces."""
    if isinstance(t, NameIntro):
        return PVar(t.var)
    if isinstance(t, Consumes):
        return type_to_pattern(t.inner)
    if isinstance(t, TTuple):
        return PTuple(tuple(type_to_pattern(c) for c in t.items))
    if isinstance(t, Structural):
        return PConstruct(t.ctor, tuple((f, type_to_pattern(ft)) for f, ft in t.fields))
    if isinstance(t, Bar):
        return type_to_pattern(t.type)
    if isinstance(t, ModeAnd):
        return type_to_pattern(t.body)
    return PVar(fresh("arg"))


def _peel(t: TypeExpr) -> tuple[list[tuple[str, Kind]], TypeExpr]:
    binders = []
    while isinstance(t, Forall):
        binders.append((t.binder, t.kind))
        t = t.body
    return binders, t


def translate_fun(e: EFun, perm_vars: PermVars = frozenset()) -> Expr:
    pv = perm_vars
    for n, k in e.tparams:
        pv = _scope(pv, n, k)
    binders, arrow = _peel(translate_arrow(e.arg, e.ret, pv))
    assert isinstance(arrow, Arrow)
    z = fresh("arg")
    body = ELet(type_to_pattern(e.arg), EVar(z, e.loc), translate_expr(e.body, pv), e.loc)
    out: Expr = ELambda(z, arrow.dom, arrow.cod, body, e.loc)
    for n, k in reversed(list(e.tparams) + binders):
        out = ETypeAbs(n, k, out, e.loc)
    return out


def translate_expr(e: Expr, perm_vars: PermVars = frozenset()) -> Expr:
    pv = perm_vars
    tr = lambda x: translate_expr(x, pv)  # noqa: E731
    if isinstance(e, EFun):
        return translate_fun(e, pv)
    if isinstance(e, ETypeApp):
        return ETypeApp(tr(e.expr), translate_extended(e.type, pv), e.kind, e.loc)
    if isinstance(e, EAnnot):
        return EAnnot(tr(e.expr), translate_extended(e.type, pv), e.loc)
    if isinstance(e, ELet):
        return ELet(e.pattern, tr(e.bound), tr(e.body), e.loc)
    if isinstance(e, ELambda):
        return ELambda(e.param, translate_extended(e.arg, pv), translate_extended(e.ret, pv),
                       tr(e.body), e.loc)
    if isinstance(e, ETypeAbs):
        return ETypeAbs(e.binder, e.kind, translate_expr(e.body, _scope(pv, e.binder, e.kind)), e.loc)
    if isinstance(e, EApply):
        return EApply(tr(e.fn), tr(e.arg), e.loc)
    if isinstance(e, ETuple):
        return ETuple(tuple(tr(i) for i in e.items), e.loc)
    if isinstance(e, EConstruct):
        adopts = translate_extended(e.adopts, pv) if e.adopts is not None else None
        return EConstruct(e.ctor, tuple((f, tr(v)) for f, v in e.fields), adopts, e.loc)
    if isinstance(e, EMatch):
        return EMatch(tr(e.scrutinee), tuple((p, tr(b)) for p, b in e.arms), e.loc)
    if isinstance(e, ERead):
        return ERead(tr(e.target), e.field, e.loc)
    if isinstance(e, EWrite):
        return EWrite(tr(e.target), e.field, tr(e.value), e.loc)
    if isinstance(e, EWriteTag):
        return EWriteTag(tr(e.target), e.ctor, e.loc)
    if isinstance(e, EGive):
        return EGive(tr(e.adoptee), tr(e.adopter), e.loc)
    if isinstance(e, ETake):
        return ETake(tr(e.adoptee), tr(e.adopter), e.loc)
    if isinstance(e, ETaking):
        return ETaking(tr(e.adoptee), tr(e.adopter), tr(e.body), e.loc)
    if isinstance(e, EIf):
        return EIf(tr(e.cond), tr(e.then), tr(e.orelse), e.loc)
    if isinstance(e, EPrim):
        return EPrim(e.op, tuple(tr(a) for a in e.args), e.loc)
    return e


def translate_program(p: Program) -> Program:
    items = []
    for item in p.items:
        if isinstance(item, ValDef):
            expr = translate_expr(item.expr) if item.expr is not None else None
            sig = translate_extended(item.sig) if item.sig is not None else None
            item = replace(item, expr=expr, sig=sig)
        elif isinstance(item, DataTypeDef):
            branches = tuple(Branch(b.ctor, tuple((f, translate_extended(ft)) for f, ft in b.fields))
                             for b in item.branches)
            item = replace(item, branches=branches, adopts=translate_extended(item.adopts))
        items.append(item)
    return Program(tuple(items))


def is_internal(t: TypeExpr) -> bool:
    return not has_surface_nodes(t)


def read_internal(t: TypeExpr) -> TypeExpr:
    """Read every `->` in t as an internal arrow, for writing internal types
    in concrete syntax."""
    if isinstance(t, EArrow):
        return Arrow(read_internal(t.dom), read_internal(t.cod))
    if isinstance(t, TTuple):
        return TTuple(tuple(read_internal(c) for c in t.items))
    if isinstance(t, Structural):
        return Structural(t.ctor, tuple((f, read_internal(ft)) for f, ft in t.fields),
                          read_internal(t.adopts))
    if isinstance(t, TApp):
        return TApp(t.head, tuple(read_internal(a) for a in t.args))
    if isinstance(t, (Forall, Exists)):
        return type(t)(t.binder, t.kind, read_internal(t.body))
    if isinstance(t, Bar):
        return Bar(read_internal(t.type), read_internal(t.perm))
    if isinstance(t, ModeAnd):
        return ModeAnd(t.mode, t.subject, read_internal(t.body))
    if isinstance(t, Star):
        return Star(read_internal(t.left), read_internal(t.right))
    if isinstance(t, Anchored):
        return Anchored(t.var, read_internal(t.type))
    if isinstance(t, Arrow):
        return Arrow(read_internal(t.dom), read_internal(t.cod))
    if isinstance(t, Consumes):
        return Consumes(read_internal(t.inner))
    if isinstance(t, NameIntro):
        return NameIntro(t.var, read_internal(t.inner))
    return t
