"""Printing of types, patterns and expressions in concrete syntax."""
from __future__ import annotations

from .syntax import (
    TYPE, Anchored, Arrow, Bar, Consumes, Dynamic, EAnnot, EApply, EArrow, EBool,
    EConstruct, EFail, EFun, EGive, EIf, EInt, ELambda, ELet, EMatch, Empty, EPrim,
    ERead, ETake, ETaking, ETuple, ETypeAbs, ETypeApp, EVar, EWrite, EWriteTag,
    Exists, Expr, Forall, ModeAnd, NameIntro, Pattern, PConstruct, PTuple, PVar,
    Singleton, Star, Structural, TApp, TTuple, TVar, TypeExpr, Unknown, is_bottom,
)

P_TOP, P_NAME, P_STAR, P_ANCH, P_APP, P_ATOM = range(6)


def show_type(t: TypeExpr) -> str:
    return _show(t, P_TOP)


def _paren(s: str, level: int, prec: int) -> str:
    return f"({s})" if level < prec else s


def _binder(name: str, kind) -> str:
    return name if kind == TYPE else f"{name}: {kind}"


def _show(t: TypeExpr, prec: int) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, Singleton):
        return f"(={t.var})" if prec >= P_APP else f"={t.var}"
    if isinstance(t, Dynamic):
        return "dynamic"
    if isinstance(t, Unknown):
        return "unknown"
    if isinstance(t, Empty):
        return "empty"
    if isinstance(t, TTuple):
        if len(t.items) == 1:
            return f"({_show(t.items[0], P_TOP)},)"
        return "(" + ", ".join(_show(i, P_TOP) for i in t.items) + ")"
    if isinstance(t, Bar):
        head = "" if t.type == TTuple(()) else _show(t.type, P_TOP) + " "
        return f"({head}| {_show(t.perm, P_TOP)})"
    if isinstance(t, Structural):
        s = t.ctor
        if t.fields:
            parts = []
            for f, ft in t.fields:
                if isinstance(ft, Singleton):
                    parts.append(f"{f} = {ft.var}")
                else:
                    parts.append(f"{f}: {_show(ft, P_TOP)}")
            s += " { " + "; ".join(parts) + " }"
        if not is_bottom(t.adopts):
            return _paren(f"{s} adopts {_show(t.adopts, P_APP)}", P_APP, prec)
        return s
    if isinstance(t, TApp):
        if not t.args:
            return t.head
        s = t.head + " " + " ".join(_show(a, P_ATOM) for a in t.args)
        return _paren(s, P_APP, prec)
    if isinstance(t, Anchored):
        return _paren(f"{t.var} @ {_show(t.type, P_APP)}", P_ANCH, prec)
    if isinstance(t, Star):
        return _paren(f"{_show(t.left, P_ANCH)} * {_show(t.right, P_STAR)}", P_STAR, prec)
    if isinstance(t, Consumes):
        return _paren(f"consumes {_show(t.inner, P_NAME)}", P_NAME, prec)
    if isinstance(t, NameIntro):
        return _paren(f"{t.var}: {_show(t.inner, P_TOP)}", P_NAME, prec)
    if isinstance(t, (Arrow, EArrow)):
        return _paren(f"{_show(t.dom, P_STAR)} -> {_show(t.cod, P_TOP)}", P_TOP, prec)
    if isinstance(t, ModeAnd):
        return f"({t.mode.keyword} {t.subject} | {_show(t.body, P_TOP)})"
    if isinstance(t, Forall):
        binders = []
        while isinstance(t, Forall):
            binders.append(_binder(t.binder, t.kind))
            t = t.body
        return _paren(f"[{', '.join(binders)}] {_show(t, P_TOP)}", P_TOP, prec)
    if isinstance(t, Exists):
        binders = []
        while isinstance(t, Exists):
            binders.append(_binder(t.binder, t.kind))
            t = t.body
        return _paren(f"{{{', '.join(binders)}}} {_show(t, P_TOP)}", P_TOP, prec)
    raise TypeError(f"cannot print {t!r}")


def show_pattern(p: Pattern) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PTuple):
        return "(" + ", ".join(show_pattern(q) for q in p.items) + ")"
    if isinstance(p, PConstruct):
        if not p.fields:
            return p.ctor
        inner = "; ".join(f"{f} = {show_pattern(q)}" for f, q in p.fields)
        return f"{p.ctor} {{ {inner} }}"
    raise TypeError(p)


def show_expr(e: Expr, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, EInt):
        return str(e.value)
    if isinstance(e, EBool):
        return "true" if e.value else "false"
    if isinstance(e, ETuple):
        return "(" + ", ".join(show_expr(i, indent) for i in e.items) + ")"
    if isinstance(e, EConstruct):
        if not e.fields:
            return e.ctor
        inner = "; ".join(f"{f} = {show_expr(v, indent)}" for f, v in e.fields)
        return f"{e.ctor} {{ {inner} }}"
    if isinstance(e, ELet):
        return (f"let {show_pattern(e.pattern)} = {show_expr(e.bound, indent + 1)} in\n"
                f"{pad}{show_expr(e.body, indent)}")
    if isinstance(e, EFun):
        tps = f"[{', '.join(_binder(n, k) for n, k in e.tparams)}] " if e.tparams else ""
        return (f"fun {tps}({show_type(e.arg)}) : {show_type(e.ret)} =\n"
                f"{pad}  {show_expr(e.body, indent + 1)}")
    if isinstance(e, ELambda):
        return (f"lambda ({e.param}: {show_type(e.arg)}) : {show_type(e.ret)} =\n"
                f"{pad}  {show_expr(e.body, indent + 1)}")
    if isinstance(e, ETypeAbs):
        return f"Lambda [{_binder(e.binder, e.kind)}] {show_expr(e.body, indent)}"
    if isinstance(e, ETypeApp):
        return f"{show_expr(e.expr, indent)} [{show_type(e.type)}]"
    if isinstance(e, EApply):
        return f"{show_expr(e.fn, indent)} ({show_expr(e.arg, indent)})"
    if isinstance(e, EMatch):
        arms = "".join(f"\n{pad}| {show_pattern(p)} -> {show_expr(b, indent + 1)}"
                       for p, b in e.arms)
        return f"match {show_expr(e.scrutinee, indent)} with{arms}\n{pad}end"
    if isinstance(e, ERead):
        return f"{show_expr(e.target, indent)}.{e.field}"
    if isinstance(e, EWrite):
        return f"{show_expr(e.target, indent)}.{e.field} <- {show_expr(e.value, indent)}"
    if isinstance(e, EWriteTag):
        return f"tag of {show_expr(e.target, indent)} <- {e.ctor}"
    if isinstance(e, EGive):
        return f"give {show_expr(e.adoptee, indent)} to {show_expr(e.adopter, indent)}"
    if isinstance(e, ETake):
        return f"take {show_expr(e.adoptee, indent)} from {show_expr(e.adopter, indent)}"
    if isinstance(e, ETaking):
        return (f"taking {show_expr(e.adoptee, indent)} from {show_expr(e.adopter, indent)}"
                f" begin {show_expr(e.body, indent + 1)} end")
    if isinstance(e, EFail):
        return "fail"
    if isinstance(e, EIf):
        return (f"if {show_expr(e.cond, indent)} then begin {show_expr(e.then, indent + 1)} end"
                f" else begin {show_expr(e.orelse, indent + 1)} end")
    if isinstance(e, EPrim):
        return f"({show_expr(e.args[0], indent)} {e.op} {show_expr(e.args[1], indent)})"
    if isinstance(e, EAnnot):
        return f"({show_expr(e.expr, indent)} : {show_type(e.type)})"
    raise TypeError(f"cannot print {e!r}")
