"""Kind checking, including the side discipline for `consumes` and the
collection of names introduced by a type."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

from .syntax import (
    BASE_KINDS, PERM, TERM, TYPE, AbstractDef, Anchored, AnyKind, Arrow, ArrowKind, Bar,
    Consumes, DataTypeDef, Dynamic, EAnnot, EApply, EArrow, EConstruct, EFun, EGive, EIf,
    ELambda, ELet, EMatch, Empty, EPrim, ERead, ETake, ETaking, ETuple, ETypeAbs,
    ETypeApp, EVar, EWrite, EWriteTag, Exists, Expr, FactDecl, Forall, Loc, ModeAnd,
    NameIntro, Program, Singleton, Star, Structural, TApp, TTuple, TVar, TypeExpr, Unknown,
    ValDef, is_bottom, pattern_vars,
)


class KindError(Exception):
    def __init__(self, message: str, loc: Optional[Loc] = None):
        self.message = message
        self.loc = loc
        super().__init__(message)


class DuplicateName(KindError):
    pass


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class KindEnv:
    """Ordered bindings; later bindings mask earlier ones."""
    bindings: tuple[tuple[str, AnyKind], ...] = ()

    def lookup(self, name: str) -> Optional[AnyKind]:
        for n, k in reversed(self.bindings):
            if n == name:
                return k
        return None

    def extend(self, *pairs: tuple[str, AnyKind]) -> KindEnv:
        return KindEnv(self.bindings + tuple(pairs))

    def concat(self, other: KindEnv) -> KindEnv:
        return KindEnv(self.bindings + other.bindings)

    def names(self) -> list[str]:
        return [n for n, _ in self.bindings]

    def __contains__(self, name: str) -> bool:
        return self.lookup(name) is not None

    def __len__(self) -> int:
        return len(self.bindings)


def disjoint_union(envs: Iterable[KindEnv]) -> KindEnv:
    out: list[tuple[str, AnyKind]] = []
    seen: set[str] = set()
    for e in envs:
        for n, k in e.bindings:
            if n in seen:
                raise DuplicateName(f"name {n} is introduced twice")
            seen.add(n)
            out.append((n, k))
    return KindEnv(tuple(out))


def collect_bound_names(t) -> KindEnv:
    """Names introduced by t, descending into transparent constructs only."""
    if isinstance(t, NameIntro):
        return disjoint_union([KindEnv(((t.var, TERM),)), collect_bound_names(t.inner)])
    if isinstance(t, TTuple):
        return disjoint_union(collect_bound_names(c) for c in t.items)
    if isinstance(t, Structural):
        return disjoint_union(collect_bound_names(ft) for _, ft in t.fields)
    if isinstance(t, Bar):
        return collect_bound_names(t.type)
    if isinstance(t, Consumes):
        return collect_bound_names(t.inner)
    if isinstance(t, ModeAnd):
        return collect_bound_names(t.body)
    if isinstance(t, DataTypeDef):
        return KindEnv(((t.name, t.kind),))
    if isinstance(t, AbstractDef):
        return KindEnv(((t.name, t.kind),))
    return KindEnv()


def _expect(k: AnyKind, want: Iterable[AnyKind], what: TypeExpr, loc: Optional[Loc]) -> None:
    want = tuple(want)
    if k not in want:
        raise KindError(f"{what} has kind {k} but {' or '.join(map(str, want))} was expected", loc)


def kind_of_extended(env: KindEnv, t: TypeExpr, loc: Optional[Loc] = None) -> AnyKind:
    """The extending variant: add BV(t), then check at the right side."""
    try:
        bv = collect_bound_names(t)
    except DuplicateName as e:
        raise DuplicateName(e.message, loc) from None
    return kind_of(env.concat(bv), Side.RIGHT, t, loc)


def kind_of(env: KindEnv, side: Side, t: TypeExpr, loc: Optional[Loc] = None) -> AnyKind:
    if isinstance(t, TVar):
        k = env.lookup(t.name)
        if k is None:
            raise KindError(f"unbound name {t.name}", loc)
        return k
    if isinstance(t, (Dynamic, Unknown)):
        return TYPE
    if isinstance(t, Empty):
        return PERM
    if isinstance(t, Arrow):
        _expect(kind_of(env, Side.RIGHT, t.dom, loc), [TYPE], t.dom, loc)
        _expect(kind_of(env, Side.RIGHT, t.cod, loc), [TYPE], t.cod, loc)
        return TYPE
    if isinstance(t, EArrow):
        try:
            inner = env.concat(collect_bound_names(t.dom))
        except DuplicateName as e:
            raise DuplicateName(e.message, loc) from None
        _expect(kind_of(inner, Side.LEFT, t.dom, loc), [TYPE], t.dom, loc)
        _expect(kind_of_extended(inner, t.cod, loc), [TYPE], t.cod, loc)
        return TYPE
    if isinstance(t, TTuple):
        for c in t.items:
            _expect(kind_of(env, side, c, loc), [TYPE], c, loc)
        return TYPE
    if isinstance(t, Structural):
        for _, ft in t.fields:
            _expect(kind_of(env, side, ft, loc), [TYPE], ft, loc)
        if not is_bottom(t.adopts):
            if len(collect_bound_names(t.adopts)):
                raise KindError("adopts clauses may not introduce names", loc)
            _expect(kind_of(env, Side.RIGHT, t.adopts, loc), [TYPE], t.adopts, loc)
        return TYPE
    if isinstance(t, (Forall, Exists)):
        if t.kind not in BASE_KINDS:
            raise KindError(f"binder {t.binder} must have a base kind", loc)
        return kind_of_extended(env.extend((t.binder, t.kind)), t.body, loc)
    if isinstance(t, TApp):
        k = env.lookup(t.head)
        if k is None:
            raise KindError(f"unbound type {t.head}", loc)
        if not t.args:
            if isinstance(k, ArrowKind):
                raise KindError(f"{t.head} expects {len(k.params)} argument(s)", loc)
            return k
        if not isinstance(k, ArrowKind):
            raise KindError(f"{t.head} is not a type constructor", loc)
        if len(k.params) != len(t.args):
            raise KindError(f"{t.head} expects {len(k.params)} argument(s), got {len(t.args)}", loc)
        for a, pk in zip(t.args, k.params):
            _expect(kind_of_extended(env, a, loc), [pk], a, loc)
        return k.result
    if isinstance(t, NameIntro):
        if env.lookup(t.var) != TERM:
            raise KindError(f"{t.var} is not bound at kind term", loc)
        _expect(kind_of(env, side, t.inner, loc), [TYPE], t.inner, loc)
        return TYPE
    if isinstance(t, Consumes):
        if side is not Side.LEFT:
            raise KindError("consumes may only appear in the domain of a function type", loc)
        k = kind_of(env, Side.RIGHT, t.inner, loc)
        _expect(k, [TYPE, PERM], t.inner, loc)
        return k
    if isinstance(t, Bar):
        _expect(kind_of(env, side, t.type, loc), [TYPE], t.type, loc)
        _expect(kind_of(env, side, t.perm, loc), [PERM], t.perm, loc)
        return TYPE
    if isinstance(t, Singleton):
        if env.lookup(t.var) != TERM:
            raise KindError(f"{t.var} is not bound at kind term", loc)
        return TYPE
    if isinstance(t, ModeAnd):
        sk = env.lookup(t.subject)
        if sk is None:
            raise KindError(f"unbound name {t.subject}", loc)
        _expect(sk, [TYPE, PERM], TVar(t.subject), loc)
        return kind_of(env, side, t.body, loc)
    if isinstance(t, Star):
        _expect(kind_of(env, side, t.left, loc), [PERM], t.left, loc)
        _expect(kind_of(env, side, t.right, loc), [PERM], t.right, loc)
        return PERM
    if isinstance(t, Anchored):
        if env.lookup(t.var) != TERM:
            raise KindError(f"{t.var} is not bound at kind term", loc)
        _expect(kind_of_extended(env, t.type, loc), [TYPE], t.type, loc)
        return PERM
    raise KindError(f"cannot kind {t!r}", loc)


# ---------------------------------------------------------------------------
# programs

def type_env(program: Program, base: KindEnv = KindEnv()) -> KindEnv:
    """Names of all data and abstract types, checked for duplicates."""
    defs = [i for i in program.items if isinstance(i, (DataTypeDef, AbstractDef))]
    try:
        return base.concat(disjoint_union(collect_bound_names(d) for d in defs))
    except DuplicateName as e:
        dup = e.message.split()[1]
        loc = next((d.loc for d in reversed(defs) if d.name == dup), None)
        raise DuplicateName(f"type {dup} is defined twice", loc) from None


def check_datatype(env: KindEnv, d: DataTypeDef) -> None:
    local = env.extend(*d.params)
    seen = set()
    for n, _ in d.params:
        if n in seen:
            raise DuplicateName(f"parameter {n} appears twice in {d.name}", d.loc)
        seen.add(n)
    for b in d.branches:
        k = kind_of_extended(local, b.as_type(d.adopts), d.loc)
        _expect(k, [TYPE], b.as_type(d.adopts), d.loc)


def check_fact_decl(env: KindEnv, decl: FactDecl, arity: Optional[int]) -> None:
    k = env.lookup(decl.name)
    if k is None:
        raise KindError(f"fact about unknown type {decl.name}", decl.loc)
    n = len(k.params) if isinstance(k, ArrowKind) else 0
    if len(decl.params) != n:
        raise KindError(f"{decl.name} expects {n} argument(s) in its fact", decl.loc)
    for _, a in decl.hyps:
        if a not in decl.params:
            raise KindError(f"fact hypothesis mentions {a}, which is not a parameter", decl.loc)


def check_expr(env: KindEnv, e: Expr) -> None:
    """Check every type that occurs in e, tracking term variables in scope."""
    if isinstance(e, EVar):
        return
    if isinstance(e, ELet):
        check_expr(env, e.bound)
        names = [(n, TERM) for n in pattern_vars(e.pattern)]
        check_expr(env.extend(*names), e.body)
        return
    if isinstance(e, EFun):
        inner = env.extend(*e.tparams)
        kind_of(inner, Side.RIGHT, EArrow(e.arg, e.ret), e.loc)
        bv = collect_bound_names(e.arg)
        check_expr(inner.concat(bv), e.body)
        return
    if isinstance(e, ELambda):
        kind_of(env.extend((e.param, TERM)), Side.RIGHT, Arrow(e.arg, e.ret), e.loc)
        check_expr(env.extend((e.param, TERM)), e.body)
        return
    if isinstance(e, ETypeAbs):
        check_expr(env.extend((e.binder, e.kind)), e.body)
        return
    if isinstance(e, ETypeApp):
        check_expr(env, e.expr)
        kind_of_extended(env, e.type, e.loc)
        return
    if isinstance(e, EAnnot):
        check_expr(env, e.expr)
        _expect(kind_of_extended(env, e.type, e.loc), [TYPE], e.type, e.loc)
        return
    if isinstance(e, EMatch):
        check_expr(env, e.scrutinee)
        for p, body in e.arms:
            check_expr(env.extend(*[(n, TERM) for n in pattern_vars(p)]), body)
        return
    for child in _expr_children(e):
        check_expr(env, child)


def _expr_children(e: Expr) -> list[Expr]:
    if isinstance(e, EApply):
        return [e.fn, e.arg]
    if isinstance(e, ETuple):
        return list(e.items)
    if isinstance(e, EConstruct):
        return [v for _, v in e.fields]
    if isinstance(e, ERead):
        return [e.target]
    if isinstance(e, EWrite):
        return [e.target, e.value]
    if isinstance(e, EWriteTag):
        return [e.target]
    if isinstance(e, (EGive, ETake)):
        return [e.adoptee, e.adopter]
    if isinstance(e, ETaking):
        return [e.adoptee, e.adopter, e.body]
    if isinstance(e, EIf):
        return [e.cond, e.then, e.orelse]
    if isinstance(e, EPrim):
        return list(e.args)
    return []


def check_program(program: Program, base: KindEnv = KindEnv()) -> KindEnv:
    """Check all definitions; returns the environment of type names."""
    env = type_env(program, base)
    ctors: dict[str, str] = {}
    for item in program.items:
        if isinstance(item, DataTypeDef):
            for b in item.branches:
                if b.ctor in ctors:
                    raise DuplicateName(f"constructor {b.ctor} is defined by both "
                                        f"{ctors[b.ctor]} and {item.name}", item.loc)
                ctors[b.ctor] = item.name
            check_datatype(env, item)
        elif isinstance(item, AbstractDef):
            if item.fact is not None:
                check_fact_decl(env, item.fact, len(item.params))
        elif isinstance(item, FactDecl):
            check_fact_decl(env, item, None)
    terms = env
    for item in program.items:
        if isinstance(item, ValDef):
            inner = terms.extend((item.name, TERM)) if item.rec else terms
            if item.sig is not None:
                _expect(kind_of_extended(inner, item.sig, item.loc), [TYPE], item.sig, item.loc)
            if item.expr is not None:
                check_expr(inner, item.expr)
            terms = terms.extend((item.name, TERM))
    return env
