"""Abstract syntax shared by every stage: kinds, modes, types, expressions,
patterns and top-level items, plus substitution and alpha-equivalence."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------------------
# fresh names

class _Counter:
    def __init__(self, start: int = 0) -> None:
        self.value = start

    def next(self) -> int:
        self.value += 1
        return self.value


_counter = _Counter()


def reset_fresh(start: int = 0) -> None:
    """Restart the global fresh-name counter (used by MZC_SEED and tests)."""
    _counter.value = start


def fresh(base: str) -> str:
    """A name that cannot be written in source programs."""
    base = base.split("~", 1)[0] or "v"
    return f"{base}~{_counter.next()}"


def is_generated(name: str) -> bool:
    return "~" in name


def base_name(name: str) -> str:
    return name.split("~", 1)[0]


# ---------------------------------------------------------------------------
# kinds and modes

@dataclass(frozen=True)
class Kind:
    name: str

    def __str__(self) -> str:
        return self.name


TYPE = Kind("type")
TERM = Kind("term")
PERM = Kind("perm")
BASE_KINDS = (TYPE, TERM, PERM)


@dataclass(frozen=True)
class ArrowKind:
    params: tuple[Kind, ...]
    result: Kind

    def __post_init__(self) -> None:
        if not self.params:
            raise ValueError("arrow kinds need at least one parameter")

    def __str__(self) -> str:
        return " -> ".join(str(k) for k in self.params + (self.result,))


AnyKind = Union[Kind, ArrowKind]


class Mode(enum.IntEnum):
    BOTTOM = 0
    DUPLICABLE = 1
    EXCLUSIVE = 2
    AFFINE = 3

    @property
    def keyword(self) -> str:
        return _MODE_WORDS[self]

    def leq(self, other: Mode) -> bool:
        return self is other or self is Mode.BOTTOM or other is Mode.AFFINE


_MODE_WORDS = {
    Mode.BOTTOM: "bottom",
    Mode.DUPLICABLE: "duplicable",
    Mode.EXCLUSIVE: "exclusive",
    Mode.AFFINE: "affine",
}


# ---------------------------------------------------------------------------
# types

class TypeExpr:
    """Base class of type and permission expressions."""

    def __str__(self) -> str:
        from .pretty import show_type
        return show_type(self)


@dataclass(frozen=True, eq=True)
class TVar(TypeExpr):
    name: str


@dataclass(frozen=True, eq=True)
class Arrow(TypeExpr):
    """Internal function type."""
    dom: TypeExpr
    cod: TypeExpr


@dataclass(frozen=True, eq=True)
class EArrow(TypeExpr):
    """External (surface) function type."""
    dom: TypeExpr
    cod: TypeExpr


@dataclass(frozen=True, eq=True)
class TTuple(TypeExpr):
    items: tuple[TypeExpr, ...]


@dataclass(frozen=True, eq=True)
class Structural(TypeExpr):
    ctor: str
    fields: tuple[tuple[str, TypeExpr], ...]
    adopts: TypeExpr = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.adopts is None:
            object.__setattr__(self, "adopts", BOTTOM)

    def field_type(self, name: str) -> Optional[TypeExpr]:
        for f, t in self.fields:
            if f == name:
                return t
        return None


@dataclass(frozen=True, eq=True)
class TApp(TypeExpr):
    head: str
    args: tuple[TypeExpr, ...]


@dataclass(frozen=True, eq=True)
class Forall(TypeExpr):
    binder: str
    kind: Kind
    body: TypeExpr


@dataclass(frozen=True, eq=True)
class Exists(TypeExpr):
    binder: str
    kind: Kind
    body: TypeExpr


@dataclass(frozen=True, eq=True)
class Singleton(TypeExpr):
    var: str


@dataclass(frozen=True, eq=True)
class Bar(TypeExpr):
    type: TypeExpr
    perm: TypeExpr


@dataclass(frozen=True, eq=True)
class Anchored(TypeExpr):
    var: str
    type: TypeExpr


@dataclass(frozen=True, eq=True)
class Empty(TypeExpr):
    pass


@dataclass(frozen=True, eq=True)
class Star(TypeExpr):
    left: TypeExpr
    right: TypeExpr


@dataclass(frozen=True, eq=True)
class Dynamic(TypeExpr):
    pass


@dataclass(frozen=True, eq=True)
class Unknown(TypeExpr):
    pass


@dataclass(frozen=True, eq=True)
class Consumes(TypeExpr):
    inner: TypeExpr


@dataclass(frozen=True, eq=True)
class NameIntro(TypeExpr):
    var: str
    inner: TypeExpr


@dataclass(frozen=True, eq=True)
class ModeAnd(TypeExpr):
    mode: Mode
    subject: str
    body: TypeExpr


BOTTOM = Forall("a", TYPE, TVar("a"))
UNIT = TTuple(())
EMPTY = Empty()
DYNAMIC = Dynamic()
UNKNOWN = Unknown()


def is_bottom(t: TypeExpr) -> bool:
    return isinstance(t, Forall) and t.kind == TYPE and t.body == TVar(t.binder)


def star(*perms: TypeExpr) -> TypeExpr:
    """Conjunction with the empty permission dropped."""
    parts = [p for p in perms if not isinstance(p, Empty)]
    if not parts:
        return EMPTY
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Star(p, out)
    return out


def bar(t: TypeExpr, p: TypeExpr) -> TypeExpr:
    return t if isinstance(p, Empty) else Bar(t, p)


def forall_many(binders: list[tuple[str, Kind]], body: TypeExpr) -> TypeExpr:
    for name, kind in reversed(binders):
        body = Forall(name, kind, body)
    return body


def exists_many(binders: list[tuple[str, Kind]], body: TypeExpr) -> TypeExpr:
    for name, kind in reversed(binders):
        body = Exists(name, kind, body)
    return body


SURFACE_ONLY = (EArrow, Consumes, NameIntro)


def subterms(t: TypeExpr) -> Iterator[TypeExpr]:
    yield t
    for c in children(t):
        yield from subterms(c)


def children(t: TypeExpr) -> tuple[TypeExpr, ...]:
    if isinstance(t, (Arrow, EArrow)):
        return (t.dom, t.cod)
    if isinstance(t, TTuple):
        return t.items
    if isinstance(t, Structural):
        return tuple(ft for _, ft in t.fields) + (t.adopts,)
    if isinstance(t, TApp):
        return t.args
    if isinstance(t, (Forall, Exists)):
        return (t.body,)
    if isinstance(t, Bar):
        return (t.type, t.perm)
    if isinstance(t, Anchored):
        return (t.type,)
    if isinstance(t, Star):
        return (t.left, t.right)
    if isinstance(t, (Consumes, NameIntro)):
        return (t.inner,)
    if isinstance(t, ModeAnd):
        return (t.body,)
    return ()


def has_surface_nodes(t: TypeExpr) -> bool:
    return any(isinstance(s, SURFACE_ONLY) for s in subterms(t))


# ---------------------------------------------------------------------------
# free names, renaming and substitution

def free_names(t: TypeExpr) -> set[str]:
    """Free type variables and free term variables of t."""
    out: set[str] = set()
    _free(t, frozenset(), out)
    return out


def _free(t: TypeExpr, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(t, TVar):
        if t.name not in bound:
            out.add(t.name)
    elif isinstance(t, Singleton):
        if t.var not in bound:
            out.add(t.var)
    elif isinstance(t, Anchored):
        if t.var not in bound:
            out.add(t.var)
        _free(t.type, bound, out)
    elif isinstance(t, NameIntro):
        if t.var not in bound:
            out.add(t.var)
        _free(t.inner, bound, out)
    elif isinstance(t, ModeAnd):
        if t.subject not in bound:
            out.add(t.subject)
        _free(t.body, bound, out)
    elif isinstance(t, (Forall, Exists)):
        _free(t.body, bound | {t.binder}, out)
    else:
        for c in children(t):
            _free(c, bound, out)


def _avoid(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    base = base_name(name)
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in taken:
            return cand
    raise AssertionError


def substitute(target: TypeExpr, replacement: TypeExpr, binder: str) -> TypeExpr:
    """Capture-avoiding [replacement/binder]target.

    Term-variable positions (singletons, anchors, name introductions, mode
    subjects) accept a replacement only when it is a variable."""
    return subst_many(target, {binder: replacement})


def rename(target: TypeExpr, mapping: dict[str, str]) -> TypeExpr:
    return subst_many(target, {k: TVar(v) for k, v in mapping.items()})


def subst_many(t: TypeExpr, mapping: dict[str, TypeExpr]) -> TypeExpr:
    if not mapping:
        return t
    fv: set[str] = set()
    for r in mapping.values():
        fv |= free_names(r)
    return _subst(t, mapping, fv)


def _var_of(r: TypeExpr, what: str) -> str:
    if isinstance(r, TVar):
        return r.name
    if isinstance(r, Singleton):
        return r.var
    raise TypeError(f"cannot substitute {r!r} for the term variable {what}")


def _subst(t: TypeExpr, m: dict[str, TypeExpr], fv: set[str]) -> TypeExpr:
    if isinstance(t, TVar):
        return m.get(t.name, t)
    if isinstance(t, Singleton):
        return Singleton(_var_of(m[t.var], t.var)) if t.var in m else t
    if isinstance(t, Anchored):
        v = _var_of(m[t.var], t.var) if t.var in m else t.var
        return Anchored(v, _subst(t.type, m, fv))
    if isinstance(t, NameIntro):
        v = _var_of(m[t.var], t.var) if t.var in m else t.var
        return NameIntro(v, _subst(t.inner, m, fv))
    if isinstance(t, ModeAnd):
        v = _var_of(m[t.subject], t.subject) if t.subject in m else t.subject
        return ModeAnd(t.mode, v, _subst(t.body, m, fv))
    if isinstance(t, (Forall, Exists)):
        inner = {k: v for k, v in m.items() if k != t.binder}
        if not inner:
            return t
        binder, body = t.binder, t.body
        if binder in fv:
            taken = fv | free_names(body) | set(inner)
            new = _avoid(binder, taken)
            body = _subst(body, {binder: TVar(new)}, {new})
            binder = new
        return type(t)(binder, t.kind, _subst(body, inner, fv))
    if isinstance(t, Arrow):
        return Arrow(_subst(t.dom, m, fv), _subst(t.cod, m, fv))
    if isinstance(t, EArrow):
        return EArrow(_subst(t.dom, m, fv), _subst(t.cod, m, fv))
    if isinstance(t, TTuple):
        return TTuple(tuple(_subst(i, m, fv) for i in t.items))
    if isinstance(t, Structural):
        return Structural(t.ctor, tuple((f, _subst(ft, m, fv)) for f, ft in t.fields),
                          _subst(t.adopts, m, fv))
    if isinstance(t, TApp):
        return TApp(t.head, tuple(_subst(a, m, fv) for a in t.args))
    if isinstance(t, Bar):
        return Bar(_subst(t.type, m, fv), _subst(t.perm, m, fv))
    if isinstance(t, Star):
        return Star(_subst(t.left, m, fv), _subst(t.right, m, fv))
    if isinstance(t, Consumes):
        return Consumes(_subst(t.inner, m, fv))
    return t


def alpha_equal(t1: TypeExpr, t2: TypeExpr) -> bool:
    """Structural equality up to consistent renaming of bound variables."""
    return _alpha(t1, t2, {}, {})


def _name_eq(a: str, b: str, left: dict[str, int], right: dict[str, int]) -> bool:
    la, rb = left.get(a), right.get(b)
    if la is None and rb is None:
        return a == b
    return la == rb


def _alpha(a: TypeExpr, b: TypeExpr, left: dict[str, int], right: dict[str, int]) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, TVar):
        return _name_eq(a.name, b.name, left, right)
    if isinstance(a, Singleton):
        return _name_eq(a.var, b.var, left, right)
    if isinstance(a, Anchored):
        return _name_eq(a.var, b.var, left, right) and _alpha(a.type, b.type, left, right)
    if isinstance(a, NameIntro):
        return _name_eq(a.var, b.var, left, right) and _alpha(a.inner, b.inner, left, right)
    if isinstance(a, ModeAnd):
        return (a.mode == b.mode and _name_eq(a.subject, b.subject, left, right)
                and _alpha(a.body, b.body, left, right))
    if isinstance(a, (Forall, Exists)):
        if a.kind != b.kind:
            return False
        depth = len(left)
        return _alpha(a.body, b.body, {**left, a.binder: depth}, {**right, b.binder: depth})
    if isinstance(a, TApp):
        if a.head != b.head or len(a.args) != len(b.args):
            return False
        return all(_alpha(x, y, left, right) for x, y in zip(a.args, b.args))
    if isinstance(a, Structural):
        if a.ctor != b.ctor or len(a.fields) != len(b.fields):
            return False
        if any(f != g for (f, _), (g, _) in zip(a.fields, b.fields)):
            return False
        return all(_alpha(x, y, left, right) for x, y in zip(children(a), children(b)))
    ca, cb = children(a), children(b)
    if len(ca) != len(cb):
        return False
    return all(_alpha(x, y, left, right) for x, y in zip(ca, cb))


# ---------------------------------------------------------------------------
# patterns

class Pattern:
    def __str__(self) -> str:
        from .pretty import show_pattern
        return show_pattern(self)


@dataclass(frozen=True)
class PVar(Pattern):
    name: str


@dataclass(frozen=True)
class PTuple(Pattern):
    items: tuple[Pattern, ...]


@dataclass(frozen=True)
class PConstruct(Pattern):
    ctor: str
    fields: tuple[tuple[str, Pattern], ...]


def pattern_vars(p: Pattern) -> list[str]:
    if isinstance(p, PVar):
        return [] if p.name == "_" else [p.name]
    if isinstance(p, PTuple):
        return [v for q in p.items for v in pattern_vars(q)]
    if isinstance(p, PConstruct):
        return [v for _, q in p.fields for v in pattern_vars(q)]
    raise TypeError(p)


def is_shallow(p: Pattern) -> bool:
    if isinstance(p, PVar):
        return True
    subs = p.items if isinstance(p, PTuple) else tuple(q for _, q in p.fields)
    return all(isinstance(q, PVar) for q in subs)


# ---------------------------------------------------------------------------
# expressions

Loc = tuple[int, int]
NOLOC: Loc = (0, 0)


class Expr:
    loc: Loc

    def __str__(self) -> str:
        from .pretty import show_expr
        return show_expr(self)


def _loc() -> Loc:
    return field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class EVar(Expr):
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class EInt(Expr):
    value: int
    loc: Loc = _loc()


@dataclass(frozen=True)
class EBool(Expr):
    value: bool
    loc: Loc = _loc()


@dataclass(frozen=True)
class ELet(Expr):
    pattern: Pattern
    bound: Expr
    body: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class EFun(Expr):
    """External function: user binders, a domain read as a pattern, a codomain."""
    tparams: tuple[tuple[str, Kind], ...]
    arg: TypeExpr
    ret: TypeExpr
    body: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ELambda(Expr):
    """Internal function with one named argument."""
    param: str
    arg: TypeExpr
    ret: TypeExpr
    body: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ETypeAbs(Expr):
    binder: str
    kind: Kind
    body: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ETypeApp(Expr):
    expr: Expr
    type: TypeExpr
    kind: Optional[Kind] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class EApply(Expr):
    fn: Expr
    arg: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ETuple(Expr):
    items: tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class EConstruct(Expr):
    ctor: str
    fields: tuple[tuple[str, Expr], ...]
    adopts: Optional[TypeExpr] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class EMatch(Expr):
    scrutinee: Expr
    arms: tuple[tuple[Pattern, Expr], ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class ERead(Expr):
    target: Expr
    field: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class EWrite(Expr):
    target: Expr
    field: str
    value: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class EWriteTag(Expr):
    target: Expr
    ctor: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class EGive(Expr):
    adoptee: Expr
    adopter: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ETake(Expr):
    adoptee: Expr
    adopter: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class ETaking(Expr):
    adoptee: Expr
    adopter: Expr
    body: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class EFail(Expr):
    loc: Loc = _loc()


@dataclass(frozen=True)
class EIf(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    loc: Loc = _loc()


@dataclass(frozen=True)
class EPrim(Expr):
    op: str
    args: tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class EAnnot(Expr):
    expr: Expr
    type: TypeExpr
    loc: Loc = _loc()


PRIM_OPS = ("+", "-", "*", "<", "<=", ">", ">=", "==", "!=")


# ---------------------------------------------------------------------------
# top-level items

@dataclass(frozen=True)
class Branch:
    ctor: str
    fields: tuple[tuple[str, TypeExpr], ...]

    def as_type(self, adopts: TypeExpr) -> Structural:
        return Structural(self.ctor, self.fields, adopts)


@dataclass(frozen=True)
class DataTypeDef:
    name: str
    mutable: bool
    params: tuple[tuple[str, Kind], ...]
    branches: tuple[Branch, ...]
    adopts: TypeExpr = BOTTOM
    loc: Loc = _loc()

    @property
    def kind(self) -> AnyKind:
        if not self.params:
            return TYPE
        return ArrowKind(tuple(k for _, k in self.params), TYPE)

    def branch(self, ctor: str) -> Optional[Branch]:
        for b in self.branches:
            if b.ctor == ctor:
                return b
        return None


@dataclass(frozen=True)
class FactDecl:
    """`fact <hyps> => <mode> <name> <params>` for a named type."""
    name: str
    params: tuple[str, ...]
    hyps: tuple[tuple[Mode, str], ...]
    mode: Mode
    loc: Loc = _loc()


@dataclass(frozen=True)
class AbstractDef:
    name: str
    params: tuple[tuple[str, Kind], ...]
    result: Kind = TYPE
    fact: Optional[FactDecl] = None
    loc: Loc = _loc()

    @property
    def kind(self) -> AnyKind:
        if not self.params:
            return self.result
        return ArrowKind(tuple(k for _, k in self.params), self.result)


@dataclass(frozen=True)
class ValDef:
    name: str
    expr: Optional[Expr]
    rec: bool = False
    loc: Loc = _loc()
    sig: Optional[TypeExpr] = None


Item = Union[DataTypeDef, AbstractDef, FactDecl, ValDef]


@dataclass(frozen=True)
class Program:
    items: tuple[Item, ...]

    def datatypes(self) -> list[DataTypeDef]:
        return [i for i in self.items if isinstance(i, DataTypeDef)]

    def abstracts(self) -> list[AbstractDef]:
        return [i for i in self.items if isinstance(i, AbstractDef)]

    def values(self) -> list[ValDef]:
        return [i for i in self.items if isinstance(i, ValDef)]

    def facts(self) -> list[FactDecl]:
        return [i for i in self.items if isinstance(i, FactDecl)]
