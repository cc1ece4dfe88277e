"""Modes, facts, and fact inference for algebraic data types.

A hypothesis is either ``None`` (false) or a tuple giving, for each formal
parameter, an upper bound on that parameter's mode.  A clause ``m a`` reads
"a has mode at most m", so the clause ``affine a`` is trivially true and the
all-affine conjunction plays the role of ``true``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

from .syntax import (
    AbstractDef, Anchored, Arrow, Bar, Consumes, DataTypeDef, Dynamic, EArrow, Empty,
    Exists, FactDecl, Forall, Mode, ModeAnd, NameIntro, Singleton, Star, Structural,
    TApp, TTuple, TVar, TypeExpr, Unknown,
)

MODES = (Mode.BOTTOM, Mode.DUPLICABLE, Mode.EXCLUSIVE, Mode.AFFINE)

Hyp = Optional[tuple[Mode, ...]]


class MeetUndefined(Exception):
    """Meet of two facts where neither is constant."""


class FactMismatch(Exception):
    def __init__(self, name: str, declared: "Fact", inferred: "Fact", loc=None):
        self.name = name
        self.declared = declared
        self.inferred = inferred
        self.loc = loc
        super().__init__(f"declared fact for {name} ({declared}) differs from inferred ({inferred})")


# ---------------------------------------------------------------------------
# modes

def mode_leq(m1: Mode, m2: Mode) -> bool:
    return m1.leq(m2)


def mode_join(m1: Mode, m2: Mode) -> Mode:
    if m1.leq(m2):
        return m2
    if m2.leq(m1):
        return m1
    return Mode.AFFINE


def mode_meet(m1: Mode, m2: Mode) -> Mode:
    if m1.leq(m2):
        return m1
    if m2.leq(m1):
        return m2
    return Mode.BOTTOM


# ---------------------------------------------------------------------------
# hypotheses

def hyp_true(n: int) -> Hyp:
    return (Mode.AFFINE,) * n


def hyp_and(h1: Hyp, h2: Hyp) -> Hyp:
    if h1 is None or h2 is None:
        return None
    return tuple(mode_meet(a, b) for a, b in zip(h1, h2))


def hyp_implies(h1: Hyp, h2: Hyp) -> bool:
    """Does every parameter assignment satisfying h1 satisfy h2?"""
    if h1 is None:
        return True
    if h2 is None:
        return False
    return all(a.leq(b) for a, b in zip(h1, h2))


def hyp_holds(h: Hyp, modes: Sequence[Mode]) -> bool:
    return h is not None and all(m.leq(b) for m, b in zip(modes, h))


# ---------------------------------------------------------------------------
# facts

@dataclass(frozen=True)
class Fact:
    """A total fact: one hypothesis per conclusion mode, in ``MODES`` order."""
    params: tuple[str, ...]
    table: tuple[Hyp, Hyp, Hyp, Hyp]

    def hyp(self, m: Mode) -> Hyp:
        return self.table[m]

    def holds(self, m: Mode, modes: Sequence[Mode] = ()) -> bool:
        """Is ``m`` a valid mode when the parameters have the given modes?"""
        return hyp_holds(self.table[m], modes)

    def mode(self, modes: Sequence[Mode] = ()) -> Mode:
        """Least valid mode under a parameter assignment."""
        valid = [m for m in MODES if self.holds(m, modes)]
        best = Mode.AFFINE
        for m in valid:
            best = mode_meet(best, m)
        return best

    def is_constant(self) -> bool:
        n = len(self.params)
        return all(h is None or h == hyp_true(n) for h in self.table)

    def rename(self, params: Sequence[str]) -> Fact:
        return Fact(tuple(params), self.table)

    def __str__(self) -> str:
        return show_fact(self)


def _fact(params: Sequence[str], hyps: Iterable[Hyp]) -> Fact:
    return Fact(tuple(params), tuple(hyps))  # type: ignore[arg-type]


def fact_constant(m: Mode, params: Sequence[str] = ()) -> Fact:
    t = hyp_true(len(params))
    return _fact(params, (t if m.leq(m2) else None for m2 in MODES))


def fact_parameter(alpha: str, params: Sequence[str]) -> Fact:
    i = list(params).index(alpha)
    n = len(params)

    def clause(m: Mode) -> Hyp:
        h = list(hyp_true(n))
        h[i] = m
        return tuple(h)
    return _fact(params, (clause(m) for m in MODES))


def fact_join(f1: Fact, f2: Fact) -> Fact:
    return _fact(f1.params, (hyp_and(a, b) for a, b in zip(f1.table, f2.table)))


def fact_meet_constant(fc: Fact, f: Fact) -> Fact:
    if not fc.is_constant():
        if f.is_constant():
            fc, f = f, fc
        else:
            raise MeetUndefined("meet requires a constant fact")
    t = hyp_true(len(f.params))
    return _fact(f.params, (h2 if h1 is None else t for h1, h2 in zip(fc.table, f.table)))


def fact_leq(f1: Fact, f2: Fact) -> bool:
    """f1 is at least as informative as f2 (its hypotheses are weaker)."""
    return all(hyp_implies(b, a) for a, b in zip(f1.table, f2.table))


def fact_compose(f0: Fact, args: Sequence[Fact]) -> Fact:
    """Substitute each clause ``m a_i`` of f0 with the hypothesis that the i-th
    argument's fact associates with conclusion m."""
    if len(args) != len(f0.params):
        raise ValueError(f"compose: expected {len(f0.params)} argument facts, got {len(args)}")
    params = args[0].params if args else ()
    t = hyp_true(len(params))
    out: list[Hyp] = []
    for h in f0.table:
        if h is None:
            out.append(None)
            continue
        acc: Hyp = t
        for m, fa in zip(h, args):
            if m is not Mode.AFFINE:
                acc = hyp_and(acc, fa.table[m])
        out.append(acc)
    return _fact(params, out)


def fact_of_decl(decl: FactDecl, params: Sequence[str]) -> Fact:
    """Total fact for a declaration ``hyps => m name params``."""
    mapping = dict(zip(decl.params, params))
    n = len(params)
    h = list(hyp_true(n))
    for m, a in decl.hyps:
        target = mapping.get(a, a)
        if target not in params:
            raise ValueError(f"fact hypothesis mentions unknown parameter {a}")
        i = list(params).index(target)
        h[i] = mode_meet(h[i], m)
    hyp = tuple(h)
    return _fact(params, (hyp_true(n) if m2 is Mode.AFFINE else hyp if decl.mode.leq(m2) else None
                          for m2 in MODES))


def check_exposed_fact(declared: Fact, inferred: Fact, name: str = "?", loc=None) -> None:
    if declared.rename(inferred.params) != inferred:
        raise FactMismatch(name, declared.rename(inferred.params), inferred, loc)


def show_hyp(h: Hyp, params: Sequence[str]) -> str:
    assert h is not None
    return ", ".join(f"{m.keyword} {a}" for m, a in zip(h, params) if m is not Mode.AFFINE)


def show_fact(f: Fact) -> str:
    parts = []
    for m in (Mode.BOTTOM, Mode.DUPLICABLE, Mode.EXCLUSIVE):
        h = f.table[m]
        if h is None:
            continue
        if any(f.table[m0] == h for m0 in MODES if m0 < m and m0.leq(m)):
            continue
        hs = show_hyp(h, f.params)
        parts.append(f"{hs} => {m.keyword}" if hs else m.keyword)
    return "; ".join(parts) if parts else "affine"


# ---------------------------------------------------------------------------
# inference

@dataclass(frozen=True)
class FactEnv:
    """Facts for named types, for type variables in scope, and the
    mutability of each constructor."""
    types: Mapping[str, Fact] = field(default_factory=dict)
    vars: Mapping[str, Fact] = field(default_factory=dict)
    ctors: Mapping[str, bool] = field(default_factory=dict)
    params: tuple[str, ...] = ()

    def with_params(self, params: Sequence[str]) -> FactEnv:
        vs = {a: fact_parameter(a, params) for a in params}
        return replace(self, vars=vs, params=tuple(params))

    def bind(self, name: str, f: Fact) -> FactEnv:
        vs = dict(self.vars)
        vs[name] = f
        return replace(self, vars=vs)

    def lookup(self, name: str) -> Fact:
        f = self.vars.get(name)
        return f if f is not None else fact_constant(Mode.AFFINE, self.params)

    def assume(self, name: str, m: Mode) -> FactEnv:
        return self.bind(name, fact_meet_constant(fact_constant(m, self.params), self.lookup(name)))


def infer_fact(env: FactEnv, t: TypeExpr) -> Fact:
    ps = env.params
    if isinstance(t, (Dynamic, Singleton, Arrow, EArrow, Empty, Unknown)):
        return fact_constant(Mode.DUPLICABLE, ps)
    if isinstance(t, TVar):
        return env.lookup(t.name)
    if isinstance(t, TApp):
        f0 = env.types.get(t.head)
        if f0 is None:
            return fact_constant(Mode.AFFINE, ps)
        if not t.args:
            return _lift(f0, ps)
        return fact_compose(f0, [infer_fact(env, a) for a in t.args])
    if isinstance(t, ModeAnd):
        return infer_fact(env.assume(t.subject, t.mode), t.body)
    if isinstance(t, Forall):
        return infer_fact(env.bind(t.binder, fact_constant(Mode.BOTTOM, ps)), t.body)
    if isinstance(t, Exists):
        return infer_fact(env.bind(t.binder, fact_constant(Mode.AFFINE, ps)), t.body)
    if isinstance(t, TTuple):
        return _only_duplicable(env, [infer_fact(env, c) for c in t.items])
    if isinstance(t, Structural):
        mutable = env.ctors.get(t.ctor)
        if mutable is None:
            return fact_constant(Mode.AFFINE, ps)
        if mutable:
            return fact_constant(Mode.EXCLUSIVE, ps)
        return _only_duplicable(env, [infer_fact(env, ft) for _, ft in t.fields])
    if isinstance(t, Bar):
        f1 = infer_fact(env, t.type)
        f2 = infer_fact(env, t.perm)
        return fact_join(f1, fact_meet_constant(fact_constant(Mode.EXCLUSIVE, ps), f2))
    if isinstance(t, Anchored):
        f = infer_fact(env, t.type)
        table = list(f.table)
        table[Mode.EXCLUSIVE] = None
        return _fact(ps, table)
    if isinstance(t, Star):
        return fact_join(infer_fact(env, t.left), infer_fact(env, t.right))
    if isinstance(t, Consumes):
        return infer_fact(env, t.inner)
    if isinstance(t, NameIntro):
        return infer_fact(env, Bar(Singleton(t.var), Anchored(t.var, t.inner)))
    raise TypeError(f"infer_fact: unexpected {t!r}")


def _lift(f0: Fact, ps: tuple[str, ...]) -> Fact:
    # a nullary type's fact is constant; restate it over the current parameters
    n = len(ps)
    return _fact(ps, (None if h is None else hyp_true(n) for h in f0.table))


def _only_duplicable(env: FactEnv, comps: Sequence[Fact]) -> Fact:
    ps = env.params
    h: Hyp = hyp_true(len(ps))
    for c in comps:
        h = hyp_and(h, c.table[Mode.DUPLICABLE])
    return _fact(ps, (None, h, None, hyp_true(len(ps))))


def definition_fact(env: FactEnv, d: DataTypeDef) -> Fact:
    params = [a for a, _ in d.params]
    if d.mutable:
        return fact_constant(Mode.EXCLUSIVE, params)
    local = env.with_params(params)
    f = None
    for b in d.branches:
        fb = infer_fact(local, b.as_type(d.adopts))
        f = fb if f is None else fact_join(f, fb)
    assert f is not None
    return f


def base_env(defs: Iterable[DataTypeDef] = (), abstracts: Iterable[AbstractDef] = ()) -> FactEnv:
    types: dict[str, Fact] = {}
    for a in abstracts:
        params = [n for n, _ in a.params]
        types[a.name] = fact_of_decl(a.fact, params) if a.fact else fact_constant(Mode.AFFINE, params)
    ctors = {b.ctor: d.mutable for d in defs for b in d.branches}
    return FactEnv(types, {}, ctors)


def infer_datatype_facts(defs: Sequence[DataTypeDef], env: Optional[FactEnv] = None,
                         history: Optional[list] = None) -> FactEnv:
    """Fixed point over a group of definitions, starting from the most
    optimistic fact (constant bottom) for each and weakening until stable."""
    if env is None:
        env = base_env(defs)
    ctors = dict(env.ctors)
    ctors.update({b.ctor: d.mutable for d in defs for b in d.branches})
    types = dict(env.types)
    for d in defs:
        types[d.name] = fact_constant(Mode.BOTTOM, [a for a, _ in d.params])
    cur = replace(env, types=types, ctors=ctors)
    while True:
        if history is not None:
            history.append({d.name: cur.types[d.name] for d in defs})
        new = dict(cur.types)
        for d in defs:
            new[d.name] = definition_fact(cur, d)
        if all(new[d.name] == cur.types[d.name] for d in defs):
            return cur
        cur = replace(cur, types=new)


def is_duplicable(env: FactEnv, t: TypeExpr) -> bool:
    return infer_fact(replace(env, params=()), t).holds(Mode.DUPLICABLE)


def is_exclusive(env: FactEnv, t: TypeExpr) -> bool:
    return infer_fact(replace(env, params=()), t).holds(Mode.EXCLUSIVE)


def dump(env: FactEnv, names: Optional[Iterable[str]] = None) -> str:
    names = sorted(env.types) if names is None else list(names)
    return "\n".join(f"fact {n}: {show_fact(env.types[n])}" for n in names)
