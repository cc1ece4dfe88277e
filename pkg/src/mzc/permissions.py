"""The permission environment and permission subsumption.

An environment is a conjunction of atomic permissions ``x @ t`` kept in
expanded form (structural and tuple atoms name their fields with singleton
types), plus a union-find structure recording which variables are known to
be equal.  Operations never mutate a caller's environment; they return a new
one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Sequence

from .facts import FactEnv, fact_constant, fact_meet_constant, infer_fact
from .syntax import (
    BOTTOM, PERM, TERM, TYPE, Anchored, Arrow, Bar, DataTypeDef, Dynamic, Empty, Exists,
    Forall, Kind, Mode, ModeAnd, Singleton, Star, Structural, TApp, TTuple, TVar, TypeExpr,
    Unknown, alpha_equal, base_name, free_names, fresh, is_bottom, subst_many,
)

DEFAULT_BUDGET = 8

_age = itertools.count()


class Tables:
    """Read-only data type information shared by all environments."""

    def __init__(self, defs: Sequence[DataTypeDef] = ()):
        self.defs: dict[str, DataTypeDef] = {d.name: d for d in defs}
        self.ctors: dict[str, DataTypeDef] = {b.ctor: d for d in defs for b in d.branches}

    def owner(self, ctor: str) -> Optional[DataTypeDef]:
        return self.ctors.get(ctor)

    def is_mutable_ctor(self, ctor: str) -> bool:
        d = self.ctors.get(ctor)
        return bool(d and d.mutable)

    def unfold(self, name: str, args: Sequence[TypeExpr], ctor: str) -> Structural:
        d = self.defs[name]
        b = d.branch(ctor)
        assert b is not None
        mapping = {p: a for (p, _), a in zip(d.params, args)}
        return Structural(ctor, tuple((f, subst_many(ft, mapping)) for f, ft in b.fields),
                          subst_many(d.adopts, mapping))

    def adopts_of(self, name: str, args: Sequence[TypeExpr]) -> TypeExpr:
        d = self.defs[name]
        return subst_many(d.adopts, {p: a for (p, _), a in zip(d.params, args)})


@dataclass(frozen=True)
class VarInfo:
    kind: Kind
    rank: int
    age: int


@dataclass(frozen=True)
class Failure:
    """Why a subsumption failed: the first conjunct that could not be
    obtained, and the environment it was sought in."""
    goal: TypeExpr
    env: "PermissionEnv"

    def __str__(self) -> str:
        return str(self.env.show_type(self.goal))


class PermissionEnv:
    def __init__(self, tables: Optional[Tables] = None, facts: Optional[FactEnv] = None):
        self.tables = tables or Tables()
        self.facts = facts or FactEnv()
        self.parent: dict[str, str] = {}
        self.atoms: dict[str, tuple[TypeExpr, ...]] = {}
        self.perms: tuple[TypeExpr, ...] = ()
        self.info: dict[str, VarInfo] = {}
        self.flex: dict[str, tuple[Kind, Optional[TypeExpr]]] = {}
        self.inconsistent = False

    # -- persistence ---------------------------------------------------------

    def copy(self) -> PermissionEnv:
        e = PermissionEnv.__new__(PermissionEnv)
        e.tables = self.tables
        e.facts = self.facts
        e.parent = dict(self.parent)
        e.atoms = dict(self.atoms)
        e.perms = self.perms
        e.info = dict(self.info)
        e.flex = dict(self.flex)
        e.inconsistent = self.inconsistent
        return e

    # -- variables -----------------------------------------------------------

    def declare(self, name: str, kind: Kind = TERM, rank: Optional[int] = None) -> PermissionEnv:
        e = self.copy()
        e._declare(name, kind, rank)
        return e

    def _declare(self, name: str, kind: Kind = TERM, rank: Optional[int] = None) -> None:
        if name in self.info:
            return
        if rank is None:
            rank = 2 if "~" in name else 0
        self.info[name] = VarInfo(kind, rank, next(_age))

    def fresh_var(self, base: str, rank: int = 1, kind: Kind = TERM) -> str:
        """Declare a fresh variable in place (internal use on private copies)."""
        name = fresh(base_name(base))
        self._declare(name, kind, rank)
        return name

    def assume(self, name: str, mode: Mode) -> PermissionEnv:
        e = self.copy()
        e._assume(name, mode)
        return e

    def _assume(self, name: str, mode: Mode) -> None:
        f = self.facts.lookup(name)
        self.facts = self.facts.bind(name, fact_meet_constant(fact_constant(mode), f))

    def is_flexible(self, name: str) -> bool:
        return name in self.flex and self.flex[name][1] is None

    def new_flexible(self, base: str, kind: Kind) -> tuple[PermissionEnv, str]:
        e = self.copy()
        name = fresh(base_name(base))
        e.flex[name] = (kind, None)
        return e, name

    def solution(self, name: str) -> Optional[TypeExpr]:
        entry = self.flex.get(name)
        return entry[1] if entry else None

    def unsolved(self, names) -> list[str]:
        return [n for n in names if self.is_flexible(n)]

    def _solve(self, name: str, value: TypeExpr) -> None:
        kind, _ = self.flex[name]
        self.flex[name] = (kind, value)

    def find(self, x: str) -> str:
        sol = self.flex.get(x)
        if sol is not None and sol[1] is not None:
            v = sol[1]
            x = v.name if isinstance(v, TVar) else v.var if isinstance(v, Singleton) else x
        while x in self.parent:
            x = self.parent[x]
        return x

    def same(self, x: str, y: str) -> bool:
        return self.find(x) == self.find(y)

    def resolve(self, t: TypeExpr) -> TypeExpr:
        """Substitute solved flexible variables."""
        mapping = {}
        for n, (kind, sol) in self.flex.items():
            if sol is not None:
                if kind == TERM:
                    mapping[n] = TVar(sol.name if isinstance(sol, TVar) else sol.var)
                else:
                    mapping[n] = sol
        if not mapping:
            return t
        prev = None
        while prev is not t and prev != t:
            prev, t = t, subst_many(t, mapping)
        return t

    # -- facts ---------------------------------------------------------------

    def is_duplicable(self, t: TypeExpr) -> bool:
        return infer_fact(self._closed_facts(), self.resolve(t)).holds(Mode.DUPLICABLE)

    def is_exclusive(self, t: TypeExpr) -> bool:
        return infer_fact(self._closed_facts(), self.resolve(t)).holds(Mode.EXCLUSIVE)

    def _closed_facts(self) -> FactEnv:
        if self.facts.params:
            return replace(self.facts, params=())
        return self.facts

    # -- atoms ---------------------------------------------------------------

    def atoms_of(self, x: str) -> tuple[TypeExpr, ...]:
        return self.atoms.get(self.find(x), ())

    def structural_of(self, x: str) -> Optional[Structural]:
        for a in self.atoms_of(x):
            if isinstance(a, Structural):
                return a
        return None

    def tuple_of(self, x: str) -> Optional[TTuple]:
        for a in self.atoms_of(x):
            if isinstance(a, TTuple):
                return a
        return None

    def _set_atoms(self, rep: str, atoms: Sequence[TypeExpr]) -> None:
        if atoms:
            self.atoms[rep] = tuple(atoms)
        else:
            self.atoms.pop(rep, None)

    def _remove_atom(self, x: str, atom: TypeExpr) -> None:
        rep = self.find(x)
        cur = list(self.atoms.get(rep, ()))
        for i, a in enumerate(cur):
            if a is atom or a == atom:
                del cur[i]
                break
        self._set_atoms(rep, cur)

    def _replace_atom(self, x: str, old: TypeExpr, new: TypeExpr) -> None:
        rep = self.find(x)
        self._set_atoms(rep, [new if (a is old or a == old) else a for a in self.atoms.get(rep, ())])

    # -- adding permissions ----------------------------------------------------

    def add(self, x: str, t: TypeExpr) -> PermissionEnv:
        e = self.copy()
        e._add(x, t)
        return e

    def add_perm(self, p: TypeExpr) -> PermissionEnv:
        e = self.copy()
        e._add_perm(p)
        return e

    def _add(self, x: str, t: TypeExpr) -> None:
        self._declare(x)
        t = self.resolve(t)
        if isinstance(t, Singleton):
            self._union(x, t.var)
        elif isinstance(t, Bar):
            self._add(x, t.type)
            self._add_perm(t.perm)
        elif isinstance(t, Exists):
            self._add(x, self._open(t))
        elif isinstance(t, ModeAnd):
            self._assume(t.subject, t.mode)
            self._add(x, t.body)
        elif isinstance(t, Unknown):
            pass
        elif isinstance(t, TTuple):
            names = []
            for i, c in enumerate(t.items):
                if isinstance(c, Singleton):
                    names.append(c.var)
                else:
                    y = self.fresh_var(f"{base_name(x)}{i}")
                    self._add(y, c)
                    names.append(y)
            self._add_atom(x, TTuple(tuple(Singleton(n) for n in names)))
        elif isinstance(t, Structural):
            fields = []
            for f, ft in t.fields:
                if isinstance(ft, Singleton):
                    fields.append((f, ft))
                else:
                    y = self.fresh_var(f)
                    self._add(y, ft)
                    fields.append((f, Singleton(y)))
            self._add_atom(x, Structural(t.ctor, tuple(fields), t.adopts))
        elif isinstance(t, (Anchored, Star, Empty)):
            self._add_perm(t)
        else:
            self._add_atom(x, t)

    def _open(self, t: Exists) -> TypeExpr:
        name = fresh(base_name(t.binder))
        self._declare(name, t.kind, 0 if "~" not in t.binder else 2)
        return subst_many(t.body, {t.binder: TVar(name)})

    def _add_perm(self, p: TypeExpr) -> None:
        p = self.resolve(p)
        if isinstance(p, Star):
            self._add_perm(p.left)
            self._add_perm(p.right)
        elif isinstance(p, Empty):
            pass
        elif isinstance(p, Anchored):
            self._add(p.var, p.type)
        elif isinstance(p, Exists):
            self._add_perm(self._open(p))
        elif isinstance(p, ModeAnd):
            self._assume(p.subject, p.mode)
            self._add_perm(p.body)
        else:
            if not (self.is_duplicable(p) and any(alpha_equal(p, q) for q in self.perms)):
                self.perms = self.perms + (p,)

    def _add_atom(self, x: str, atom: TypeExpr) -> None:
        rep = self.find(x)
        cur = list(self.atoms.get(rep, ()))
        if isinstance(atom, Structural):
            for i, a in enumerate(cur):
                if isinstance(a, TTuple):
                    self.inconsistent = True
                if isinstance(a, Structural):
                    if a.ctor != atom.ctor or len(a.fields) != len(atom.fields):
                        self.inconsistent = True
                        return
                    for (_, fa), (_, fb) in zip(a.fields, atom.fields):
                        self._union(fa.var, fb.var)
                    if is_bottom(a.adopts) and not is_bottom(atom.adopts):
                        self._replace_atom(rep, a, Structural(a.ctor, a.fields, atom.adopts))
                    return
        if isinstance(atom, TTuple):
            for a in cur:
                if isinstance(a, Structural):
                    self.inconsistent = True
                if isinstance(a, TTuple):
                    if len(a.items) != len(atom.items):
                        self.inconsistent = True
                        return
                    for fa, fb in zip(a.items, atom.items):
                        self._union(fa.var, fb.var)
                    return
        dup = self.is_duplicable(atom)
        if dup and any(alpha_equal(atom, a) for a in cur):
            return
        if not dup and self.is_exclusive(atom) and any(self.is_exclusive(a) for a in cur):
            self.inconsistent = True
        rep = self.find(x)
        self.atoms[rep] = tuple(self.atoms.get(rep, ())) + (atom,)

    def merge_equal(self, x: str, y: str) -> PermissionEnv:
        e = self.copy()
        e._declare(x)
        e._declare(y)
        e._union(x, y)
        return e

    def _union(self, x: str, y: str) -> None:
        self._declare(x)
        self._declare(y)
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self._key(ry) < self._key(rx):
            rx, ry = ry, rx
        moved = self.atoms.pop(ry, ())
        self.parent[ry] = rx
        for a in moved:
            self._add_atom(rx, a)

    def _key(self, name: str) -> tuple[int, int]:
        info = self.info.get(name)
        return (info.rank, info.age) if info else (3, 0)

    # -- subsumption ---------------------------------------------------------

    def subsume(self, wanted: TypeExpr, budget: int = DEFAULT_BUDGET) -> PermissionEnv | Failure:
        """Extract `wanted` (a permission) from the environment.  Returns the
        remaining environment, or a Failure naming the first missing conjunct."""
        if self.inconsistent:
            return self
        for e in self._sub_perm(wanted, budget):
            return e
        return self._diagnose(wanted, budget)

    def subsume_var(self, x: str, t: TypeExpr, budget: int = DEFAULT_BUDGET) -> PermissionEnv | Failure:
        return self.subsume(Anchored(x, t), budget)

    def _diagnose(self, wanted: TypeExpr, budget: int) -> Failure:
        env = self
        for conj in _conjuncts(self.resolve(wanted)):
            nxt = next(env._sub_perm(conj, budget), None)
            if nxt is None:
                return Failure(env.resolve(conj), env)
            env = nxt
        return Failure(wanted, self)

    def frame_split(self, wanted: TypeExpr, budget: int = DEFAULT_BUDGET):
        """Split into the atoms a subsumption consumes and those it frames out."""
        res = self.subsume(wanted, budget)
        if isinstance(res, Failure):
            return res
        consumed = self.copy()
        kept = {(res.find(r), a) for r, atoms in res.atoms.items() for a in atoms}
        for r, atoms in self.atoms.items():
            left = [a for a in atoms if (res.find(r), a) not in kept]
            consumed._set_atoms(r, left)
        return consumed, res

    def _sub_perm(self, p: TypeExpr, budget: int) -> Iterator[PermissionEnv]:
        p = self.resolve(p)
        if isinstance(p, Star):
            for e1 in self._sub_perm(p.left, budget):
                yield from e1._sub_perm(p.right, budget)
        elif isinstance(p, Empty):
            yield self
        elif isinstance(p, Anchored):
            x = p.var
            if self.is_flexible(x):
                return
            yield from self._sub(x, p.type, budget)
        elif isinstance(p, Exists):
            e, n = self.new_flexible(p.binder, p.kind)
            yield from e._sub_perm(subst_many(p.body, {p.binder: TVar(n)}), budget)
        elif isinstance(p, ModeAnd):
            if self._mode_holds(p.mode, p.subject):
                yield from self._sub_perm(p.body, budget)
        else:
            for i, q in enumerate(self.perms):
                e = self.copy()
                got = e._unify(q, p)
                if got is None:
                    continue
                if not got.is_duplicable(q):
                    got.perms = got.perms[:i] + got.perms[i + 1:]
                yield got

    def _mode_holds(self, m: Mode, subject: str) -> bool:
        t = self.resolve(TVar(subject))
        f = infer_fact(self._closed_facts(), t)
        return f.holds(m)

    def _consume(self, x: str, atom: TypeExpr) -> PermissionEnv:
        e = self.copy()
        if not e.is_duplicable(atom):
            e._remove_atom(x, atom)
        return e

    def _sub(self, x: str, t: TypeExpr, budget: int) -> Iterator[PermissionEnv]:
        t = self.resolve(t)
        x = self.find(x)
        if isinstance(t, Singleton):
            y = t.var
            if self.is_flexible(y):
                e = self.copy()
                e._solve(y, TVar(x))
                yield e
            elif self.same(x, y):
                yield self
            return
        if isinstance(t, Bar):
            for e1 in self._sub(x, t.type, budget):
                yield from e1._sub_perm(t.perm, budget)
            return
        if isinstance(t, Exists):
            e, n = self.new_flexible(t.binder, t.kind)
            yield from e._sub(x, subst_many(t.body, {t.binder: TVar(n)}), budget)
            return
        if isinstance(t, ModeAnd):
            if self._mode_holds(t.mode, t.subject):
                yield from self._sub(x, t.body, budget)
            return
        if isinstance(t, Unknown):
            yield self
            return
        if isinstance(t, Dynamic):
            atoms = self.atoms_of(x)
            if any(isinstance(a, Dynamic) for a in atoms):
                yield self
            elif any(self.is_exclusive(a) for a in atoms):
                e = self.copy()
                e._add_atom(x, Dynamic())
                yield e
            return
        if isinstance(t, TTuple):
            tup = self.tuple_of(x)
            if tup is None or len(tup.items) != len(t.items):
                return
            yield from self._sub_fields(list(zip((s.var for s in tup.items), t.items)), budget)
            return
        if isinstance(t, Structural):
            yield from self._sub_structural(x, t, budget)
            return
        if isinstance(t, TApp):
            yield from self._sub_app(x, t, budget)
            return
        if isinstance(t, TVar):
            if self.is_flexible(t.name):
                yield from self._solve_from_atoms(x, t.name, budget)
                return
        # rigid variables, arrows, quantified types: match an existing atom
        for atom in self.atoms_of(x):
            e = self.copy()
            got = e._unify(atom, t)
            if got is not None:
                yield got._consume(x, atom)

    def _sub_fields(self, pairs, budget: int) -> Iterator[PermissionEnv]:
        if not pairs:
            yield self
            return
        (y, ft), rest = pairs[0], pairs[1:]
        for e in self._sub(y, ft, budget):
            yield from e._sub_fields(rest, budget)

    def _solve_from_atoms(self, x: str, flex: str, budget: int) -> Iterator[PermissionEnv]:
        atoms = sorted(self.atoms_of(x), key=lambda a: isinstance(a, (Structural, TTuple)))
        for atom in atoms:
            # a block or tuple whose fields are named by singletons is first
            # generalized to its nominal or tuple type, so that sibling
            # values can share the instantiation
            shape = self._generalize(atom)
            if shape is not None:
                e, goal = shape
                e._solve(flex, goal)
                yield from e._sub(x, goal, budget)
            if self._occurs(flex, atom):
                continue
            e = self.copy()
            e._solve(flex, atom)
            yield e._consume(x, atom)

    def _generalize(self, atom: TypeExpr) -> Optional[tuple[PermissionEnv, TypeExpr]]:
        e = self.copy()
        if isinstance(atom, Structural):
            d = self.tables.owner(atom.ctor)
            if d is None:
                return None
            args = []
            for p, k in d.params:
                e, n = e.new_flexible(p, k)
                args.append(TVar(n))
            return e, TApp(d.name, tuple(args))
        if isinstance(atom, TTuple):
            items = []
            for _ in atom.items:
                e, n = e.new_flexible("c", TYPE)
                items.append(TVar(n))
            return e, TTuple(tuple(items))
        return None

    def _adopts_ok(self, have: TypeExpr, want: TypeExpr) -> Optional[PermissionEnv]:
        if is_bottom(have):
            return self
        return self.copy()._unify(have, want)

    def _sub_structural(self, x: str, t: Structural, budget: int) -> Iterator[PermissionEnv]:
        atom = self.structural_of(x)
        if atom is not None:
            if atom.ctor != t.ctor:
                return
            have = dict(atom.fields)
            if set(have) != {f for f, _ in t.fields}:
                return
            base = self._adopts_ok(atom.adopts, t.adopts)
            if base is None:
                return
            pairs = [(have[f].var, ft) for f, ft in t.fields]
            for e in base._sub_fields(pairs, budget):
                yield e._consume(x, atom)
            return
        if budget <= 0:
            return
        # unfold a nominal permission whose type has a single branch
        for a in self.atoms_of(x):
            if isinstance(a, TApp) and a.head in self.tables.defs:
                d = self.tables.defs[a.head]
                if len(d.branches) == 1 and d.branches[0].ctor == t.ctor:
                    e = self.copy()
                    e._remove_atom(x, a)
                    e._add(x, self.tables.unfold(a.head, a.args, t.ctor))
                    if e.is_duplicable(a):
                        e._add_atom(x, a)
                    yield from e._sub_structural(x, t, budget - 1)

    def _sub_app(self, x: str, t: TApp, budget: int) -> Iterator[PermissionEnv]:
        for atom in self.atoms_of(x):
            if isinstance(atom, TApp) and atom.head == t.head:
                e = self.copy()
                got = e._unify(atom, t)
                if got is not None:
                    yield got._consume(x, atom)
        if budget <= 0 or t.head not in self.tables.defs:
            return
        atom = self.structural_of(x)
        if atom is not None:
            d = self.tables.owner(atom.ctor)
            if d is not None and d.name == t.head:
                goal = self.tables.unfold(t.head, t.args, atom.ctor)
                yield from self._sub_structural(x, goal, budget - 1)

    # -- unification -----------------------------------------------------------

    def _unify(self, have: TypeExpr, want: TypeExpr) -> Optional[PermissionEnv]:
        """Match an available type against a wanted one, solving flexible
        variables that occur in `want`.  Mutates and returns self, or None."""
        ok = self._unify_rec(self.resolve(have), self.resolve(want), {}, {})
        return self if ok else None

    def _unify_rec(self, a: TypeExpr, b: TypeExpr, la: dict, lb: dict) -> bool:
        if isinstance(b, TVar) and b.name not in lb and self.is_flexible(b.name):
            kind = self.flex[b.name][0]
            if kind == TERM:
                if isinstance(a, TVar) and a.name not in la:
                    self._solve(b.name, TVar(self.find(a.name)))
                    return True
                return False
            if _mentions_bound(a, la) or self._occurs(b.name, a):
                return False
            self._solve(b.name, a)
            return True
        if isinstance(b, TVar) and b.name not in lb and self.solution(b.name) is not None:
            return self._unify_rec(a, self.resolve(b), la, lb)
        if type(a) is not type(b):
            return False
        if isinstance(a, TVar):
            if a.name in la or b.name in lb:
                return la.get(a.name) == lb.get(b.name) and a.name in la and b.name in lb
            return self.same(a.name, b.name) if self._is_term(a.name) else a.name == b.name
        if isinstance(a, Singleton):
            if b.var in lb or a.var in la:
                return la.get(a.var) == lb.get(b.var)
            if self.is_flexible(b.var):
                self._solve(b.var, TVar(self.find(a.var)))
                return True
            return self.same(a.var, b.var)
        if isinstance(a, Anchored):
            xa = la.get(a.var, self.find(a.var))
            if b.var in lb:
                xb = lb[b.var]
            elif self.is_flexible(b.var):
                self._solve(b.var, TVar(self.find(a.var)))
                xb = xa
            else:
                xb = self.find(b.var)
            return xa == xb and self._unify_rec(a.type, b.type, la, lb)
        if isinstance(a, (Forall, Exists)):
            if a.kind != b.kind:
                return False
            k = object()
            return self._unify_rec(a.body, b.body, {**la, a.binder: k}, {**lb, b.binder: k})
        if isinstance(a, ModeAnd):
            return a.mode == b.mode and self._unify_rec(TVar(a.subject), TVar(b.subject), la, lb) \
                and self._unify_rec(a.body, b.body, la, lb)
        if isinstance(a, TApp):
            return a.head == b.head and len(a.args) == len(b.args) and \
                all(self._unify_rec(x, y, la, lb) for x, y in zip(a.args, b.args))
        if isinstance(a, TTuple):
            return len(a.items) == len(b.items) and \
                all(self._unify_rec(x, y, la, lb) for x, y in zip(a.items, b.items))
        if isinstance(a, Structural):
            return a.ctor == b.ctor and [f for f, _ in a.fields] == [f for f, _ in b.fields] and \
                all(self._unify_rec(x, y, la, lb) for (_, x), (_, y) in zip(a.fields, b.fields)) and \
                self._unify_rec(a.adopts, b.adopts, la, lb)
        if isinstance(a, (Arrow,)):
            return self._unify_rec(a.dom, b.dom, la, lb) and self._unify_rec(a.cod, b.cod, la, lb)
        if isinstance(a, Bar):
            return self._unify_rec(a.type, b.type, la, lb) and self._unify_rec(a.perm, b.perm, la, lb)
        if isinstance(a, Star):
            return self._unify_rec(a.left, b.left, la, lb) and self._unify_rec(a.right, b.right, la, lb)
        if isinstance(a, (Dynamic, Unknown, Empty)):
            return True
        return alpha_equal(a, b)

    def _occurs(self, name: str, t: TypeExpr) -> bool:
        return name in free_names(self.resolve(t))

    def _is_term(self, name: str) -> bool:
        info = self.info.get(name)
        return info is not None and info.kind == TERM

    # -- display -------------------------------------------------------------

    def show_type(self, t: TypeExpr) -> str:
        return str(self.resolve(t))

    def lines(self, hide: frozenset = frozenset(), max_rank: int = 1) -> list[str]:
        """One line per visible atom, in lexicographic order."""
        out = []
        for rep, atoms in self.atoms.items():
            if rep in hide or self._key(rep)[0] > max_rank:
                continue
            excl = any(self.is_exclusive(a) for a in atoms)
            for a in atoms:
                if isinstance(a, Dynamic) and excl:
                    continue
                out.append(f"{rep} @ {self._display(a, max_rank)}")
        for p in self.perms:
            out.append(str(p))
        return sorted(out)

    def _display(self, a: TypeExpr, max_rank: int) -> str:
        if isinstance(a, Structural):
            fields = []
            for f, ft in a.fields:
                y = self.find(ft.var)
                hidden = self._key(y)[0] > max_rank
                atoms = self.atoms.get(y, ())
                if hidden and len(atoms) == 1:
                    fields.append((f, atoms[0]))
                else:
                    fields.append((f, Singleton(y)))
            return str(Structural(a.ctor, tuple(fields), a.adopts))
        if isinstance(a, TTuple):
            return str(TTuple(tuple(Singleton(self.find(s.var)) for s in a.items)))
        return str(a)

    def dump(self, hide: frozenset = frozenset()) -> str:
        if self.inconsistent:
            return "(inconsistent)"
        return "\n".join(self.lines(hide))


def _conjuncts(p: TypeExpr) -> list[TypeExpr]:
    if isinstance(p, Star):
        return _conjuncts(p.left) + _conjuncts(p.right)
    if isinstance(p, Empty):
        return []
    return [p]


def _mentions_bound(t: TypeExpr, bound: dict) -> bool:
    from .syntax import free_names
    return bool(free_names(t) & set(bound))
