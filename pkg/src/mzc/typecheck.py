"""ANF normalization and the permission-based type checker."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .facts import FactEnv, infer_datatype_facts, base_env
from .permissions import DEFAULT_BUDGET, Failure, PermissionEnv, Tables
from .syntax import (
    BOTTOM, TERM, TYPE, UNIT, Anchored, Arrow, Bar, DataTypeDef, Dynamic, EAnnot, EApply,
    EBool, EConstruct, EFail, EFun, EGive, EIf, EInt, ELambda, ELet, EMatch, EPrim, ERead,
    ETake, ETaking, ETuple, ETypeAbs, ETypeApp, EVar, EWrite, EWriteTag, Expr, Forall,
    Kind, Loc, Pattern, PConstruct, Program, PTuple, PVar, Singleton, Structural, TApp,
    TTuple, TVar, TypeExpr, ValDef, free_names, fresh, is_bottom, is_shallow, rename,
    subst_many,
)

INT = TApp("int", ())
BOOL = TApp("bool", ())


class TypeCheckError(Exception):
    """A typing rule could not be applied."""

    def __init__(self, rule: str, message: str, loc: Optional[Loc] = None,
                 missing: Optional[str] = None, subject: Optional[str] = None):
        self.rule = rule
        self.message = message
        self.loc = loc
        self.missing = missing
        self.subject = subject
        super().__init__(f"[{rule}] {message}")

    def render(self, filename: str = "<input>") -> str:
        line, col = self.loc or (0, 0)
        body = f"missing permission: {self.missing}" if self.missing else self.message
        return f"{filename}:{line}:{col}: error[{self.rule}]: {body}"


class NoSuchField(TypeCheckError):
    pass


class NoStructuralPermission(TypeCheckError):
    pass


class NotExclusive(TypeCheckError):
    pass


class ArityMismatch(TypeCheckError):
    pass


class NoAdoptsClause(TypeCheckError):
    pass


class AdopteeTypeNotExclusive(TypeCheckError):
    pass


class UnsolvedFlexible(TypeCheckError):
    pass


# ---------------------------------------------------------------------------
# ANF normalization

def _bind(binds: list, e: Expr, base: str = "t") -> EVar:
    if isinstance(e, EVar):
        return e
    n = fresh(base)
    binds.append((PVar(n), normalize(e), e.loc))
    return EVar(n, e.loc)


def _wrap(binds: list, body: Expr) -> Expr:
    for p, b, loc in reversed(binds):
        body = ELet(p, b, body, loc)
    return body


def _shallow(p: Pattern) -> tuple[Pattern, list[tuple[Pattern, str]]]:
    """Replace nested sub-patterns by fresh variables."""
    deep: list[tuple[Pattern, str]] = []

    def leaf(q: Pattern) -> Pattern:
        if isinstance(q, PVar):
            return q
        n = fresh("p")
        deep.append((q, n))
        return PVar(n)
    if isinstance(p, PTuple):
        return PTuple(tuple(leaf(q) for q in p.items)), deep
    if isinstance(p, PConstruct):
        return PConstruct(p.ctor, tuple((f, leaf(q)) for f, q in p.fields)), deep
    return p, deep


def _let_pattern(p: Pattern, bound: Expr, body: Expr, loc) -> Expr:
    sp, deep = _shallow(p)
    for q, n in reversed(deep):
        body = _let_pattern(q, EVar(n, loc), body, loc)
    return ELet(sp, bound, body, loc)


def normalize(e: Expr) -> Expr:
    """Monadic normal form: every operand of an elementary construct is a
    variable and every pattern is shallow."""
    binds: list = []
    loc = e.loc
    if isinstance(e, (EVar, EInt, EBool, EFail)):
        return e
    if isinstance(e, ELet):
        bound = normalize(e.bound)
        body = normalize(e.body)
        if is_shallow(e.pattern):
            return ELet(e.pattern, bound, body, loc)
        sp, deep = _shallow(e.pattern)
        for q, n in reversed(deep):
            body = normalize(_let_pattern(q, EVar(n, loc), body, loc))
        return ELet(sp, bound, body, loc)
    if isinstance(e, ELambda):
        return ELambda(e.param, e.arg, e.ret, normalize(e.body), loc)
    if isinstance(e, ETypeAbs):
        return ETypeAbs(e.binder, e.kind, normalize(e.body), loc)
    if isinstance(e, EFun):
        return EFun(e.tparams, e.arg, e.ret, normalize(e.body), loc)
    if isinstance(e, ETypeApp):
        f = _bind(binds, e.expr)
        return _wrap(binds, ETypeApp(f, e.type, e.kind, loc))
    if isinstance(e, EApply):
        f = _bind(binds, e.fn)
        a = _bind(binds, e.arg)
        return _wrap(binds, EApply(f, a, loc))
    if isinstance(e, ETuple):
        items = tuple(_bind(binds, i) for i in e.items)
        return _wrap(binds, ETuple(items, loc))
    if isinstance(e, EConstruct):
        fields = tuple((f, _bind(binds, v)) for f, v in e.fields)
        return _wrap(binds, EConstruct(e.ctor, fields, e.adopts, loc))
    if isinstance(e, EPrim):
        args = tuple(_bind(binds, a) for a in e.args)
        return _wrap(binds, EPrim(e.op, args, loc))
    if isinstance(e, EMatch):
        s = _bind(binds, e.scrutinee)
        arms = []
        for p, body in e.arms:
            sp, deep = _shallow(p)
            for q, n in reversed(deep):
                body = _let_pattern(q, EVar(n, body.loc), body, body.loc)
            arms.append((sp, normalize(body)))
        return _wrap(binds, EMatch(s, tuple(arms), loc))
    if isinstance(e, ERead):
        t = _bind(binds, e.target)
        return _wrap(binds, ERead(t, e.field, loc))
    if isinstance(e, EWrite):
        t = _bind(binds, e.target)
        v = _bind(binds, e.value)
        return _wrap(binds, EWrite(t, e.field, v, loc))
    if isinstance(e, EWriteTag):
        t = _bind(binds, e.target)
        return _wrap(binds, EWriteTag(t, e.ctor, loc))
    if isinstance(e, EGive):
        x = _bind(binds, e.adoptee)
        y = _bind(binds, e.adopter)
        return _wrap(binds, EGive(x, y, loc))
    if isinstance(e, ETake):
        x = _bind(binds, e.adoptee)
        y = _bind(binds, e.adopter)
        return _wrap(binds, ETake(x, y, loc))
    if isinstance(e, ETaking):
        x = _bind(binds, e.adoptee)
        y = _bind(binds, e.adopter)
        r = fresh("r")
        body = ELet(PVar("_"), ETake(x, y, loc),
                    ELet(PVar(r), e.body,
                         ELet(PVar("_"), EGive(x, y, loc), EVar(r, loc), loc), loc), loc)
        return _wrap(binds, normalize(body))
    if isinstance(e, EIf):
        c = _bind(binds, e.cond)
        return _wrap(binds, EIf(c, normalize(e.then), normalize(e.orelse), loc))
    if isinstance(e, EAnnot):
        v = _bind(binds, e.expr)
        return _wrap(binds, EAnnot(v, e.type, loc))
    raise ValueError(f"normalize: unexpected {e!r}")


# ---------------------------------------------------------------------------
# checking

@dataclass
class Outcome:
    env: PermissionEnv
    var: str
    line: int = 0


@dataclass
class Dump:
    line: int
    label: str
    atoms: list[str]

    def render(self) -> str:
        head = f"perms at line {self.line} ({self.label}):"
        return "\n".join([head] + [f"  {a}" for a in self.atoms])


@dataclass
class TypingContext:
    tables: Tables
    facts: FactEnv
    budget: int = DEFAULT_BUDGET
    dumps: Optional[list] = None
    globals: frozenset = frozenset()


class Scope:
    """Maps source names to unique internal names within one definition."""

    def __init__(self, mapping: dict, used: set):
        self.mapping = mapping
        self.used = used

    def bind(self, name: str) -> tuple["Scope", str]:
        internal = name if name not in self.used else fresh(name)
        self.used.add(internal)
        m = dict(self.mapping)
        m[name] = internal
        return Scope(m, self.used), internal

    def lookup(self, name: str) -> Optional[str]:
        return self.mapping.get(name)

    def rename(self, t: TypeExpr) -> TypeExpr:
        fv = free_names(t)
        mapping = {n: self.mapping[n] for n in fv if n in self.mapping and self.mapping[n] != n}
        return rename(t, mapping) if mapping else t


def _rank(source_name: str) -> int:
    return 2 if "~" in source_name or source_name == "_" else 0


def _peel_forall(t: TypeExpr) -> tuple[list[tuple[str, Kind]], TypeExpr]:
    binders = []
    while isinstance(t, Forall):
        binders.append((t.binder, t.kind))
        t = t.body
    return binders, t


def function_type(e: Expr) -> Optional[TypeExpr]:
    """The declared type of an internal function expression."""
    binders = []
    while isinstance(e, ETypeAbs):
        binders.append((e.binder, e.kind))
        e = e.body
    if not isinstance(e, ELambda):
        return None
    t: TypeExpr = Arrow(e.arg, e.ret)
    for n, k in reversed(binders):
        t = Forall(n, k, t)
    return t


class Checker:
    def __init__(self, ctx: TypingContext):
        self.ctx = ctx

    # -- helpers -------------------------------------------------------------

    def _new(self, env: PermissionEnv, t: Optional[TypeExpr] = None, base: str = "t") -> tuple[PermissionEnv, str]:
        name = fresh(base)
        env = env.declare(name, TERM, 2)
        if t is not None:
            env = env.add(name, t)
        return env, name

    def _var(self, scope: Scope, e: Expr) -> str:
        assert isinstance(e, EVar), e
        n = scope.lookup(e.name)
        if n is None:
            raise TypeCheckError("Var", f"unbound variable {e.name}", e.loc)
        return n

    def _fail(self, rule: str, failure: Failure, loc, cls=TypeCheckError, subject=None) -> TypeCheckError:
        goal = failure.goal
        if subject is None and isinstance(goal, Anchored):
            subject = goal.var
        return cls(rule, f"missing permission: {failure}", loc, str(failure), subject)

    def _dump(self, env: PermissionEnv, line: int, label: str) -> None:
        if self.ctx.dumps is None or line <= 0:
            return
        atoms = ["(inconsistent)"] if env.inconsistent else env.lines(self.ctx.globals)
        self.ctx.dumps.append(Dump(line, label, atoms))

    # -- expressions -----------------------------------------------------------

    def synth(self, env: PermissionEnv, scope: Scope, e: Expr, line: int = 0) -> list[Outcome]:
        if env.inconsistent:
            env, r = self._new(env)
            return [Outcome(env, r, line)]
        if e.loc and e.loc[0] > line and not isinstance(e, ELet):
            line = e.loc[0]
            self._dump(env, line, "line")
        if isinstance(e, ELet):
            return self._let(env, scope, e, line)
        if isinstance(e, EVar):
            return [Outcome(env, self._var(scope, e), line)]
        if isinstance(e, EInt):
            env, r = self._new(env, INT)
            return [Outcome(env, r, line)]
        if isinstance(e, EBool):
            env, r = self._new(env, BOOL)
            return [Outcome(env, r, line)]
        if isinstance(e, ETuple):
            items = tuple(Singleton(self._var(scope, i)) for i in e.items)
            env, r = self._new(env, TTuple(items))
            return [Outcome(env, r, line)]
        if isinstance(e, EConstruct):
            return [Outcome(*self._construct(env, scope, e), line)]
        if isinstance(e, (ELambda, ETypeAbs)):
            t = self.check_function(env, scope, e)
            env, r = self._new(env, t, "f")
            return [Outcome(env, r, line)]
        if isinstance(e, ETypeApp):
            return [Outcome(*self._type_app(env, scope, e), line)]
        if isinstance(e, EApply):
            return [Outcome(*self._apply(env, scope, e), line)]
        if isinstance(e, EMatch):
            return self._match(env, scope, e, line)
        if isinstance(e, EIf):
            c = self._var(scope, e.cond)
            got = env.subsume(Anchored(c, BOOL), self.ctx.budget)
            if isinstance(got, Failure):
                raise self._fail("If", got, e.loc)
            return self.synth(env, scope, e.then, line) + self.synth(env, scope, e.orelse, line)
        if isinstance(e, ERead):
            env, r = self.check_read(env, self._var(scope, e.target), e.field, e.loc)
            return [Outcome(env, r, line)]
        if isinstance(e, EWrite):
            env = self.check_write(env, self._var(scope, e.target), e.field,
                                   self._var(scope, e.value), e.loc)
            return [Outcome(*self._new(env, UNIT), line)]
        if isinstance(e, EWriteTag):
            env = self.check_write_tag(env, self._var(scope, e.target), e.ctor, e.loc)
            return [Outcome(*self._new(env, UNIT), line)]
        if isinstance(e, EGive):
            env = self.check_give(env, self._var(scope, e.adoptee), self._var(scope, e.adopter), e.loc)
            return [Outcome(*self._new(env, UNIT), line)]
        if isinstance(e, ETake):
            env = self.check_take(env, self._var(scope, e.adoptee), self._var(scope, e.adopter), e.loc)
            return [Outcome(*self._new(env, UNIT), line)]
        if isinstance(e, EFail):
            env = env.copy()
            env.inconsistent = True
            env, r = self._new(env)
            return [Outcome(env, r, line)]
        if isinstance(e, EPrim):
            return [Outcome(*self._prim(env, scope, e), line)]
        if isinstance(e, EAnnot):
            x = self._var(scope, e.expr)
            t = scope.rename(e.type)
            got = env.subsume(Anchored(x, t), self.ctx.budget)
            if isinstance(got, Failure):
                raise self._fail("Sub", got, e.loc)
            return [Outcome(got.add(x, t), x, line)]
        if isinstance(e, ETaking) or isinstance(e, EFun):
            raise ValueError("expression must be desugared and normalized first")
        raise ValueError(f"cannot check {e!r}")

    def _let(self, env: PermissionEnv, scope: Scope, e: ELet, line: int) -> list[Outcome]:
        out = []
        for o in self.synth(env, scope, e.bound, line):
            if o.env.inconsistent:
                out.append(o)
                continue
            env2, scope2 = self.bind_pattern(o.env, scope, e.pattern, o.var, e.loc)
            out.extend(self.synth(env2, scope2, e.body, o.line))
        return out

    def bind_pattern(self, env: PermissionEnv, scope: Scope, p: Pattern, x: str, loc) -> tuple[PermissionEnv, Scope]:
        if isinstance(p, PVar):
            if p.name == "_":
                return env, scope
            scope, n = scope.bind(p.name)
            env = env.declare(n, TERM, _rank(p.name)).merge_equal(n, x)
            return env, scope
        if isinstance(p, PTuple):
            tup = env.tuple_of(x)
            if tup is None:
                raise TypeCheckError("Let", f"no tuple permission for {x}", loc,
                                     f"{x} @ ({', '.join('_' * 1 for _ in p.items)})", x)
            if len(tup.items) != len(p.items):
                raise TypeCheckError("Let", f"tuple of {len(tup.items)} components matched "
                                     f"against {len(p.items)} patterns", loc)
            for q, s in zip(p.items, tup.items):
                env, scope = self.bind_pattern(env, scope, q, s.var, loc)
            return env, scope
        if isinstance(p, PConstruct):
            env = self.refine(env, x, p.ctor, loc)
            if env.inconsistent:
                return env, scope
            atom = env.structural_of(x)
            assert atom is not None
            have = dict(atom.fields)
            for f, q in p.fields:
                if f not in have:
                    raise NoSuchField("Match", f"constructor {p.ctor} has no field {f}", loc)
                env, scope = self.bind_pattern(env, scope, q, have[f].var, loc)
            return env, scope
        raise ValueError(p)

    def refine(self, env: PermissionEnv, x: str, ctor: str, loc) -> PermissionEnv:
        """Permission for x once it is known to be built with `ctor`."""
        if self.ctx.tables.owner(ctor) is None:
            raise TypeCheckError("Match", f"unknown constructor {ctor}", loc)
        atom = env.structural_of(x)
        if atom is not None:
            if atom.ctor == ctor:
                return env
            dead = env.copy()
            dead.inconsistent = True
            return dead
        for a in env.atoms_of(x):
            if isinstance(a, TApp) and a.head in self.ctx.tables.defs:
                d = self.ctx.tables.defs[a.head]
                if d.branch(ctor) is None:
                    continue
                e2 = env.copy()
                e2._remove_atom(x, a)
                e2._add(x, self.ctx.tables.unfold(a.head, a.args, ctor))
                return e2
        raise TypeCheckError("Match", f"no permission allows matching {x} against {ctor}", loc,
                             f"{x} @ {self.ctx.tables.owner(ctor).name} ...", x)

    def _match(self, env: PermissionEnv, scope: Scope, e: EMatch, line: int) -> list[Outcome]:
        x = self._var(scope, e.scrutinee)
        out = []
        for p, body in e.arms:
            env2, scope2 = self.bind_pattern(env, scope, p, x, e.loc)
            arm_line = body.loc[0] if body.loc else line
            label = f"arm {p.ctor}" if isinstance(p, PConstruct) else "arm"
            if not env2.inconsistent:
                self._dump(env2, arm_line, label)
            out.extend(self.synth(env2, scope2, body, arm_line))
        return out

    def _construct(self, env: PermissionEnv, scope: Scope, e: EConstruct):
        d = self.ctx.tables.owner(e.ctor)
        if d is None:
            raise TypeCheckError("New", f"unknown constructor {e.ctor}", e.loc)
        b = d.branch(e.ctor)
        given = {f for f, _ in e.fields}
        expected = [f for f, _ in b.fields]
        if len(given) != len(e.fields) or given != set(expected):
            raise TypeCheckError("New", f"{e.ctor} expects fields {', '.join(expected) or 'none'}", e.loc)
        vals = dict(e.fields)
        fields = tuple((f, Singleton(self._var(scope, vals[f]))) for f in expected)
        adopts = scope.rename(e.adopts) if e.adopts is not None else BOTTOM
        return self._new(env, Structural(e.ctor, fields, adopts))

    def _prim(self, env: PermissionEnv, scope: Scope, e: EPrim):
        args = [self._var(scope, a) for a in e.args]
        if e.op in ("==", "!="):
            return self._new(env, BOOL)
        for a in args:
            got = env.subsume(Anchored(a, INT), self.ctx.budget)
            if isinstance(got, Failure):
                raise self._fail("Prim", got, e.loc)
        result = INT if e.op in ("+", "-", "*") else BOOL
        return self._new(env, result)

    def _type_app(self, env: PermissionEnv, scope: Scope, e: ETypeApp):
        f = self._var(scope, e.expr)
        t = scope.rename(e.type)
        for atom in env.atoms_of(f):
            if isinstance(atom, Forall):
                if atom.kind == TERM:
                    if not isinstance(t, TVar):
                        raise TypeCheckError("Instantiation", f"{t} is not a term variable", e.loc)
                body = subst_many(atom.body, {atom.binder: t})
                return self._new(env, body, "f")
        raise TypeCheckError("Instantiation", f"{f} has no polymorphic type to instantiate", e.loc,
                             subject=f)

    def instantiate(self, env: PermissionEnv, poly: TypeExpr):
        """Replace the universal binders of poly with flexible variables."""
        binders, body = _peel_forall(poly)
        flex = []
        mapping = {}
        for n, k in binders:
            env, v = env.new_flexible(n, k)
            flex.append(v)
            mapping[n] = TVar(v)
        return env, subst_many(body, mapping), flex

    def _apply(self, env: PermissionEnv, scope: Scope, e: EApply):
        f = self._var(scope, e.fn)
        a = self._var(scope, e.arg)
        fn_atoms = [t for t in env.atoms_of(f) if isinstance(_peel_forall(t)[1], Arrow)]
        if not fn_atoms:
            raise TypeCheckError("Application", f"{f} is not known to be a function", e.loc,
                                 f"{f} @ (_ -> _)", f)
        failure = None
        for poly in fn_atoms:
            env1, arrow, flex = self.instantiate(env, poly)
            got = env1.subsume(Anchored(a, arrow.dom), self.ctx.budget)
            if isinstance(got, Failure):
                failure = failure or got
                continue
            cod = got.resolve(arrow.cod)
            stuck = [v for v in flex if v in free_names(cod)]
            if stuck:
                raise UnsolvedFlexible("Instantiation", "cannot infer the instantiation of "
                                       + ", ".join(stuck) + "; use explicit type application",
                                       e.loc)
            got = got.copy()
            for v in flex:
                got.flex.pop(v, None)
            return self._new(got, cod)
        raise self._fail("Application", failure, e.loc)

    # -- elementary operations ---------------------------------------------------

    def _structural(self, env: PermissionEnv, x: str, rule: str, loc) -> tuple[PermissionEnv, Structural]:
        atom = env.structural_of(x)
        if atom is not None:
            return env, atom
        for a in env.atoms_of(x):
            if isinstance(a, TApp) and a.head in self.ctx.tables.defs:
                d = self.ctx.tables.defs[a.head]
                if len(d.branches) == 1:
                    e2 = env.copy()
                    e2._remove_atom(x, a)
                    e2._add(x, self.ctx.tables.unfold(a.head, a.args, d.branches[0].ctor))
                    return e2, e2.structural_of(x)
        shown = ", ".join(str(a) for a in env.atoms_of(x)) or "nothing"
        raise NoStructuralPermission(rule, f"no structural permission for {x} (have {shown})", loc,
                                     f"{x} @ {{...}}", x)

    def check_read(self, env: PermissionEnv, x: str, f: str, loc=None) -> tuple[PermissionEnv, str]:
        env, atom = self._structural(env, x, "Read", loc)
        for name, ft in atom.fields:
            if name == f:
                return env, env.find(ft.var)
        raise NoSuchField("Read", f"constructor {atom.ctor} has no field {f}", loc)

    def check_write(self, env: PermissionEnv, x: str, f: str, y: str, loc=None) -> PermissionEnv:
        env, atom = self._structural(env, x, "Write", loc)
        if not self.ctx.tables.is_mutable_ctor(atom.ctor):
            raise NotExclusive("Write", f"{atom.ctor} is immutable; cannot write field {f}", loc,
                               f"{x} @ {atom.ctor} {{...}} (exclusive)", x)
        if f not in dict(atom.fields):
            raise NoSuchField("Write", f"constructor {atom.ctor} has no field {f}", loc)
        new = Structural(atom.ctor, tuple((n, Singleton(y) if n == f else ft) for n, ft in atom.fields),
                         atom.adopts)
        env = env.copy()
        env._replace_atom(x, atom, new)
        return env

    def check_write_tag(self, env: PermissionEnv, x: str, ctor: str, loc=None) -> PermissionEnv:
        env, atom = self._structural(env, x, "WriteTag", loc)
        if not self.ctx.tables.is_mutable_ctor(atom.ctor):
            raise NotExclusive("WriteTag", f"{atom.ctor} is immutable; cannot change its tag", loc,
                               f"{x} @ {atom.ctor} {{...}} (exclusive)", x)
        d = self.ctx.tables.owner(ctor)
        if d is None:
            raise TypeCheckError("WriteTag", f"unknown constructor {ctor}", loc)
        b = d.branch(ctor)
        if len(b.fields) != len(atom.fields):
            raise ArityMismatch("WriteTag", f"{atom.ctor} has {len(atom.fields)} field(s) but "
                                f"{ctor} has {len(b.fields)}", loc)
        new = Structural(ctor, tuple((n, ft) for (n, _), (_, ft) in zip(b.fields, atom.fields)),
                         atom.adopts)
        env = env.copy()
        env._remove_atom(x, atom)
        env._add_atom(x, new)
        return env

    def adopts_clause(self, env: PermissionEnv, y: str, rule: str, loc) -> TypeExpr:
        for a in env.atoms_of(y):
            if isinstance(a, Structural) and not is_bottom(a.adopts):
                return a.adopts
            if isinstance(a, TApp) and a.head in self.ctx.tables.defs:
                t = self.ctx.tables.adopts_of(a.head, a.args)
                if not is_bottom(t):
                    return t
        raise NoAdoptsClause(rule, f"{y} has no permission whose type adopts anything", loc,
                             f"{y} @ (_ adopts _)", y)

    def check_give(self, env: PermissionEnv, x: str, y: str, loc=None) -> PermissionEnv:
        u = self.adopts_clause(env, y, "Give", loc)
        if not env.is_exclusive(u):
            raise AdopteeTypeNotExclusive("Give", f"adoptee type {u} is not exclusive", loc)
        if any(env.is_exclusive(a) for a in env.atoms_of(x)):
            env = env.copy()
            env._add_atom(x, Dynamic())
        got = env.subsume(Anchored(x, u), self.ctx.budget)
        if isinstance(got, Failure):
            raise self._fail("Give", got, loc)
        return got

    def check_take(self, env: PermissionEnv, x: str, y: str, loc=None) -> PermissionEnv:
        u = self.adopts_clause(env, y, "Take", loc)
        got = env.subsume(Anchored(x, Dynamic()), self.ctx.budget)
        if isinstance(got, Failure):
            raise self._fail("Take", got, loc)
        return got.add(x, u)

    # -- functions -------------------------------------------------------------

    def check_function(self, env: PermissionEnv, scope: Scope, e: Expr, name: str = "",
                       self_type: Optional[TypeExpr] = None) -> TypeExpr:
        """Check a function under the duplicable part of the ambient
        permission; returns its (duplicable) type."""
        outer = env
        inner = env.copy()
        captured: dict[str, list] = {}
        for rep, atoms in list(inner.atoms.items()):
            keep = [a for a in atoms if inner.is_duplicable(a)]
            drop = [a for a in atoms if not inner.is_duplicable(a)]
            if drop:
                captured[rep] = drop
            inner._set_atoms(rep, keep)
        inner.perms = tuple(p for p in inner.perms if inner.is_duplicable(p))

        binders = []
        body = e
        while isinstance(body, ETypeAbs):
            scope, n = scope.bind(body.binder)
            inner = inner.declare(n, body.kind, _rank(body.binder))
            binders.append((n, body.kind))
            body = body.body
        if not isinstance(body, ELambda):
            raise TypeCheckError("Function", "type abstraction over a non-function", e.loc)
        arg_t = scope.rename(body.arg)
        ret_t = scope.rename(body.ret)
        ftype: TypeExpr = Arrow(arg_t, ret_t)
        for n, k in reversed(binders):
            ftype = Forall(n, k, ftype)
        scope, p = scope.bind(body.param)
        inner = inner.declare(p, TERM, 2).add(p, arg_t)
        self._dump(inner, e.loc[0] if e.loc else 0, f"entry of {name or 'function'}")
        try:
            outcomes = self.synth(inner, scope, body.body, e.loc[0] if e.loc else 0)
            for o in outcomes:
                if o.env.inconsistent:
                    continue
                got = o.env.subsume(Anchored(o.var, ret_t), self.ctx.budget)
                if isinstance(got, Failure):
                    raise self._fail("Sub", got, body.body.loc or e.loc)
        except TypeCheckError as err:
            if err.subject is not None and outer.find(err.subject) in captured:
                rep = outer.find(err.subject)
                lost = ", ".join(f"{rep} @ {a}" for a in captured[rep])
                raise TypeCheckError("Function", f"function body needs non-duplicable captured "
                                     f"permission {lost}", e.loc, lost, rep) from err
            raise
        return ftype


# ---------------------------------------------------------------------------
# programs

@dataclass
class CheckResult:
    env: PermissionEnv
    facts: FactEnv
    types: dict = field(default_factory=dict)
    dumps: list = field(default_factory=list)


def make_context(program: Program, budget: int = DEFAULT_BUDGET, dumps=None) -> TypingContext:
    defs = program.datatypes()
    fenv = infer_datatype_facts(defs, base_env(defs, program.abstracts()))
    return TypingContext(Tables(defs), fenv, budget, dumps)


def check(ctx: TypingContext, env: PermissionEnv, e: Expr, expected: Optional[TypeExpr] = None,
          scope: Optional[Scope] = None) -> list[Outcome]:
    """Check a normalized expression; with an expected type, every outcome
    must provide it for the result."""
    checker = Checker(ctx)
    scope = scope or Scope({n: n for n in env.info}, set(env.info))
    outcomes = checker.synth(env, scope, e)
    if expected is not None:
        for o in outcomes:
            if o.env.inconsistent:
                continue
            got = o.env.subsume(Anchored(o.var, expected), ctx.budget)
            if isinstance(got, Failure):
                raise checker._fail("Sub", got, e.loc)
            o.env = got.add(o.var, expected)
    return outcomes


def check_program(program: Program, budget: int = DEFAULT_BUDGET, dump: bool = False) -> CheckResult:
    """Check a desugared program (prelude included)."""
    dumps: Optional[list] = [] if dump else None
    ctx = make_context(program, budget, dumps)
    env = PermissionEnv(ctx.tables, ctx.facts)
    checker = Checker(ctx)
    global_scope: dict[str, str] = {}
    types: dict[str, TypeExpr] = {}
    for item in program.values():
        ctx.globals = frozenset(global_scope.values()) | {item.name}
        used = set(env.info) | set(global_scope.values())
        scope = Scope(dict(global_scope), used)
        if item.expr is None:
            scope2, n = scope.bind(item.name)
            env = env.declare(n, TERM, 0).add(n, item.sig)
            global_scope[item.name] = n
            types[item.name] = item.sig
            continue
        expr = normalize(item.expr)
        ftype = function_type(expr)
        if ftype is not None:
            scope2, n = scope.bind(item.name)
            inner_scope = scope2 if item.rec else scope
            inner_env = env.declare(n, TERM, 0)
            if item.rec:
                inner_env = inner_env.add(n, inner_scope.rename(ftype))
            t = checker.check_function(inner_env, inner_scope, expr, item.name)
            env = env.declare(n, TERM, 0).add(n, t)
            global_scope[item.name] = n
            types[item.name] = t
            continue
        if item.rec:
            raise TypeCheckError("Let", f"val rec {item.name} must define a function", item.loc)
        outcomes = [o for o in checker.synth(env, scope, expr) if not o.env.inconsistent]
        if len(outcomes) > 1:
            if not isinstance(item.expr, EAnnot):
                raise TypeCheckError("Let", f"top-level value {item.name} has several possible "
                                     "permissions; add a type annotation", item.loc)
            # every branch provides the annotation; keep only what no branch
            # can have consumed
            merged = env.copy()
            for rep, atoms in list(merged.atoms.items()):
                merged._set_atoms(rep, [a for a in atoms if merged.is_duplicable(a)])
            merged.perms = tuple(p for p in merged.perms if merged.is_duplicable(p))
            scope2, n = scope.bind(item.name)
            env = merged.declare(n, TERM, 0).add(n, item.expr.type)
            global_scope[item.name] = n
            continue
        if not outcomes:
            continue
        o = outcomes[0]
        scope2, n = scope.bind(item.name)
        env = o.env.declare(n, TERM, 0).merge_equal(n, o.var)
        global_scope[item.name] = n
    return CheckResult(env, ctx.facts, types, dumps or [])
