"""Big-step interpreter over normalized programs, with adoption and tag
update realized on an explicit heap."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .syntax import (
    DataTypeDef, EAnnot, EApply, EBool, EConstruct, EFail, EGive, EIf, EInt, ELambda,
    ELet, EMatch, EPrim, ERead, ETake, ETuple, ETypeAbs, ETypeApp, EVar, EWrite, EWriteTag,
    Expr, Pattern, PConstruct, Program, PTuple, PVar,
)
from .typecheck import normalize

DEFAULT_FRAMES = 100_000


# ---------------------------------------------------------------------------
# values

@dataclass(frozen=True)
class Loc:
    addr: int

    def __str__(self) -> str:
        return f"#{self.addr}"


@dataclass
class Block:
    tag: str
    fields: list[tuple[str, Any]]
    adopter: Optional[int] = None
    frozen: bool = False

    def get(self, name: str):
        for f, v in self.fields:
            if f == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class Closure:
    param: str
    body: Expr
    env: "Env"
    name: str = ""

    def __str__(self) -> str:
        return f"<fun {self.name}>" if self.name else "<fun>"


@dataclass(frozen=True)
class TupleV:
    items: tuple


@dataclass(frozen=True)
class UnitV:
    def __str__(self) -> str:
        return "()"


@dataclass(frozen=True)
class IntV:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BoolV:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


UNIT_V = UnitV()


class Env:
    """Persistent variable environment; falls back to the globals."""
    __slots__ = ("name", "value", "parent", "globals")

    def __init__(self, name, value, parent: Optional[Env], globals_: dict):
        self.name = name
        self.value = value
        self.parent = parent
        self.globals = globals_

    def bind(self, name: str, value) -> Env:
        return Env(name, value, self, self.globals)

    def lookup(self, name: str):
        e = self
        while e is not None:
            if e.name == name:
                return e.value
            e = e.parent
        if name in self.globals:
            return self.globals[name]
        raise StuckState(f"unbound variable {name}")


# ---------------------------------------------------------------------------
# outcomes

class RuntimeFailure(Exception):
    line: int = 0


class StuckState(RuntimeFailure):
    """No rule applies: signals a checker bug when the program type-checked."""


class AbandonFailure(RuntimeFailure):
    def __init__(self, loc: Loc, expected: Loc, line: int = 0):
        self.loc = loc
        self.expected = expected
        self.line = line
        super().__init__(f"abandon failed at {line}")


class GiveToAdopted(RuntimeFailure):
    def __init__(self, loc: Loc, adopter: int, line: int = 0):
        self.loc = loc
        self.adopter = adopter
        self.line = line
        super().__init__(f"give of {loc} which is already adopted by #{adopter} at {line}")


class WriteToFrozen(RuntimeFailure):
    def __init__(self, loc: Loc, line: int = 0):
        self.loc = loc
        self.line = line
        super().__init__(f"write to immutable block {loc} at {line}")


class ExplicitFail(RuntimeFailure):
    def __init__(self, line: int = 0):
        self.line = line
        super().__init__(f"fail at {line}")


class RecursionLimit(RuntimeFailure):
    pass


@dataclass(frozen=True)
class Event:
    kind: str
    loc: int
    detail: Any = None


# ---------------------------------------------------------------------------
# the machine

@dataclass
class Interpreter:
    defs: list[DataTypeDef]
    max_frames: int = DEFAULT_FRAMES
    heap: dict[int, Block] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    globals: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.fields_of = {b.ctor: [f for f, _ in b.fields] for d in self.defs for b in d.branches}
        self.mutable = {b.ctor: d.mutable for d in self.defs for b in d.branches}
        self.depth = 0

    # -- heap -----------------------------------------------------------------

    def alloc(self, ctor: str, values: list[tuple[str, Any]]) -> Loc:
        addr = len(self.heap)
        self.heap[addr] = Block(ctor, values, None, not self.mutable[ctor])
        self.events.append(Event("alloc", addr, ctor))
        return Loc(addr)

    def block(self, v, line: int) -> Block:
        if not isinstance(v, Loc) or v.addr not in self.heap:
            raise StuckState(f"line {line}: {v} is not a heap block")
        return self.heap[v.addr]

    # -- evaluation -------------------------------------------------------------

    def run_program(self, program: Program):
        """Evaluate top-level definitions in order; returns the last value."""
        result = UNIT_V
        for item in program.values():
            if item.expr is None:
                continue
            v = self.eval(normalize(item.expr), Env(None, None, None, self.globals))
            if isinstance(v, Closure) and not v.name:
                v = Closure(v.param, v.body, v.env, item.name)
            self.globals[item.name] = v
            result = v
        return result

    def call(self, fn, arg):
        if not isinstance(fn, Closure):
            raise StuckState(f"{fn} is not a function")
        return self.eval(fn.body, fn.env.bind(fn.param, arg))

    def eval(self, e: Expr, env: Env):
        self.depth += 1
        if self.depth > self.max_frames:
            self.depth = 0
            raise RecursionLimit(f"more than {self.max_frames} nested calls")
        try:
            return self._eval(e, env)
        finally:
            self.depth -= 1

    def _eval(self, e: Expr, env: Env):
        # tail positions loop instead of recursing
        while True:
            line = e.loc[0] if e.loc else 0
            if isinstance(e, ELet):
                v = self.eval(e.bound, env)
                env = self.bind(e.pattern, v, env, line)
                e = e.body
                continue
            if isinstance(e, EMatch):
                v = env.lookup(e.scrutinee.name)
                for p, body in e.arms:
                    env2 = self.try_bind(p, v, env, line)
                    if env2 is not None:
                        env, e = env2, body
                        break
                else:
                    raise StuckState(f"line {line}: no arm matches {self.show(v)}")
                continue
            if isinstance(e, EIf):
                c = env.lookup(e.cond.name)
                if not isinstance(c, BoolV):
                    raise StuckState(f"line {line}: condition is not a boolean")
                e = e.then if c.value else e.orelse
                continue
            if isinstance(e, EApply):
                fn = env.lookup(e.fn.name)
                arg = env.lookup(e.arg.name)
                if not isinstance(fn, Closure):
                    raise StuckState(f"line {line}: {fn} is not a function")
                env, e = fn.env.bind(fn.param, arg), fn.body
                continue
            if isinstance(e, ETypeAbs):
                e = e.body
                continue
            return self.step(e, env, line)

    def step(self, e: Expr, env: Env, line: int):
        """Non-tail constructs."""
        look = env.lookup
        if isinstance(e, EVar):
            return look(e.name)
        if isinstance(e, EInt):
            return IntV(e.value)
        if isinstance(e, EBool):
            return BoolV(e.value)
        if isinstance(e, ETuple):
            if not e.items:
                return UNIT_V
            return TupleV(tuple(look(i.name) for i in e.items))
        if isinstance(e, EConstruct):
            vals = dict((f, look(v.name)) for f, v in e.fields)
            return self.alloc(e.ctor, [(f, vals[f]) for f in self.fields_of[e.ctor]])
        if isinstance(e, ELambda):
            return Closure(e.param, e.body, env)
        if isinstance(e, ETypeApp):
            return look(e.expr.name)
        if isinstance(e, EAnnot):
            return look(e.expr.name)
        if isinstance(e, ERead):
            loc = look(e.target.name)
            b = self.block(loc, line)
            try:
                v = b.get(e.field)
            except KeyError:
                raise StuckState(f"line {line}: {b.tag} has no field {e.field}") from None
            self.events.append(Event("read", loc.addr, e.field))
            return v
        if isinstance(e, EWrite):
            loc = look(e.target.name)
            b = self.block(loc, line)
            if b.frozen:
                raise WriteToFrozen(loc, line)
            names = [f for f, _ in b.fields]
            if e.field not in names:
                raise StuckState(f"line {line}: {b.tag} has no field {e.field}")
            b.fields[names.index(e.field)] = (e.field, look(e.value.name))
            self.events.append(Event("write", loc.addr, e.field))
            return UNIT_V
        if isinstance(e, EWriteTag):
            loc = look(e.target.name)
            b = self.block(loc, line)
            if b.frozen:
                raise WriteToFrozen(loc, line)
            names = self.fields_of.get(e.ctor)
            if names is None or len(names) != len(b.fields):
                raise StuckState(f"line {line}: cannot retag {b.tag} as {e.ctor}")
            b.fields = [(n, v) for n, (_, v) in zip(names, b.fields)]
            b.tag = e.ctor
            b.frozen = not self.mutable[e.ctor]
            self.events.append(Event("retag", loc.addr, e.ctor))
            return UNIT_V
        if isinstance(e, EGive):
            loc, owner = look(e.adoptee.name), look(e.adopter.name)
            b = self.block(loc, line)
            self.block(owner, line)
            if b.adopter is not None:
                raise GiveToAdopted(loc, b.adopter, line)
            b.adopter = owner.addr
            self.events.append(Event("give", loc.addr, owner.addr))
            return UNIT_V
        if isinstance(e, ETake):
            loc, owner = look(e.adoptee.name), look(e.adopter.name)
            b = self.block(loc, line)
            self.block(owner, line)
            if b.adopter != owner.addr:
                raise AbandonFailure(loc, owner, line)
            b.adopter = None
            self.events.append(Event("take", loc.addr, owner.addr))
            return UNIT_V
        if isinstance(e, EFail):
            raise ExplicitFail(line)
        if isinstance(e, EPrim):
            return prim(e.op, [look(a.name) for a in e.args], line)
        raise StuckState(f"line {line}: cannot evaluate {type(e).__name__}")

    # -- patterns ---------------------------------------------------------------

    def try_bind(self, p: Pattern, v, env: Env, line: int) -> Optional[Env]:
        if isinstance(p, PVar):
            return env if p.name == "_" else env.bind(p.name, v)
        if isinstance(p, PTuple):
            items = () if isinstance(v, UnitV) else v.items if isinstance(v, TupleV) else None
            if items is None or len(items) != len(p.items):
                return None
            for q, w in zip(p.items, items):
                env = self.try_bind(q, w, env, line)
                if env is None:
                    return None
            return env
        if isinstance(p, PConstruct):
            b = self.block(v, line)
            if b.tag != p.ctor:
                return None
            for f, q in p.fields:
                try:
                    w = b.get(f)
                except KeyError:
                    raise StuckState(f"line {line}: {b.tag} has no field {f}") from None
                env = self.try_bind(q, w, env, line)
                if env is None:
                    return None
            return env
        raise StuckState(f"bad pattern {p!r}")

    def bind(self, p: Pattern, v, env: Env, line: int) -> Env:
        env2 = self.try_bind(p, v, env, line)
        if env2 is None:
            raise StuckState(f"line {line}: pattern {p} does not match {self.show(v)}")
        return env2

    # -- display ----------------------------------------------------------------

    def show(self, v, seen: frozenset = frozenset()) -> str:
        if isinstance(v, Loc):
            if v.addr in seen:
                return str(v)
            b = self.heap[v.addr]
            if not b.fields:
                return b.tag
            inner = "; ".join(f"{f} = {self.show(w, seen | {v.addr})}" for f, w in b.fields)
            return f"{b.tag} {{ {inner} }}"
        if isinstance(v, TupleV):
            return "(" + ", ".join(self.show(w, seen) for w in v.items) + ")"
        return str(v)

    def to_python(self, v, seen: frozenset = frozenset()):
        """Structural view of a value: blocks become (tag, {field: value})."""
        if isinstance(v, Loc):
            if v.addr in seen:
                return ("<cycle>", v.addr)
            b = self.heap[v.addr]
            return (b.tag, {f: self.to_python(w, seen | {v.addr}) for f, w in b.fields})
        if isinstance(v, (IntV, BoolV)):
            return v.value
        if isinstance(v, UnitV):
            return ()
        if isinstance(v, TupleV):
            return tuple(self.to_python(w, seen) for w in v.items)
        return v


def prim(op: str, args: list, line: int = 0):
    if op in ("==", "!="):
        a, b = args
        same = a == b if type(a) is type(b) else False
        return BoolV(same if op == "==" else not same)
    if not all(isinstance(a, IntV) for a in args):
        raise StuckState(f"line {line}: {op} expects integers")
    x, y = (a.value for a in args)
    table = {
        "+": lambda: IntV(x + y), "-": lambda: IntV(x - y), "*": lambda: IntV(x * y),
        "<": lambda: BoolV(x < y), "<=": lambda: BoolV(x <= y),
        ">": lambda: BoolV(x > y), ">=": lambda: BoolV(x >= y),
    }
    if op not in table:
        raise StuckState(f"line {line}: unknown primitive {op}")
    return table[op]()


def evaluate(program: Program, max_frames: int = DEFAULT_FRAMES) -> tuple[Interpreter, Any]:
    """Run a desugared program; returns the machine and the final value."""
    m = Interpreter(program.datatypes(), max_frames)
    return m, m.run_program(program)


def trace(program: Program, max_frames: int = DEFAULT_FRAMES) -> list[Event]:
    m = Interpreter(program.datatypes(), max_frames)
    try:
        m.run_program(program)
    except RuntimeFailure as err:
        err.events = list(m.events)
        raise
    return list(m.events)
