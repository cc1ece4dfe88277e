"""Lexer and recursive-descent parser for the surface language."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .syntax import (
    PERM, TERM, TYPE, UNIT, AbstractDef, Anchored, Bar, Branch, Consumes, DataTypeDef,
    Dynamic, EAnnot, EApply, EArrow, EBool, EConstruct, EFail, EFun, EGive, EIf, EInt,
    ELet, EMatch, Empty, EPrim, ERead, ETake, ETaking, ETuple, ETypeApp, EVar, EWrite,
    EWriteTag, Exists, Expr, FactDecl, Forall, Kind, Loc, Mode, ModeAnd, NameIntro,
    Pattern, PConstruct, Program, PTuple, PVar, Singleton, Star, Structural, TApp,
    TTuple, TVar, TypeExpr, Unknown, ValDef,
)

BUILTIN_TYPES = frozenset({"int", "bool", "ref", "option"})

KEYWORDS = frozenset("""
data mutable abstract fact val rec let in match with end fun if then else begin
tag of give to take from taking fail true false consumes dynamic unknown empty adopts
duplicable exclusive affine bottom
""".split())

MODES = {"duplicable": Mode.DUPLICABLE, "exclusive": Mode.EXCLUSIVE,
         "affine": Mode.AFFINE, "bottom": Mode.BOTTOM}
KINDS = {"type": TYPE, "term": TERM, "perm": PERM}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|=>|<-|==|!=|<=|>=|[()\[\]{},;:=|@.*+\-<>])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: Iterable[str] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        extra = f" (expected {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{extra}")


@dataclass(frozen=True)
class Token:
    kind: str  # 'int', 'ident', 'ctor', 'kw', 'sym', 'eof'
    text: str
    line: int
    col: int

    @property
    def loc(self) -> Loc:
        return (self.line, self.col)


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1

    def advance(chunk: str) -> None:
        nonlocal line, col
        for ch in chunk:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1

    while i < len(text):
        if text.startswith("(*", i):
            depth, j = 0, i
            while j < len(text):
                if text.startswith("(*", j):
                    depth, j = depth + 1, j + 2
                elif text.startswith("*)", j):
                    depth, j = depth - 1, j + 2
                    if depth == 0:
                        break
                else:
                    j += 1
            if depth:
                raise ParseError("unterminated comment", line, col, {"*)"})
            advance(text[i:j])
            i = j
            continue
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        chunk = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            if kind == "ident":
                if chunk in KEYWORDS:
                    kind = "kw"
                elif chunk[0].isupper():
                    kind = "ctor"
            toks.append(Token(kind, chunk, line, col))
        advance(chunk)
        i = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


ITEM_START = {"data", "abstract", "fact", "val"}


class Parser:
    def __init__(self, text: str, known_types: Iterable[str] = BUILTIN_TYPES):
        self.toks = tokenize(text)
        self.pos = 0
        self.types = set(known_types)
        for a, b, c in zip(self.toks, self.toks[1:], self.toks[2:]):
            if a.text in ("data", "abstract"):
                name = c if b.text == "mutable" else b
                if name.kind == "ident":
                    self.types.add(name.text)

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text in texts

    def error(self, expected: Iterable[str], what: str = "") -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(what or f"unexpected {found}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error({text})
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error({"identifier"})
        t = self.tok
        self.pos += 1
        return t.text

    def ctor(self) -> str:
        if self.tok.kind != "ctor":
            raise self.error({"constructor"})
        t = self.tok
        self.pos += 1
        return t.text

    def sep_list(self, item: Callable, sep: str, close: str) -> list:
        out = []
        if self.at(close):
            return out
        out.append(item())
        while self.accept(sep):
            if self.at(close):
                break
            out.append(item())
        return out

    # -- programs ----------------------------------------------------------

    def program(self) -> Program:
        items = []
        while self.tok.kind != "eof":
            items.append(self.item())
        return Program(tuple(items))

    def item(self):
        t = self.tok
        if self.accept("data"):
            return self.data_def(t.loc)
        if self.accept("abstract"):
            name = self.ident()
            params = self.params()
            result = self.kind() if self.accept(":") else TYPE
            fact = None
            if self.at("fact") and self._fact_names(name):
                self.pos += 1
                fact = self.fact_body(self.tok.loc)
            return AbstractDef(name, params, result, fact, t.loc)
        if self.accept("fact"):
            return self.fact_body(t.loc)
        if self.accept("val"):
            return self.val_def(t.loc)
        raise self.error(ITEM_START)

    def _fact_names(self, name: str) -> bool:
        """Does the `fact` keyword at point talk about `name`?"""
        j = self.pos + 1
        while j < len(self.toks) and self.toks[j].text not in ITEM_START and self.toks[j].kind != "eof":
            if self.toks[j].text == name:
                return True
            j += 1
        return False

    def kind(self) -> Kind:
        t = self.tok
        if t.kind == "ident" and t.text in KINDS:
            self.pos += 1
            return KINDS[t.text]
        raise self.error(set(KINDS))

    def params(self) -> tuple[tuple[str, Kind], ...]:
        out = []
        while True:
            if self.tok.kind == "ident":
                out.append((self.ident(), TYPE))
            elif self.at("(") and self.peek().kind == "ident" and self.peek(2).text == ":":
                self.pos += 1
                name = self.ident()
                self.expect(":")
                out.append((name, self.kind()))
                self.expect(")")
            else:
                return tuple(out)

    def data_def(self, loc: Loc) -> DataTypeDef:
        mutable = self.accept("mutable")
        name = self.ident()
        params = self.params()
        self.expect("=")
        self.accept("|")
        branches = [self.branch()]
        while self.accept("|"):
            branches.append(self.branch())
        adopts = None
        if self.accept("adopts"):
            adopts = self.type_app()
        d = DataTypeDef(name, mutable, params, tuple(branches), loc=loc)
        if adopts is not None:
            d = DataTypeDef(name, mutable, params, tuple(branches), adopts, loc)
        return d

    def branch(self) -> Branch:
        ctor = self.ctor()
        fields: list[tuple[str, TypeExpr]] = []
        if self.accept("{"):
            fields = self.field_decls()
            self.expect("}")
        return Branch(ctor, tuple(fields))

    def field_decls(self) -> list[tuple[str, TypeExpr]]:
        fields: list[tuple[str, TypeExpr]] = []
        while not self.at("}"):
            names = [self.ident()]
            if self.accept("="):
                fields.append((names[0], Singleton(self.ident())))
            else:
                while self.accept(","):
                    names.append(self.ident())
                self.expect(":")
                t = self.type_()
                fields.extend((n, t) for n in names)
            if not self.accept(";"):
                break
        seen = set()
        for n, _ in fields:
            if n in seen:
                raise self.error((), f"duplicate field {n}")
            seen.add(n)
        return fields

    def fact_body(self, loc: Loc) -> FactDecl:
        hyps: list[tuple[Mode, str]] = []
        while True:
            mode = self.mode()
            words = []
            while self.tok.kind == "ident":
                words.append(self.ident())
            if self.at("=>", ","):
                if len(words) != 1:
                    raise self.error({"type parameter"})
                hyps.append((mode, words[0]))
                if self.accept("=>"):
                    mode = self.mode()
                    words = []
                    while self.tok.kind == "ident":
                        words.append(self.ident())
                    break
                self.pos += 1
                continue
            break
        if not words:
            raise self.error({"type name"})
        return FactDecl(words[0], tuple(words[1:]), tuple(hyps), mode, loc)

    def mode(self) -> Mode:
        t = self.tok
        if t.kind == "kw" and t.text in MODES:
            self.pos += 1
            return MODES[t.text]
        raise self.error(set(MODES))

    def val_def(self, loc: Loc) -> ValDef:
        rec = self.accept("rec")
        name = self.ident()
        if self.at("[", "(") or self.at(*MODES):
            fun = self.function(loc)
            return ValDef(name, fun, rec, loc)
        sig = None
        if self.accept(":"):
            sig = self.type_()
        if not self.accept("="):
            if sig is None:
                raise self.error({"=", ":"})
            return ValDef(name, None, rec, loc, sig)
        body = self.expr()
        if sig is not None:
            body = EAnnot(body, sig, loc)
        return ValDef(name, body, rec, loc)

    def tparams(self) -> tuple[tuple[str, Kind], ...]:
        out = []
        if self.accept("["):
            for n, k in self.sep_list(self.binder, ",", "]"):
                out.append((n, k))
            self.expect("]")
        return tuple(out)

    def binder(self) -> tuple[str, Kind]:
        name = self.ident()
        kind = self.kind() if self.accept(":") else TYPE
        return name, kind

    def function(self, loc: Loc) -> EFun:
        tparams = self.tparams()
        constraints = []
        while self.at(*MODES):
            m = self.mode()
            a = self.ident()
            self.expect("=>")
            constraints.append((m, a))
        if not self.at("("):
            raise self.error({"("})
        arg = self.type_atom()
        for m, a in reversed(constraints):
            arg = ModeAnd(m, a, arg)
        self.expect(":")
        ret = self.type_nameish()
        self.expect("=")
        body = self.expr()
        return EFun(tparams, arg, ret, body, loc)

    # -- types -------------------------------------------------------------

    def type_(self) -> TypeExpr:
        if self.at("["):
            binders = self.tparams()
            body = self.type_()
            for n, k in reversed(binders):
                body = Forall(n, k, body)
            return body
        if self.at("{"):
            self.pos += 1
            binders = self.sep_list(self.binder, ",", "}")
            self.expect("}")
            body = self.type_()
            for n, k in reversed(binders):
                body = Exists(n, k, body)
            return body
        if self.at(*MODES) and self.peek().kind == "ident" and self.peek(2).text == "=>":
            m = self.mode()
            a = self.ident()
            self.expect("=>")
            body = self.type_()
            if isinstance(body, EArrow):
                return EArrow(ModeAnd(m, a, body.dom), body.cod)
            return ModeAnd(m, a, body)
        dom = self.type_nameish()
        if self.accept("->"):
            return EArrow(dom, self.type_())
        return dom

    def type_nameish(self) -> TypeExpr:
        if self.at("[", "{"):
            return self.type_()
        if self.accept("consumes"):
            return Consumes(self.type_nameish())
        if self.tok.kind == "ident" and self.peek().text == ":":
            name = self.ident()
            self.expect(":")
            return NameIntro(name, self.type_())
        return self.type_star()

    def type_star(self) -> TypeExpr:
        left = self.type_anchored()
        if self.accept("*"):
            return Star(left, self.type_star())
        return left

    def type_anchored(self) -> TypeExpr:
        if self.tok.kind == "ident" and self.peek().text == "@":
            name = self.ident()
            self.expect("@")
            return Anchored(name, self.type_app())
        return self.type_app()

    def _starts_arg(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "ctor") or (t.kind == "sym" and t.text == "(") or \
            (t.kind == "kw" and t.text in ("dynamic", "unknown", "empty"))

    def _arg_follows(self) -> bool:
        save = self.pos
        self.pos += 1
        try:
            return self._starts_arg() and self.tok.text not in ("adopts",)
        finally:
            self.pos = save

    def type_app(self) -> TypeExpr:
        t = self.tok
        if t.kind == "ident" and (t.text in self.types or self._arg_follows()):
            self.pos += 1
            args = []
            while self._starts_arg():
                args.append(self.type_atom())
            return TApp(t.text, tuple(args))
        atom = self.type_atom()
        if isinstance(atom, Structural) and self.accept("adopts"):
            atom = Structural(atom.ctor, atom.fields, self.type_app())
        return atom

    def type_atom(self) -> TypeExpr:
        t = self.tok
        if t.kind == "ident":
            self.pos += 1
            if t.text in self.types:
                return TApp(t.text, ())
            return TVar(t.text)
        if t.kind == "ctor":
            self.pos += 1
            fields: list = []
            if self.accept("{"):
                fields = self.field_decls()
                self.expect("}")
            return Structural(t.text, tuple(fields))
        if self.accept("="):
            return Singleton(self.ident())
        if self.accept("dynamic"):
            return Dynamic()
        if self.accept("unknown"):
            return Unknown()
        if self.accept("empty"):
            return Empty()
        if self.accept("("):
            return self.type_paren()
        raise self.error({"type"})

    def type_paren(self) -> TypeExpr:
        if self.accept(")"):
            return UNIT
        if self.accept("|"):
            p = self.type_()
            self.expect(")")
            return Bar(UNIT, p)
        if self.at(*MODES) and self.peek().kind == "ident" and self.peek(2).text == "|":
            m = self.mode()
            a = self.ident()
            self.expect("|")
            body = self.type_()
            self.expect(")")
            return ModeAnd(m, a, body)
        first = self.type_()
        if self.accept("|"):
            p = self.type_()
            self.expect(")")
            return Bar(first, p)
        if self.accept(","):
            items = [first] + self.sep_list(self.type_, ",", ")")
            self.expect(")")
            return TTuple(tuple(items))
        self.expect(")")
        return first

    # -- expressions -------------------------------------------------------

    def expr(self) -> Expr:
        t = self.tok
        if self.accept("let"):
            pat = self.pattern()
            ty = self.type_() if self.accept(":") else None
            self.expect("=")
            bound = self.expr()
            if ty is not None:
                bound = EAnnot(bound, ty, bound.loc)
            self.expect("in")
            return ELet(pat, bound, self.expr(), t.loc)
        if self.accept("fun"):
            return self.function(t.loc)
        first = self.assign()
        if self.accept(";"):
            if self.at("end", "|", ")", "in") or self.tok.kind == "eof" or self.at(*ITEM_START):
                return first
            return ELet(PVar("_"), first, self.expr(), t.loc)
        return first

    def assign(self) -> Expr:
        t = self.tok
        if self.accept("tag"):
            self.expect("of")
            target = self.postfix()
            self.expect("<-")
            return EWriteTag(target, self.ctor(), t.loc)
        if self.accept("give"):
            x = self.postfix()
            self.expect("to")
            return EGive(x, self.postfix(), t.loc)
        if self.accept("take"):
            x = self.postfix()
            self.expect("from")
            return ETake(x, self.postfix(), t.loc)
        if self.accept("taking"):
            x = self.postfix()
            self.expect("from")
            y = self.postfix()
            self.expect("begin")
            body = self.expr()
            self.expect("end")
            return ETaking(x, y, body, t.loc)
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.assign()
            self.expect("else")
            return EIf(cond, then, self.assign(), t.loc)
        if self.accept("fail"):
            return EFail(t.loc)
        lhs = self.compare()
        if self.at("<-"):
            if not isinstance(lhs, ERead):
                raise self.error((), "left-hand side of <- must be a field")
            self.pos += 1
            return EWrite(lhs.target, lhs.field, self.assign(), t.loc)
        return lhs

    def compare(self) -> Expr:
        left = self.arith()
        if self.at("==", "!=", "<", "<=", ">", ">="):
            op = self.tok
            self.pos += 1
            return EPrim(op.text, (left, self.arith()), op.loc)
        return left

    def arith(self) -> Expr:
        left = self.application()
        while self.at("+", "-", "*"):
            op = self.tok
            self.pos += 1
            left = EPrim(op.text, (left, self.application()), op.loc)
        return left

    def _starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "ctor", "int"):
            return True
        return (t.kind == "kw" and t.text in ("true", "false", "begin", "match")) or \
            (t.kind == "sym" and t.text in ("(", "["))

    def application(self) -> Expr:
        fn = self.postfix()
        while self._starts_atom():
            t = self.tok
            if self.accept("["):
                for ty in self.sep_list(self.type_, ",", "]"):
                    fn = ETypeApp(fn, ty, None, t.loc)
                self.expect("]")
            else:
                fn = EApply(fn, self.postfix(), t.loc)
        return fn

    def postfix(self) -> Expr:
        e = self.atom()
        while self.at(".") and self.peek().kind == "ident":
            t = self.tok
            self.pos += 1
            e = ERead(e, self.ident(), t.loc)
        return e

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "ident":
            self.pos += 1
            return EVar(t.text, t.loc)
        if t.kind == "int":
            self.pos += 1
            return EInt(int(t.text), t.loc)
        if self.accept("true"):
            return EBool(True, t.loc)
        if self.accept("false"):
            return EBool(False, t.loc)
        if t.kind == "ctor":
            self.pos += 1
            fields = []
            if self.accept("{"):
                fields = self.sep_list(self.field_init, ";", "}")
                self.expect("}")
            return EConstruct(t.text, tuple(fields), None, t.loc)
        if self.accept("begin"):
            e = self.expr()
            self.expect("end")
            return e
        if self.accept("match"):
            scrut = self.expr()
            self.expect("with")
            arms = []
            self.accept("|")
            while True:
                pat = self.pattern()
                self.expect("->")
                arms.append((pat, self.expr()))
                if not self.accept("|"):
                    break
            self.expect("end")
            return EMatch(scrut, tuple(arms), t.loc)
        if self.accept("("):
            if self.accept(")"):
                return ETuple((), t.loc)
            first = self.expr()
            if self.accept(":"):
                ty = self.type_()
                self.expect(")")
                return EAnnot(first, ty, t.loc)
            if self.accept(","):
                items = [first] + self.sep_list(self.expr, ",", ")")
                self.expect(")")
                return ETuple(tuple(items), t.loc)
            self.expect(")")
            return first
        raise self.error({"expression"})

    def field_init(self) -> tuple[str, Expr]:
        name = self.ident()
        self.expect("=")
        return name, self.assign()

    def pattern(self) -> Pattern:
        t = self.tok
        if t.kind == "ident":
            self.pos += 1
            return PVar(t.text)
        if t.kind == "ctor":
            self.pos += 1
            fields = []
            if self.accept("{"):
                fields = self.sep_list(self.field_pattern, ";", "}")
                self.expect("}")
            return PConstruct(t.text, tuple(fields))
        if self.accept("("):
            items = self.sep_list(self.pattern, ",", ")")
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return PTuple(tuple(items))
        raise self.error({"pattern"})

    def field_pattern(self) -> tuple[str, Pattern]:
        name = self.ident()
        if self.accept("="):
            return name, self.pattern()
        return name, PVar(name)

    def finish(self) -> None:
        if self.tok.kind != "eof":
            raise self.error({"end of input"})


def parse_program(text: str, known_types: Iterable[str] = BUILTIN_TYPES) -> Program:
    p = Parser(text, known_types)
    return p.program()


def parse_type(text: str, known_types: Iterable[str] = BUILTIN_TYPES) -> TypeExpr:
    p = Parser(text, known_types)
    t = p.type_()
    p.finish()
    return t


def parse_expr(text: str, known_types: Iterable[str] = BUILTIN_TYPES) -> Expr:
    p = Parser(text, known_types)
    e = p.expr()
    p.finish()
    return e
