"""Surface syntax: lexer, recursive-descent parser, declaration files, printer.

Grammar summary::

    term  ::= Pi (x:A)... . B | Sig (x:A)... . B | fun (x:A)... . b
            | Pi* [x,y,z] {ann}? : As . Bs | Sig* [x,y,z] {ann}? : As . Bs
            | arr
    arr   ::= rel ( -> term )?
    rel   ::= app ( ~[e] app )?
    app   ::= fst atom | snd atom | Eq atom atom | eq* {ann}? atom atom
            | Const [x. B] atom | ~[e] atom* | atom atom*
    atom  ::= * | *N | *^* | *N^* | Unit | tt | Unit^* | ident | (term) | (term , term)
    ann   ::= { A ; A1 ; B ; B1 }

Files hold ``def n : T := t``, ``assume n : T``, ``#checkstar n`` and
``#normalize n``.  Comments run from ``--`` to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .syntax import (
    TT,
    Ann,
    App,
    Const,
    EqStar,
    Lam,
    Pair,
    Pi,
    PiStar,
    Proj1,
    Proj2,
    Rel,
    Sigma,
    SigmaStar,
    Sim,
    Star,
    StarN,
    StarStar,
    Term,
    TypeEq,
    Unit,
    UnitStar,
    Var,
    VarName,
    fresh,
    free_vars,
    name,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.message, self.line, self.col, self.expected = message, line, col, expected
        where = f"{line}:{col}: {message}"
        if expected:
            where += f" (expected one of: {', '.join(expected)})"
        super().__init__(where)


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|--[^\n]*)
  | (?P<directive>\#checkstar|\#normalize)
  | (?P<starlvl>\*-?[0-9]+(\^\*)?)
  | (?P<starstar>\*\^\*)
  | (?P<kwstar>(?:Pi|Sig|eq)\*)
  | (?P<ident>[a-zA-Z][a-zA-Z0-9_]*(?:\#[0-9]+)?(?:'|\^\*)*)
  | (?P<sym>->|:=|~\[|[()\[\]{}.,:;*])
    """,
    re.VERBOSE,
)

KEYWORDS = {"Pi", "Sig", "fun", "Eq", "fst", "snd", "Unit", "tt", "Unit^*", "Const", "def", "assume"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class Def:
    name: str
    type: Term
    body: Term
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assume:
    name: str
    type: Term
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CheckStar:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Normalize:
    name: str
    line: int = field(default=0, compare=False)


Decl = Def | Assume | CheckStar | Normalize


@dataclass(frozen=True)
class SourceFile:
    declarations: tuple[Decl, ...]
    errors: tuple[ParseError, ...] = ()


# ---------------------------------------------------------------------------
# parser

_DECL_START = {"def", "assume", "#checkstar", "#normalize"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, *expected: str) -> ParseError:
        t = self.tok
        return ParseError(f"{msg}, found {t.text or 'end of input'!r}", t.line, t.col, expected)

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind != "eof" and t.text in texts and t.kind in ("sym", "kw", "kwstar", "starstar", "directive")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail(f"expected {text!r}", text)
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> VarName:
        t = self.tok
        if t.kind != "ident":
            raise self.fail("expected identifier", "identifier")
        self.i += 1
        return name(t.text)

    # terms ---------------------------------------------------------------

    def term(self) -> Term:
        t = self.tok
        if t.kind == "kw" and t.text in ("Pi", "Sig", "fun"):
            self.i += 1
            groups = self.binder_groups()
            self.expect(".")
            body = self.term()
            ctor = {"Pi": Pi, "Sig": Sigma, "fun": Lam}[t.text]
            for x, a in reversed(groups):
                body = ctor(x, a, body)
            return body
        if t.kind == "kwstar" and t.text in ("Pi*", "Sig*"):
            self.i += 1
            self.expect("[")
            x = self.ident()
            self.expect(",")
            x1 = self.ident()
            self.expect(",")
            xs = self.ident()
            self.expect("]")
            ann = self.annotation()
            self.expect(":")
            dom = self.term_until_dot()
            self.expect(".")
            body = self.term()
            return (PiStar if t.text == "Pi*" else SigmaStar)(x, x1, xs, dom, body, ann)
        lhs = self.rel()
        if self.at("->"):
            self.i += 1
            rhs = self.term()
            return Pi(fresh(VarName("x"), free_vars(rhs)), lhs, rhs)
        return lhs

    def term_until_dot(self) -> Term:
        # the domain of a congruence binder is an arrow-level term
        return self.arr_no_binder()

    def arr_no_binder(self) -> Term:
        lhs = self.rel()
        if self.at("->"):
            self.i += 1
            rhs = self.arr_no_binder()
            return Pi(fresh(VarName("x"), free_vars(rhs)), lhs, rhs)
        return lhs

    def binder_groups(self) -> list[tuple[VarName, Term]]:
        groups: list[tuple[VarName, Term]] = []
        if not self.at("("):
            raise self.fail("expected binder", "(")
        while self.at("("):
            self.i += 1
            names = [self.ident()]
            while self.tok.kind == "ident":
                names.append(self.ident())
            self.expect(":")
            a = self.term()
            self.expect(")")
            groups.extend((x, a) for x in names)
        return groups

    def annotation(self) -> Ann | None:
        if not self.at("{"):
            return None
        self.i += 1
        parts = [self.term()]
        for _ in range(3):
            self.expect(";")
            parts.append(self.term())
        self.expect("}")
        return Ann(*parts)

    def rel(self) -> Term:
        lhs = self.app()
        if self.at("~["):
            self.i += 1
            e = self.term()
            self.expect("]")
            rhs = self.app()
            return Rel(e, lhs, rhs)
        return lhs

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "starlvl", "starstar"):
            return True
        if t.kind == "kw" and t.text in ("Unit", "tt", "Unit^*"):
            return True
        return t.kind == "sym" and t.text in ("(", "*")

    def app(self) -> Term:
        t = self.tok
        if t.kind == "kw" and t.text in ("fst", "snd"):
            self.i += 1
            head: Term = (Proj1 if t.text == "fst" else Proj2)(self.atom())
        elif t.kind == "kw" and t.text == "Eq":
            self.i += 1
            a = self.atom()
            head = TypeEq(a, self.atom())
        elif t.kind == "kwstar" and t.text == "eq*":
            self.i += 1
            ann = self.annotation()
            a = self.atom()
            head = EqStar(a, self.atom(), ann)
        elif t.kind == "kw" and t.text == "Const":
            self.i += 1
            self.expect("[")
            x = self.ident()
            self.expect(".")
            fam = self.term()
            self.expect("]")
            head = Const(x, fam, self.atom())
        elif self.at("~["):
            self.i += 1
            e = self.term()
            self.expect("]")
            head = Sim(e)
        else:
            head = self.atom()
        while self.starts_atom():
            head = App(head, self.atom())
        return head

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return Var(name(t.text))
        if t.kind == "starstar":
            self.i += 1
            return StarStar()
        if t.kind == "starlvl":
            self.i += 1
            body = t.text[1:]
            if body.endswith("^*"):
                return StarStar(int(body[:-2]))
            return StarN(int(body))
        if t.kind == "kw" and t.text in ("Unit", "tt", "Unit^*"):
            self.i += 1
            return {"Unit": Unit, "tt": TT, "Unit^*": UnitStar}[t.text]()
        if self.at("*"):
            self.i += 1
            return Star()
        if self.at("("):
            self.i += 1
            a = self.term()
            if self.at(","):
                self.i += 1
                b = self.term()
                self.expect(")")
                return Pair(a, b)
            self.expect(")")
            return a
        raise self.fail("expected a term", "identifier", "*", "(", "Unit", "tt")

    # files ---------------------------------------------------------------

    def decl_name(self) -> str:
        t = self.tok
        if t.kind != "ident" or name(t.text).decorations:
            raise self.fail("expected declaration name", "identifier")
        self.i += 1
        return t.text

    def decl(self) -> Decl:
        t = self.tok
        if t.kind == "kw" and t.text == "def":
            self.i += 1
            n = self.decl_name()
            if not self.at(":"):
                raise self.fail("missing type annotation", ":")
            self.i += 1
            ty = self.term()
            self.expect(":=")
            return Def(n, ty, self.term(), t.line)
        if t.kind == "kw" and t.text == "assume":
            self.i += 1
            n = self.decl_name()
            self.expect(":")
            return Assume(n, self.term(), t.line)
        if t.kind == "directive":
            self.i += 1
            n = self.decl_name()
            return (CheckStar if t.text == "#checkstar" else Normalize)(n, t.line)
        raise self.fail("expected a declaration", "def", "assume", "#checkstar", "#normalize")

    def skip_to_next_decl(self) -> None:
        self.i += 1
        while self.tok.kind != "eof" and self.tok.text not in _DECL_START:
            self.i += 1


def parse_term(text: str) -> Term:
    p = _Parser(tokenize(text))
    t = p.term()
    if p.tok.kind != "eof":
        raise p.fail("unexpected trailing input", "end of input")
    return t


def parse_file(text: str, strict: bool = True) -> SourceFile:
    """Parse a declaration file.

    Errors are recovered per declaration; with ``strict`` the first one is
    raised, otherwise all are collected on the result.
    """
    p = _Parser(tokenize(text))
    decls: list[Decl] = []
    errors: list[ParseError] = []
    seen: set[str] = set()
    while p.tok.kind != "eof":
        start = p.tok
        try:
            d = p.decl()
            if p.tok.kind != "eof" and p.tok.text not in _DECL_START:
                raise p.fail("unexpected input after declaration", "def", "assume", "#checkstar", "#normalize")
        except ParseError as err:
            errors.append(err)
            p.skip_to_next_decl()
            continue
        if isinstance(d, (Def, Assume)):
            if d.name in seen:
                errors.append(ParseError(f"duplicate name {d.name!r}", start.line, start.col))
                continue
            seen.add(d.name)
        elif d.name not in seen:
            errors.append(ParseError(f"directive refers to undeclared name {d.name!r}", start.line, start.col))
            continue
        decls.append(d)
    if strict and errors:
        raise errors[0]
    return SourceFile(tuple(decls), tuple(errors))


# ---------------------------------------------------------------------------
# printer

_BIND, _ARR, _REL, _APP, _ATOM = range(5)


def print_term(t: Term, annotations: bool = False) -> str:
    """Render ``t`` in surface syntax with minimal parentheses."""
    return _Printer(annotations).go(t, _BIND)


class _Printer:
    def __init__(self, annotations: bool):
        self.annotations = annotations

    def go(self, t: Term, prec: int) -> str:
        s, p = self.render(t)
        return f"({s})" if p < prec else s

    def ann(self, a: Ann | None) -> str:
        if a is None or not self.annotations:
            return ""
        parts = "; ".join(self.go(x, _BIND) for x in (a.dom, a.dom1, a.cod, a.cod1))
        return f" {{{parts}}}"

    def render(self, t: Term) -> tuple[str, int]:
        match t:
            case Star():
                return "*", _ATOM
            case StarN(n):
                return f"*{n}", _ATOM
            case StarStar(None):
                return "*^*", _ATOM
            case StarStar(n):
                return f"*{n}^*", _ATOM
            case Unit():
                return "Unit", _ATOM
            case TT():
                return "tt", _ATOM
            case UnitStar():
                return "Unit^*", _ATOM
            case Var(x):
                return str(x), _ATOM
            case Pi(x, a, b) if x not in free_vars(b):
                return f"{self.go(a, _REL)} -> {self.go(b, _ARR)}", _ARR
            case Pi(x, a, b) | Sigma(x, a, b) | Lam(x, a, b):
                kw = {Pi: "Pi", Sigma: "Sig", Lam: "fun"}[type(t)]
                groups = [f"({x} : {self.go(a, _BIND)})"]
                while type(b) is type(t) and not (isinstance(b, Pi) and b.name not in free_vars(b.body)):
                    groups.append(f"({b.name} : {self.go(b.dom, _BIND)})")
                    b = b.body
                return f"{kw} {' '.join(groups)}. {self.go(b, _BIND)}", _BIND
            case PiStar(x, x1, xs, a, b, ann) | SigmaStar(x, x1, xs, a, b, ann):
                kw = "Pi*" if isinstance(t, PiStar) else "Sig*"
                return f"{kw} [{x}, {x1}, {xs}]{self.ann(ann)} : {self.go(a, _ARR)} . {self.go(b, _BIND)}", _BIND
            case Rel(e, a, b):
                return f"{self.go(a, _APP)} ~[{self.go(e, _BIND)}] {self.go(b, _APP)}", _REL
            case TypeEq(a, b):
                return f"Eq {self.go(a, _ATOM)} {self.go(b, _ATOM)}", _APP
            case EqStar(a, b, ann):
                return f"eq*{self.ann(ann)} {self.go(a, _ATOM)} {self.go(b, _ATOM)}", _APP
            case Proj1(p):
                return f"fst {self.go(p, _ATOM)}", _APP
            case Proj2(p):
                return f"snd {self.go(p, _ATOM)}", _APP
            case Const(x, fam, b):
                return f"Const [{x}. {self.go(fam, _BIND)}] {self.go(b, _ATOM)}", _APP
            case Sim(e):
                return f"~[{self.go(e, _BIND)}]", _APP
            case App(f, a):
                head = f
                args = [a]
                while isinstance(head, App):
                    args.append(head.arg)
                    head = head.fn
                args.reverse()
                rendered = " ".join(self.go(x, _ATOM) for x in args)
                if isinstance(head, (Sim, Proj1, Proj2, TypeEq, EqStar, Const)):
                    return f"{self.render(head)[0]} {rendered}", _APP
                return f"{self.go(head, _ATOM)} {rendered}", _APP
            case Pair(a, b):
                return f"({self.go(a, _BIND)}, {self.go(b, _BIND)})", _ATOM
        raise AssertionError(f"unexpected node {t!r}")


def print_decl(d: Decl) -> str:
    match d:
        case Def(n, ty, body):
            return f"def {n} : {print_term(ty)} :=\n  {print_term(body)}"
        case Assume(n, ty):
            return f"assume {n} : {print_term(ty)}"
        case CheckStar(n):
            return f"#checkstar {n}"
        case Normalize(n):
            return f"#normalize {n}"
    raise AssertionError(d)
