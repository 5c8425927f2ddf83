"""Core syntax: variable names, terms, contexts, substitution, alpha-equivalence."""

from __future__ import annotations

import gc
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))



@contextmanager
def relaxed_gc(threshold: int = 100_000):
    """Collect young objects less often while building large acyclic terms."""
    old = gc.get_threshold()
    gc.set_threshold(max(threshold, old[0]), *old[1:])
    try:
        yield
    finally:
        gc.set_threshold(*old)


PRIME = "'"
STAR = "*"


class VarName(NamedTuple):
    """A base identifier plus a sequence of prime/star decorations."""

    base: str
    decorations: str = ""

    def prime(self) -> VarName:
        return VarName(self.base, self.decorations + PRIME)

    def star(self) -> VarName:
        return VarName(self.base, self.decorations + STAR)

    @property
    def is_plain(self) -> bool:
        return not self.decorations

    def __str__(self) -> str:
        return self.base + "".join("'" if d == PRIME else "^*" for d in self.decorations)

    def __repr__(self) -> str:
        return f"VarName({str(self)!r})"


def name(text: str) -> VarName:
    """Parse a rendered name such as ``x'^*`` back into a VarName."""
    i = len(text)
    decos: list[str] = []
    while i > 0:
        if text.endswith("'", 0, i):
            decos.append(PRIME)
            i -= 1
        elif text.endswith("^*", 0, i):
            decos.append(STAR)
            i -= 2
        else:
            break
    if i == 0:
        raise ValueError(f"bad variable name {text!r}")
    return VarName(text[:i], "".join(reversed(decos)))


class Term:
    """Base class of all term nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        from .parser import print_term

        return print_term(self)


@dataclass(frozen=True)
class Star(Term):
    pass


@dataclass(frozen=True)
class StarN(Term):
    """Stratified universe; level -1 is the classifier of relation types over level 0."""

    level: int
    tag: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Var(Term):
    name: VarName


@dataclass(frozen=True)
class Pi(Term):
    name: VarName
    dom: Term
    body: Term


@dataclass(frozen=True)
class Sigma(Term):
    name: VarName
    dom: Term
    body: Term


@dataclass(frozen=True)
class TypeEq(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Sim(Term):
    """The bare relation ``~e`` extracted from an equality proof."""

    eq: Term


@dataclass(frozen=True)
class Rel(Term):
    """``a ~[e] b``, sugar for ``App(App(Sim(e), a), b)``."""

    eq: Term
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Lam(Term):
    name: VarName
    dom: Term
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Proj1(Term):
    pair: Term


@dataclass(frozen=True)
class Proj2(Term):
    pair: Term


@dataclass(frozen=True)
class StarStar(Term):
    """Identity equality on the universe; ``level`` is set in the stratified system."""

    level: int | None = None
    tag: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Ann:
    """Elided sides of a congruence node.

    For Pi*/Sigma* the fields are (A, A1, B, B1), with B under the first binder
    and B1 under the second.  For eq* they are (A, A1, B, B1) where the node
    relates ``A = B`` to ``A1 = B1``.
    """

    dom: Term
    dom1: Term
    cod: Term
    cod1: Term


@dataclass(frozen=True)
class PiStar(Term):
    x: VarName
    x1: VarName
    xs: VarName
    dom_eq: Term
    body_eq: Term
    ann: Ann | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SigmaStar(Term):
    x: VarName
    x1: VarName
    xs: VarName
    dom_eq: Term
    body_eq: Term
    ann: Ann | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EqStar(Term):
    lhs_eq: Term
    rhs_eq: Term
    ann: Ann | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Unit(Term):
    pass


@dataclass(frozen=True)
class TT(Term):
    pass


@dataclass(frozen=True)
class UnitStar(Term):
    pass


@dataclass(frozen=True)
class Const(Term):
    """Constant family over the unit type: ``Const [x. B] b : Pi (x:1). B``."""

    name: VarName
    family: Term
    body: Term


ATOMS = (Star, StarN, StarStar, Unit, TT, UnitStar)
BINDERS = (Pi, Sigma, Lam)
CONGRUENCES = (PiStar, SigmaStar, EqStar)


def v(text: str) -> Var:
    return Var(name(text))


def arrow(a: Term, b: Term, hint: str = "_x") -> Pi:
    """Non-dependent function type with a binder fresh for ``b``."""
    return Pi(fresh(VarName(hint), free_vars(b)), a, b)


def apps(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def rel_view(t: Term) -> tuple[Term, Term, Term] | None:
    """Return (e, a, b) when ``t`` is ``a ~[e] b`` in either surface form."""
    if isinstance(t, Rel):
        return t.eq, t.lhs, t.rhs
    if isinstance(t, App) and isinstance(t.fn, App) and isinstance(t.fn.fn, Sim):
        return t.fn.fn.eq, t.fn.arg, t.arg
    return None


# ---------------------------------------------------------------------------
# free variables

_EMPTY: frozenset[VarName] = frozenset()


def free_vars(t: Term) -> frozenset[VarName]:
    """Free variables, including those of congruence annotations."""
    try:
        return t.__dict__["_fv"]
    except KeyError:
        pass
    match t:
        case Var(x):
            fv = frozenset((x,))
        case Pi(x, a, b) | Sigma(x, a, b) | Lam(x, a, b):
            fv = free_vars(a) | (free_vars(b) - {x})
        case Const(x, fam, b):
            fv = (free_vars(fam) - {x}) | free_vars(b)
        case TypeEq(a, b) | App(a, b) | Pair(a, b):
            fv = free_vars(a) | free_vars(b)
        case Sim(e) | Proj1(e) | Proj2(e):
            fv = free_vars(e)
        case Rel(e, a, b):
            fv = free_vars(e) | free_vars(a) | free_vars(b)
        case PiStar(x, x1, xs, a, b, ann) | SigmaStar(x, x1, xs, a, b, ann):
            fv = free_vars(a) | (free_vars(b) - {x, x1, xs})
            if ann is not None:
                fv |= free_vars(ann.dom) | free_vars(ann.dom1)
                fv |= (free_vars(ann.cod) - {x}) | (free_vars(ann.cod1) - {x1})
        case EqStar(a, b, ann):
            fv = free_vars(a) | free_vars(b)
            if ann is not None:
                fv |= free_vars(ann.dom) | free_vars(ann.dom1) | free_vars(ann.cod) | free_vars(ann.cod1)
        case _:
            fv = _EMPTY
    object.__setattr__(t, "_fv", fv)
    return fv


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def fresh(hint: VarName, avoid: Iterable[VarName] | frozenset[VarName], triple: bool = False) -> VarName:
    """Smallest ``root#k`` not in ``avoid``.

    With ``triple`` the primed and starred forms must be free too.  Fresh names
    never carry decorations, and the choice depends only on the arguments.
    """
    avoid = avoid if isinstance(avoid, (set, frozenset)) else set(avoid)
    root = hint.base.split("#", 1)[0]
    k = 1
    while True:
        cand = VarName(f"{root}#{k}")
        if cand not in avoid and not (triple and (cand.prime() in avoid or cand.star() in avoid)):
            return cand
        k += 1


def decorated_closure(names: Iterable[VarName]) -> set[VarName]:
    """Each name together with its primed and starred forms."""
    out: set[VarName] = set()
    for n in names:
        out.update((n, n.prime(), n.star()))
    return out


# ---------------------------------------------------------------------------
# substitution


def subst(t: Term, mapping: Mapping[VarName, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    if not mapping:
        return t
    return _subst(t, dict(mapping))


def subst1(t: Term, x: VarName, s: Term) -> Term:
    if isinstance(s, Var) and s.name == x:
        return t
    return _subst(t, {x: s})


def _range_fv(m: Mapping[VarName, Term]) -> set[VarName]:
    out: set[VarName] = set()
    for s in m.values():
        out |= free_vars(s)
    return out


def _binders(
    names: tuple[VarName, ...],
    bodies: list[tuple[Term, tuple[VarName, ...]]],
    m: dict[VarName, Term],
) -> tuple[tuple[VarName, ...], list[Term]]:
    """Push ``m`` under a group of binders, renaming those that would capture."""
    rfv = _range_fv(m)
    ren: dict[VarName, VarName] = {}
    if any(n in rfv for n in names):
        avoid = set(rfv) | set(m) | set(names)
        for b, _ in bodies:
            avoid |= free_vars(b)
        for n in names:
            if n in rfv and n not in ren:
                z = fresh(n, avoid)
                avoid.add(z)
                ren[n] = z
    out = []
    for b, bound in bodies:
        mb = {k: s for k, s in m.items() if k not in bound}
        for n in bound:
            if n in ren:
                mb[n] = Var(ren[n])
        out.append(_subst(b, mb) if mb else b)
    return tuple(ren.get(n, n) for n in names), out


def _under(x: VarName, b: Term, m: dict[VarName, Term]) -> tuple[VarName, Term]:
    """Push ``m`` under a single binder."""
    if x in m:
        m = {k: s for k, s in m.items() if k != x}
        if not m:
            return x, b
    fb = free_vars(b)
    if not any(k in fb for k in m):
        return x, b
    for s in m.values():
        if x in free_vars(s):
            (x2,), (b2,) = _binders((x,), [(b, (x,))], m)
            return x2, b2
    return x, _subst(b, m)


def _subst(t: Term, m: dict[VarName, Term]) -> Term:
    fv = free_vars(t)
    if len(m) == 1:
        for k in m:
            if k not in fv:
                return t
    else:
        m = {k: s for k, s in m.items() if k in fv}
        if not m:
            return t
    match t:
        case Var(x):
            return m[x]
        case Pi(x, a, b) | Sigma(x, a, b) | Lam(x, a, b):
            x2, b2 = _under(x, b, m)
            return type(t)(x2, _subst(a, m), b2)
        case Const(x, fam, b):
            x2, fam2 = _under(x, fam, m)
            return Const(x2, fam2, _subst(b, m))
        case TypeEq(a, b):
            return TypeEq(_subst(a, m), _subst(b, m))
        case App(a, b):
            return App(_subst(a, m), _subst(b, m))
        case Pair(a, b):
            return Pair(_subst(a, m), _subst(b, m))
        case Sim(e):
            return Sim(_subst(e, m))
        case Proj1(e):
            return Proj1(_subst(e, m))
        case Proj2(e):
            return Proj2(_subst(e, m))
        case Rel(e, a, b):
            return Rel(_subst(e, m), _subst(a, m), _subst(b, m))
        case PiStar(x, x1, xs, a, b, ann) | SigmaStar(x, x1, xs, a, b, ann):
            bodies = [(b, (x, x1, xs))]
            if ann is not None:
                bodies += [(ann.cod, (x,)), (ann.cod1, (x1,))]
            (y, y1, ys), outs = _binders((x, x1, xs), bodies, m)
            new_ann = None
            if ann is not None:
                new_ann = Ann(_subst(ann.dom, m), _subst(ann.dom1, m), outs[1], outs[2])
            return type(t)(y, y1, ys, _subst(a, m), outs[0], new_ann)
        case EqStar(a, b, ann):
            new_ann = None
            if ann is not None:
                new_ann = Ann(*(_subst(p, m) for p in (ann.dom, ann.dom1, ann.cod, ann.cod1)))
            return EqStar(_subst(a, m), _subst(b, m), new_ann)
    raise AssertionError(f"unexpected node {t!r}")


def rename_vars(t: Term, f) -> Term:
    """Apply ``f`` to every variable name, bound or free (used by priming)."""
    match t:
        case Var(x):
            return Var(f(x))
        case Pi(x, a, b) | Sigma(x, a, b) | Lam(x, a, b):
            return type(t)(f(x), rename_vars(a, f), rename_vars(b, f))
        case Const(x, fam, b):
            return Const(f(x), rename_vars(fam, f), rename_vars(b, f))
        case TypeEq(a, b) | App(a, b) | Pair(a, b):
            return type(t)(rename_vars(a, f), rename_vars(b, f))
        case Sim(e) | Proj1(e) | Proj2(e):
            return type(t)(rename_vars(e, f))
        case Rel(e, a, b):
            return Rel(rename_vars(e, f), rename_vars(a, f), rename_vars(b, f))
        case PiStar(x, x1, xs, a, b, ann) | SigmaStar(x, x1, xs, a, b, ann):
            return type(t)(f(x), f(x1), f(xs), rename_vars(a, f), rename_vars(b, f), _rename_ann(ann, f))
        case EqStar(a, b, ann):
            return EqStar(rename_vars(a, f), rename_vars(b, f), _rename_ann(ann, f))
    return t


def _rename_ann(ann: Ann | None, f) -> Ann | None:
    if ann is None:
        return None
    return Ann(*(rename_vars(p, f) for p in (ann.dom, ann.dom1, ann.cod, ann.cod1)))


# ---------------------------------------------------------------------------
# alpha-equivalence


def alpha_eq(s: Term, t: Term) -> bool:
    """Equality up to bound names; ``Rel`` is identified with its application form.

    Congruence annotations are ignored: they are determined by the typing.
    """
    return _aeq(s, t, {}, {}, 0)


def _as_app(t: Term) -> Term:
    if isinstance(t, Rel):
        return App(App(Sim(t.eq), t.lhs), t.rhs)
    return t


def _aeq(s: Term, t: Term, es: dict, et: dict, d: int) -> bool:
    if s is t and all(es.get(x) == et.get(x) for x in free_vars(s)):
        return True
    s, t = _as_app(s), _as_app(t)
    if type(s) is not type(t):
        return False
    match s:
        case Var(x):
            i, j = es.get(x), et.get(t.name)
            if i is None and j is None:
                return x == t.name
            return i == j
        case StarN(n):
            return n == t.level
        case StarStar(n):
            return n == t.level
        case Pi(x, a, b) | Sigma(x, a, b) | Lam(x, a, b):
            return _aeq(a, t.dom, es, et, d) and _aeq(b, t.body, {**es, x: d}, {**et, t.name: d}, d + 1)
        case Const(x, fam, b):
            return _aeq(fam, t.family, {**es, x: d}, {**et, t.name: d}, d + 1) and _aeq(b, t.body, es, et, d)
        case TypeEq(a, b):
            return _aeq(a, t.lhs, es, et, d) and _aeq(b, t.rhs, es, et, d)
        case App(a, b):
            return _aeq(a, t.fn, es, et, d) and _aeq(b, t.arg, es, et, d)
        case Pair(a, b):
            return _aeq(a, t.fst, es, et, d) and _aeq(b, t.snd, es, et, d)
        case Sim(e):
            return _aeq(e, t.eq, es, et, d)
        case Proj1(e) | Proj2(e):
            return _aeq(e, t.pair, es, et, d)
        case PiStar(x, x1, xs, a, b, _) | SigmaStar(x, x1, xs, a, b, _):
            es2 = {**es, x: d, x1: d + 1, xs: d + 2}
            et2 = {**et, t.x: d, t.x1: d + 1, t.xs: d + 2}
            return _aeq(a, t.dom_eq, es, et, d) and _aeq(b, t.body_eq, es2, et2, d + 3)
        case EqStar(a, b, _):
            return _aeq(a, t.lhs_eq, es, et, d) and _aeq(b, t.rhs_eq, es, et, d)
    return True  # remaining atoms


# ---------------------------------------------------------------------------
# misc


def size(t: Term) -> int:
    """Number of nodes, not counting annotations."""
    match t:
        case Pi(_, a, b) | Sigma(_, a, b) | Lam(_, a, b) | Const(_, a, b):
            return 1 + size(a) + size(b)
        case TypeEq(a, b) | App(a, b) | Pair(a, b):
            return 1 + size(a) + size(b)
        case Sim(e) | Proj1(e) | Proj2(e):
            return 1 + size(e)
        case Rel(e, a, b):
            return 1 + size(e) + size(a) + size(b)
        case PiStar(_, _, _, a, b, _) | SigmaStar(_, _, _, a, b, _) | EqStar(a, b, _):
            return 1 + size(a) + size(b)
    return 1


def subterms(t: Term) -> Iterator[Term]:
    """Preorder traversal, annotations excluded."""
    yield t
    for c in children(t):
        yield from subterms(c)


def children(t: Term) -> tuple[Term, ...]:
    match t:
        case Pi(_, a, b) | Sigma(_, a, b) | Lam(_, a, b) | Const(_, a, b):
            return (a, b)
        case TypeEq(a, b) | App(a, b) | Pair(a, b):
            return (a, b)
        case Sim(e) | Proj1(e) | Proj2(e):
            return (e,)
        case Rel(e, a, b):
            return (e, a, b)
        case PiStar(_, _, _, a, b, _) | SigmaStar(_, _, _, a, b, _) | EqStar(a, b, _):
            return (a, b)
    return ()


def with_children(t: Term, cs: tuple[Term, ...] | list[Term]) -> Term:
    """Rebuild ``t`` with new children, in the order given by ``children``."""
    match t:
        case Pi(x, _, _) | Sigma(x, _, _) | Lam(x, _, _):
            return type(t)(x, cs[0], cs[1])
        case Const(x, _, _):
            return Const(x, cs[0], cs[1])
        case TypeEq() | App() | Pair():
            return type(t)(cs[0], cs[1])
        case Sim() | Proj1() | Proj2():
            return type(t)(cs[0])
        case Rel():
            return Rel(cs[0], cs[1], cs[2])
        case PiStar(x, x1, xs, _, _, ann) | SigmaStar(x, x1, xs, _, _, ann):
            return type(t)(x, x1, xs, cs[0], cs[1], ann)
        case EqStar(_, _, ann):
            return EqStar(cs[0], cs[1], ann)
    return t


def uses_stratified_forms(t: Term) -> bool:
    return any(isinstance(s, (StarN, Unit, TT, UnitStar, Const)) or (isinstance(s, StarStar) and s.level is not None) for s in subterms(t))


def uses_plain_star(t: Term) -> bool:
    return any(isinstance(s, Star) or (isinstance(s, StarStar) and s.level is None) for s in subterms(t))


# ---------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class Context:
    """Ordered typing context with distinct names."""

    entries: tuple[tuple[VarName, Term], ...] = ()

    def __post_init__(self) -> None:
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable in context")

    @property
    def _index(self) -> dict[VarName, tuple[int, Term]]:
        try:
            return self.__dict__["_idx"]
        except KeyError:
            idx = {n: (i, ty) for i, (n, ty) in enumerate(self.entries)}
            object.__setattr__(self, "_idx", idx)
            return idx

    def lookup(self, x: VarName) -> Term | None:
        hit = self._index.get(x)
        return None if hit is None else hit[1]

    def position(self, x: VarName) -> int | None:
        hit = self._index.get(x)
        return None if hit is None else hit[0]

    def __contains__(self, x: object) -> bool:
        return x in self._index

    def extend(self, x: VarName, ty: Term) -> Context:
        if x in self._index:
            raise ValueError(f"variable {x} already bound")
        out = Context.__new__(Context)
        object.__setattr__(out, "entries", self.entries + ((x, ty),))
        idx = dict(self._index)
        idx[x] = (len(self.entries), ty)
        object.__setattr__(out, "_idx", idx)
        return out

    def names(self) -> frozenset[VarName]:
        return frozenset(self._index)

    def __iter__(self) -> Iterator[tuple[VarName, Term]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def of(cls, *pairs: tuple[str | VarName, Term]) -> Context:
        return cls(tuple((name(n) if isinstance(n, str) else n, ty) for n, ty in pairs))
