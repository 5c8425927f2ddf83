"""Random terms for property tests, and a shrinker for counterexamples.

Everything is driven by an explicit ``random.Random`` so a seed reproduces a
term exactly.  Three families are provided:

* raw terms: any syntax, undecorated names, annotated congruence nodes;
* well-typed terms of the unstratified system, with redexes injected;
* terms of the finite model fragment (stratified, level 0, no congruences).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .parser import print_term
from .syntax import (
    TT,
    Ann,
    App,
    Const,
    Context,
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
    alpha_eq,
    children,
    free_vars,
    fresh,
    is_closed,
    size,
    subst1,
    subterms,
    with_children,
)

NAMES = tuple(VarName(n) for n in ("x", "y", "z", "u", "w", "A", "B"))


# ---------------------------------------------------------------------------
# raw terms


def raw_term(rng: random.Random, depth: int = 4, names: tuple[VarName, ...] = NAMES) -> Term:
    """Any pseudoterm; congruence nodes carry arbitrary annotations."""
    if depth <= 0 or rng.random() < 0.2:
        return rng.choice([Star(), StarStar(), *(Var(n) for n in names)])
    d = depth - 1
    sub = lambda: raw_term(rng, d, names)  # noqa: E731
    k = rng.randrange(14)
    match k:
        case 0 | 1:
            return rng.choice((Pi, Sigma, Lam))(rng.choice(names), sub(), sub())
        case 2:
            return TypeEq(sub(), sub())
        case 3:
            return Rel(sub(), sub(), sub())
        case 4:
            return Sim(sub())
        case 5 | 6:
            return App(sub(), sub())
        case 7:
            return Pair(sub(), sub())
        case 8:
            return rng.choice((Proj1, Proj2))(sub())
        case 9 | 10 | 11:
            # star translates congruences through their contracta, so nesting them
            # grows the output exponentially; keep their insides shallow
            small = lambda: raw_term(rng, min(d, 1), names)  # noqa: E731
            ann = Ann(small(), small(), small(), small())
            if k == 11:
                return EqStar(small(), small(), ann)
            x, x1, xs = rng.sample(names, 3)
            return rng.choice((PiStar, SigmaStar))(x, x1, xs, small(), small(), ann)
        case 12:
            return Lam(rng.choice(names), sub(), App(sub(), sub()))
    return Var(rng.choice(names))


# ---------------------------------------------------------------------------
# well-typed terms of the unstratified system

X, Y, ABSURD = VarName("X"), VarName("Y"), VarName("absurd")


def base_context() -> Context:
    """Two type variables and ``absurd : Pi (T : *). T``, which inhabits every type."""
    t = VarName("T")
    return Context.of(
        (X, Star()),
        (Y, Star()),
        (ABSURD, Pi(t, Star(), Var(t))),
        (VarName("a"), Var(X)),
        (VarName("f"), Pi(VarName("q"), Var(X), Var(Y))),
        (VarName("p"), Sigma(VarName("q"), Var(X), Var(Y))),
        (VarName("e"), TypeEq(Var(X), Var(Y))),
    )


@dataclass
class TypedGen:
    """Type-directed generator; every ``term`` call returns an inhabitant of the requested type."""

    rng: random.Random
    redex_rate: float = 0.3
    rel_rate: float = 0.25

    def fresh(self, ctx: Context, hint: str, *terms: Term) -> VarName:
        avoid = set(ctx.names())
        for t in terms:
            avoid |= free_vars(t)
        return fresh(VarName(hint), avoid)

    # -- types -------------------------------------------------------------

    def closed_type(self, depth: int) -> Term:
        ctx = Context.of((ABSURD, Pi(VarName("T"), Star(), Var(VarName("T")))))
        while True:
            t = self.type(ctx, depth)
            if is_closed(t):
                return t

    def type(self, ctx: Context, depth: int) -> Term:
        r = self.rng
        tyvars = [Var(x) for x, a in ctx if isinstance(a, Star)]
        if depth <= 0 or r.random() < 0.25:
            return r.choice([Star(), *tyvars, *tyvars])
        k = r.randrange(8)
        d = depth - 1
        if k in (0, 1):
            dom = self.type(ctx, d)
            x = self.fresh(ctx, "x")
            return Pi(x, dom, self.type(ctx.extend(x, dom), d))
        if k == 2:
            dom = self.type(ctx, d)
            x = self.fresh(ctx, "x")
            return Sigma(x, dom, self.type(ctx.extend(x, dom), d))
        if k == 3:
            return TypeEq(self.type(ctx, d), self.type(ctx, d))
        if k == 4:
            big = self.fresh(ctx, "P")
            return Pi(big, Star(), self.type(ctx.extend(big, Star()), d))
        # a type that is itself a redex
        return self.term(ctx, Star(), depth)

    # -- terms -------------------------------------------------------------

    def term(self, ctx: Context, ty: Term, depth: int) -> Term:
        r = self.rng
        if depth > 0 and r.random() < self.redex_rate:
            return self.redex(ctx, ty, depth - 1)
        if depth <= 0:
            return self.atom(ctx, ty)
        d = depth - 1
        match ty:
            case Pi(x, a, b):
                z = x if x not in ctx else self.fresh(ctx, str(x), b)
                body_ty = b if z == x else subst1(b, x, Var(z))
                return Lam(z, a, self.term(ctx.extend(z, a), body_ty, d))
            case Sigma(x, a, b):
                fst = self.term(ctx, a, d)
                return Pair(fst, self.term(ctx, subst1(b, x, fst), d))
            case Star():
                if d > 0 and r.random() < self.rel_rate:
                    return self.relation(ctx, d)
                return self.type(ctx, d)
            case TypeEq(a, b) if is_closed(a) and alpha_eq(a, b) and r.random() < 0.7:
                return self.identity_proof(a)
        return self.atom(ctx, ty)

    def atom(self, ctx: Context, ty: Term, budget: int = 2) -> Term:
        hits: list[Callable[[], Term]] = [lambda x=x: Var(x) for x, a in ctx if alpha_eq(a, ty)]
        for x, a in ctx:
            if budget and isinstance(a, Pi) and a.name not in free_vars(a.body) and alpha_eq(a.body, ty):
                hits.append(lambda x=x, a=a: App(Var(x), self.atom(ctx, a.dom, budget - 1)))
            if isinstance(a, Sigma) and alpha_eq(a.dom, ty):
                hits.append(lambda x=x: Proj1(Var(x)))
        if isinstance(ty, Star):
            hits.append(Star)
        if hits and self.rng.random() < 0.8:
            return self.rng.choice(hits)()
        return App(Var(ABSURD), ty)

    def identity_proof(self, a: Term) -> Term:
        """An inhabitant of ``Eq a a`` for closed ``a``: its star translation."""
        from .startrans import star

        return star(a)

    def relation(self, ctx: Context, depth: int) -> Term:
        """``s ~[C^*] t`` for a closed type ``C``; contracts by the rule for C's head."""
        c = self.closed_type(depth)
        return Rel(self.identity_proof(c), self.term(ctx, c, depth), self.term(ctx, c, depth))

    def redex(self, ctx: Context, ty: Term, depth: int) -> Term:
        r = self.rng
        k = r.randrange(4)
        if k == 0 or k == 3:
            s = self.type(ctx, min(depth, 2))
            z = self.fresh(ctx, "z", ty)
            body = self.term(ctx.extend(z, s), ty, depth)
            return App(Lam(z, s, body), self.term(ctx, s, depth))
        if k == 1:
            s = self.type(ctx, min(depth, 2))
            return Proj1(Pair(self.term(ctx, ty, depth), self.term(ctx, s, depth)))
        s = self.type(ctx, min(depth, 2))
        return Proj2(Pair(self.term(ctx, s, depth), self.term(ctx, ty, depth)))


def typed_sample(rng: random.Random, depth: int = 3, ctx: Context | None = None) -> tuple[Context, Term, Term]:
    """Return ``(ctx, m, a)`` with ``ctx |- m : a`` intended to hold."""
    ctx = ctx or base_context()
    g = TypedGen(rng)
    a = g.type(ctx, depth)
    return ctx, g.term(ctx, a, depth), a


def closed_typed_sample(rng: random.Random, depth: int = 3) -> tuple[Term, Term]:
    """A closed well-typed term and its type: a typed sample abstracted over its context."""
    ctx, m, a = typed_sample(rng, depth)
    return close_over(ctx, m, a)


def close_over(ctx: Context, m: Term, a: Term) -> tuple[Term, Term]:
    for x, ty in reversed(ctx.entries):
        m, a = Lam(x, ty, m), Pi(x, ty, a)
    return m, a


# ---------------------------------------------------------------------------
# single-step reductions


def random_step(rng: random.Random, t: Term) -> tuple[Term, Term] | None:
    """Pick a redex position uniformly and contract it."""
    from .rewrite import redex_positions, step_at_position

    positions = list(redex_positions(t))
    if not positions:
        return None
    new, _ = step_at_position(t, rng.choice(positions))
    return t, new


# ---------------------------------------------------------------------------
# the finite model fragment

FX, FXV, FE = VarName("X"), VarName("x"), VarName("e")


def fragment_context() -> Context:
    return Context.of((FX, StarN(0)), (FXV, Var(FX)), (FE, TypeEq(Var(FX), Var(FX))))


@dataclass
class FragmentGen:
    """Level-0 types and their inhabitants; no congruence formers, no postulates."""

    rng: random.Random
    redex_rate: float = 0.35

    def type(self, ctx: Context, depth: int) -> Term:
        r = self.rng
        if depth <= 0 or r.random() < 0.3:
            return r.choice([Var(FX), Unit()])
        d = depth - 1
        k = r.randrange(7)
        if k in (0, 1):
            a = self.type(ctx, d)
            x = fresh(VarName("y"), set(ctx.names()))
            return Pi(x, a, self.type(ctx.extend(x, a), d))
        if k == 2:
            a = self.type(ctx, d)
            x = fresh(VarName("y"), set(ctx.names()))
            return Sigma(x, a, self.type(ctx.extend(x, a), d))
        if k == 3:
            return r.choice([TypeEq(Var(FX), Var(FX)), TypeEq(Unit(), Unit())])
        if k == 4:
            return Rel(UnitStar(), self.term(ctx, Unit(), d), self.term(ctx, Unit(), d))
        if k == 5:
            return Rel(StarStar(0), self.type(ctx, d), self.type(ctx, d))
        z = fresh(VarName("Z"), set(ctx.names()))
        # the argument must be a carrier for the model to apply the function
        return App(Lam(z, StarN(0), self.type(ctx.extend(z, StarN(0)), d)), r.choice([Var(FX), Unit()]))

    def term(self, ctx: Context, ty: Term, depth: int) -> Term:
        r = self.rng
        if depth > 0 and r.random() < self.redex_rate:
            return self.redex(ctx, ty, depth - 1)
        from .rewrite import whnf

        w = whnf(ty)
        d = depth - 1
        match w:
            case Pi(x, a, b):
                z = x if x not in ctx else fresh(x, set(ctx.names()) | free_vars(b))
                return Lam(z, a, self.term(ctx.extend(z, a), subst1(b, x, Var(z)), d))
            case Sigma(x, a, b):
                fst = self.term(ctx, a, d)
                return Pair(fst, self.term(ctx, subst1(b, x, fst), d))
            case Unit():
                return TT()
            case TypeEq(Unit(), Unit()):
                return UnitStar()
        hits = [Var(x) for x, a in ctx if alpha_eq(a, w) or alpha_eq(a, ty)]
        if hits:
            return r.choice(hits)
        raise _NoInhabitant(ty)

    def redex(self, ctx: Context, ty: Term, depth: int) -> Term:
        r = self.rng
        k = r.randrange(4)
        z = fresh(VarName("z"), set(ctx.names()) | free_vars(ty))
        if k == 0:
            s = self.type(ctx, 1)
            return App(Lam(z, s, self.term(ctx.extend(z, s), ty, depth)), self.term(ctx, s, depth))
        if k == 1:
            return Proj1(Pair(self.term(ctx, ty, depth), TT()))
        if k == 2:
            return Proj2(Pair(TT(), self.term(ctx, ty, depth)))
        return App(Const(z, ty, self.term(ctx, ty, depth)), TT())


class _NoInhabitant(Exception):
    pass


def fragment_sample(rng: random.Random, depth: int = 3) -> tuple[Context, Term, Term]:
    """``(ctx, m, a)`` in the model fragment; retries until an inhabitant is found."""
    ctx = fragment_context()
    g = FragmentGen(rng)
    while True:
        try:
            # types embed terms, so both draws can fail
            a = g.type(ctx, depth)
            return ctx, g.term(ctx, a, depth), a
        except _NoInhabitant:
            continue


# ---------------------------------------------------------------------------
# shrinking counterexamples


def shrink(t: Term, still_fails: Callable[[Term], bool], max_rounds: int = 200) -> Term:
    """Greedy shrinking: replace a subterm by one of its own subterms while the failure persists."""
    for _ in range(max_rounds):
        for candidate in _candidates(t):
            if size(candidate) < size(t) and _safe(still_fails, candidate):
                t = candidate
                break
        else:
            return t
    return t


def _safe(pred: Callable[[Term], bool], t: Term) -> bool:
    try:
        return pred(t)
    except Exception:
        return False


def _candidates(t: Term):
    for c in children(t):
        yield c
    for i, c in enumerate(children(t)):
        for smaller in _candidates(c):
            cs = list(children(t))
            cs[i] = smaller
            yield with_children(t, cs)


def write_reproduction(path: Path, ctx: Context, m: Term, a: Term, note: str) -> Path:
    """Emit a ``.leq`` file that reproduces a failing judgment."""
    lines = [f"-- {note}"]
    lines += [f"assume {x} : {print_term(ty)}" for x, ty in ctx]
    lines.append(f"def counterexample : {print_term(a)} := {print_term(m)}")
    lines.append("#normalize counterexample")
    path.write_text("\n".join(lines) + "\n")
    return path


def uses_congruence(t: Term) -> bool:
    return any(isinstance(s, (PiStar, SigmaStar, EqStar)) for s in subterms(t))


__all__ = [
    "raw_term",
    "TypedGen",
    "typed_sample",
    "closed_typed_sample",
    "base_context",
    "random_step",
    "FragmentGen",
    "fragment_sample",
    "fragment_context",
    "shrink",
    "write_reproduction",
    "uses_congruence",
    "close_over",
]
