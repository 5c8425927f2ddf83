"""One-step reduction, leftmost-outermost normalization and conversion."""

from __future__ import annotations

import os
from enum import Enum
from typing import Callable, Iterator

from .syntax import (
    TT,
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
    StarStar,
    Term,
    TypeEq,
    Unit,
    UnitStar,
    Var,
    VarName,
    alpha_eq,
    children,
    decorated_closure,
    fresh,
    free_vars,
    rel_view,
    subst,
    subst1,
    with_children,
)

DEFAULT_FUEL = 100_000


def default_fuel() -> int:
    """The step budget, overridable through ``LAMBDA_EQ_FUEL``."""
    raw = os.environ.get("LAMBDA_EQ_FUEL")
    if raw:
        value = int(raw)
        if value <= 0:
            raise ValueError("LAMBDA_EQ_FUEL must be positive")
        return value
    return DEFAULT_FUEL


class RedexKind(Enum):
    Beta = "beta"
    BetaSigma1 = "beta-sigma-1"
    BetaSigma2 = "beta-sigma-2"
    RelStarStar = "rel-star-star"
    RelPiStar = "rel-pi-star"
    RelSigmaStar = "rel-sigma-star"
    RelEqStar = "rel-eq-star"
    ConstTT = "const-tt"
    RelUnitStar = "rel-unit-star"


class FuelExhausted(Exception):
    def __init__(self, partial: Term, steps: int):
        self.partial, self.steps = partial, steps
        super().__init__(f"fuel exhausted after {steps} steps")


class MissingAnnotation(Exception):
    """A congruence node lacks the side types needed to build its contractum."""


# ---------------------------------------------------------------------------
# contracta of the relation rules


def _binder_avoid(*terms: Term) -> set[VarName]:
    out: set[VarName] = set()
    for t in terms:
        out |= free_vars(t)
    return out


def contract_pi_star(node: PiStar, f: Term, f1: Term) -> Term:
    """``f ~[Pi* [x,x1,xs] : As . Bs] f1`` unfolded into a triple Pi."""
    if node.ann is None:
        raise MissingAnnotation("Pi* node has no annotation")
    x, x1, xs = node.x, node.x1, node.xs
    a, a1 = node.ann.dom, node.ann.dom1
    body = node.body_eq
    outside = _binder_avoid(f, f1, node.dom_eq, a, a1)
    if outside & {x, x1, xs}:
        avoid = outside | free_vars(body) | {x, x1, xs}
        ren = {}
        for old in (x, x1, xs):
            new = fresh(old, avoid)
            avoid.add(new)
            ren[old] = new
        body = subst(body, {k: Var(n) for k, n in ren.items()})
        x, x1, xs = ren[x], ren[x1], ren[xs]
    return Pi(
        x,
        a,
        Pi(x1, a1, Pi(xs, Rel(node.dom_eq, Var(x), Var(x1)), Rel(body, App(f, Var(x)), App(f1, Var(x1))))),
    )


def contract_sigma_star(node: SigmaStar, p: Term, p1: Term) -> Term:
    """``p ~[Sig* [x,x1,xs] : As . Bs] p1`` unfolded into a Sigma over the first components."""
    a_s = node.xs
    if a_s in _binder_avoid(p, p1):
        a_s = fresh(a_s, _binder_avoid(p, p1, node.body_eq) | {node.x, node.x1, node.xs})
    first = Rel(node.dom_eq, Proj1(p), Proj1(p1))
    inst = subst(node.body_eq, {node.x: Proj1(p), node.x1: Proj1(p1), node.xs: Var(a_s)})
    return Sigma(a_s, first, Rel(inst, Proj2(p), Proj2(p1)))


def contract_eq_star(node: EqStar, e: Term, e1: Term) -> Term:
    """``e ~[eq* As Bs] e1`` unfolded into the six-binder telescope."""
    if node.ann is None:
        raise MissingAnnotation("eq* node has no annotation")
    ann = node.ann
    avoid = _binder_avoid(e, e1, node.lhs_eq, node.rhs_eq, ann.dom, ann.dom1, ann.cod, ann.cod1)
    a = VarName("a") if not avoid & decorated_closure([VarName("a")]) else fresh(VarName("a"), avoid, triple=True)
    avoid |= decorated_closure([a])
    b = VarName("b") if not avoid & decorated_closure([VarName("b")]) else fresh(VarName("b"), avoid, triple=True)
    ap, as_, bp, bs = a.prime(), a.star(), b.prime(), b.star()
    goal = TypeEq(Rel(e, Var(a), Var(b)), Rel(e1, Var(ap), Var(bp)))
    inner = Pi(b, ann.cod, Pi(bp, ann.cod1, Pi(bs, Rel(node.rhs_eq, Var(b), Var(bp)), goal)))
    return Pi(a, ann.dom, Pi(ap, ann.dom1, Pi(as_, Rel(node.lhs_eq, Var(a), Var(ap)), inner)))


def contract_rel(e: Term, a: Term, b: Term) -> tuple[Term, RedexKind] | None:
    """Contract ``a ~[e] b`` when ``e`` is literally a congruence head."""
    match e:
        case StarStar():
            return TypeEq(a, b), RedexKind.RelStarStar
        case PiStar(ann=ann) if ann is not None:
            return contract_pi_star(e, a, b), RedexKind.RelPiStar
        case SigmaStar():
            return contract_sigma_star(e, a, b), RedexKind.RelSigmaStar
        case EqStar(ann=ann) if ann is not None:
            return contract_eq_star(e, a, b), RedexKind.RelEqStar
        case UnitStar():
            return Unit(), RedexKind.RelUnitStar
    return None


def step_at(t: Term) -> tuple[Term, RedexKind] | None:
    """Contract the root of ``t`` if it is a redex."""
    match t:
        case App(Lam(x, _, body), arg):
            return subst1(body, x, arg), RedexKind.Beta
        case App(Const(_, _, body), TT()):
            return body, RedexKind.ConstTT
        case Proj1(Pair(a, _)):
            return a, RedexKind.BetaSigma1
        case Proj2(Pair(_, b)):
            return b, RedexKind.BetaSigma2
    rv = rel_view(t)
    if rv is not None:
        return contract_rel(*rv)
    return None


def is_redex(t: Term) -> bool:
    match t:
        case App(Lam(), _) | App(Const(), TT()) | Proj1(Pair()) | Proj2(Pair()):
            return True
    rv = rel_view(t)
    if rv is None:
        return False
    e = rv[0]
    return isinstance(e, (StarStar, SigmaStar, UnitStar)) or (isinstance(e, (PiStar, EqStar)) and e.ann is not None)


# ---------------------------------------------------------------------------
# positions


Path = tuple[int, ...]


def redex_positions(t: Term, here: Path = ()) -> Iterator[Path]:
    """All redex positions in preorder (annotations are not visited)."""
    if is_redex(t):
        yield here
    for i, c in enumerate(children(t)):
        yield from redex_positions(c, here + (i,))


def subterm_at(t: Term, path: Path) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    cs = list(children(t))
    cs[path[0]] = replace_at(cs[path[0]], path[1:], new)
    return with_children(t, cs)


def step_at_position(t: Term, path: Path) -> tuple[Term, RedexKind]:
    r = step_at(subterm_at(t, path))
    if r is None:
        raise ValueError(f"no redex at {path}")
    return replace_at(t, path, r[0]), r[1]


# ---------------------------------------------------------------------------
# normalization


Trace = Callable[[RedexKind, Term], None]


class _Counter:
    __slots__ = ("fuel", "steps", "trace")

    def __init__(self, fuel: int, trace: Trace | None):
        if fuel <= 0:
            raise ValueError("fuel must be positive")
        self.fuel, self.steps, self.trace = fuel, 0, trace

    def tick(self, kind: RedexKind, redex: Term) -> None:
        if self.steps >= self.fuel:
            raise FuelExhausted(redex, self.steps)
        self.steps += 1
        if self.trace is not None:
            self.trace(kind, redex)


def _whnf(t: Term, c: _Counter) -> Term:
    """Head reduction that contracts exactly the redexes leftmost-outermost would."""
    while True:
        r = step_at(t)
        if r is not None:
            c.tick(r[1], t)
            t = r[0]
            continue
        # reduce the principal child; the root can only become a redex through it
        match t:
            case App(App(Sim(e), a), b):
                e2 = _guard(_whnf, e, c, lambda p: App(App(Sim(p), a), b))
                if e2 is e:
                    return t
                t = App(App(Sim(e2), a), b)
            case Rel(e, a, b):
                e2 = _guard(_whnf, e, c, lambda p: Rel(p, a, b))
                if e2 is e:
                    return t
                t = Rel(e2, a, b)
            case App(f, a):
                f2 = _guard(_whnf, f, c, lambda p: App(p, a))
                if f2 is f:
                    return t
                t = App(f2, a)
            case Proj1(p) | Proj2(p):
                ctor = type(t)
                p2 = _guard(_whnf, p, c, ctor)
                if p2 is p:
                    return t
                t = ctor(p2)
            case _:
                return t


def _guard(fn, sub: Term, c: _Counter, rebuild) -> Term:
    try:
        return fn(sub, c)
    except FuelExhausted as exc:
        exc.partial = rebuild(exc.partial)
        raise


def _nf(t: Term, c: _Counter) -> Term:
    while True:
        t = _whnf(t, c)
        cs = children(t)
        if not cs:
            return t
        new = list(cs)
        for i, child in enumerate(cs):
            try:
                new[i] = _nf(child, c)
            except FuelExhausted as exc:
                new[i] = exc.partial
                exc.partial = with_children(t, new)
                raise
        if all(a is b for a, b in zip(new, cs)):
            return t
        t = with_children(t, new)
        # only an argument that became tt can create a new root redex
        if not is_redex(t):
            return t


def normalize(t: Term, fuel: int | None = None, trace: Trace | None = None) -> Term:
    """Leftmost-outermost normal form."""
    return _nf(t, _Counter(fuel or default_fuel(), trace))


def normalize_counted(t: Term, fuel: int | None = None, trace: Trace | None = None) -> tuple[Term, int]:
    c = _Counter(fuel or default_fuel(), trace)
    return _nf(t, c), c.steps


def whnf(t: Term, fuel: int | None = None) -> Term:
    return _whnf(t, _Counter(fuel or default_fuel(), None))


def normalize_reference(t: Term, fuel: int | None = None) -> tuple[Term, int]:
    """Literal strategy: repeatedly contract the first redex in preorder."""
    fuel = fuel or default_fuel()
    steps = 0
    while True:
        pos = next(redex_positions(t), None)
        if pos is None:
            return t, steps
        if steps >= fuel:
            raise FuelExhausted(t, steps)
        t, _ = step_at_position(t, pos)
        steps += 1


def normalize_by(t: Term, choose: Callable[[list[Path]], Path], fuel: int | None = None) -> tuple[Term, int]:
    """Normalize with a caller-chosen redex at each step (for confluence probes)."""
    fuel = fuel or default_fuel()
    steps = 0
    while True:
        positions = list(redex_positions(t))
        if not positions:
            return t, steps
        if steps >= fuel:
            raise FuelExhausted(t, steps)
        t, _ = step_at_position(t, choose(positions))
        steps += 1


def convertible(s: Term, t: Term, fuel: int | None = None) -> bool:
    """Definitional equality: alpha-equal normal forms."""
    if alpha_eq(s, t):
        return True
    return alpha_eq(normalize(s, fuel), normalize(t, fuel))
