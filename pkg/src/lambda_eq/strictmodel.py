"""A finite approximation of the set-theoretic model.

Types denote hereditarily finite sets, equalities are interpreted by
equality of denotations, and every proof of an equality is the empty set.
Quantification over ``*0`` ranges over a configured list of carriers (the
von Neumann ordinals 0..3 by default), so this is a falsification oracle:
it can expose a bug, it cannot certify the full model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .syntax import (
    TT,
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
)

SIZE_BOUND = 10_000
ENV_BOUND = 100_000


class FragmentExceeded(Exception):
    """Evaluation would leave the finite fragment."""


class UnsupportedTerm(Exception):
    pass


class SoundnessViolation(Exception):
    def __init__(self, env: dict[VarName, "Value"], value: "Value", typ: Term):
        self.env, self.value, self.typ = env, value, typ
        shown = ", ".join(f"{x} = {v}" for x, v in env.items()) or "empty environment"
        from .parser import print_term

        super().__init__(f"{value} is not in [[{print_term(typ)}]] under {shown}")


# ---------------------------------------------------------------------------
# values


class Value:
    key: tuple

    def __lt__(self, other: "Value") -> bool:
        return self.key < other.key


@dataclass(frozen=True, eq=False)
class FinSet(Value):
    """A finite set; elements are kept sorted and duplicate-free."""

    elements: tuple[Value, ...]
    key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (0, tuple(e.key for e in self.elements)))

    def __eq__(self, other):
        return isinstance(other, Value) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Value]:
        return iter(self.elements)

    def __contains__(self, v: Value) -> bool:
        return v in set(self.elements)

    def __str__(self) -> str:
        if not self.elements:
            return "0"
        n = _ordinal_size(self)
        if n is not None:
            return str(n)
        return "{" + ", ".join(map(str, self.elements)) + "}"


@dataclass(frozen=True, eq=False)
class FunGraph(Value):
    """The graph of a function on a finite domain."""

    pairs: tuple[tuple[Value, Value], ...]
    key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (1, tuple((a.key, b.key) for a, b in self.pairs)))

    def __eq__(self, other):
        return isinstance(other, Value) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __call__(self, arg: Value) -> Value:
        for a, b in self.pairs:
            if a == arg:
                return b
        raise FragmentExceeded(f"argument {arg} is outside the enumerated domain")

    def __str__(self) -> str:
        return "[" + ", ".join(f"{a} |-> {b}" for a, b in self.pairs) + "]"


@dataclass(frozen=True, eq=False)
class PairV(Value):
    fst: Value
    snd: Value
    key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (2, self.fst.key, self.snd.key))

    def __eq__(self, other):
        return isinstance(other, Value) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self) -> str:
        return f"({self.fst}, {self.snd})"


@dataclass(frozen=True, eq=False)
class UniverseV(Value):
    """The universe at a level.  Membership is exact for finite sets;
    enumeration yields only the configured carriers."""

    level: int
    carriers: tuple[Value, ...] = field(default=(), repr=False)
    key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (3, self.level))

    def __eq__(self, other):
        return isinstance(other, Value) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self) -> str:
        return f"Set{self.level}"


@dataclass(frozen=True, eq=False)
class SimV(Value):
    """The relation of an equality, curried; ``args`` holds those applied so far."""

    args: tuple[Value, ...] = ()
    key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (4, tuple(a.key for a in self.args)))

    def __eq__(self, other):
        return isinstance(other, Value) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self) -> str:
        return "~" + "".join(f" {a}" for a in self.args)


def finset(items) -> FinSet:
    uniq = {v.key: v for v in items}
    if len(uniq) > SIZE_BOUND:
        raise FragmentExceeded(f"a set with {len(uniq)} elements exceeds the bound {SIZE_BOUND}")
    return FinSet(tuple(uniq[k] for k in sorted(uniq)))


EMPTY = FinSet(())
EmptyWitness = EMPTY  # the unique proof of any true equality
ONE = finset([EMPTY])
TRUTH_VALUES = finset([EMPTY, ONE])


def ordinal(n: int) -> FinSet:
    """The von Neumann ordinal ``n = {0, ..., n-1}``."""
    out = EMPTY
    for _ in range(n):
        out = finset([*out.elements, out])
    return out


def _ordinal_size(s: FinSet) -> int | None:
    return len(s) if s == ordinal(len(s)) and len(s) < 16 else None


def default_carriers(sizes=(0, 1, 2, 3)) -> tuple[Value, ...]:
    return tuple(ordinal(n) for n in sizes)


# ---------------------------------------------------------------------------
# membership and enumeration


def members(s: Value) -> Iterator[Value]:
    """Enumerate a set that is used as a domain of quantification."""
    match s:
        case FinSet():
            return iter(s.elements)
        case UniverseV(-1):
            return iter(TRUTH_VALUES.elements)
        case UniverseV(0, carriers):
            return iter(carriers)
        case UniverseV(n):
            raise FragmentExceeded(f"cannot quantify over Set{n}")
    raise UnsupportedTerm(f"{s} is not a set")


def _count(s: Value) -> int:
    match s:
        case FinSet():
            return len(s)
        case UniverseV(-1):
            return 2
        case UniverseV(0, carriers):
            return len(carriers)
    return len(list(members(s)))


def is_member(v: Value, s: Value) -> bool:
    match s:
        case FinSet():
            return v in s
        case UniverseV(-1):
            return v in TRUTH_VALUES
        case UniverseV(n):
            return isinstance(v, FinSet) or (isinstance(v, UniverseV) and v.level < n)
    raise UnsupportedTerm(f"{s} is not a set")


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class Model:
    carriers: tuple[Value, ...] = field(default_factory=default_carriers)

    def universe(self, n: int) -> UniverseV:
        return UniverseV(n, self.carriers)

    def evaluate(self, env: Mapping[VarName, Value], t: Term) -> Value:
        match t:
            case StarN(n):
                return self.universe(n)
            case Star():
                raise UnsupportedTerm("bare * has no denotation; assign levels first")
            case Var(x):
                if x not in env:
                    raise UnsupportedTerm(f"free variable {x} has no value")
                return env[x]
            case Pi(x, a, b):
                return self._pi(env, x, a, b)
            case Sigma(x, a, b):
                dom = members(self.evaluate(env, a))
                return finset(PairV(v, w) for v in dom for w in members(self.evaluate({**env, x: v}, b)))
            case TypeEq(a, b):
                return ONE if self.evaluate(env, a) == self.evaluate(env, b) else EMPTY
            case Rel(_, a, b):
                return ONE if self.evaluate(env, a) == self.evaluate(env, b) else EMPTY
            case Sim():
                return SimV()
            case Lam(x, a, b):
                dom = list(members(self.evaluate(env, a)))
                return FunGraph(tuple((v, self.evaluate({**env, x: v}, b)) for v in sorted(dom)))
            case App(f, a):
                return self.apply(self.evaluate(env, f), self.evaluate(env, a))
            case Pair(a, b):
                return PairV(self.evaluate(env, a), self.evaluate(env, b))
            case Proj1(p) | Proj2(p):
                v = self.evaluate(env, p)
                if not isinstance(v, PairV):
                    raise UnsupportedTerm(f"projection of the non-pair {v}")
                return v.fst if isinstance(t, Proj1) else v.snd
            case StarStar() | PiStar() | SigmaStar() | EqStar() | UnitStar() | TT():
                return EmptyWitness
            case Unit():
                return ONE
            case Const(_, _, b):
                return FunGraph(((EMPTY, self.evaluate(env, b)),))
        raise UnsupportedTerm(f"no denotation for {type(t).__name__}")

    def apply(self, f: Value, a: Value) -> Value:
        match f:
            case FunGraph():
                return f(a)
            case SimV(args) if len(args) == 0:
                return SimV((a,))
            case SimV(args):
                return ONE if args[0] == a else EMPTY
        raise UnsupportedTerm(f"application of the non-function {f}")

    def _pi(self, env: Mapping[VarName, Value], x: VarName, a: Term, b: Term) -> FinSet:
        dom = sorted(members(self.evaluate(env, a)))
        cods = [list(members(self.evaluate({**env, x: v}, b))) for v in dom]
        total = math.prod(len(c) for c in cods)
        if total > SIZE_BOUND:
            raise FragmentExceeded(f"a function space with {total} elements exceeds the bound {SIZE_BOUND}")
        return finset(FunGraph(tuple(zip(dom, choice))) for choice in itertools.product(*cods))

    def member(self, env: Mapping[VarName, Value], v: Value, ty: Term) -> bool:
        """``v in [[ty]]``, tested pointwise so that large function spaces are never built."""
        match ty:
            case Pi(x, a, b):
                dom = sorted(members(self.evaluate(env, a)))
                match v:
                    case FunGraph(pairs):
                        if [k for k, _ in pairs] != dom:
                            return False
                    case SimV():
                        pass
                    case _:
                        return False
                return all(self.member({**env, x: k}, self.apply(v, k), b) for k in dom)
            case Sigma(x, a, b):
                return (
                    isinstance(v, PairV)
                    and self.member(env, v.fst, a)
                    and self.member({**env, x: v.fst}, v.snd, b)
                )
        return is_member(v, self.evaluate(env, ty))

    def environments(self, ctx: Context, fixed: Mapping[VarName, Value] | None = None) -> Iterator[dict[VarName, Value]]:
        """Every tuple of values for the context entries, in order.

        Entries named in ``fixed`` take that value instead of being enumerated.
        """
        fixed = fixed or {}
        count = 0

        def go(i: int, env: dict[VarName, Value]) -> Iterator[dict[VarName, Value]]:
            nonlocal count
            if i == len(ctx.entries):
                count += 1
                if count > ENV_BOUND:
                    raise FragmentExceeded(f"more than {ENV_BOUND} environments")
                yield dict(env)
                return
            x, ty = ctx.entries[i]
            if x in fixed:
                if not self.member(env, fixed[x], ty):
                    return
                choices = iter((fixed[x],))
            else:
                choices = members(self.evaluate(env, ty))
            for v in choices:
                env[x] = v
                yield from go(i + 1, env)
                del env[x]

        return go(0, {})


def evaluate(t: Term, env: Mapping[VarName, Value] | None = None, model: Model | None = None) -> Value:
    return (model or Model()).evaluate(env or {}, t)


eval_term = evaluate
eval_type = evaluate


# ---------------------------------------------------------------------------
# soundness


@dataclass
class SoundnessReport:
    environments: int
    violations: list[SoundnessViolation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violation(self) -> None:
        if self.violations:
            raise self.violations[0]


def check_soundness(
    ctx: Context,
    m: Term,
    a: Term,
    model: Model | None = None,
    check: bool = True,
    fixed: Mapping[VarName, Value] | None = None,
) -> SoundnessReport:
    """Check ``[[m]] in [[a]]`` in every environment of ``[[ctx]]``.

    With ``check`` the judgment is first confirmed by the stratified checker.
    """
    model = model or Model()
    if check:
        from .stratified import StratifiedChecker

        c = StratifiedChecker()
        ctx, _ = c.elaborate_context(ctx)
        a, _, _ = c.infer_type(ctx, a)
        c.check(ctx, m, a)
    n, bad = 0, []
    for env in model.environments(ctx, fixed):
        n += 1
        v = model.evaluate(env, m)
        if not model.member(env, v, a):
            bad.append(SoundnessViolation(env, v, a))
    return SoundnessReport(n, bad)


def equality_denotation_is_proof_irrelevant(env: Mapping[VarName, Value], a: Term, b: Term, model: Model | None = None) -> bool:
    """``[[Eq a b]]`` is either the empty set or the singleton of the empty set."""
    return (model or Model()).evaluate(env, TypeEq(a, b)) in (EMPTY, ONE)


def size_of(s: Value) -> int:
    return _count(s)
