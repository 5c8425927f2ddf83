"""Bidirectional type checker for type-in-type with a type-equality type.

Every successful judgment comes with a :class:`Derivation` whose nodes are
named after the typing rules.  Variables are looked up anywhere in the context
(weakening is admissible), and conversion is applied at application, pairing
and annotation boundaries.  The stratified system reuses this class through
the hooks at the top of :class:`Checker`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .rewrite import convertible, default_fuel, normalize, whnf
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
    fresh,
    free_vars,
    subst,
    subst1,
)

RULES = (
    "Axiom",
    "Var",
    "Weaken",
    "PiForm",
    "SigmaForm",
    "EqForm",
    "RelElim",
    "Lam",
    "App",
    "Pair",
    "Proj1",
    "Proj2",
    "Conv",
    "StarStarIntro",
    "PiStarIntro",
    "SigmaStarIntro",
    "EqStarIntro",
)
STRATIFIED_RULES = ("Cumul", "UnitForm", "UnitIntro", "UnitStarIntro", "ConstIntro")


@dataclass(frozen=True)
class Judgment:
    ctx: Context
    subject: Term
    type: Term

    def __str__(self) -> str:
        entries = ", ".join(f"{x} : {ty}" for x, ty in self.ctx)
        return f"{entries} |- {self.subject} : {self.type}"


@dataclass(frozen=True)
class Derivation:
    conclusion: Judgment
    rule: str
    premises: tuple[Derivation, ...] = ()

    def nodes(self) -> Iterator[Derivation]:
        stack = [self]
        while stack:
            d = stack.pop()
            yield d
            stack.extend(reversed(d.premises))

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def rules(self) -> set[str]:
        return {d.rule for d in self.nodes()}


# ---------------------------------------------------------------------------
# errors


class CheckError(Exception):
    """Base of all checking errors; ``location`` is the offending subterm."""

    def __init__(self, message: str, location: Term | None = None):
        self.location = location
        where = f" in {location}" if location is not None else ""
        super().__init__(message + where)


class TypeMismatch(CheckError):
    def __init__(self, location: Term, expected: str, found: Term | str):
        self.expected, self.found = expected, found
        super().__init__(f"expected {expected}, found {found}", location)


class UnboundVariable(CheckError):
    def __init__(self, x: VarName):
        self.name = x
        super().__init__(f"unbound variable {x}")


class NotAFunction(CheckError):
    def __init__(self, location: Term, found: Term):
        super().__init__(f"not a function: has type {found}", location)


class NotAPair(CheckError):
    def __init__(self, location: Term, found: Term):
        super().__init__(f"not a pair: has type {found}", location)


class NotATypeEquality(CheckError):
    def __init__(self, location: Term, found: Term):
        super().__init__(f"not a type equality: has type {found}", location)


class IllFormedContext(CheckError):
    def __init__(self, entry: VarName, cause: Exception):
        self.entry, self.cause = entry, cause
        super().__init__(f"ill-formed context entry {entry}: {cause}")


class ConversionFailure(CheckError):
    def __init__(self, location: Term, inferred: Term, expected: Term, nf_inferred: Term | None, nf_expected: Term | None):
        self.inferred, self.expected = inferred, expected
        self.nf_inferred, self.nf_expected = nf_inferred, nf_expected
        super().__init__(
            f"type {inferred} is not convertible to {expected} "
            f"(normal forms {nf_inferred} and {nf_expected})",
            location,
        )


class UnsupportedForm(CheckError):
    pass


# ---------------------------------------------------------------------------
# checker


@dataclass
class Checker:
    """Checker for the unstratified system (``* : *``)."""

    fuel: int = field(default_factory=default_fuel)
    system = "lambda-eq"

    # -- universe hooks --------------------------------------------------

    def infer_universe(self, ctx: Context, t: Term) -> tuple[Term, Term, Derivation]:
        if isinstance(t, Star):
            return t, Star(), Derivation(Judgment(ctx, t, Star()), "Axiom")
        raise UnsupportedForm(f"{type(t).__name__} belongs to the stratified system", t)

    def sort_level(self, ty: Term) -> int | None:
        return 0 if isinstance(ty, Star) else None

    def sort(self, *levels: int) -> Term:
        return Star()

    def rel_codomain(self, levels: tuple[int, int]) -> Term:
        return Star()

    def star_star_type(self, t: StarStar) -> Term:
        if t.level is not None:
            raise UnsupportedForm("levelled *^* belongs to the stratified system", t)
        return TypeEq(Star(), Star())

    def infer_extra(self, ctx: Context, t: Term) -> tuple[Term, Term, Derivation]:
        raise UnsupportedForm(f"{type(t).__name__} belongs to the stratified system", t)

    def subsume(self, ctx: Context, t: Term, d: Derivation, inferred: Term, expected: Term) -> Derivation | None:
        """Hook for cumulativity; None means fall back to conversion."""
        return None

    # -- helpers -----------------------------------------------------------

    def whnf(self, t: Term) -> Term:
        return whnf(t, self.fuel)

    def convertible(self, s: Term, t: Term) -> bool:
        return convertible(s, t, self.fuel)

    def conv_node(self, d: Derivation, ty: Term) -> Derivation:
        """Retype ``d`` at a convertible ``ty``, recording a Conv node when the types differ."""
        if ty is d.conclusion.type or alpha_eq(ty, d.conclusion.type):
            return d
        return Derivation(Judgment(d.conclusion.ctx, d.conclusion.subject, ty), "Conv", (d,))

    @staticmethod
    def open_binder(ctx: Context, x: VarName, *bodies: Term) -> tuple[VarName, list[Term]]:
        """Rename ``x`` away from the context so it can be pushed."""
        if x not in ctx:
            return x, list(bodies)
        avoid = set(ctx.names())
        for b in bodies:
            avoid |= free_vars(b)
        z = fresh(x, avoid)
        return z, [subst1(b, x, Var(z)) for b in bodies]

    # -- public API --------------------------------------------------------

    def infer(self, ctx: Context, t: Term) -> tuple[Term, Term, Derivation]:
        """Return (elaborated term, type, derivation)."""
        match t:
            case Star() | StarN():
                return self.infer_universe(ctx, t)
            case Var(x):
                ty = ctx.lookup(x)
                if ty is None:
                    raise UnboundVariable(x)
                rule = "Var" if ctx.position(x) == len(ctx) - 1 else "Weaken"
                return t, ty, Derivation(Judgment(ctx, t, ty), rule)
            case Pi(x, a, b) | Sigma(x, a, b):
                a2, la, da = self.infer_type(ctx, a)
                x2, (b,) = self.open_binder(ctx, x, b)
                b2, lb, db = self.infer_type(ctx.extend(x2, a2), b)
                out = type(t)(x2, a2, b2)
                ty = self.sort(la, lb)
                rule = "PiForm" if isinstance(t, Pi) else "SigmaForm"
                return out, ty, Derivation(Judgment(ctx, out, ty), rule, (da, db))
            case TypeEq(a, b):
                a2, la, da = self.infer_type(ctx, a)
                b2, lb, db = self.infer_type(ctx, b)
                out = TypeEq(a2, b2)
                ty = self.sort(la, lb)
                return out, ty, Derivation(Judgment(ctx, out, ty), "EqForm", (da, db))
            case Sim(e):
                return self.infer_sim(ctx, e)
            case Rel(e, a, b):
                s2, sty, ds = self.infer_sim(ctx, e)
                f2, fty, df = self.apply(ctx, s2, sty, ds, a)
                out, ty, d = self.apply(ctx, f2, fty, df, b)
                out = Rel(s2.eq, f2.arg, out.arg)
                return out, ty, Derivation(Judgment(ctx, out, ty), d.rule, d.premises)
            case Lam(x, a, b):
                a2, _, da = self.infer_type(ctx, a)
                x2, (b,) = self.open_binder(ctx, x, b)
                b2, bty, db = self.infer(ctx.extend(x2, a2), b)
                out = Lam(x2, a2, b2)
                ty = Pi(x2, a2, bty)
                return out, ty, Derivation(Judgment(ctx, out, ty), "Lam", (da, db))
            case App(f, a):
                f2, fty, df = self.infer(ctx, f)
                return self.apply(ctx, f2, fty, df, a)
            case Pair(a, b):
                a2, aty, da = self.infer(ctx, a)
                b2, bty, db = self.infer(ctx, b)
                out = Pair(a2, b2)
                ty = Sigma(fresh(VarName("x"), free_vars(bty)), aty, bty)
                return out, ty, Derivation(Judgment(ctx, out, ty), "Pair", (da, db))
            case Proj1(p) | Proj2(p):
                p2, pty, dp = self.infer(ctx, p)
                w = self.whnf(pty)
                if not isinstance(w, Sigma):
                    raise NotAPair(p, pty)
                dp = self.conv_node(dp, w)
                if isinstance(t, Proj1):
                    out, ty, rule = Proj1(p2), w.dom, "Proj1"
                else:
                    out, ty, rule = Proj2(p2), subst1(w.body, w.name, Proj1(p2)), "Proj2"
                return out, ty, Derivation(Judgment(ctx, out, ty), rule, (dp,))
            case StarStar():
                ty = self.star_star_type(t)
                return t, ty, Derivation(Judgment(ctx, t, ty), "StarStarIntro")
            case PiStar() | SigmaStar():
                return self.infer_congruence(ctx, t)
            case EqStar(ls, rs, _):
                ls2, (a, a1), dl = self.infer_equality(ctx, ls)
                rs2, (b, b1), dr = self.infer_equality(ctx, rs)
                out = EqStar(ls2, rs2, Ann(a, a1, b, b1))
                ty = TypeEq(TypeEq(a, b), TypeEq(a1, b1))
                return out, ty, Derivation(Judgment(ctx, out, ty), "EqStarIntro", (dl, dr))
            case Unit() | TT() | UnitStar() | Const():
                return self.infer_extra(ctx, t)
        raise AssertionError(f"unexpected node {t!r}")

    def check(self, ctx: Context, t: Term, expected: Term) -> tuple[Term, Derivation]:
        """Check ``t`` against ``expected`` (assumed to be a type in ``ctx``)."""
        if isinstance(t, Pair):
            w = self.whnf(expected)
            if isinstance(w, Sigma):
                a2, da = self.check(ctx, t.fst, w.dom)
                b2, db = self.check(ctx, t.snd, subst1(w.body, w.name, a2))
                out = Pair(a2, b2)
                d = Derivation(Judgment(ctx, out, w), "Pair", (da, db))
                return out, self.conv_node(d, expected)
        if isinstance(t, Lam):
            w = self.whnf(expected)
            if isinstance(w, Pi):
                a2, _, da = self.infer_type(ctx, t.dom)
                if a2 is w.dom or alpha_eq(a2, w.dom) or self.convertible(a2, w.dom):
                    x2, (body, cod) = self.open_binder(ctx, t.name, t.body, subst1(w.body, w.name, Var(t.name)))
                    b2, db = self.check(ctx.extend(x2, a2), body, cod)
                    out = Lam(x2, a2, b2)
                    d = Derivation(Judgment(ctx, out, Pi(x2, a2, cod)), "Lam", (da, db))
                    return out, self.conv_node(d, expected)
        try:
            return self.check_by_inference(ctx, t, expected)
        except CheckError as err:
            if not isinstance(t, (App, Proj1, Proj2)):
                raise
            try:
                pushed = self.check_redex(ctx, t, expected)
            except CheckError:
                pushed = None
            if pushed is None:
                raise err
            return pushed

    def check_by_inference(self, ctx: Context, t: Term, expected: Term) -> tuple[Term, Derivation]:
        t2, ty, d = self.infer(ctx, t)
        if ty is expected or alpha_eq(ty, expected):
            return t2, d
        sub = self.subsume(ctx, t2, d, ty, expected)
        if sub is not None:
            return t2, sub
        if self.convertible(ty, expected):
            return t2, self.conv_node(d, expected)
        raise ConversionFailure(t, ty, expected, _safe_nf(ty, self.fuel), _safe_nf(expected, self.fuel))

    def check_redex(self, ctx: Context, t: Term, expected: Term) -> tuple[Term, Derivation] | None:
        """Push the expected type into a beta-redex or a projection of a literal pair.

        Tried only after inference fails: pairs are otherwise inferred at
        non-dependent Sigma types, which can be too weak when the redex sits
        where a dependent pair is expected.
        """
        match t:
            case App(Lam(z, a, _) as f, arg) if z not in free_vars(expected):
                fty = Pi(z, a, expected)
                f2, df = self.check(ctx, f, fty)
                a2, da = self.check(ctx, arg, f2.dom)
                out = App(f2, a2)
                return out, Derivation(Judgment(ctx, out, expected), "App", (df, da))
            case Proj1(Pair(a, b)):
                a2, da = self.check(ctx, a, expected)
                b2, bty, db = self.infer(ctx, b)
                w = Sigma(fresh(VarName("x"), free_vars(bty)), expected, bty)
                p2 = Pair(a2, b2)
                dp = Derivation(Judgment(ctx, p2, w), "Pair", (da, db))
                out = Proj1(p2)
                return out, Derivation(Judgment(ctx, out, expected), "Proj1", (dp,))
            case Proj2(Pair(a, b)):
                a2, aty, da = self.infer(ctx, a)
                b2, db = self.check(ctx, b, expected)
                w = Sigma(fresh(VarName("x"), free_vars(expected)), aty, expected)
                p2 = Pair(a2, b2)
                dp = Derivation(Judgment(ctx, p2, w), "Pair", (da, db))
                out = Proj2(p2)
                return out, Derivation(Judgment(ctx, out, expected), "Proj2", (dp,))
        return None

    def infer_type(self, ctx: Context, t: Term) -> tuple[Term, int, Derivation]:
        """Infer that ``t`` is a type; return it elaborated with its universe level."""
        t2, ty, d = self.infer(ctx, t)
        level = self.sort_level(ty)
        if level is None:
            w = self.whnf(ty)
            level = self.sort_level(w)
            if level is None:
                raise TypeMismatch(t, "a universe", ty)
            d = self.conv_node(d, w)
        return t2, level, d

    def check_context(self, ctx: Context) -> list[Derivation]:
        return self.elaborate_context(ctx)[1]

    def elaborate_context(self, ctx: Context) -> tuple[Context, list[Derivation]]:
        out = Context()
        ds = []
        for x, ty in ctx:
            try:
                ty2, _, d = self.infer_type(out, ty)
            except CheckError as err:
                if isinstance(err, UnboundVariable):
                    raise
                raise IllFormedContext(x, err) from err
            out = out.extend(x, ty2)
            ds.append(d)
        return out, ds

    # -- rule helpers ------------------------------------------------------

    def apply(self, ctx: Context, f2: Term, fty: Term, df: Derivation, a: Term) -> tuple[Term, Term, Derivation]:
        w = fty if isinstance(fty, Pi) else self.whnf(fty)
        if not isinstance(w, Pi):
            raise NotAFunction(f2, fty)
        df = self.conv_node(df, w)
        a2, da = self.check(ctx, a, w.dom)
        out = App(f2, a2)
        ty = subst1(w.body, w.name, a2)
        return out, ty, Derivation(Judgment(ctx, out, ty), "App", (df, da))

    def infer_equality(self, ctx: Context, e: Term) -> tuple[Term, tuple[Term, Term], Derivation]:
        e2, ty, d = self.infer(ctx, e)
        w = ty if isinstance(ty, TypeEq) else self.whnf(ty)
        if not isinstance(w, TypeEq):
            raise NotATypeEquality(e, ty)
        return e2, (w.lhs, w.rhs), self.conv_node(d, w)

    def rel_levels(self, ctx: Context, a: Term, b: Term) -> tuple[tuple[int, int], tuple[Derivation, ...]]:
        return (0, 0), ()

    def infer_sim(self, ctx: Context, e: Term) -> tuple[Term, Term, Derivation]:
        e2, (a, b), de = self.infer_equality(ctx, e)
        levels, extra = self.rel_levels(ctx, a, b)
        cod = self.rel_codomain(levels)
        x = fresh(VarName("x"), free_vars(b))
        ty = Pi(x, a, Pi(fresh(VarName("y"), ()), b, cod))
        out = Sim(e2)
        return out, ty, Derivation(Judgment(ctx, out, ty), "RelElim", (de, *extra))

    def infer_congruence(self, ctx: Context, t: PiStar | SigmaStar) -> tuple[Term, Term, Derivation]:
        if len({t.x, t.x1, t.xs}) < 3:
            raise TypeMismatch(t, "three distinct binders", f"[{t.x}, {t.x1}, {t.xs}]")
        as2, (a, a1), da = self.infer_equality(ctx, t.dom_eq)
        # greyed premises: both sides are types
        _, _, dga = self.infer_type(ctx, a)
        _, _, dga1 = self.infer_type(ctx, a1)
        names, body = [], t.body_eq
        taken = set(ctx.names())
        for n in (t.x, t.x1, t.xs):
            if n in taken:
                z = fresh(n, taken | free_vars(body) | {t.x, t.x1, t.xs})
                body = subst1(body, n, Var(z))
                n = z
            taken.add(n)
            names.append(n)
        x, x1, xs = names
        inner = ctx.extend(x, a).extend(x1, a1).extend(xs, Rel(as2, Var(x), Var(x1)))
        bs2, (b, b1), db = self.infer_equality(inner, body)
        nb = self._only_depends(t, b, x, (x1, xs))
        nb1 = self._only_depends(t, b1, x1, (x, xs))
        if nb is not b or nb1 is not b1:
            b, b1 = nb, nb1
            db = self.conv_node(db, TypeEq(b, b1))
        _, _, dgb = self.infer_type(ctx.extend(x, a), b)
        _, _, dgb1 = self.infer_type(ctx.extend(x1, a1), b1)
        former = Pi if isinstance(t, PiStar) else Sigma
        out = type(t)(x, x1, xs, as2, bs2, Ann(a, a1, b, b1))
        ty = TypeEq(former(x, a, b), former(x1, a1, b1))
        rule = "PiStarIntro" if isinstance(t, PiStar) else "SigmaStarIntro"
        return out, ty, Derivation(Judgment(ctx, out, ty), rule, (da, db, dga, dga1, dgb, dgb1))

    def _only_depends(self, where: Term, b: Term, own: VarName, others: tuple[VarName, ...]) -> Term:
        if free_vars(b).isdisjoint(others):
            return b
        nb = normalize(b, self.fuel)
        if free_vars(nb).isdisjoint(others):
            return nb
        raise TypeMismatch(where, f"a codomain equality whose side depends only on {own}", b)


def _safe_nf(t: Term, fuel: int) -> Term | None:
    try:
        return normalize(t, fuel)
    except Exception:
        return None


# ---------------------------------------------------------------------------
# functional API


def infer_type(ctx: Context, t: Term, fuel: int | None = None) -> tuple[Term, Derivation]:
    _, ty, d = Checker(fuel or default_fuel()).infer(ctx, t)
    return ty, d


def check_type(ctx: Context, t: Term, expected: Term, fuel: int | None = None) -> Derivation:
    return Checker(fuel or default_fuel()).check(ctx, t, expected)[1]


def check_context(ctx: Context, fuel: int | None = None) -> list[Derivation]:
    return Checker(fuel or default_fuel()).check_context(ctx)


# ---------------------------------------------------------------------------
# independent derivation validator


class InvalidDerivation(Exception):
    def __init__(self, node: Derivation, reason: str):
        self.node = node
        super().__init__(f"{node.rule} node invalid: {reason}\n  at {node.conclusion}")


def validate(d: Derivation, stratified: bool = False, fuel: int | None = None) -> int:
    """Re-check every node against its rule schema; return the node count.

    This deliberately shares no code with :class:`Checker` beyond
    substitution, alpha-equivalence and conversion.
    """
    fuel = fuel or default_fuel()
    count = 0
    for node in d.nodes():
        _validate_node(node, stratified, fuel)
        count += 1
    return count


def _is_sort(t: Term, stratified: bool) -> int | None:
    if stratified:
        return t.level if isinstance(t, StarN) else None
    return 0 if isinstance(t, Star) else None


def _validate_node(node: Derivation, strat: bool, fuel: int) -> None:
    j = node.conclusion
    ctx, m, ty = j.ctx, j.subject, j.type
    ps = node.premises

    def bad(reason: str) -> None:
        raise InvalidDerivation(node, reason)

    def same_ctx(p: Derivation, expect: Context) -> None:
        if p.conclusion.ctx is not expect and p.conclusion.ctx.entries != expect.entries:
            bad("premise context differs")

    def prem(i: int, subject: Term, typ: Term | None = None, c: Context | None = None) -> Judgment:
        if len(ps) <= i:
            bad(f"missing premise {i}")
        pj = ps[i].conclusion
        same_ctx(ps[i], ctx if c is None else c)
        if not alpha_eq(pj.subject, subject):
            bad(f"premise {i} has subject {pj.subject}, wanted {subject}")
        if typ is not None and not alpha_eq(pj.type, typ):
            bad(f"premise {i} has type {pj.type}, wanted {typ}")
        return pj

    def sort_prem(i: int, subject: Term, c: Context | None = None) -> int:
        pj = prem(i, subject, None, c)
        level = _is_sort(pj.type, strat)
        if level is None:
            bad(f"premise {i} is not typed by a universe")
        return level

    def eq_prem(i: int, subject: Term, c: Context | None = None) -> TypeEq:
        pj = prem(i, subject, None, c)
        if not isinstance(pj.type, TypeEq):
            bad(f"premise {i} is not typed by a type equality")
        return pj.type

    rule = node.rule
    if rule == "Axiom":
        if strat:
            ok = isinstance(m, StarN) and m.level >= -1 and isinstance(ty, StarN) and ty.level == m.level + 1
        else:
            ok = isinstance(m, Star) and isinstance(ty, Star)
        if not ok or ps:
            bad("not an axiom instance")
    elif rule in ("Var", "Weaken"):
        if not isinstance(m, Var) or ps:
            bad("not a variable lookup")
        pos = ctx.position(m.name)
        if pos is None or not alpha_eq(ctx.lookup(m.name), ty):
            bad("variable not in context at this type")
        if (rule == "Var") != (pos == len(ctx) - 1):
            bad("Var must look up the last entry, Weaken an earlier one")
    elif rule in ("PiForm", "SigmaForm"):
        former = Pi if rule == "PiForm" else Sigma
        if not isinstance(m, former) or len(ps) != 2:
            bad("shape")
        la = sort_prem(0, m.dom)
        lb = sort_prem(1, m.body, ctx.extend(m.name, m.dom) if m.name not in ctx else bad("binder clash"))
        _check_formation_sort(bad, ty, strat, la, lb)
    elif rule == "EqForm":
        if not isinstance(m, TypeEq) or len(ps) != 2:
            bad("shape")
        la, lb = sort_prem(0, m.lhs), sort_prem(1, m.rhs)
        _check_formation_sort(bad, ty, strat, la, lb)
    elif rule == "RelElim":
        if not isinstance(m, Sim):
            bad("shape")
        eq = eq_prem(0, m.eq)
        if not (isinstance(ty, Pi) and alpha_eq(ty.dom, eq.lhs) and isinstance(ty.body, Pi)):
            bad("relation type must be A -> B -> universe")
        inner = ty.body
        if ty.name in free_vars(inner) or inner.name in free_vars(inner.body):
            bad("relation type must be non-dependent")
        if not alpha_eq(inner.dom, eq.rhs):
            bad("relation codomain side mismatch")
        if strat:
            if len(ps) != 3:
                bad("stratified elimination records the sides' levels")
            la, lb = sort_prem(1, eq.lhs), sort_prem(2, eq.rhs)
            if not (isinstance(inner.body, StarN) and inner.body.level == max(la, lb, 0) - 1):
                bad("stratified relation must land one level below the related types")
        elif not isinstance(inner.body, Star):
            bad("relation must land in *")
    elif rule == "Lam":
        if not isinstance(m, Lam) or len(ps) != 2:
            bad("shape")
        sort_prem(0, m.dom)
        if m.name in ctx:
            bad("binder clash")
        pj = prem(1, m.body, None, ctx.extend(m.name, m.dom))
        if not alpha_eq(ty, Pi(m.name, m.dom, pj.type)):
            bad("type is not the Pi of the body's type")
    elif rule == "App":
        f_a = _app_view(m)
        if f_a is None or len(ps) != 2:
            bad("shape")
        f, a = f_a
        fj = prem(0, f)
        if not isinstance(fj.type, Pi):
            bad("function premise is not typed by a Pi")
        prem(1, a, fj.type.dom)
        if not alpha_eq(ty, subst1(fj.type.body, fj.type.name, a)):
            bad("result type is not the instantiated codomain")
    elif rule == "Pair":
        if not isinstance(m, Pair) or len(ps) != 2 or not isinstance(ty, Sigma):
            bad("shape")
        prem(0, m.fst, ty.dom)
        prem(1, m.snd, subst1(ty.body, ty.name, m.fst))
    elif rule in ("Proj1", "Proj2"):
        if not isinstance(m, Proj1 if rule == "Proj1" else Proj2) or len(ps) != 1:
            bad("shape")
        pj = prem(0, m.pair)
        if not isinstance(pj.type, Sigma):
            bad("premise is not typed by a Sigma")
        want = pj.type.dom if rule == "Proj1" else subst1(pj.type.body, pj.type.name, Proj1(m.pair))
        if not alpha_eq(ty, want):
            bad("projection type mismatch")
    elif rule == "Conv":
        if len(ps) != 1:
            bad("shape")
        pj = prem(0, m)
        if not convertible(pj.type, ty, fuel):
            bad("types are not convertible")
    elif rule == "Cumul":
        if not strat or len(ps) != 1:
            bad("shape")
        pj = prem(0, m)
        if not (isinstance(pj.type, StarN) and isinstance(ty, StarN) and pj.type.level <= ty.level):
            bad("cumulativity must go up")
    elif rule == "StarStarIntro":
        if not isinstance(m, StarStar) or ps:
            bad("shape")
        u = StarN(m.level) if strat else Star()
        if (m.level is None) == strat or not alpha_eq(ty, TypeEq(u, u)):
            bad("wrong type for *^*")
    elif rule in ("PiStarIntro", "SigmaStarIntro"):
        node_cls, former = (PiStar, Pi) if rule == "PiStarIntro" else (SigmaStar, Sigma)
        if not isinstance(m, node_cls) or len(ps) != 6:
            bad("shape")
        eqa = eq_prem(0, m.dom_eq)
        a, a1 = eqa.lhs, eqa.rhs
        inner = ctx.extend(m.x, a).extend(m.x1, a1).extend(m.xs, Rel(m.dom_eq, Var(m.x), Var(m.x1)))
        eqb = eq_prem(1, m.body_eq, inner)
        b, b1 = eqb.lhs, eqb.rhs
        if not free_vars(b).isdisjoint({m.x1, m.xs}) or not free_vars(b1).isdisjoint({m.x, m.xs}):
            bad("codomain sides depend on the wrong binders")
        sort_prem(2, a)
        sort_prem(3, a1)
        sort_prem(4, b, ctx.extend(m.x, a))
        sort_prem(5, b1, ctx.extend(m.x1, a1))
        if not alpha_eq(ty, TypeEq(former(m.x, a, b), former(m.x1, a1, b1))):
            bad("conclusion type mismatch")
    elif rule == "EqStarIntro":
        if not isinstance(m, EqStar) or len(ps) != 2:
            bad("shape")
        l, r = eq_prem(0, m.lhs_eq), eq_prem(1, m.rhs_eq)
        if not alpha_eq(ty, TypeEq(TypeEq(l.lhs, r.lhs), TypeEq(l.rhs, r.rhs))):
            bad("conclusion type mismatch")
    elif rule == "UnitForm":
        if not (strat and isinstance(m, Unit) and (alpha_eq(ty, StarN(0)) or alpha_eq(ty, StarN(-1))) and not ps):
            bad("shape")
    elif rule == "UnitIntro":
        if not (strat and isinstance(m, TT) and isinstance(ty, Unit) and not ps):
            bad("shape")
    elif rule == "UnitStarIntro":
        if not (strat and isinstance(m, UnitStar) and alpha_eq(ty, TypeEq(Unit(), Unit())) and not ps):
            bad("shape")
    elif rule == "ConstIntro":
        if not (strat and isinstance(m, Const) and len(ps) == 2):
            bad("shape")
        if m.name in ctx:
            bad("binder clash")
        sort_prem(0, m.family, ctx.extend(m.name, Unit()))
        prem(1, m.body, subst1(m.family, m.name, TT()))
        if not alpha_eq(ty, Pi(m.name, Unit(), m.family)):
            bad("conclusion type mismatch")
    else:
        bad("unknown rule")


def _check_formation_sort(bad, ty: Term, strat: bool, la: int, lb: int) -> None:
    if strat:
        if not (isinstance(ty, StarN) and ty.level == max(la, lb, 0)):
            bad("formation must land at the maximum premise level")
    elif not isinstance(ty, Star):
        bad("formation must land in *")


def _app_view(m: Term) -> tuple[Term, Term] | None:
    if isinstance(m, App):
        return m.fn, m.arg
    if isinstance(m, Rel):
        return App(Sim(m.eq), m.lhs), m.rhs
    return None


def check_file(src, fuel: int | None = None, trace: bool = False, jobs: int = 1):
    """Check a parsed file in the unstratified system; see ``session.check_file``."""
    from .session import check_file as run

    return run(src, Checker(fuel or default_fuel()), trace, jobs)
