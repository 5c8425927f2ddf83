"""The stratified system: a universe hierarchy with cumulativity, relation
elimination one level down, and the unit type.

Levels are concrete integers.  ``*-1`` (``StarN(-1)``) classifies relations
between level-0 types.  It is read as the universe of the unit type: it sits
in ``*0``, and ``Unit`` checks against it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .checker import (
    CheckError,
    Checker,
    ConversionFailure,
    Derivation,
    Judgment,
    UnsupportedForm,
)
from .rewrite import normalize
from .syntax import (
    TT,
    Const,
    Context,
    Pi,
    Star,
    StarN,
    StarStar,
    Term,
    TypeEq,
    Unit,
    UnitStar,
    children,
    subst1,
    with_children,
)

CLASSIFIER = -1


class UniverseError(CheckError):
    def __init__(self, location: Term, needed: int, given: int, tag: int | None = None):
        self.needed, self.given, self.tag = needed, given, tag
        super().__init__(f"universe inconsistency: needs *{needed} but only *{given} is allowed", location)


class LevelUnderflow(CheckError):
    """A relation would land below the classifier level."""


class Unstratifiable(Exception):
    def __init__(self, witness: list[str]):
        self.witness = witness
        super().__init__("no level assignment within bounds: " + "; ".join(witness))


@dataclass
class StratifiedChecker(Checker):
    """Checker for the hierarchy ``*n : *(n+1)``."""

    system = "lambda-eq-n"

    def infer_universe(self, ctx: Context, t: Term):
        if isinstance(t, Star):
            raise UnsupportedForm("bare * is not allowed here; check this file without --stratified or write *0, *1, ...", t)
        if t.level < CLASSIFIER:
            raise UnsupportedForm(f"no universe below *{CLASSIFIER}", t)
        ty = StarN(t.level + 1)
        return t, ty, Derivation(Judgment(ctx, t, ty), "Axiom")

    def sort_level(self, ty: Term) -> int | None:
        return ty.level if isinstance(ty, StarN) else None

    def sort(self, *levels: int) -> Term:
        return StarN(max(0, *levels))

    def rel_levels(self, ctx: Context, a: Term, b: Term):
        _, la, da = self.infer_type(ctx, a)
        _, lb, db = self.infer_type(ctx, b)
        return (la, lb), (da, db)

    def rel_codomain(self, levels: tuple[int, int]) -> Term:
        n = max(levels[0], levels[1], 0) - 1
        if n < CLASSIFIER:
            raise LevelUnderflow(f"relation level {n} is below the classifier")
        return StarN(n)

    def star_star_type(self, t: StarStar) -> Term:
        if t.level is None:
            raise UnsupportedForm("*^* needs a level here, e.g. *0^*", t)
        if t.level < CLASSIFIER:
            raise UnsupportedForm(f"*^* needs a level of at least {CLASSIFIER}", t)
        return TypeEq(StarN(t.level), StarN(t.level))

    def infer_extra(self, ctx: Context, t: Term):
        match t:
            case Unit():
                ty = StarN(0)
                return t, ty, Derivation(Judgment(ctx, t, ty), "UnitForm")
            case TT():
                return t, Unit(), Derivation(Judgment(ctx, t, Unit()), "UnitIntro")
            case UnitStar():
                ty = TypeEq(Unit(), Unit())
                return t, ty, Derivation(Judgment(ctx, t, ty), "UnitStarIntro")
            case Const(x, fam, body):
                x2, (fam,) = self.open_binder(ctx, x, fam)
                fam2, _, dfam = self.infer_type(ctx.extend(x2, Unit()), fam)
                body2, dbody = self.check(ctx, body, subst1(fam2, x2, TT()))
                out = Const(x2, fam2, body2)
                ty = Pi(x2, Unit(), fam2)
                return out, ty, Derivation(Judgment(ctx, out, ty), "ConstIntro", (dfam, dbody))
        raise AssertionError(t)

    def subsume(self, ctx: Context, t: Term, d: Derivation, inferred: Term, expected: Term):
        wi, we = self.whnf(inferred), self.whnf(expected)
        if isinstance(t, Unit) and we == StarN(CLASSIFIER):
            # *-1 is notation for the universe of the unit type
            d = Derivation(Judgment(ctx, t, we), "UnitForm")
            return self.conv_node(d, expected)
        if not (isinstance(wi, StarN) and isinstance(we, StarN)):
            return None
        if wi.level > we.level:
            raise UniverseError(t, wi.level, we.level, we.tag)
        d = self.conv_node(d, wi)
        d = Derivation(Judgment(ctx, t, we), "Cumul", (d,))
        return self.conv_node(d, expected)


# ---------------------------------------------------------------------------
# functional API


def infer_type_stratified(ctx: Context, t: Term, fuel: int | None = None) -> tuple[Term, int, Derivation]:
    """Return the inferred type, its universe level, and the derivation."""
    c = StratifiedChecker(fuel) if fuel else StratifiedChecker()
    _, ty, d = c.infer(ctx, t)
    level = ty.level + 1 if isinstance(ty, StarN) else c.infer_type(ctx, ty)[1]
    return ty, level, d


def level_of_type(ctx: Context, ty: Term, checker: StratifiedChecker | None = None) -> int:
    """The least n with ``ctx |- ty : *n`` (n = -1 for relation types over level 0)."""
    checker = checker or StratifiedChecker()
    return checker.infer_type(ctx, ty)[1]


# ---------------------------------------------------------------------------
# level elaboration


def _tag_levels(t: Term, base: int, counter: list[int]) -> Term:
    match t:
        case Star():
            counter[0] += 1
            return StarN(base, tag=counter[0])
        case StarStar(None):
            counter[0] += 1
            return StarStar(base, tag=counter[0])
    cs = children(t)
    if not cs:
        return t
    new = with_children(t, [_tag_levels(c, base, counter) for c in cs])
    ann = getattr(t, "ann", None)
    if ann is not None:
        new = replace(new, ann=None)
    return new


def _set_levels(t: Term, levels: dict[int, int]) -> Term:
    match t:
        case StarN(_, tag) if tag is not None:
            return StarN(levels[tag], tag=tag)
        case StarStar(_, tag) if tag is not None:
            return StarStar(levels[tag], tag=tag)
    cs = children(t)
    if not cs:
        return t
    return with_children(t, [_set_levels(c, levels) for c in cs])


def _first_level_clash(s: Term, t: Term) -> tuple[Term, Term] | None:
    """First pair of universe nodes at matching positions with different levels."""
    if isinstance(s, (StarN, StarStar)) and type(s) is type(t):
        return (s, t) if s.level != t.level else None
    if type(s) is not type(t):
        return None
    for a, b in zip(children(s), children(t)):
        hit = _first_level_clash(a, b)
        if hit is not None:
            return hit
    return None


def _strip_tags(t: Term) -> Term:
    match t:
        case StarN(n, tag) if tag is not None:
            return StarN(n)
        case StarStar(n, tag) if tag is not None:
            return StarStar(n)
    cs = children(t)
    if not cs:
        return t
    return with_children(t, [_strip_tags(c) for c in cs])


def elaborate_judgment(
    ctx: Context,
    t: Term,
    ty: Term | None = None,
    base: int = 0,
    max_level: int = 3,
    checker: StratifiedChecker | None = None,
) -> tuple[Context, Term, Term]:
    """Assign levels to every ``*`` in a context, a term and optionally its type.

    All occurrences start at ``base``; each universe or conversion clash
    raises the lower occurrence until everything checks or some level would
    exceed ``max_level``.
    """
    checker = checker or StratifiedChecker()
    counter = [0]
    ctx_t = [(x, _tag_levels(a, base, counter)) for x, a in ctx]
    t_t = _tag_levels(t, base, counter)
    ty_t = _tag_levels(ty, base, counter) if ty is not None else None
    levels = {i: base for i in range(1, counter[0] + 1)}
    witness: list[str] = []
    seen: set[tuple[int, ...]] = set()
    while True:
        state = tuple(levels.values())
        if state in seen:
            witness.append("the assignment repeats")
            raise Unstratifiable(witness)
        seen.add(state)
        cur_ctx = Context(tuple((x, _set_levels(a, levels)) for x, a in ctx_t))
        cur_t = _set_levels(t_t, levels)
        cur_ty = _set_levels(ty_t, levels) if ty_t is not None else None
        try:
            ectx, _ = checker.elaborate_context(cur_ctx)
            if cur_ty is None:
                out, out_ty, _ = checker.infer(ectx, cur_t)
            else:
                out_ty, _, _ = checker.infer_type(ectx, cur_ty)
                out, _ = checker.check(ectx, cur_t, out_ty)
            return (
                Context(tuple((x, _strip_tags(a)) for x, a in ectx)),
                _strip_tags(out),
                _strip_tags(out_ty),
            )
        except UniverseError as err:
            bump = _bump_from_universe(err)
        except ConversionFailure as err:
            bump = _bump_from_conversion(err, checker)
        except CheckError as err:
            cause = err.cause if hasattr(err, "cause") else err
            if isinstance(cause, UniverseError):
                bump = _bump_from_universe(cause)
            elif isinstance(cause, ConversionFailure):
                bump = _bump_from_conversion(cause, checker)
            else:
                raise
        tag, level, note = bump
        if tag is None:
            witness.append(note)
            raise Unstratifiable(witness)
        witness.append(note)
        if not CLASSIFIER <= level <= max_level:
            raise Unstratifiable(witness)
        levels[tag] = level


def _bump_from_universe(err: UniverseError) -> tuple[int | None, int, str]:
    if err.tag is None:
        # an untagged level was fixed before elaboration, e.g. by an inlined definition
        return None, err.needed, f"the fixed level {err.given} would have to be {err.needed}"
    return err.tag, err.needed, f"occurrence #{err.tag} must rise from {err.given} to {err.needed}"


def _bump_from_conversion(err: ConversionFailure, checker: StratifiedChecker) -> tuple[int | None, int, str]:
    a = err.nf_inferred if err.nf_inferred is not None else normalize(err.inferred, checker.fuel)
    b = err.nf_expected if err.nf_expected is not None else normalize(err.expected, checker.fuel)
    hit = _first_level_clash(a, b)
    if hit is None:
        raise err
    lo, hi = sorted(hit, key=lambda n: n.level)
    if lo.tag is None and hi.tag is None:
        return None, hi.level, f"fixed levels {lo.level} and {hi.level} would have to agree"
    if lo.tag is None:
        # only a fixed level can pull an occurrence down, e.g. a relation's codomain
        return hi.tag, lo.level, f"occurrence #{hi.tag} must move from {hi.level} to the fixed level {lo.level}"
    return lo.tag, hi.level, f"occurrence #{lo.tag} must rise from {lo.level} to {hi.level} to match #{hi.tag}"


def elaborate_levels(t: Term, base: int = 0, max_level: int = 3, ctx: Context | None = None) -> Term:
    """Replace each ``*`` in ``t`` by a level so that it checks in the hierarchy."""
    return elaborate_judgment(ctx or Context(), t, None, base, max_level)[1]


def erase(t: Term) -> Term:
    """Forget levels: ``*n`` becomes ``*`` and levelled ``*^*`` becomes ``*^*``."""
    match t:
        case StarN():
            return Star()
        case StarStar(n) if n is not None:
            return StarStar()
    cs = children(t)
    if not cs:
        return t
    return with_children(t, [erase(c) for c in cs])


def erase_context(ctx: Context) -> Context:
    return Context(tuple((x, erase(a)) for x, a in ctx))


def check_file_stratified(src, fuel: int | None = None, trace: bool = False, jobs: int = 1):
    """Check a parsed file in the hierarchy, reporting a level per declaration."""
    from .session import check_file

    return check_file(src, StratifiedChecker(fuel) if fuel else StratifiedChecker(), trace, jobs)
