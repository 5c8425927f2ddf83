"""The prime and star operators, context tripling, and the theorem runner.

``star`` sends a term to the witness that it preserves the logical relation;
``prime`` produces the second copy of a term.  The theorem runner does not
re-prove anything: it computes the translated judgment and checks it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .checker import Checker, CheckError, Derivation
from .rewrite import FuelExhausted, MissingAnnotation, contract_eq_star, contract_pi_star, contract_sigma_star
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
    apps,
    decorated_closure,
    free_vars,
    fresh,
    relaxed_gc,
    rename_vars,
    size,
    subst,
    subst1,
)


class UnsupportedStarClause(Exception):
    """The translation has no clause for this node."""


class StarContextClash(Exception):
    """Tripling the context would bind the same name twice."""


class PreconditionError(Exception):
    pass


class OpenTerm(PreconditionError):
    pass


class TheoremInstanceFailure(Exception):
    """The translated judgment did not check; this indicates a bug."""

    def __init__(self, judgment: str, cause: Exception):
        self.judgment, self.cause = judgment, cause
        super().__init__(f"translated judgment failed: {judgment}\n  cause: {cause}")


# ---------------------------------------------------------------------------
# prime


def prime(t: Term) -> Term:
    """Append a prime to every variable, bound or free."""
    return rename_vars(t, VarName.prime)


def prime_context(ctx: Context) -> Context:
    return Context(tuple((x.prime(), prime(ty)) for x, ty in ctx))


# ---------------------------------------------------------------------------
# star


def _triple_binder(whole: Term, x: VarName, bodies: list[Term]) -> tuple[VarName, list[Term]]:
    """Rename ``x`` when its triple would capture a translated free variable."""
    avoid = decorated_closure(free_vars(whole))
    if avoid.isdisjoint((x, x.prime(), x.star())):
        return x, bodies
    for b in bodies:
        avoid |= free_vars(b)
    z = fresh(x, avoid, triple=True)
    return z, [subst1(b, x, Var(z)) for b in bodies]


def _pick(hint: str, avoid: set[VarName]) -> VarName:
    n = VarName(hint)
    if avoid.isdisjoint((n, n.prime(), n.star())):
        return n
    return fresh(n, avoid, triple=True)


def _triple_lams(x: VarName, ty: Term, rel_ty: Term, body: Term) -> Term:
    """``fun (x : A) (x' : A') (x^* : rel). body``."""
    return Lam(x, ty, Lam(x.prime(), prime(ty), Lam(x.star(), rel_ty, body)))


def star(t: Term) -> Term:
    """The star translation, clause by clause."""
    match t:
        case Star():
            return StarStar()
        case StarN(n):
            return StarStar(n)
        case Var(x):
            return Var(x.star())
        case Pi(x, a, b) | Sigma(x, a, b):
            x, (b,) = _triple_binder(t, x, [b])
            node = PiStar if isinstance(t, Pi) else SigmaStar
            return node(x, x.prime(), x.star(), star(a), star(b), Ann(a, prime(a), b, prime(b)))
        case TypeEq(a, b):
            return EqStar(star(a), star(b), Ann(a, prime(a), b, prime(b)))
        case Sim(e):
            return star(e)
        case Rel(e, a, b):
            return apps(star(e), a, prime(a), star(a), b, prime(b), star(b))
        case Lam(x, a, b):
            x, (b,) = _triple_binder(t, x, [b])
            return _triple_lams(x, a, Rel(star(a), Var(x), Var(x.prime())), star(b))
        case App(f, a):
            return apps(star(f), a, prime(a), star(a))
        case Pair(a, b):
            return Pair(star(a), star(b))
        case Proj1(p):
            return Proj1(star(p))
        case Proj2(p):
            return Proj2(star(p))
        case StarStar(level):
            u = Star() if level is None else StarN(level)
            a, b = VarName("A"), VarName("B")
            body = EqStar(Var(a.star()), Var(b.star()), Ann(Var(a), Var(a.prime()), Var(b), Var(b.prime())))
            inner = _triple_lams(b, u, TypeEq(Var(b), Var(b.prime())), body)
            return _triple_lams(a, u, TypeEq(Var(a), Var(a.prime())), inner)
        case PiStar() | SigmaStar() | EqStar():
            return _star_congruence(t)
        case Unit():
            return UnitStar()
        case TT():
            return TT()
        case UnitStar():
            x, y = VarName("x"), VarName("y")
            inner = _triple_lams(y, Unit(), Rel(UnitStar(), Var(y), Var(y.prime())), UnitStar())
            return _triple_lams(x, Unit(), Rel(UnitStar(), Var(x), Var(x.prime())), inner)
        case Const():
            raise UnsupportedStarClause("the Const eliminator has no star clause")
    raise AssertionError(f"unexpected node {t!r}")


def _star_congruence(node: PiStar | SigmaStar | EqStar) -> Term:
    """Translate a congruence former.

    The translation abstracts two related triples and translates what the
    relation over ``node`` unfolds to.  Written out, this is exactly the
    long clause for each former.
    """
    if node.ann is None:
        raise MissingAnnotation(f"{type(node).__name__} must be elaborated by the checker before translation")
    ann = node.ann
    avoid = decorated_closure(free_vars(node))
    match node:
        case PiStar():
            hint, left, right = "f", Pi(node.x, ann.dom, ann.cod), Pi(node.x1, ann.dom1, ann.cod1)
        case SigmaStar():
            hint, left, right = "p", Sigma(node.x, ann.dom, ann.cod), Sigma(node.x1, ann.dom1, ann.cod1)
        case _:
            hint, left, right = "e", TypeEq(ann.dom, ann.cod), TypeEq(ann.dom1, ann.cod1)
    u = _pick(hint, avoid)
    avoid |= decorated_closure([u])
    w = _pick(hint + "1", avoid)
    match node:
        case PiStar():
            unfolded = contract_pi_star(node, Var(u), Var(w))
        case SigmaStar():
            unfolded = contract_sigma_star(node, Var(u), Var(w))
        case _:
            unfolded = contract_eq_star(node, Var(u), Var(w))
    body = star(unfolded)
    inner = _triple_lams(w, right, Rel(star(right), Var(w), Var(w.prime())), body)
    return _triple_lams(u, left, Rel(star(left), Var(u), Var(u.prime())), inner)


def star_context(ctx: Context) -> Context:
    """Replace each ``x : A`` by ``x : A, x' : A', x^* : x ~[A^*] x'``."""
    entries: list[tuple[VarName, Term]] = []
    for x, a in ctx:
        entries += [(x, a), (x.prime(), prime(a)), (x.star(), Rel(star(a), Var(x), Var(x.prime())))]
    names = [n for n, _ in entries]
    if len(set(names)) != len(names):
        dup = sorted({str(n) for n in names if names.count(n) > 1})
        raise StarContextClash(f"tripled context binds {', '.join(dup)} twice")
    return Context(tuple(entries))


# ---------------------------------------------------------------------------
# theorem runner


@dataclass(frozen=True)
class StarResult:
    context: Context
    subject: Term
    stated_type: Term
    derivation: Derivation
    size_stats: tuple[int, int]

    def __str__(self) -> str:
        return f"{self.subject} : {self.stated_type}"


def run_extensionality_theorem(ctx: Context, m: Term, a: Term, checker: Checker | None = None) -> StarResult:
    """Check the translated judgment ``ctx* |- m* : m ~[a*] m'``."""
    checker = checker or Checker()
    try:
        ctx2, _ = checker.elaborate_context(ctx)
        a2, _, _ = checker.infer_type(ctx2, a)
        m2, _ = checker.check(ctx2, m, a2)
    except CheckError as err:
        raise PreconditionError(f"the source judgment does not check: {err}") from err
    sctx = star_context(ctx2)
    subject = star(m2)
    stated = Rel(star(a2), m2, prime(m2))
    return _check_translated(checker, sctx, subject, stated, size(m2))


def _check_translated(checker: Checker, sctx: Context, subject: Term, stated: Term, in_size: int) -> StarResult:
    try:
        with relaxed_gc():
            sctx2, _ = checker.elaborate_context(sctx)
            stated2, _, _ = checker.infer_type(sctx2, stated)
            subject2, d = checker.check(sctx2, subject, stated2)
    except (CheckError, FuelExhausted, MissingAnnotation) as err:
        entries = ", ".join(f"{x} : {ty}" for x, ty in sctx)
        raise TheoremInstanceFailure(f"{entries} |- {subject} : {stated}", err) from err
    return StarResult(sctx2, subject2, stated2, d, (in_size, size(subject2)))


def _closed(*ts: Term) -> None:
    for t in ts:
        if free_vars(t):
            raise OpenTerm(f"{t} has free variables {sorted(map(str, free_vars(t)))}")


def ext_eq(a: Term, checker: Checker | None = None) -> Term:
    """The extensional equality on a closed type, as a binary type family."""
    _closed(a)
    checker = checker or Checker()
    a2, _, _ = checker.infer_type(Context(), a)
    x = VarName("a")
    return Lam(x, a2, Lam(x.prime(), a2, Rel(star(a2), Var(x), Var(x.prime()))))


def refl(a: Term, ty: Term, checker: Checker | None = None) -> tuple[Term, Term, Derivation]:
    """Reflexivity of a closed term: its own translation.

    Returns (a^*, the checked type ``a ~[A^*] a``, derivation).  Since ``a'``
    is alpha-equal to ``a`` for closed terms the stated type uses ``a`` twice.
    """
    _closed(a, ty)
    checker = checker or Checker()
    try:
        ty2, _, _ = checker.infer_type(Context(), ty)
        a2, _ = checker.check(Context(), a, ty2)
    except CheckError as err:
        raise PreconditionError(f"the source judgment does not check: {err}") from err
    assert alpha_eq(prime(a2), a2)
    res = _check_translated(checker, Context(), star(a2), Rel(star(ty2), a2, a2), size(a2))
    return res.subject, res.stated_type, res.derivation


def refl_tower(a: Term, ty: Term, depth: int, checker: Checker | None = None) -> list[tuple[Term, Term, Derivation]]:
    """``refl a``, ``refl (refl a)``, ... up to ``depth`` levels."""
    out = []
    for _ in range(depth):
        a, ty, d = refl(a, ty, checker)
        out.append((a, ty, d))
    return out


# ---------------------------------------------------------------------------
# paths


class PathTypeError(Exception):
    def __init__(self, index: int, condition: str, cause: Exception):
        self.index, self.condition, self.cause = index, condition, cause
        super().__init__(f"path entry {index} fails its {condition} condition: {cause}")


@dataclass(frozen=True)
class PathWitness:
    context: Context
    triples: tuple[tuple[Term, Term, Term], ...]

    def substitutions(self) -> tuple[dict, dict, dict]:
        """Maps for the left endpoint, the right endpoint, and the full triple."""
        left, right, full = {}, {}, {}
        for (x, _), (a, a1, a_s) in zip(self.context, self.triples):
            left[x] = a
            right[x] = a1
            full.update({x: a, x.prime(): a1, x.star(): a_s})
        return left, right, full


def check_path(ctx: Context, triples: list[tuple[Term, Term, Term]], checker: Checker | None = None) -> PathWitness:
    """Verify that closed triples form a path through ``ctx``."""
    checker = checker or Checker()
    if len(triples) != len(ctx):
        raise PreconditionError(f"path has {len(triples)} entries for a context of length {len(ctx)}")
    ctx2, _ = checker.elaborate_context(ctx)
    left: dict[VarName, Term] = {}
    right: dict[VarName, Term] = {}
    full: dict[VarName, Term] = {}
    out = []
    empty = Context()
    for i, ((x, a), (t, t1, ts)) in enumerate(zip(ctx2, triples)):
        _closed(t, t1, ts)
        try:
            t, _ = checker.check(empty, t, subst(a, left))
        except CheckError as err:
            raise PathTypeError(i, "left", err) from err
        try:
            t1, _ = checker.check(empty, t1, subst(a, right))
        except CheckError as err:
            raise PathTypeError(i, "right", err) from err
        try:
            ts, _ = checker.check(empty, ts, Rel(subst(star(a), full), t, t1))
        except (CheckError, MissingAnnotation) as err:
            raise PathTypeError(i, "related", err) from err
        left[x], right[x] = t, t1
        full.update({x: t, x.prime(): t1, x.star(): ts})
        out.append((t, t1, ts))
    return PathWitness(ctx2, tuple(out))


def path_equality(path: PathWitness, b: Term, checker: Checker | None = None) -> tuple[Term, Derivation]:
    """A type over the context yields an equality between its two endpoint instances."""
    checker = checker or Checker()
    b2, _, _ = checker.infer_type(path.context, b)
    left, right, full = path.substitutions()
    witness = subst(star(b2), full)
    goal = TypeEq(subst(b2, left), subst(b2, right))
    w2, d = checker.check(Context(), witness, goal)
    return w2, d


def path_term_relation(path: PathWitness, m: Term, ty: Term, checker: Checker | None = None) -> tuple[Term, Derivation]:
    """A term over the context relates its two endpoint instances."""
    checker = checker or Checker()
    ty2, _, _ = checker.infer_type(path.context, ty)
    m2, _ = checker.check(path.context, m, ty2)
    left, right, full = path.substitutions()
    witness = subst(star(m2), full)
    goal = Rel(subst(star(ty2), full), subst(m2, left), subst(m2, right))
    w2, d = checker.check(Context(), witness, goal)
    return w2, d


__all__ = [
    "OpenTerm",
    "PathTypeError",
    "PathWitness",
    "PreconditionError",
    "StarContextClash",
    "StarResult",
    "TheoremInstanceFailure",
    "UnsupportedStarClause",
    "check_path",
    "ext_eq",
    "path_equality",
    "path_term_relation",
    "prime",
    "prime_context",
    "refl",
    "refl_tower",
    "run_extensionality_theorem",
    "star",
    "star_context",
]

