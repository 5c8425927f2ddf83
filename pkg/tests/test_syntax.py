import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import p
from lambda_eq.generators import raw_term
from lambda_eq.syntax import (
    App,
    Context,
    Lam,
    Pi,
    PiStar,
    Rel,
    Sim,
    Star,
    Var,
    VarName,
    alpha_eq,
    free_vars,
    fresh,
    is_closed,
    name,
    subst,
    subst1,
    v,
)

x, y, z, w = (VarName(n) for n in "xyzw")

terms = st.integers(0, 10**6).map(lambda seed: raw_term(random.Random(seed), 4))


class TestVarName:
    def test_decorations_render_in_order(self):
        n = VarName("x").prime().star()
        assert str(n) == "x'^*"
        assert str(VarName("x").star().star()) == "x^*^*"

    @pytest.mark.parametrize("text", ["x", "x'", "x^*", "x'^*", "x^*'", "x''^*^*", "A1_b"])
    def test_render_parses_back(self, text):
        assert str(name(text)) == text

    def test_equality_needs_same_decorations(self):
        assert VarName("x", "'*") != VarName("x", "*'")
        assert VarName("x", "'*") == name("x'^*")

    def test_fresh_names_carry_no_decoration(self):
        n = fresh(x.prime(), {x.prime(), VarName("x#1")})
        assert n == VarName("x#2")

    def test_fresh_triple_avoids_decorated_forms(self):
        assert fresh(x, {VarName("x#1", "*")}, triple=True) == VarName("x#2")

    @given(st.text("'*", max_size=6))
    def test_prime_and_star_are_injective(self, deco):
        n = VarName("x", deco)
        assert n.prime() != n.star()
        assert name(str(n)) == n


class TestAlpha:
    def test_bound_renaming(self):
        assert alpha_eq(p("fun (x : *). x"), p("fun (y : *). y"))

    def test_different_bodies(self):
        assert not alpha_eq(p("fun (x : *). x"), p("fun (x : *). *"))

    def test_rel_is_sugar_for_applied_sim(self):
        e, a, b = v("e"), v("a"), v("b")
        assert alpha_eq(Rel(e, a, b), App(App(Sim(e), a), b))
        assert alpha_eq(p("a ~[e] b"), p("~[e] a b"))

    def test_free_variables_are_not_renamed(self):
        assert not alpha_eq(p("fun (x : *). y"), p("fun (x : *). z"))

    def test_pi_star_binds_three(self):
        assert alpha_eq(p("Pi* [x, x', x^*] : A. x^*"), p("Pi* [u, v, w] : A. w"))
        assert not alpha_eq(p("Pi* [x, x', x^*] : A. x"), p("Pi* [u, v, w] : A. w"))

    @given(terms)
    def test_reflexive(self, t):
        assert alpha_eq(t, t)

    @given(terms, terms)
    def test_symmetric(self, s, t):
        assert alpha_eq(s, t) == alpha_eq(t, s)


class TestSubst:
    def test_simple(self):
        assert alpha_eq(subst1(p("x y"), x, v("z")), p("z y"))

    def test_capture_avoided(self):
        out = subst1(p("fun (y : A). x"), x, v("y"))
        assert isinstance(out, Lam) and out.name != y
        assert out.body == Var(y)

    def test_under_pi(self):
        assert alpha_eq(subst1(p("Pi (x : A). x z"), z, v("w")), p("Pi (x : A). x w"))

    def test_multi(self):
        assert alpha_eq(subst(p("x y^*"), {x: v("a"), y.star(): v("b")}), p("a b"))

    def test_empty_is_identity(self):
        t = p("fun (x : A). x y")
        assert subst(t, {}) == t

    def test_simultaneous(self):
        assert subst(p("x"), {x: v("y"), y: v("z")}) == v("y")

    def test_pi_star_capture(self):
        out = subst1(p("Pi* [u, u', u^*] : A. x"), x, v("u"))
        assert isinstance(out, PiStar)
        assert out.body_eq == v("u") and out.x != VarName("u")


class TestFreeVars:
    def test_app(self):
        assert free_vars(p("x y")) == {x, y}

    def test_lambda(self):
        assert free_vars(p("fun (x : A). x")) == {VarName("A")}

    def test_pi_star(self):
        t = p("Pi* [x, x1, xs] : As. xs (x1 Bs) x q")
        assert free_vars(t) == {VarName("As"), VarName("Bs"), VarName("q")}


@given(terms, st.sampled_from([x, y, z, w]))
def test_subst_variable_for_itself(t, n):
    assert alpha_eq(subst1(t, n, Var(n)), t)


@given(terms, terms)
def test_subst_of_closed_term_is_identity(t, s):
    if is_closed(t):
        assert subst1(t, x, s) == t


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_subst_respects_alpha(seed):
    rng = random.Random(seed)
    t = raw_term(rng, 4)
    renamed = subst(t, {})  # a structurally new but alpha-equal copy
    wrapped = Lam(VarName("q"), Star(), t)
    other = Lam(VarName("r"), Star(), subst1(t, VarName("q"), Var(VarName("r"))))
    if VarName("r") in free_vars(t):
        return
    assert alpha_eq(wrapped, other)
    n = raw_term(rng, 2)
    assert alpha_eq(subst1(wrapped, x, n), subst1(other, x, n))
    assert alpha_eq(subst1(renamed, x, n), subst1(t, x, n))


def test_context_rejects_duplicates():
    with pytest.raises(ValueError):
        Context.of(("x", Star()), ("x", Star()))


def test_arrow_is_pi_with_unused_binder():
    t = p("A -> B")
    assert isinstance(t, Pi) and t.name not in free_vars(t.body)
