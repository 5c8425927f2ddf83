import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ctx_of, p
from lambda_eq.generators import fragment_sample
from lambda_eq.rewrite import normalize, redex_positions, step_at_position
from lambda_eq.strictmodel import (
    EMPTY,
    ONE,
    FragmentExceeded,
    FunGraph,
    Model,
    PairV,
    UnsupportedTerm,
    check_soundness,
    equality_denotation_is_proof_irrelevant,
    evaluate,
    ordinal,
    size_of,
)
from lambda_eq.syntax import alpha_eq, name

seeds = st.integers(0, 10**6)
B, C = name("B"), name("C")
TWO = ordinal(2)


def test_ordinals():
    assert ordinal(0) == EMPTY
    assert ordinal(1) == ONE
    assert list(ordinal(3)) == [ordinal(0), ordinal(1), ordinal(2)]


class TestEvaluate:
    def test_true_equality_is_singleton_of_empty(self):
        assert evaluate(p("Eq Unit Unit")) == ONE

    def test_false_equality_is_empty(self):
        assert evaluate(p("Eq *0 Unit")) == EMPTY

    def test_relation_compares_denotations(self):
        env = {name("a"): TWO, name("b"): TWO, name("c"): ONE}
        assert evaluate(p("a ~[e] b"), env) == ONE
        assert evaluate(p("a ~[e] c"), env) == EMPTY

    def test_pi_over_empty_domain_is_singleton(self):
        assert size_of(evaluate(p("Pi (x : B). B"), {B: EMPTY})) == 1

    def test_pi_counts_functions(self):
        assert size_of(evaluate(p("Pi (x : B). C"), {B: TWO, C: ordinal(3)})) == 9

    def test_sigma_over_two(self):
        assert size_of(evaluate(p("Sig (x : B). Unit"), {B: TWO})) == 2

    def test_unit_and_tt(self):
        assert evaluate(p("Unit")) == ONE
        assert evaluate(p("tt")) == EMPTY

    def test_pairs(self):
        env = {name("a"): ONE, name("b"): EMPTY}
        assert evaluate(p("(a, b)"), env) == PairV(ONE, EMPTY)
        assert evaluate(p("fst (a, b)"), env) == ONE
        assert evaluate(p("snd (a, b)"), env) == EMPTY

    def test_identity_graph(self):
        assert evaluate(p("fun (x : B). x"), {B: TWO}) == FunGraph(((ordinal(0), ordinal(0)), (ordinal(1), ordinal(1))))

    def test_witnesses_are_empty(self):
        for t in ("*0^*", "Unit^*", "eq* *0^* *0^*"):
            assert evaluate(p(t)) == EMPTY

    def test_bare_star_has_no_denotation(self):
        with pytest.raises(UnsupportedTerm):
            evaluate(p("*"))

    def test_quantifying_over_a_large_universe(self):
        with pytest.raises(FragmentExceeded):
            evaluate(p("Pi (A : *1). A"))

    def test_function_space_bound(self):
        env = {B: ordinal(3)}
        with pytest.raises(FragmentExceeded):
            evaluate(p("Pi (f : B -> B) (g : B -> B) (h : B -> B). B -> B"), env)


class TestSoundness:
    def test_variable(self):
        r = check_soundness(ctx_of(("A", "*0"), ("x", "A")), p("x"), p("A"))
        assert r.ok and r.environments == 6  # 0 + 1 + 2 + 3 elements over the carriers

    def test_unit_witness(self):
        assert check_soundness(ctx_of(), p("Unit^*"), p("Eq Unit Unit")).ok

    def test_swap_with_fixed_carriers(self):
        ctx = ctx_of(("B", "*0"), ("C", "*0"))
        swap = p("fun (q : Sig (x : B). C). (snd q, fst q)")
        r = check_soundness(ctx, swap, p("(Sig (x : B). C) -> Sig (y : C). B"), fixed={B: TWO, C: TWO})
        assert r.ok and r.environments == 1

    def test_swap_over_all_carriers(self):
        ctx = ctx_of(("B", "*0"), ("C", "*0"))
        swap = p("fun (q : Sig (x : B). C). (snd q, fst q)")
        assert check_soundness(ctx, swap, p("(Sig (x : B). C) -> Sig (y : C). B")).environments == 16

    def test_detects_a_violation_when_not_checked(self):
        ctx = ctx_of(("B", "*0"), ("C", "*0"))
        r = check_soundness(ctx, p("fun (q : Sig (x : B). C). q"), p("(Sig (x : B). C) -> Sig (y : C). B"), check=False)
        assert not r.ok
        with pytest.raises(Exception, match="is not in"):
            r.raise_for_violation()


@pytest.mark.parametrize("a, b", [("Unit", "Unit"), ("A", "A"), ("A", "*0"), ("A -> A", "A")])
def test_equality_is_proof_irrelevant(a, b):
    for env in Model().environments(ctx_of(("A", "*0"))):
        assert equality_denotation_is_proof_irrelevant(env, p(a), p(b))


def test_alpha_invariance():
    t, u = p("fun (x : B) (y : B). x"), p("fun (u : B) (w : B). u")
    assert alpha_eq(t, u)
    assert evaluate(t, {B: TWO}) == evaluate(u, {B: TWO})


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_denotation_invariant_under_reduction(seed):
    ctx, m, a = fragment_sample(random.Random(seed), 3)
    model = Model()
    terms = [m] + [step_at_position(m, q)[0] for q in redex_positions(m)] + [normalize(m)]
    try:
        for env in model.environments(ctx):
            vals = [model.evaluate(env, t) for t in terms]
            assert all(w == vals[0] for w in vals)
            assert model.member(env, vals[0], a)
    except FragmentExceeded:
        return
