"""Expected shapes for the bundled .leq files."""

import pytest

from conftest import CORPUS, p
from lambda_eq.checker import RULES, validate
from lambda_eq.parser import parse_file
from lambda_eq.session import check_file
from lambda_eq.stratified import check_file_stratified
from lambda_eq.syntax import alpha_eq


def load(name, stratified=False):
    src = parse_file((CORPUS / name).read_text())
    return check_file_stratified(src) if stratified else check_file(src)


# definition -> (root rule, stated type)
RULE_SHAPES = {
    "axiom": ("Axiom", "*"),
    "var": ("Var", "B"),
    "weaken": ("Weaken", "A"),
    "pi_form": ("PiForm", "*"),
    "sigma_form": ("SigmaForm", "*"),
    "eq_form": ("EqForm", "*"),
    "rel_elim": ("RelElim", "A -> B -> *"),
    "lam": ("Lam", "Pi (X : *). X -> X"),
    "app": ("App", "A"),
    "pair": ("Pair", "Sig (x : A). B"),
    "proj1": ("Proj1", "A"),
    "proj2": ("Proj2", "B"),
    "conv": ("Conv", "(fun (X : *). X) A"),
    "star_star": ("StarStarIntro", "Eq * *"),
    "pi_star": ("PiStarIntro", "Eq (Pi (x : *). *) (Pi (x' : *). *)"),
    "sigma_star": ("SigmaStarIntro", "Eq (Sig (x : *). *) (Sig (x' : *). *)"),
    "eq_star": ("EqStarIntro", "Eq (Eq * *) (Eq * *)"),
}

# hand-reduced normal forms of the reduction instances
NORMAL_FORMS = {
    "r_beta": "a",
    "r_fst": "a",
    "r_snd": "b",
    "r_star_star": "Eq A B",
    "r_pi_star": "Pi (X : *) (X' : *) (Xs : Eq X X') (x : X) (x' : X') (xs : x ~[Xs] x'). x ~[Xs] x'",
    "r_sigma_star": "Sig (s : Eq A A). a ~[s] a",
    "r_eq_star": "Pi (a : *) (a' : *) (as : Eq a a') (b : *) (b' : *) (bs : Eq b b'). Eq (Eq a b) (Eq a' b')",
}


@pytest.fixture(scope="module")
def report():
    return load("rules.leq")


class TestRules:
    def test_all_pass(self, report):
        assert report.ok
        assert report.summary()["passed"] == len(report.results) == 5 + len(RULE_SHAPES) + 2 * len(NORMAL_FORMS)

    @pytest.mark.parametrize("defn", RULE_SHAPES)
    def test_root_rule_and_type(self, report, defn):
        rule, ty = RULE_SHAPES[defn]
        r = report[defn]
        assert r.derivation.rule == rule
        assert alpha_eq(p(r.type), p(ty))
        validate(r.derivation)

    def test_every_rule_is_a_root(self):
        assert {rule for rule, _ in RULE_SHAPES.values()} == set(RULES)

    @pytest.mark.parametrize("defn", NORMAL_FORMS)
    def test_normal_form(self, report, defn):
        assert alpha_eq(p(report[f"#normalize {defn}"].stats["normal_form"]), p(NORMAL_FORMS[defn]))


def test_universes():
    report = load("universes.leq", stratified=True)
    assert [r.name for r in report.results if not r.ok] == ["bad_axiom"]
    assert "universe" in report["bad_axiom"].error


def test_universes_need_levels_in_plain_mode():
    # plain mode has no *n, so nothing in the file checks there
    assert not load("universes.leq").ok


def test_unit():
    report = load("unit.leq", stratified=True)
    assert report.ok
    forms = {r.name: r.stats["normal_form"] for r in report.results if r.kind == "normalize"}
    assert alpha_eq(p(forms["r_const"]), p("b"))
    assert alpha_eq(p(forms["r_unit_rel"]), p("fun (x : Unit) (y : Unit). Unit"))
    assert alpha_eq(p(forms["r_unit_rel_body"]), p("Unit"))


def test_identity_file():
    report = load("id.leq")
    assert report.ok
    assert alpha_eq(p(report["#normalize id_id"].stats["normal_form"]), p("fun (A : *) (x : A). x"))


def test_theorems():
    report = load("theorems.leq")
    assert report.ok
    stars = [r for r in report.results if r.kind == "checkstar"]
    assert len(stars) >= 30
