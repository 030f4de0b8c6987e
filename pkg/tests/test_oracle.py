from fractions import Fraction as Q

import pytest

from conftest import as_tower
from swanpsi.errors import BudgetExceeded
from swanpsi.oracle import (SearchBudget, brute_force_equivalence, brute_force_family,
                            brute_force_swan, case_split_suite, default_grid,
                            estimate_psi_lower_bound, exhaustive_witt_swan,
                            probe_consistency_suite, verify_lemma_case_split, witt_gap_report)
from swanpsi.psi import psi_for_tower
from swanpsi.swan import reduce_element
from swanpsi.tower import LocalFieldTower, TowerStep, tame_twist
from swanpsi.witt import WittVector


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(max_pole=0)
    b = SearchBudget.from_pairs(["max_pole=3", "coeff_degree=1"])
    assert (b.max_pole, b.coeff_degree) == (3, 1)


def test_brute_force_examples(K3, KT3):
    assert brute_force_swan(K3.parse("u^-3")) == 1
    assert brute_force_swan(K3.parse("u^-2")) == 2
    sw, certified = brute_force_swan(KT3.parse("T*u^-3"), SearchBudget(coeff_degree=2),
                                     with_certificate=True)
    assert (sw, certified) == (3, True)
    assert brute_force_swan(KT3.parse("T^3*u^-3 + u^-1")) == 1


def test_brute_force_budget(K3):
    K9 = LocalFieldTower(3, 9)
    with pytest.raises(BudgetExceeded):
        brute_force_swan(K9.parse("u^-3"), SearchBudget(q_max=3))
    with pytest.raises(BudgetExceeded):
        brute_force_swan(K3.parse("u^-30"), SearchBudget(cap=5))


def test_family_search_matches_direct_search(KT3):
    lvl = KT3.top
    fam = brute_force_family(lvl, 3, 1)
    budget = SearchBudget(max_pole=3, coeff_degree=1)
    from swanpsi.oracle import family_elements
    for i, (cs, a) in enumerate(family_elements(lvl, 3, 1)):
        if i % 37 == 0:
            assert fam[cs] == brute_force_swan(a, budget)


@pytest.mark.parametrize("p,q,var", [(2, 2, True), (3, 3, False), (2, 4, False)])
def test_small_family_equivalence(p, q, var):
    tw = LocalFieldTower(p, q, [TowerStep.constant("T")] if var else [])
    rep = brute_force_equivalence(tw.top, 4 if q < 4 else 3, 1, SearchBudget(q_max=4))
    assert rep["mismatches"] == [] and rep["spot_agree"]


@pytest.mark.parametrize("N", [2, 4, 5, 7])
def test_case_split_as_u(as_u, N):
    r = verify_lemma_case_split(as_u.parse(f"u^-{N}", as_u.levels[0]), as_u)
    assert r.case == "second"
    assert r.predicted == 3 * N - 2 == r.sw_L
    assert r.match


def test_case_split_boundary(as_u):
    r = verify_lemma_case_split(as_u.parse("u^-1", as_u.levels[0]), as_u)
    assert r.case == "boundary"
    assert r.lhs == r.threshold == 1
    assert r.sw_L == 0


def test_case_split_first_case_after_twist(as_u):
    # over K' = K(u^(1/4)) the step becomes AS(rho^-4); rho^-1 = rho^3 * u^-1 is best with
    # -v(a) = 1 below delta/(p-1) = 4/3
    tw, _, _ = tame_twist(as_u, 4)
    r = verify_lemma_case_split(tw.parse("u^-1", tw.levels[0]), tw)
    assert r.case == "first"
    assert r.sw_L == r.sw_K == 1 and r.match


@pytest.mark.parametrize("N", [1, 2, 4, 5])
def test_case_split_as_Tu(as_Tu, N):
    r = verify_lemma_case_split(as_Tu.parse(f"u^-{N}", as_Tu.levels[0]), as_Tu)
    assert r.delta == 0 and r.case == "second"
    assert r.sw_L == 3 * N and r.match


def test_case_split_requires_best(as_u):
    with pytest.raises(ValueError):
        verify_lemma_case_split(as_u.parse("u^-3", as_u.levels[0]), as_u)


def test_case_split_suite(as_u):
    rep = case_split_suite(as_u, 40, seed=3)
    assert rep["total"] >= 40 and not rep["mismatches"]
    assert rep["first"] > 0 and rep["second"] > 0


def test_envelope_examples(tame2, as_u):
    pts = estimate_psi_lower_bound(tame2, [1, 2, 3])
    assert [p.rounded for p in pts] == [2, 4, 6]
    pts = estimate_psi_lower_bound(as_u, [2, Q(1, 2)])
    assert pts[0].rounded == pts[0].raw == 4
    assert pts[1].rounded == Q(1, 2)
    assert pts[1].source["label"] == "twisted_power" and pts[1].source["first_case"]


def test_envelope_is_a_lower_bound_for_a_wrong_formula(as_u):
    # a psi shifted down by one must be exceeded somewhere
    from swanpsi.oracle import envelope_report
    psi, _ = psi_for_tower(as_u, delta_offset=1)
    rep = envelope_report(as_u, psi, default_grid(3, 2, 2))
    assert rep["exceed"]


def test_default_grid():
    g = default_grid(3)
    assert Q(1, 2) in g and Q(1, 3) not in g and max(g) == 4
    assert Q(1, 3) in default_grid(2)


def test_probe_suite_examples(KT3):
    rep = probe_consistency_suite(KT3, ["T*u^-3", "u^-2", "T*u^-1"])
    a, b, c = rep["records"]
    assert (a.sw_pi, a.sw_shift[("T", 2)], a.envelope) == (1, 26, 3)
    assert a.dominant == {"dT"}
    assert b.dominant == {"dlog pi"} and b.sw_pi == 2
    assert c.sw_shift[("T", 2)] == 8 and c.envelope == 1
    assert rep["violations"] == []


def test_witt_exhaustive_agrees_with_length_one():
    K = LocalFieldTower(2, 2)
    for text in ("u^-1", "u^-2", "u^-2 + u^-1"):
        x = K.parse(text)
        assert exhaustive_witt_swan(WittVector([x])) == reduce_element(x)[1]


def test_witt_gap_report():
    rep = witt_gap_report(2, 2, 2)
    assert rep["count"] == 16
    assert rep["greedy_below_search"] == 0
