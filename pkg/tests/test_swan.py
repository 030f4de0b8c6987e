import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import as_tower, series_elements
from swanpsi.errors import NotImplementedExact, TrivialClass, ZeroConductor
from swanpsi.logdiff import LogForm, v_log
from swanpsi.swan import (ASWCharacter, base_change_character, greedy_reduce, reduce_element,
                          reduce_to_best, refined_swan, rsw_dominant_part, swan_conductor,
                          swan_from_rsw)
from swanpsi.tower import LocalFieldTower, TowerStep, probe_extend
from swanpsi.witt import WittVector, frobenius_minus_one


def test_base_field_examples(K3, KT3):
    assert swan_conductor(K3.parse("u^-1")) == 1
    assert swan_conductor(K3.parse("1 + u + 2*u^3")) == 0
    assert swan_conductor(K3.parse("u^-2")) == 2
    assert swan_conductor(K3.parse("u^-3")) == 1
    assert swan_conductor(K3.parse("u^-9 + u^-2")) == 2
    assert swan_conductor(KT3.parse("T*u^-3")) == 3
    assert swan_conductor(KT3.parse("T^3*u^-3")) == 1


def test_reduction_returns_an_equivalent_best_rep(KT3):
    a = KT3.parse("T^3*u^-9 + 2*u^-3 + u^-1")
    red = reduce_to_best(a)
    best = red.rep.components[0]
    # T^3 u^-9 is removed by b = T u^-3, leaving (T + 2) u^-3, which is not a cube
    assert red.swan == 3 and red.certified
    assert best == KT3.parse("(T + 2)*u^-3 + u^-1")
    b = KT3.parse("T*u^-3")
    assert a - best == b.frobenius() - b


def test_u_inverse_over_as_level_is_the_boundary_case(as_u):
    # the lemma's two cases meet at N = m = 1: -v_L(da) = 1 = p delta/(p-1)
    # and the reduction gives Sw 0, not 3 * 1 - 2 = 1
    a = as_u.parse("u^-1", as_u.levels[0])
    assert swan_conductor(a.embed(as_u.top.index)) == 0


@pytest.mark.parametrize("N,sw", [(2, 4), (4, 10), (5, 13)])
def test_as_u_second_case(as_u, N, sw):
    a = as_u.parse(f"u^-{N}", as_u.levels[0])
    assert swan_conductor(a.embed(as_u.top.index)) == sw == 3 * N - 2


@pytest.mark.parametrize("N", [1, 2, 4, 5])
def test_as_Tu_scales_by_p(as_Tu, N):
    a = as_Tu.parse(f"u^-{N}", as_Tu.levels[0])
    assert swan_conductor(a.embed(as_Tu.top.index)) == 3 * N


def test_tame_base_change(tame2):
    chi = ASWCharacter(tame2.parse("u^-1", tame2.levels[0]))
    up = base_change_character(chi, tame2.top.index)
    assert up.rep.components[0].valuation() == -2
    assert (chi.swan(), up.swan()) == (1, 2)


def test_probe_base_change(KT3):
    _, tr = probe_extend(KT3, ("pi_root", 1), "T")
    chi = base_change_character(ASWCharacter(KT3.parse("T*u^-3")), tr)
    best, sw = chi.reduce()
    assert sw == 1
    _, tr2 = probe_extend(KT3, ("shift_probe", 2, 1), "T")
    assert base_change_character(ASWCharacter(KT3.parse("T*u^-1")), tr2).swan() == 8


def test_refined_swan_examples(KT3):
    for m in (1, 2, 4):
        a = KT3.parse(f"u^-{m}")
        r = refined_swan(a)
        assert (r.n, r.m) == (m, m // 3)
        assert r.form.pi_coeff == a * (-m)
    r = refined_swan(KT3.parse("T*u^-3"))
    assert r.form.pi_coeff.is_zero()
    assert r.form.var_coeffs["T"] == KT3.parse("u^-3")
    assert swan_from_rsw(r) == 3
    r = refined_swan(KT3.parse("T*u^-1"))
    assert r.form.var_coeffs["T"] == KT3.parse("u^-1")
    assert r.form.pi_coeff == KT3.parse("2*T*u^-1")
    assert rsw_dominant_part(r) == {"dT", "dlog pi"}


def test_swan_from_rsw_examples(KT3):
    form = LogForm(KT3.top, KT3.zero(), {"T": KT3.parse("u^-3")})
    assert swan_from_rsw(form, 3, 1) == 3
    with pytest.raises(TrivialClass):
        swan_from_rsw(LogForm(KT3.top, KT3.parse("u^-1")), 3, 1)
    r = refined_swan(KT3.parse("u^-2"))
    assert swan_from_rsw(r) == 2 == swan_conductor(KT3.parse("u^-2"))


def test_zero_conductor(K3):
    with pytest.raises(ZeroConductor):
        refined_swan(K3.parse("u^-3 - u^-1 + u"))


def test_same_class():
    K = LocalFieldTower(3, 3)
    r1 = refined_swan(K.parse("u^-4 + u^-1"))
    r2 = refined_swan(K.parse("u^-4"))
    assert r1.same_class(r2)  # differ by u^-1 dlog u, which lies in F_1
    r3 = refined_swan(K.parse("u^-2 + u^-1"))
    r4 = refined_swan(K.parse("u^-2"))
    assert not r3.same_class(r4)  # F_2 / F_0 sees the u^-1 term


def test_witt_length_two_needs_greedy():
    K = LocalFieldTower(2, 2)
    chi = ASWCharacter(WittVector([K.parse("u^-1"), K.parse("u^-3")]))
    with pytest.raises(NotImplementedExact):
        reduce_to_best(chi, allow_greedy=False)
    red = reduce_to_best(chi)
    assert not red.certified
    assert red.swan >= 0


KT = LocalFieldTower(3, 3, [TowerStep.constant("T")])


@settings(max_examples=80)
@given(series_elements(KT.top, -9, 3, 4), series_elements(KT.top, -4, 3, 3))
def test_swan_is_a_class_invariant(a, b):
    assert swan_conductor(a) == swan_conductor(a + b.frobenius() - b)


@settings(max_examples=80)
@given(series_elements(KT.top, -9, 3, 4))
def test_best_rep_has_the_conductor_as_pole(a):
    best, sw, _ = reduce_element(a)
    if sw:
        assert best.valuation() == -sw
        n = sw
        assert n % 3 or not best.leading_residue().is_pth_power()
    else:
        assert best.is_zero() or best.valuation() >= 0
