from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import as_tower, series_elements, vector_elements
from swanpsi.errors import NotPerfect, ZeroDifferential
from swanpsi.logdiff import (LogForm, delta_a, delta_tor, differential_of_element, lift_form,
                             v_log)
from swanpsi.tower import LocalFieldTower, TowerStep
from swanpsi.witt import WittVector, d_map


def test_d_of_monomial(K3):
    for m in (1, 2, 4, 5):
        x = K3.parse(f"u^-{m}")
        form = differential_of_element(x)
        assert form.pi_coeff == x * (-m)
        assert v_log(form) == -m


def test_dlog_u_lifted(as_u, as_Tu):
    K = as_u.levels[0]
    up = lift_form(LogForm.dlog_pi(K), as_u.top)
    assert v_log(up) == 2
    top = as_u.top
    a = as_u.alpha(1, top)
    unit = (as_u.one(top) + as_u.u(top) ** -1 * a.inverse() * 2).inverse()
    assert (up.pi_coeff - unit).val_bound()[0] >= 12
    assert not up.var_coeffs
    up2 = lift_form(LogForm.dlog_pi(as_Tu.levels[0]), as_Tu.top)
    assert v_log(up2) == 0
    assert up2.pi_coeff.valuation() == 2
    assert up2.var_coeffs["T"].valuation() == 0


def test_v_log_examples(KT3):
    form = differential_of_element(KT3.parse("T*u^-3"))
    assert v_log(form) == -3
    assert v_log(LogForm.dlog_pi(KT3.top)) == 0
    assert v_log(LogForm.zero(KT3.top)) == float("inf")


def test_delta_tor_examples(as_u, as_Tu, tame2):
    assert delta_tor(tame2) == 0
    assert delta_tor(LocalFieldTower(3, 3, [TowerStep.tame(4), TowerStep.tame(5)])) == 0
    assert delta_tor(as_u) == 2
    assert delta_tor(as_Tu) == 0


@pytest.mark.parametrize("p,m", [(3, 1), (3, 2), (2, 1), (2, 3), (3, 4), (5, 1)])
def test_delta_tor_is_p_minus_one_times_m_without_dT(p, m):
    assert delta_tor(as_tower(p, f"u^-{m}")) == (p - 1) * m


def test_delta_tor_requires_perfect_base():
    tw = LocalFieldTower(3, 3, [TowerStep.artin_schreier("u^-1")], base_vars=("T",))
    with pytest.raises(NotPerfect):
        delta_tor(tw)


def test_delta_a_examples(as_u, as_Tu, tame2):
    for N in (1, 2, 4, 5):
        assert delta_a(tame2.parse(f"u^-{N}", tame2.levels[0]), tame2) == 0
        assert delta_a(as_u.parse(f"u^-{N}", as_u.levels[0]), as_u) == Fraction(2, 3)
        assert delta_a(as_Tu.parse(f"u^-{N}", as_Tu.levels[0]), as_Tu) == 0
    with pytest.raises(ZeroDifferential):
        delta_a(as_u.parse("u^-3", as_u.levels[0]), as_u)


@pytest.mark.parametrize("m", [3, 5])
def test_two_step_tower_adds_torsion(m):
    # dlog u = U1 dlog pi1 with v(U1) = 1, and dlog pi1 = U2 dlog pi2 with v(U2) = m,
    # so the content in the top field is 2 * 1 + m
    tw = LocalFieldTower(2, 2, [TowerStep.constant("T"), TowerStep.artin_schreier("u^-1"),
                                TowerStep.artin_schreier(f"alpha^{m}")])
    assert tw.e_total == 4
    assert delta_tor(tw, 0, 2) == 1
    assert delta_tor(tw) == 2 + m


TOWERS = [as_tower(3, "u^-1"), as_tower(3, "T*u^-1"), as_tower(2, "u^-3")]


@pytest.mark.parametrize("tw", TOWERS, ids=["as_u", "as_Tu", "as2"])
@settings(max_examples=30)
@given(data=st.data())
def test_d_is_a_derivation(tw, data):
    for k in (1, 2):
        lvl = tw.levels[k]
        gen = series_elements(lvl) if lvl.representation == "series" else vector_elements(tw, k)
        x, y = data.draw(gen), data.draw(gen)
        lhs = differential_of_element(x * y)
        rhs = differential_of_element(y).scale(x) + differential_of_element(x).scale(y)
        # products with deep poles eat absolute precision, so compare relative to v(xy)
        scale = _v(x) + _v(y)
        assert _small(lhs - rhs, scale + 8)
        assert _small(differential_of_element(x.frobenius()), 3 * _v(x) + 8)


def _v(x):
    return 0 if x.is_zero() else min(0, x.valuation())


def _small(form, bound):
    return all(c.is_zero() or c.val_bound()[0] >= bound for _, c in form.coefficients())


KT = LocalFieldTower(3, 3, [TowerStep.constant("T")])


@settings(max_examples=40)
@given(series_elements(KT.top, nonzero=True), series_elements(KT.top, nonzero=True))
def test_v_log_scales(x, y):
    form = differential_of_element(y)
    if form.is_zero():
        return
    assert v_log(form.scale(x)) == x.valuation() + v_log(form)


@settings(max_examples=40)
@given(series_elements(KT.top))
def test_d_map_length_one_is_d(x):
    assert (d_map(WittVector([x])) - differential_of_element(x)).is_zero()
