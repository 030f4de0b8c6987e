import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import as_tower, series_elements, vector_elements
from swanpsi.errors import MalformedParams, MalformedStep, PrecisionExhausted, UnsupportedProbe
from swanpsi.tower import (FieldElement, LocalFieldTower, Series, TowerStep, default_precision,
                           probe_extend, tame_twist)


def test_build_examples(K3, tame2, as_u):
    assert K3.e_total == 1
    assert tame2.e_total == 2
    rho = tame2.parse("rho")
    assert rho**2 == tame2.u(tame2.top)
    assert as_u.e_total == 3
    top = as_u.top
    assert (top.ua, top.ub) == (2, 1)
    assert as_u.uniformizer(top) == as_u.alpha(1, top) ** 2 * as_u.u(top)


def test_alpha_relation(as_u):
    a = as_u.alpha(1, as_u.top)
    assert a**3 == a + as_u.u(as_u.top) ** -1


def test_valuation_examples(K3, as_u):
    assert K3.parse("u^-3 + u^2").valuation() == -3
    top = as_u.top
    assert as_u.alpha(1, top).valuation() == -1
    assert as_u.u(top).valuation() == 3
    x = as_u.alpha(1, top) ** 3 * as_u.u(top)
    assert x.valuation() == 0
    assert x.leading_residue() == as_u.R.one


def test_leading_residue_examples(K3, as_u, as_Tu):
    assert K3.parse("2*u^-3 + u").leading_residue() == K3.R.gf_elem(2)
    assert as_u.parse("u^-1").leading_residue() == as_u.R.one
    T = as_Tu.R.var("T")
    assert as_Tu.parse("u^-1").leading_residue() == T**2


def test_embed_examples(tame2, as_u):
    x = tame2.parse("u^-1", tame2.levels[0])
    assert x.embed(1).valuation() == -2
    y = as_u.parse("u^-1", as_u.levels[0])
    assert y.embed(2).valuation() == -3
    t = as_u.parse("T", as_u.levels[1])
    assert t.embed(2).valuation() == 0


def test_malformed_steps():
    with pytest.raises(MalformedStep):
        LocalFieldTower(3, 3, [TowerStep.tame(3)])
    with pytest.raises(MalformedStep):
        LocalFieldTower(3, 3, [TowerStep.artin_schreier("u^-3")])
    with pytest.raises(MalformedStep):
        LocalFieldTower(3, 3, [TowerStep.artin_schreier("u")])
    with pytest.raises(MalformedParams):
        LocalFieldTower(4, 4)
    with pytest.raises(MalformedParams):
        LocalFieldTower(3, 4)


def test_precision_policy():
    assert default_precision(4) == 32
    K = LocalFieldTower(3, 3, precision=8)
    x = K.parse("1 + u")
    inv = x.inverse()
    assert not inv.is_exact()
    assert (x * inv - K.one()).val_bound() == (8, False)
    with pytest.raises(PrecisionExhausted):
        (inv - inv).valuation()


# ---------------------------------------------------------------------------
# properties


LEVELS = [
    ("as_u", 0), ("as_u", 1), ("as_u", 2),
    ("as_Tu", 2), ("tame2", 1), ("as2", 2),
]


def _tower(name):
    return {
        "as_u": as_tower(3, "u^-1"),
        "as_Tu": as_tower(3, "T*u^-1"),
        "tame2": LocalFieldTower(3, 3, [TowerStep.tame(2)]),
        "as2": as_tower(2, "u^-3"),
    }[name]


TOWERS = {name: _tower(name) for name in ("as_u", "as_Tu", "tame2", "as2")}


def elements(name, k):
    tw = TOWERS[name]
    lvl = tw.levels[k]
    if lvl.representation == "series":
        return series_elements(lvl)
    return vector_elements(tw, k)


@pytest.mark.parametrize("name,k", LEVELS)
@given(data=st.data())
def test_valuation_is_a_valuation(name, k, data):
    x = data.draw(elements(name, k))
    y = data.draw(elements(name, k))
    if x.is_zero() or y.is_zero():
        return
    assert (x * y).valuation() == x.valuation() + y.valuation()
    assert (x * y).leading_residue() == x.leading_residue() * y.leading_residue()
    s = x + y
    if not s.is_zero():
        assert s.valuation() >= min(x.valuation(), y.valuation())
        if x.valuation() != y.valuation():
            assert s.valuation() == min(x.valuation(), y.valuation())


@pytest.mark.parametrize("name,k", LEVELS)
@given(data=st.data())
def test_ring_laws(name, k, data):
    x, y, z = (data.draw(elements(name, k)) for _ in range(3))
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (x * y).frobenius() == x.frobenius() * y.frobenius()
    assert (x + y).frobenius() == x.frobenius() + y.frobenius()


@pytest.mark.parametrize("name,k", LEVELS)
@settings(max_examples=25)
@given(data=st.data())
def test_inverse(name, k, data):
    x = data.draw(elements(name, k))
    if x.is_zero():
        return
    prod = x * x.inverse()
    assert (prod - x.level.one_el()).val_bound()[0] >= 8


@pytest.mark.parametrize("name", ["as_u", "tame2", "as2"])
@given(data=st.data())
def test_embed_is_a_scaled_homomorphism(name, data):
    tw = TOWERS[name]
    x = data.draw(series_elements(tw.levels[0], nonzero=True))
    y = data.draw(series_elements(tw.levels[0], nonzero=True))
    top = tw.top.index
    assert (x * y).embed(top) == x.embed(top) * y.embed(top)
    assert x.embed(top).valuation() == tw.e_total * x.valuation()
    assert x.frobenius().embed(top) == x.embed(top).frobenius()
    assert x.embed(top).frobenius().leading_residue() == \
        x.embed(top).leading_residue().frobenius()


# ---------------------------------------------------------------------------
# probes and twists


def test_pi_root_transport(KT3):
    new, tr = probe_extend(KT3, ("pi_root", 1), "T")
    x = tr(KT3.parse("T*u^-3"))
    assert x == new.parse("T'^3*u^-3")


def test_shift_probe_transport(KT3):
    new, tr = probe_extend(KT3, ("shift_probe", 2, 1), "T")
    assert new.probe_info["e"] == 9
    x = tr(KT3.parse("T*u^-1"))
    assert x == new.parse("(T'^3 + rho)*rho^-9")


def test_probe_rejects_artin_schreier_top(as_u):
    with pytest.raises(UnsupportedProbe):
        probe_extend(as_u, ("pi_root", 1), "T")


def test_tame_twist(as_u):
    tw, trans, e_top = tame_twist(as_u, 2)
    assert e_top == 2
    assert tw.top.E == 3
    x = trans[0](as_u.parse("u^-1", as_u.levels[0]))
    assert x.valuation() == -2
    # the twisted AS step is alpha^3 - alpha = rho^-2
    a = tw.alpha(1, tw.top)
    assert a**3 - a == tw.parse("u^-2", tw.top)
