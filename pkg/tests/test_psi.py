from fractions import Fraction as Q

import pytest
from hypothesis import given
from hypothesis import strategies as st

from swanpsi.errors import MalformedParams, NotBijective, UnsupportedTower
from swanpsi.psi import (PiecewiseLinear, all_true, classical_breaks, compose, construct_psi,
                         identity, inverse, property_check, psi_for_tower, sup_family)
from swanpsi.tower import LocalFieldTower, TowerStep

from conftest import as_tower


def test_constructors():
    t2 = construct_psi("tame", e=2)
    assert (t2.breakpoints, t2.slopes) == ((), (2,))
    dp = construct_psi("degree_p", p=3, delta=2)
    assert (dp.breakpoints, dp.slopes) == ((1,), (1, 3))
    assert [dp(t) for t in (0, Q(1, 2), 1, 2, 3)] == [0, Q(1, 2), 1, 4, 7]
    assert construct_psi("degree_p", p=3, delta=0).slopes == (3,)
    assert construct_psi("purely_inseparable")(Q(7, 3)) == Q(7, 3)
    aff = construct_psi("large_t_affine", e=3, delta=2, p=3)
    assert aff(5) == 13 and aff.valid_from == 1
    with pytest.raises(MalformedParams):
        construct_psi("tame", e=0)
    with pytest.raises(MalformedParams):
        construct_psi("degree_p", p=3)


def test_eval_examples():
    assert construct_psi("tame", e=3)(Q(5, 2)) == Q(15, 2)
    dp = construct_psi("degree_p", p=3, delta=2)
    assert dp(1) == 1 and dp(2) == 4


def test_classical_breaks_degree_p():
    # one lower break at m with index p: psi has slope 1 up to m then p
    f = classical_breaks([(1, 3)])
    assert f == construct_psi("degree_p", p=3, delta=2)


def test_compose_examples():
    dp = construct_psi("degree_p", p=3, delta=2)
    g = compose(dp, construct_psi("tame", e=2))
    assert (g.breakpoints, g.slopes) == ((Q(1, 2),), (2, 6))
    assert compose(dp, identity()) == dp
    assert compose(construct_psi("tame", e=2), construct_psi("tame", e=3)) == \
        construct_psi("tame", e=6)


def test_inverse_examples():
    assert inverse(construct_psi("tame", e=2)).slopes == (Q(1, 2),)
    inv = inverse(construct_psi("degree_p", p=3, delta=2))
    assert (inv.breakpoints, inv.slopes) == ((1,), (1, Q(1, 3)))
    with pytest.raises(NotBijective):
        inverse(PiecewiseLinear((), (1,), 1))


def test_sup_family_examples():
    s = sup_family([PiecewiseLinear((), (2,)), PiecewiseLinear((), (1,), 1)])
    assert (s.breakpoints, s.slopes, s.value_at_zero) == ((1,), (1, 2), 1)
    rep = property_check(s)
    assert rep["convex"] and rep["integer_at_integers"]
    branches = sup_family([identity(), PiecewiseLinear((), (3,), -2)])
    assert branches(Q(1, 2)) == Q(1, 2) and branches(2) == 4
    dp = construct_psi("degree_p", p=3, delta=2)
    assert [branches(Q(k, 4)) for k in range(20)] == [dp(Q(k, 4)) for k in range(20)]
    f = construct_psi("tame", e=5)
    assert sup_family([f]) == f


def test_property_check_examples():
    assert all_true(property_check(construct_psi("degree_p", p=3, delta=2)))
    assert not property_check(inverse(construct_psi("tame", e=2)))["integer_slopes"]


def test_psi_for_tower():
    psi, d = psi_for_tower(as_tower(3, "u^-1"))
    assert (psi.breakpoints, psi.slopes, d) == ((1,), (1, 3), 2)
    psi, d = psi_for_tower(as_tower(3, "T*u^-1"))
    assert (psi.breakpoints, psi.slopes, d) == ((), (3,), 0)
    psi, _ = psi_for_tower(LocalFieldTower(3, 3, [TowerStep.tame(2)]))
    assert (psi.breakpoints, psi.slopes) == ((), (2,))
    psi, _ = psi_for_tower(LocalFieldTower(3, 3, [TowerStep.tame(2), TowerStep.constant("T"),
                                                  TowerStep.artin_schreier("u^-1")]))
    # K(u^(1/2)) then AS(u^-1) = AS(rho^-2): break at 2 upstairs, 1 downstairs
    assert (psi.breakpoints, psi.slopes) == ((1,), (2, 6))
    with pytest.raises(UnsupportedTower):
        psi_for_tower(LocalFieldTower(2, 2, [TowerStep.artin_schreier("u^-1"),
                                             TowerStep.artin_schreier("alpha^3")]))


# ---------------------------------------------------------------------------
# random psi-side objects


@st.composite
def psis(draw):
    kind = draw(st.sampled_from(["tame", "degree_p", "breaks"]))
    if kind == "tame":
        return construct_psi("tame", e=draw(st.integers(1, 7)))
    if kind == "degree_p":
        p = draw(st.sampled_from([2, 3, 5]))
        m = draw(st.integers(1, 6).filter(lambda m: m % p))
        return construct_psi("degree_p", p=p, delta=(p - 1) * m)
    ms = sorted(draw(st.sets(st.integers(1, 9), min_size=1, max_size=3)))
    p = draw(st.sampled_from([2, 3]))
    return classical_breaks([(m, p) for m in ms])


@given(psis(), psis(), psis())
def test_compose_is_associative(f, g, h):
    assert compose(compose(h, g), f) == compose(h, compose(g, f))


@given(psis(), psis())
def test_compositions_keep_the_structure(f, g):
    assert all_true(property_check(compose(g, f)))


@given(psis(), st.fractions(0, 20))
def test_inverse_is_an_involution(f, t):
    assert inverse(inverse(f)) == f
    assert inverse(f)(f(t)) == t


@given(psis(), psis(), st.fractions(0, 20))
def test_compose_pointwise(f, g, t):
    assert compose(g, f)(t) == g(f(t))
