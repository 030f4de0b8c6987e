import pytest
from hypothesis import given
from hypothesis import strategies as st

from swanpsi.residue import GF, ResidueField, prime_power


@pytest.mark.parametrize("q", [2, 3, 4, 8, 9, 25, 27])
def test_gf_tables_form_a_field(q):
    F = GF(q)
    for a in range(q):
        assert F.add[a][F.neg[a]] == 0
        if a:
            assert F.mul[a][F.inv[a]] == 1
        assert F.root[F.frob[a]] == a
    # multiplicative group is cyclic of order q - 1
    assert all(F.pow(a, q - 1) == 1 for a in range(1, q))


def test_prime_power_rejects_composites():
    assert prime_power(9) == (3, 2)
    with pytest.raises(ValueError):
        prime_power(12)


R = ResidueField(3, ("T", "S"))
T, S = R.var("T"), R.var("S")


def polys(field, degree=2):
    mono = st.tuples(st.integers(0, field.q - 1), st.integers(0, degree), st.integers(0, degree))
    return st.lists(mono, max_size=4).map(
        lambda ts: sum((field.gf_elem(c) * field.var("T") ** i * field.var("S") ** j
                        for c, i, j in ts), field.zero))


rationals = st.tuples(polys(R), polys(R).filter(bool)).map(lambda nd: nd[0] / nd[1])


@given(rationals, rationals, rationals)
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a - a == R.zero
    if a:
        assert a * a.inverse() == R.one


@given(rationals, rationals)
def test_frobenius_is_additive_and_root_inverts_it(a, b):
    assert (a + b).frobenius() == a.frobenius() + b.frobenius()
    assert a.frobenius().is_pth_power()
    assert a.frobenius().pth_root() == a


@given(rationals, rationals)
def test_derivative_is_a_derivation(a, b):
    for name in ("T", "S"):
        assert (a * b).derivative(name) == a.derivative(name) * b + a * b.derivative(name)
        assert a.frobenius().derivative(name) == R.zero


def test_lowest_terms_and_monic_denominator():
    x = (T**2 - R.one) / (2 * T + 2 * R.one)
    assert x == (T - R.one) * R.gf_elem(2)
    assert x.is_poly


def test_pth_power_criterion():
    assert (T**3 * S**6).is_pth_power()
    assert not (T**3 * S).is_pth_power()
    assert not T.is_pth_power()
    assert (R.gf_elem(2) * T**3).is_pth_power()


def test_extension_field_arithmetic():
    R9 = ResidueField(9, ("T",))
    units = [R9.gf_elem(c) for c in range(1, 9)]
    assert all(g**8 == R9.one for g in units)
    g = next(g for g in units if g**4 != R9.one)
    assert len({g**k for k in range(8)}) == 8
    assert (g * R9.var("T")).frobenius() == g**3 * R9.var("T") ** 3
