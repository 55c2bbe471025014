import pytest
from hypothesis import given, settings, strategies as st

from frobdml.errors import (DegreeMismatch, DivisionByZero, FieldMismatch,
                            NonPrimeP, ReducibleModulus)
from frobdml.field import (FieldSpec, format_element, frobenius_pow, make_field,
                           parse_element)

from conftest import field_for

F2 = field_for(2, 1)
F4 = field_for(2, 2)
F8 = field_for(2, 3)
F9 = field_for(3, 2)
F25 = field_for(5, 2)


def test_construction_golden():
    assert F4.order == 4 and F4.p == 2 and F4.m == 2
    assert F9.order == 9
    assert len(list(F8.elements())) == 8


def test_nonprime_p_rejected():
    with pytest.raises(NonPrimeP):
        make_field(4, 1, [0, 1])
    with pytest.raises(NonPrimeP):
        make_field(1, 1, [0, 1])


def test_reducible_modulus_names_a_factor():
    with pytest.raises(ReducibleModulus) as ei:
        make_field(2, 2, [0, 0, 1])  # x^2 = x * x
    assert "divisible by a" in str(ei.value)
    with pytest.raises(ReducibleModulus):
        make_field(2, 2, [1, 0, 1])  # x^2 + 1 = (x+1)^2
    with pytest.raises(ReducibleModulus):
        make_field(3, 3, [0, 0, 0, 1])


def test_modulus_degree_checked():
    with pytest.raises(DegreeMismatch):
        make_field(2, 2, [1, 1])
    with pytest.raises(DegreeMismatch):
        make_field(2, 2, [1, 1, 0])  # leading coefficient vanishes


def test_index_is_a_total_order():
    for F in (F2, F4, F8, F9, F25):
        seen = [x.index() for x in F.elements()]
        assert seen == list(range(F.order))
        for i in range(F.order):
            assert F.from_int(i).index() == i


def test_element_str_round_trip_exhaustive():
    for F in (F4, F8, F9):
        for x in F.elements():
            assert parse_element(F, format_element(x)) == x


def test_parse_element_forms():
    a = F9.gen()
    assert parse_element(F9, "2*a + 1") == F9.one() + a + a
    assert parse_element(F9, "a^2") == a * a
    assert parse_element(F9, "-1") == -F9.one()
    assert parse_element(F4, "1+a") == F4.one() + F4.gen()


def test_field_mismatch_rejected():
    with pytest.raises(FieldMismatch):
        F4.one() + F8.one()


def test_division():
    a = F8.gen()
    x = a * a + F8.one()
    assert x * x.inv() == F8.one()
    assert (x / x) == F8.one()
    with pytest.raises(DivisionByZero):
        F8.zero().inv()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
def test_ring_axioms_f9(i, j, k):
    x, y, z = F9.from_int(i), F9.from_int(j), F9.from_int(k)
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == F9.zero()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 24))
def test_frobenius_is_p_power_f25(i):
    x = F25.from_int(i)
    assert x.frobenius(1) == x ** 5
    assert x.frobenius(2) == x  # Frob^m = id on F_(p^m)
    assert frobenius_pow(x, -1).frobenius(1) == x


def test_frobenius_additive_multiplicative():
    for F in (F8, F9):
        xs = list(F.elements())
        for x in xs:
            for y in xs:
                assert (x + y).frobenius(1) == x.frobenius(1) + y.frobenius(1)
                assert (x * y).frobenius(1) == x.frobenius(1) * y.frobenius(1)


def test_subfield_degree():
    assert F8.one().subfield_degree() == 1
    assert F8.gen().subfield_degree() == 3
    assert F9.gen().subfield_degree() == 2
    two = F9.one() + F9.one()
    assert two.subfield_degree() == 1


def test_prime_field_modulus_shape():
    F = make_field(7, 1, [0, 1])
    assert F.order == 7
    x = F.from_int(3)
    assert x + x + x == F.from_int(2)
