import random

import pytest
from hypothesis import given, settings, strategies as st

from frobdml.errors import (DegreeMismatch, FieldMismatch, NonUnitDivisor,
                            ParseError)
from frobdml.series import (AtPrecisionZero, GaloisAction, TruncSeries,
                            format_series, parse_series)

from conftest import field_for

F2 = field_for(2, 1)
F4 = field_for(2, 2)
F9 = field_for(3, 2)


def S(field, prec, *digits):
    return TruncSeries(field, prec, [field.from_int(d) for d in digits])


def test_constructor_pads_and_truncates():
    s = S(F2, 5, 1, 0, 1)
    assert len(s.coeffs) == 5 and s.coeffs[2] == F2.one() and s.coeffs[4].is_zero()
    s = TruncSeries(F2, 2, [F2.one()] * 7)
    assert s.prec == 2
    with pytest.raises(DegreeMismatch):
        TruncSeries(F2, 0, [])


def test_add_mul_golden():
    s = S(F2, 4, 1, 1)        # 1 + t
    u = S(F2, 4, 1, 0, 1)     # 1 + t^2
    assert format_series(s + u) == "t + t^2 + O(t^4)"
    assert format_series(s * u) == "1 + t + t^2 + t^3 + O(t^4)"
    sq = s * s                # (1+t)^2 = 1 + t^2 in characteristic 2
    assert format_series(sq) == "1 + t^2 + O(t^4)"


def test_precision_is_min_of_operands():
    s = S(F2, 8, 1, 1)
    u = S(F2, 5, 1)
    assert (s + u).prec == 5
    assert (s * u).prec == 5


def naive_mul(s, u):
    prec = min(s.prec, u.prec)
    field = s.field
    out = [field.zero()] * prec
    for i, a in enumerate(s.coeffs[:prec]):
        if a.is_zero():
            continue
        for j, b in enumerate(u.coeffs[:prec]):
            if i + j >= prec:
                break
            out[i + j] = out[i + j] + a * b
    return TruncSeries(field, prec, out)


def test_mul_matches_schoolbook_reference():
    rng = random.Random(411)
    for F in (F2, F4, F9):
        for _ in range(60):
            prec = rng.randint(1, 24)
            s = TruncSeries(F, prec, [F.from_int(rng.randrange(F.order))
                                      for _ in range(prec)])
            u = TruncSeries(F, prec, [F.from_int(rng.randrange(F.order))
                                      for _ in range(prec)])
            assert (s * u).coeffs == naive_mul(s, u).coeffs


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=12),
       st.lists(st.integers(0, 8), min_size=1, max_size=12))
def test_mul_commutes_f9(xs, ys):
    prec = max(len(xs), len(ys))
    s = TruncSeries(F9, prec, [F9.from_int(i) for i in xs])
    u = TruncSeries(F9, prec, [F9.from_int(i) for i in ys])
    assert (s * u).coeffs == (u * s).coeffs


def test_valuation():
    assert S(F2, 6, 0, 0, 1).valuation() == 2
    v = S(F2, 6).valuation()
    assert isinstance(v, AtPrecisionZero) and v.prec == 6
    assert S(F2, 6, 1).valuation() == 0


def test_galois_action_fixes_t_and_acts_on_coefficients():
    a = F4.gen()
    s = TruncSeries(F4, 4, [a, F4.one(), a * a, F4.zero()])
    g = s.galois(GaloisAction(1))
    assert g.coeffs == (a * a, F4.one(), a, F4.zero())
    # inverse round trip
    assert g.galois(GaloisAction(1), inverse=True).coeffs == s.coeffs
    # Frob_q with q = field order is the identity
    assert s.galois(GaloisAction(2)).coeffs == s.coeffs


def test_division_by_unit():
    s = S(F9, 8, 2, 1, 0, 1)
    u = S(F9, 8, 1, 2)
    q = s / u
    assert (q * u).coeffs == s.coeffs
    with pytest.raises(NonUnitDivisor):
        s / S(F9, 8, 0, 1)


def test_change_precision_truncates():
    s = S(F2, 8, 1, 1, 1)
    t = s.change_precision(2)
    assert t.prec == 2 and t.coeffs == s.coeffs[:2]


def test_field_mismatch():
    with pytest.raises(FieldMismatch):
        S(F2, 4, 1) + S(F4, 4, 1)


def test_parse_format_round_trip_random():
    rng = random.Random(77)
    for F in (F2, F4, F9):
        for _ in range(40):
            prec = rng.randint(1, 16)
            s = TruncSeries(F, prec, [F.from_int(rng.randrange(F.order))
                                      for _ in range(prec)])
            back = parse_series(F, format_series(s))
            assert back.prec == s.prec and back.coeffs == s.coeffs


def test_parse_golden():
    s = parse_series(F4, "1 + (a+1)*t + t^3 + O(t^5)")
    assert s.prec == 5
    assert s.coeffs[0] == F4.one()
    assert s.coeffs[1] == F4.gen() + F4.one()
    assert s.coeffs[3] == F4.one()
    assert parse_series(F2, "t", default_prec=4).coeffs[1] == F2.one()


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_series(F2, "1 + t")          # no marker, no default
    with pytest.raises(ParseError):
        parse_series(F2, "O(t^3) + 1")     # marker must be final
    with pytest.raises(ParseError):
        parse_series(F2, "1 + t^ + O(t^4)")
    with pytest.raises(ParseError):
        parse_series(F2, "")


def test_t_power_and_one():
    assert format_series(TruncSeries.t_power(F2, 3, 6)) == "t^3 + O(t^6)"
    assert format_series(TruncSeries.one(F2, 3)) == "1 + O(t^3)"
    assert format_series(TruncSeries.zeros(F2, 3)) == "O(t^3)"
