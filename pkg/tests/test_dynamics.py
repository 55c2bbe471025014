import random

import pytest

from frobdml.dynamics import (CoefficientFieldTooLarge,
                              CoefficientNotInMaximalIdeal, DmlMap, GeneralMap,
                              NonUnitDeterminant, NotInForm, WrongDegree,
                              apply_map, check_conditions, compose_maps,
                              dml_to_general, iterate_map, orbit, preimage_qp,
                              recognize_dml_form, series_det, validate_map)
from frobdml.errors import NotInImage, UnsupportedQ
from frobdml.geometry import HomogPoly, ProjPoint, format_poly, proj_eq
from frobdml.instances import fixture_path, parse_instance
from frobdml.series import GaloisAction, TruncSeries, format_series, parse_series

from conftest import (field_for, identity_matrix, rand_point, rand_suite_map,
                      rand_residue_point)

F2 = field_for(2, 1)
F4 = field_for(2, 2)

F1 = parse_instance(fixture_path("f1.json")).map
F3 = parse_instance(fixture_path("f3.json")).map


def ser(F, text, prec=8):
    return parse_series(F, text, default_prec=prec)


def test_series_det_golden():
    A = [[ser(F2, "1"), ser(F2, "t")],
         [ser(F2, "t"), ser(F2, "1 + t")]]
    assert format_series(series_det(A)) == "1 + t + t^2 + O(t^8)"


def test_validate_map_accepts_f1_shape():
    assert isinstance(F1, DmlMap)
    assert F1.q == 2 and F1.N == 1
    assert F1.e0 == 1  # all coefficients lie in the prime field


def test_validate_diagnostics_order_and_content():
    prec = 8
    A = [[ser(F2, "t"), ser(F2, "0")],     # det has valuation > 0
         [ser(F2, "0"), ser(F2, "1")]]
    G = [HomogPoly(F2, 1, 2, {(2, 0): ser(F2, "1")}),   # wrong degree, unit coeff
         HomogPoly(F2, 1, 1, {(0, 1): ser(F2, "1")})]   # unit coeff
    diags = validate_map(F2, 2, 1, A, G)
    assert isinstance(diags, list)
    assert isinstance(diags[0], NonUnitDeterminant)
    assert isinstance(diags[1], WrongDegree) and diags[1].coordinate == 0
    assert isinstance(diags[2], CoefficientNotInMaximalIdeal)


def test_validate_rejects_unfixed_coefficients():
    # a in F_4 is not Frob_2-fixed, so it cannot appear at e = 1 (q = 2)
    prec = 8
    G1 = [HomogPoly(F4, 1, 1, {(1, 0): ser(F4, "a*t")}),
          HomogPoly(F4, 1, 1, {})]
    diags = validate_map(F4, 2, 1, identity_matrix(F4, 2, prec), G1)
    assert isinstance(diags, list)
    assert any(isinstance(d, CoefficientFieldTooLarge) for d in diags)
    # at e = 2 the action is Frob_4, which fixes all of F_4
    G2 = [HomogPoly(F4, 1, 2, {(2, 0): ser(F4, "a*t")}),
          HomogPoly(F4, 1, 2, {})]
    assert isinstance(validate_map(F4, 2, 2, identity_matrix(F4, 2, prec), G2),
                      DmlMap)


def test_apply_map_golden():
    P = ProjPoint(F2, [ser(F2, "1"), ser(F2, "0")])
    Q = apply_map(F1, P)
    assert format_series(Q.coords[1]) == "t + O(t^8)"
    assert Q.prec == 8


def test_orbit_length_and_start():
    P = ProjPoint(F2, [ser(F2, "1"), ser(F2, "t")])
    pts = orbit(F1, P, 5)
    assert len(pts) == 6 and pts[0] == P
    assert pts[1] == apply_map(F1, P)


def test_compose_golden_and_iterate_agree():
    ff = compose_maps(F3, F3)
    assert format_poly(ff.coords[0], "x") == "x0^4"
    assert format_poly(ff.coords[1], "x") == "x1^4"
    assert format_poly(ff.coords[2], "x") == \
        "(t + t^2 + O(t^8))*x0^2*x1^2 + x2^4"
    it = iterate_map(F3, 2)
    for h, k in zip(ff.coords, it.coords):
        assert h.terms.keys() == k.terms.keys()
        for e in h.terms:
            assert h.terms[e].coeffs == k.terms[e].coeffs


def test_composition_is_associative_on_points():
    rng = random.Random(2024)
    f = rand_suite_map(rng, prec=12)
    g = dml_to_general(f)
    fg = compose_maps(f, g)
    for _ in range(5):
        P = rand_point(rng, f.field, f.N, 12)
        assert proj_eq(apply_map(fg, P), apply_map(f, apply_map(g, P)))


def test_recognize_round_trip_f1():
    gen = dml_to_general(F1)
    rec = recognize_dml_form(gen, 2, 1)
    assert isinstance(rec, DmlMap)
    assert rec.q == 2
    assert format_series(rec.G[1].terms[(1, 0)]) == "t + O(t^65)"


def test_recognize_not_in_form():
    # t*x0*x1 cannot be written with p-th-power inner variables at q = 2
    rec = recognize_dml_form(F3, 2, 1)
    assert isinstance(rec, NotInForm)
    assert rec.coordinate == 2


def test_recognize_splits_pure_power_coefficients():
    # coefficient of x_j^q contributes its constant to A and its tail to G
    prec = 8
    coeff = ser(F2, "1 + t^2")
    h0 = HomogPoly(F2, 1, 2, {(2, 0): coeff})
    h1 = HomogPoly(F2, 1, 2, {(0, 2): ser(F2, "1")})
    rec = recognize_dml_form(GeneralMap(F2, [h0, h1]), 2, 1)
    assert isinstance(rec, DmlMap)
    assert format_series(rec.A[0][0]) == "1 + O(t^8)"
    assert format_series(rec.G[0].terms[(1, 0)]) == "t^2 + O(t^8)"


def test_preimage_round_trip_golden():
    # f1(1, t + t^2) = (1, t + t^2 + t^4)
    P = ProjPoint(F2, [ser(F2, "1", 8), ser(F2, "t + t^2 + t^4", 8)])
    Q = preimage_qp(F1, P)
    assert Q.prec == 4  # ceil(8 / 2)
    assert format_series(Q.coords[1]) == "t + t^2 + O(t^4)"
    # pad the preimage representative back to full precision and re-apply
    pad = ProjPoint(F2, [TruncSeries(F2, 8, c.coeffs) for c in Q.coords])
    back = apply_map(F1, pad)
    assert proj_eq(back, P)


def test_preimage_renormalizes_unit_factor():
    # G feeding coordinate 0 makes the canonical image representative differ
    # from the raw image vector by the unit 1 + t
    G = [HomogPoly(F2, 1, 1, {(0, 1): ser(F2, "t")}), HomogPoly(F2, 1, 1, {})]
    f = validate_map(F2, 2, 1, identity_matrix(F2, 2, 8), G, label="g0")
    P = apply_map(f, ProjPoint(F2, [ser(F2, "1"), ser(F2, "1")]))
    assert format_series(P.coords[0]) == "1 + O(t^8)"
    Q = preimage_qp(f, P)
    assert format_series(Q.coords[0]) == "1 + O(t^4)"
    assert format_series(Q.coords[1]) == "1 + O(t^4)"


def test_preimage_not_in_image():
    # f1 output x1-digit at t^3 is forced to 0; t^3 present means no preimage
    P = ProjPoint(F2, [ser(F2, "1", 8), ser(F2, "t^3", 8)])
    with pytest.raises(NotInImage):
        preimage_qp(F1, P)


def test_preimage_requires_q_equal_p():
    rng = random.Random(5)
    while True:
        f = rand_suite_map(rng, prec=8)
        if f.e == 2:
            break
    P = rand_point(rng, f.field, f.N, 8)
    with pytest.raises(UnsupportedQ):
        preimage_qp(f, P)


def test_check_conditions_golden():
    rep = check_conditions(F1)
    assert rep.zero_differential and rep.special_fiber_is_frobenius
    assert rep.frobenius_power == 2
    rep3 = check_conditions(F3)
    assert not rep3.zero_differential  # t*x0*x1 has odd exponents
    # but mod t the perturbation vanishes, so the fiber is still Frob_2
    assert rep3.special_fiber_is_frobenius and rep3.frobenius_power == 2


def test_apply_preserves_absolute_precision():
    rng = random.Random(31)
    for _ in range(40):
        f = rand_suite_map(rng, prec=16)
        P = rand_point(rng, f.field, f.N, rng.randint(4, 16))
        assert apply_map(f, P).prec == P.prec


def test_apply_commutes_with_galois():
    rng = random.Random(32)
    for _ in range(20):
        f = rand_suite_map(rng, prec=12)
        P = rand_point(rng, f.field, f.N, 12)
        sigma = GaloisAction(f.e)
        sigmaP = ProjPoint(f.field, [c.galois(sigma) for c in P.coords])
        fP = apply_map(f, P)
        sigma_fP = ProjPoint(f.field, [c.galois(sigma) for c in fP.coords])
        assert proj_eq(apply_map(f, sigmaP), sigma_fP)
