"""Sigma-fixed lifts of residue points and their orbit periodicity.

For a map f = x^q + G(x^p) whose matrix part is the identity mod t, the
operator sigma^{-1} o f is a strict t-adic contraction on integral lifts of
a fixed residue point: coordinates differing by t^k feed through q-th powers
and maximal-ideal coefficients, so images agree to t^{k+1} at least.
Iterating from the constant lift of P0 therefore converges, within prec
steps, to the unique point P~ over P0 satisfying f(P~) = sigma(P~), where
sigma acts coefficientwise by Frob_q and fixes t.  Induction gives
f^n(P~) = sigma^n(P~), so the forward orbit of P~ is periodic with period
dividing the degree over F_q of the coefficient field of P~, and
sigma^{-n}(P~) is an exact n-fold preimage of P~ under f.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .dynamics import DmlMap, apply_map
from .errors import (
    DimensionMismatch,
    FieldMismatch,
    NonCanonicalBasePoint,
    PrecisionBelowThreshold,
    PrecisionTooLow,
    PreconditionMatrixNotIdentityModT,
    ResidueDegreeUnknown,
)
from .field import FqElem
from .geometry import ProjPoint, Subvariety, eval_hom, proj_eq, reduce_point
from .series import AtPrecisionZero, GaloisAction, TruncSeries


class SigmaFixedLift:
    """A point P~ with reduce_point(P~) = P0 and f(P~) = sigma(P~)."""

    def __init__(self, base: Tuple[FqElem, ...], lift: ProjPoint,
                 sigma_exponent: int, residue_degree: Optional[int]):
        self.base = base
        self.lift = lift
        self.sigma_exponent = sigma_exponent
        self.residue_degree = residue_degree

    def __repr__(self):
        return (f"SigmaFixedLift(prec={self.lift.prec}, "
                f"residue_degree={self.residue_degree})")


def point_galois(P: ProjPoint, e: int, inverse: bool = False,
                 times: int = 1) -> ProjPoint:
    """Coefficientwise Frob_{p^e}^(+-times) on every coordinate; canonical
    form is preserved (the pivot 1 is fixed and valuations do not move)."""
    act = GaloisAction(e * times)
    coords = [c.galois(act, inverse=inverse) for c in P.coords]
    return ProjPoint(P.field, coords)


def _require_identity_mod_t(f: DmlMap) -> None:
    one, zero = f.field.one(), f.field.zero()
    for i, row in enumerate(f.A):
        for j, s in enumerate(row):
            want = one if i == j else zero
            if s.constant_term() != want:
                raise PreconditionMatrixNotIdentityModT(
                    f"A[{i}][{j}] = {s} mod t; conjugate the map first")


def _canonical_residue(f: DmlMap, P0: Sequence[FqElem]) -> Tuple[FqElem, ...]:
    if len(P0) != f.N + 1:
        raise DimensionMismatch(f"residue point has {len(P0)} coordinates, "
                                f"expected {f.N + 1}")
    for c in P0:
        if c.field != f.field:
            raise FieldMismatch("residue point over a different field")
    pivot = next((i for i, c in enumerate(P0) if not c.is_zero()), None)
    if pivot is None:
        raise NonCanonicalBasePoint("all residue coordinates are zero")
    if P0[pivot] != f.field.one():
        raise NonCanonicalBasePoint(
            f"first nonzero coordinate is {P0[pivot]}, not 1")
    return tuple(P0)


def detect_residue_degree(P: ProjPoint, e: int) -> Optional[int]:
    """Least m with every stored coefficient fixed by Frob_{q^m}, q = p^e."""
    coeffs = [c for s in P.coords for c in s.coeffs]
    for m in range(1, P.field.m + 1):
        if all(c.frobenius(e * m) == c for c in coeffs):
            return m
    return None


def sigma_fixed_lift(f: DmlMap, P0: Sequence[FqElem], prec: int) -> SigmaFixedLift:
    """Iterate sigma^{-1} o f from the constant lift of P0 until the exact
    fixed point at the requested precision."""
    if prec < 1:
        raise PrecisionTooLow("lift precision must be >= 1")
    _require_identity_mod_t(f)
    base = _canonical_residue(f, P0)
    cur = ProjPoint(f.field, [TruncSeries.from_constant(c, prec) for c in base])
    for _ in range(prec + 2):
        nxt = point_galois(apply_map(f, cur), f.e, inverse=True)
        if nxt.coords == cur.coords:
            break
        cur = nxt
    else:
        raise AssertionError("contraction failed to reach a fixed point")
    if reduce_point(cur) != base:
        raise AssertionError("lift does not reduce to the base point")
    if not proj_eq(apply_map(f, cur), point_galois(cur, f.e)):
        raise AssertionError("lift fails f(P~) = sigma(P~)")
    return SigmaFixedLift(base, cur, f.e, detect_residue_degree(cur, f.e))


def critical_witness(f: DmlMap, L: SigmaFixedLift, n: int) -> ProjPoint:
    """Q = sigma^{-n}(P~); then f^n(Q) = P~ exactly, exhibiting P~ as an
    n-fold image."""
    if n < 0:
        raise PrecisionTooLow("witness index must be >= 0")
    if n > L.lift.prec:
        raise PrecisionTooLow(
            f"witness index {n} exceeds lift precision {L.lift.prec}")
    Q = point_galois(L.lift, L.sigma_exponent, inverse=True, times=n) if n else L.lift
    check = Q
    for _ in range(n):
        check = apply_map(f, check)
    if not proj_eq(check, L.lift):
        raise AssertionError("witness fails f^n(Q) = P~")
    return Q


def minimal_period(f: DmlMap, L: SigmaFixedLift) -> int:
    """Least d >= 1 with proj_eq(f^d(P~), P~); divides the residue degree."""
    m = L.residue_degree
    if m is None:
        raise ResidueDegreeUnknown(
            "lift coefficients do not lie in a detected F_(q^m)")
    cur = L.lift
    for d in range(1, m + 1):
        cur = apply_map(f, cur)
        if proj_eq(cur, L.lift):
            return d
    raise AssertionError(f"no period <= residue degree {m}")


@dataclass
class InvarianceEntry:
    on_variety: bool
    image_on_variety: Optional[bool]  # None when the point is off V


@dataclass
class InvarianceReport:
    """Sampled, precision-qualified evidence that f maps V-points into V.

    Never a proof: only the provided lifts are checked, only to valuation
    threshold tau."""
    threshold: int
    entries: List[InvarianceEntry]
    checked: int          # lifts on V
    stable: int           # lifts on V whose image stays on V
    empty_sample: bool

    @property
    def aggregate(self) -> bool:
        return self.checked > 0 and self.stable == self.checked


def _vanishes(s: TruncSeries, tau: int) -> bool:
    v = s.valuation()
    if isinstance(v, AtPrecisionZero):
        return v.prec >= tau
    return v >= tau


def _on_variety(V: Subvariety, P: ProjPoint, tau: int) -> bool:
    if tau > P.prec:
        raise PrecisionBelowThreshold(
            f"threshold {tau} exceeds point precision {P.prec}")
    return all(_vanishes(eval_hom(h, P), tau) for h in V.generators)


def invariance_evidence(f: DmlMap, V: Subvariety,
                        lifts: Sequence[SigmaFixedLift],
                        tau: int) -> InvarianceReport:
    entries: List[InvarianceEntry] = []
    checked = stable = 0
    for L in lifts:
        if not _on_variety(V, L.lift, tau):
            entries.append(InvarianceEntry(False, None))
            continue
        ok = _on_variety(V, apply_map(f, L.lift), tau)
        entries.append(InvarianceEntry(True, ok))
        checked += 1
        stable += ok
    return InvarianceReport(tau, entries, checked, stable, checked == 0)
