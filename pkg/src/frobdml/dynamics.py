"""The map family f_i(x) = sum_j a_ij x_j^q + g_i(x_0^p, ..., x_N^p).

DmlMap is the structured form: an (N+1)x(N+1) matrix A over O_K = k[[t]]
with unit determinant, q = p^e, and remainders G_i of degree q/p in
variables y_j standing for x_j^p, every G coefficient in the maximal ideal
(valuation >= 1).  GeneralMap is a plain tuple of homogeneous coordinates,
used for symbolic composition and for maps that only acquire the structured
form after iteration.

q-th powers of series are Frobenius (coefficientwise p-power with index
dilation), never repeated multiplication, so applying a map costs a handful
of genuine series multiplications for the G part only.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import (
    DegreeMismatch,
    DegreeOverflow,
    DimensionMismatch,
    FieldMismatch,
    NotInImage,
    NonUnitDivisor,
    PrecisionExhausted,
    UnsupportedQ,
)
from .field import FieldSpec, FqElem
from .geometry import (
    ExpVec,
    HomogPoly,
    ProjPoint,
    eval_hom_coords,
    normalize,
    poly_mul,
    reduce_point,
)
from .series import AtPrecisionZero, TruncSeries

DEFAULT_TERM_BOUND = 10 ** 6


def term_bound() -> int:
    env = os.environ.get("FROBDML_TERM_BOUND")
    return int(env) if env else DEFAULT_TERM_BOUND


# ---------------------------------------------------------------------------
# validation diagnostics (values, not exceptions)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonUnitDeterminant:
    detail: str

    def __str__(self):
        return f"NonUnitDeterminant: {self.detail}"


@dataclass(frozen=True)
class CoefficientNotInMaximalIdeal:
    coordinate: int
    exponents: ExpVec

    def __str__(self):
        return (f"CoefficientNotInMaximalIdeal: G[{self.coordinate}] term "
                f"{list(self.exponents)} has a unit coefficient")


@dataclass(frozen=True)
class WrongDegree:
    coordinate: int
    got: int
    want: int

    def __str__(self):
        return (f"WrongDegree: G[{self.coordinate}] has degree {self.got}, "
                f"expected q/p = {self.want}")


@dataclass(frozen=True)
class CoefficientFieldTooLarge:
    where: str
    witness: str

    def __str__(self):
        return (f"CoefficientFieldTooLarge: {self.where} coefficient {self.witness} "
                f"is not fixed by Frob_q")


Diagnostic = Union[NonUnitDeterminant, CoefficientNotInMaximalIdeal,
                   WrongDegree, CoefficientFieldTooLarge]


@dataclass(frozen=True)
class NotInForm:
    coordinate: Optional[int]
    exponents: Optional[ExpVec]
    reason: str

    def __str__(self):
        where = "" if self.coordinate is None else f" in coordinate {self.coordinate}"
        exps = "" if self.exponents is None else f" at {list(self.exponents)}"
        return f"NotInForm{where}{exps}: {self.reason}"


@dataclass(frozen=True)
class ConditionsReport:
    zero_differential: bool
    special_fiber_is_frobenius: bool
    frobenius_power: Optional[int]


# ---------------------------------------------------------------------------
# map types
# ---------------------------------------------------------------------------

class DmlMap:
    __slots__ = ("field", "p", "e", "N", "A", "G", "e0", "label", "_rows")

    def __init__(self, field: FieldSpec, p: int, e: int, A: Sequence[Sequence[TruncSeries]],
                 G: Sequence[HomogPoly], e0: int, label: str = ""):
        self.field = field
        self.p = p
        self.e = e
        self.N = len(A) - 1
        self.A = tuple(tuple(row) for row in A)
        self.G = tuple(G)
        self.e0 = e0
        self.label = label
        self._rows: Optional[list] = None

    @property
    def q(self) -> int:
        return self.p ** self.e

    def sigma(self) -> int:
        """Frobenius exponent of the Galois action sigma = Frob_q."""
        return self.e

    def coefficient_precision(self) -> int:
        precs = [s.prec for row in self.A for s in row]
        precs += [c.prec for g in self.G for c in g.terms.values()]
        return min(precs)

    def _nonzero_rows(self):
        if self._rows is None:
            one = self.field.one()
            rows = []
            for row in self.A:
                entries = []
                for j, s in enumerate(row):
                    if not s.is_zero_at_precision():
                        is_one = (s.constant_term() == one
                                  and all(c.is_zero() for c in s.coeffs[1:]))
                        entries.append((j, s, is_one))
                rows.append(entries)
            self._rows = rows
        return self._rows

    def __repr__(self):
        return f"DmlMap(p={self.p}, e={self.e}, N={self.N}, label={self.label!r})"


class GeneralMap:
    __slots__ = ("field", "N", "degree", "coords", "label")

    def __init__(self, field: FieldSpec, coords: Sequence[HomogPoly], label: str = ""):
        coords = tuple(coords)
        if len(coords) < 2:
            raise DimensionMismatch("a map needs at least 2 coordinates")
        N = len(coords) - 1
        deg = coords[0].degree
        for h in coords:
            if h.field != field:
                raise FieldMismatch("coordinate field mismatch")
            if h.N != N:
                raise DimensionMismatch("coordinate variable count mismatch")
            if h.degree != deg:
                raise DegreeMismatch("coordinates of mixed degree")
        self.field = field
        self.N = N
        self.degree = deg
        self.coords = coords
        self.label = label

    def __repr__(self):
        return f"GeneralMap(N={self.N}, degree={self.degree}, label={self.label!r})"


AnyMap = Union[DmlMap, GeneralMap]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def series_det(A: Sequence[Sequence[TruncSeries]]) -> TruncSeries:
    """Cofactor expansion; exact, no divisions (desk-scale sizes)."""
    n = len(A)
    if n == 1:
        return A[0][0]
    out: Optional[TruncSeries] = None
    for j in range(n):
        entry = A[0][j]
        if entry.is_zero_at_precision():
            continue
        minor = [[row[k] for k in range(n) if k != j] for row in A[1:]]
        term = entry * series_det(minor)
        if j % 2:
            term = -term
        out = term if out is None else out + term
    if out is None:
        prec = min(s.prec for row in A for s in row)
        return TruncSeries.zeros(A[0][0].field, prec)
    return out


def _sigma_fixed(s: TruncSeries, e: int) -> Optional[str]:
    """None if every coefficient is Frob_{p^e}-fixed, else a witness string."""
    for j, c in enumerate(s.coeffs):
        if c.frobenius(e) != c:
            return f"{c} (of t^{j})"
    return None


def coefficient_field_exponent(f_A, f_G) -> int:
    """lcm of the subfield degrees of every stored coefficient."""
    e0 = 1
    for row in f_A:
        for s in row:
            for c in s.coeffs:
                if not c.is_zero():
                    e0 = math.lcm(e0, c.subfield_degree())
    for g in f_G:
        for s in g.terms.values():
            for c in s.coeffs:
                if not c.is_zero():
                    e0 = math.lcm(e0, c.subfield_degree())
    return e0


def validate_map(field: FieldSpec, p: int, e: int,
                 A: Sequence[Sequence[TruncSeries]],
                 G: Sequence[HomogPoly],
                 label: str = "") -> Union[DmlMap, List[Diagnostic]]:
    """Check the structured-form invariants; diagnostics are ordered
    determinant first, then A row-major, then G by coordinate index."""
    if p != field.p:
        raise FieldMismatch(f"map characteristic {p} vs field characteristic {field.p}")
    if e < 1:
        raise DegreeMismatch(f"e = {e} must be >= 1")
    q = p ** e
    n = len(A)
    if n < 2 or any(len(row) != n for row in A):
        raise DimensionMismatch("A must be square of size N+1 >= 2")
    if len(G) != n:
        raise DimensionMismatch(f"G has {len(G)} entries, expected {n}")
    N = n - 1
    diags: List[Diagnostic] = []

    det = series_det(A)
    v = det.valuation()
    if isinstance(v, AtPrecisionZero) or v > 0:
        diags.append(NonUnitDeterminant(
            f"det(A) = {det} has valuation {v if not isinstance(v, AtPrecisionZero) else f'>= {v.prec}'}"))

    for i, row in enumerate(A):
        for j, s in enumerate(row):
            w = _sigma_fixed(s, e)
            if w is not None:
                diags.append(CoefficientFieldTooLarge(f"A[{i}][{j}]", w))

    want = q // p
    for i, g in enumerate(G):
        if g.N != N:
            raise DimensionMismatch(f"G[{i}] has {g.N + 1} variables, expected {n}")
        if g.degree != want:
            diags.append(WrongDegree(i, g.degree, want))
            continue
        for exps, c in sorted(g.terms.items(), reverse=True):
            vv = c.valuation()
            if not isinstance(vv, AtPrecisionZero) and vv == 0:
                diags.append(CoefficientNotInMaximalIdeal(i, exps))
            w = _sigma_fixed(c, e)
            if w is not None:
                diags.append(CoefficientFieldTooLarge(f"G[{i}] term {list(exps)}", w))

    if diags:
        return diags
    e0 = coefficient_field_exponent(A, G)
    return DmlMap(field, p, e, A, G, e0, label)


# ---------------------------------------------------------------------------
# application and orbits
# ---------------------------------------------------------------------------

def _at_prec(s: TruncSeries, prec: int) -> TruncSeries:
    if s.prec < prec:
        raise PrecisionExhausted(
            f"map coefficient known only to t^{s.prec} < point precision {prec}")
    return s.change_precision(prec) if s.prec > prec else s


def apply_map(f: AnyMap, P: ProjPoint) -> ProjPoint:
    """One application, canonical output at the same absolute precision."""
    if f.field != P.field:
        raise FieldMismatch("map and point over different fields")
    if f.N != P.N:
        raise DimensionMismatch(f"map on P^{f.N}, point in P^{P.N}")
    prec = P.prec
    if isinstance(f, GeneralMap):
        imgs = [eval_hom_coords(h, P.coords) for h in f.coords]
        Q = normalize(imgs)
    else:
        xq = [c.frobenius_power(f.e) for c in P.coords]
        xp = [c.frobenius_power(1) for c in P.coords] if f.e != 1 else xq
        imgs = []
        for i, entries in enumerate(f._nonzero_rows()):
            acc: Optional[TruncSeries] = None
            for j, s, is_one in entries:
                term = xq[j] if is_one else _at_prec(s, prec) * xq[j]
                acc = term if acc is None else acc + term
            g = f.G[i]
            if not g.is_zero():
                gval = eval_hom_coords(g, xp)
                acc = gval if acc is None else acc + gval
            imgs.append(acc if acc is not None else TruncSeries.zeros(f.field, prec))
        Q = normalize(imgs)
    if Q.consumed:
        raise PrecisionExhausted(
            f"image lies in t^{Q.consumed}*O^(N+1); the map drops precision here")
    return Q


def orbit(f: AnyMap, P: ProjPoint, H: int) -> List[ProjPoint]:
    if H < 0:
        raise DegreeMismatch("horizon must be >= 0")
    out = [P]
    cur = P
    for _ in range(H):
        cur = apply_map(f, cur)
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# conditions of the structured form
# ---------------------------------------------------------------------------

def dml_to_general(f: DmlMap) -> GeneralMap:
    q, p, n = f.q, f.p, f.N + 1
    coords = []
    for i in range(n):
        terms: Dict[ExpVec, TruncSeries] = {}
        for j in range(n):
            s = f.A[i][j]
            if not s.is_zero_at_precision():
                e = tuple(q if k == j else 0 for k in range(n))
                terms[e] = terms[e] + s if e in terms else s
        for exps, c in f.G[i].terms.items():
            e = tuple(p * x for x in exps)
            terms[e] = terms[e] + c if e in terms else c
        coords.append(HomogPoly(f.field, f.N, q, terms))
    return GeneralMap(f.field, coords, f.label)


def check_conditions(f: AnyMap) -> ConditionsReport:
    """The two hypotheses: identically zero differential, and special fiber
    equal to Frob_q composed with a unit scalar."""
    F = dml_to_general(f) if isinstance(f, DmlMap) else f
    p = F.field.p
    zero_diff = all(
        all(x % p == 0 for x in exps)
        for h in F.coords for exps in h.terms)

    d = F.degree
    dd, k = d, 0
    while dd > 1 and dd % p == 0:
        dd //= p
        k += 1
    is_ppower = (dd == 1 and k >= 1)

    scalar: Optional[FqElem] = None
    fiber = True
    n = F.N + 1
    for i, h in enumerate(F.coords):
        res = h.reduce()
        want = tuple(d if j == i else 0 for j in range(n))
        if set(res.keys()) != {want}:
            fiber = False
            break
        c = res[want]
        if scalar is None:
            scalar = c
        elif c != scalar:
            fiber = False
            break
    fiber = fiber and scalar is not None and not scalar.is_zero() and is_ppower
    return ConditionsReport(zero_diff, fiber, d if fiber else None)


# ---------------------------------------------------------------------------
# composition and recognition
# ---------------------------------------------------------------------------

def compose_maps(F: AnyMap, G: AnyMap,
                 max_terms: Optional[int] = None) -> GeneralMap:
    """(F o G)(x) = F(G(x)) by sparse substitution with like-term collection."""
    Fg = dml_to_general(F) if isinstance(F, DmlMap) else F
    Gg = dml_to_general(G) if isinstance(G, DmlMap) else G
    if Fg.field != Gg.field or Fg.N != Gg.N:
        raise DimensionMismatch("cannot compose maps over different spaces")
    bound = term_bound() if max_terms is None else max_terms
    n = Fg.N + 1
    pow_cache: Dict[Tuple[int, int], HomogPoly] = {}

    def gpow(j: int, k: int) -> HomogPoly:
        key = (j, k)
        got = pow_cache.get(key)
        if got is None:
            got = Gg.coords[j] if k == 1 else poly_mul(gpow(j, k - 1), Gg.coords[j], bound)
            pow_cache[key] = got
        return got

    out = []
    deg = Fg.degree * Gg.degree
    for h in Fg.coords:
        acc = HomogPoly.zero(Fg.field, Fg.N, deg)
        for exps, coeff in h.terms.items():
            mono: Optional[HomogPoly] = None
            for j, k in enumerate(exps):
                if k:
                    part = gpow(j, k)
                    mono = part if mono is None else poly_mul(mono, part, bound)
            term = mono.scale(coeff) if mono is not None else None
            if term is None:
                raise DegreeMismatch("degree-0 coordinate in composition")
            acc = acc + term
            if len(acc.terms) > bound:
                raise DegreeOverflow(
                    f"composed coordinate exceeds the symbolic size bound of {bound} terms")
        out.append(acc)
    return GeneralMap(Fg.field, out, label=f"{Fg.label}o{Gg.label}" if Fg.label else "")


def iterate_map(f: AnyMap, k: int, max_terms: Optional[int] = None) -> GeneralMap:
    """Symbolic k-fold composition f^k, k >= 1."""
    if k < 1:
        raise DegreeMismatch("iteration count must be >= 1")
    cur = dml_to_general(f) if isinstance(f, DmlMap) else f
    base = cur
    for _ in range(k - 1):
        cur = compose_maps(cur, base, max_terms)
    return cur


def recognize_dml_form(F: GeneralMap, p: int, e: int) -> Union[DmlMap, NotInForm]:
    """Split each coordinate into sum_j a_ij x_j^q plus a remainder in
    p-th-power variables with maximal-ideal coefficients.

    The split is normalized so that A is residue-constant: only the constant
    term of an x_j^q coefficient goes into A; its valuation >= 1 tail joins
    the remainder at y-exponent (q/p) e_j, which is always admissible.  A
    series presentation (A(t), G) exists iff the constant one does, since
    det A(t) is a unit exactly when det A(0) != 0, so this loses nothing and
    makes the recognized matrix part of a conjugated map exactly I.
    """
    q = p ** e
    if F.degree != q:
        raise DegreeMismatch(f"map degree {F.degree} != p^e = {q}")
    n = F.N + 1
    prec = min((c.prec for h in F.coords for c in h.terms.values()), default=1)
    zero = TruncSeries.zeros(F.field, prec)
    A: List[List[TruncSeries]] = [[zero] * n for _ in range(n)]
    G: List[HomogPoly] = []
    for i, h in enumerate(F.coords):
        rem: Dict[ExpVec, TruncSeries] = {}
        for exps, coeff in h.terms.items():
            j = _pure_power_index(exps, q)
            if j is not None:
                c0 = coeff.constant_term()
                if not c0.is_zero():
                    A[i][j] = TruncSeries.from_constant(c0, coeff.prec)
                tail = coeff - A[i][j] if not c0.is_zero() else coeff
                if not tail.is_zero_at_precision():
                    yexp = tuple(q // p if k == j else 0 for k in range(n))
                    rem[yexp] = rem[yexp] + tail if yexp in rem else tail
                continue
            if any(x % p for x in exps):
                return NotInForm(i, exps, "exponent vector is not divisible by p")
            v = coeff.valuation()
            if not isinstance(v, AtPrecisionZero) and v == 0:
                return NotInForm(i, exps, "remainder coefficient is a unit")
            yexp = tuple(x // p for x in exps)
            rem[yexp] = rem[yexp] + coeff if yexp in rem else coeff
        G.append(HomogPoly(F.field, F.N, q // p, rem))
    det = series_det(A)
    v = det.valuation()
    if isinstance(v, AtPrecisionZero) or v > 0:
        return NotInForm(None, None, f"extracted matrix determinant {det} is not a unit")
    e0 = coefficient_field_exponent(A, G)
    return DmlMap(F.field, p, e, A, G, e0, F.label)


def _pure_power_index(exps: ExpVec, q: int) -> Optional[int]:
    j = None
    for k, x in enumerate(exps):
        if x == q and j is None:
            j = k
        elif x:
            return None
    return j


# ---------------------------------------------------------------------------
# preimages for q = p
# ---------------------------------------------------------------------------

def invert_series_matrix(M: Sequence[Sequence[TruncSeries]],
                         prec: int) -> List[List[TruncSeries]]:
    """Gauss-Jordan with unit pivots; entries truncated to prec."""
    n = len(M)
    field = M[0][0].field
    a = [[_at_prec(s, prec) for s in row] for row in M]
    inv = [[TruncSeries.one(field, prec) if i == j else TruncSeries.zeros(field, prec)
            for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if a[r][col].is_unit():
                piv = r
                break
        if piv is None:
            raise NonUnitDivisor(f"no unit pivot in column {col}; matrix not invertible over O_K")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        u = a[col][col].inverse()
        a[col] = [x * u for x in a[col]]
        inv[col] = [x * u for x in inv[col]]
        for r in range(n):
            if r == col:
                continue
            factor = a[r][col]
            if factor.is_zero_at_precision():
                continue
            a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - factor * y for x, y in zip(inv[r], inv[col])]
    return inv


def preimage_qp(f: DmlMap, P: ProjPoint) -> ProjPoint:
    """Exact preimage when q = p: f factors as M o Frob_p with
    M = A + Gamma, Gamma the matrix of the linear forms G_i."""
    if f.q != f.p:
        raise UnsupportedQ(f"preimage_qp requires q = p, got q = {f.q}")
    if f.field != P.field or f.N != P.N:
        raise DimensionMismatch("map and point do not match")
    n = f.N + 1
    prec = P.prec
    field = f.field
    zero = TruncSeries.zeros(field, prec)
    M = [[_at_prec(f.A[i][j], prec) for j in range(n)] for i in range(n)]
    e_basis = [tuple(1 if k == j else 0 for k in range(n)) for j in range(n)]
    for i in range(n):
        for j in range(n):
            c = f.G[i].terms.get(e_basis[j])
            if c is not None:
                M[i][j] = M[i][j] + _at_prec(c, prec)
    Minv = invert_series_matrix(M, prec)
    R = []
    for i in range(n):
        acc = zero
        for j in range(n):
            if not Minv[i][j].is_zero_at_precision():
                acc = acc + Minv[i][j] * P.coords[j]
        R.append(acc)
    # the stored representative of P differs from M * (preimage)^(p) by a
    # unit series, so membership can only be read off after renormalizing
    # at the first unit coordinate (which the p-power forces to be 1)
    i0 = next((i for i, r in enumerate(R)
               if not r.constant_term().is_zero()), None)
    if i0 is None:
        raise NotInImage("solved vector has no unit coordinate at this precision")
    u = R[i0]
    if u.constant_term() != field.one() or any(not c.is_zero() for c in u.coeffs[1:]):
        R = [r / u for r in R]
    p = f.p
    for i, r in enumerate(R):
        for k, c in enumerate(r.coeffs):
            if k % p and not c.is_zero():
                raise NotInImage(
                    f"coordinate {i}: solved series has a t^{k} term, "
                    f"not a p-th power at this precision")
    cprec = -(-prec // p)
    Q = [TruncSeries(field, cprec, [r.coeffs[p * j].frobenius(-1) for j in range(cprec)])
         for r in R]
    out = normalize(Q)
    assert out.consumed == 0
    return out
