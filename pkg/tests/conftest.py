"""Seeded generators shared across test modules.

Nothing here touches global random state; every suite owns a Random with an
explicit seed so failures replay exactly.
"""
import random
from typing import Dict, List, Sequence, Tuple

from frobdml.dynamics import DmlMap, validate_map
from frobdml.field import FieldSpec, FqElem, make_field
from frobdml.geometry import HomogPoly, ProjPoint
from frobdml.series import TruncSeries

MODULI = {
    (2, 1): [0, 1], (2, 2): [1, 1, 1], (2, 3): [1, 1, 0, 1],
    (3, 1): [0, 1], (3, 2): [1, 0, 1], (3, 3): [1, 2, 0, 1],
    (5, 1): [0, 1], (5, 2): [2, 0, 1], (5, 3): [1, 1, 0, 1],
}

_FIELDS: Dict[Tuple[int, int], FieldSpec] = {}


def field_for(p: int, m: int) -> FieldSpec:
    key = (p, m)
    if key not in _FIELDS:
        _FIELDS[key] = make_field(p, m, MODULI[key])
    return _FIELDS[key]


def rand_prime_series(rng: random.Random, field: FieldSpec, prec: int,
                      vlo: int = 1, vhi: int = 3) -> TruncSeries:
    """Prime-subfield digits (hence sigma-fixed for every e), valuation >= vlo."""
    cs = [field.zero()] * prec
    v = rng.randint(vlo, vhi)
    cs[v] = field.from_int(rng.randrange(1, field.p))
    for _ in range(rng.randint(0, 3)):
        j = rng.randrange(v + 1, prec)
        cs[j] = field.from_int(rng.randrange(field.p))
    return TruncSeries(field, prec, cs)


def rand_exponents(rng: random.Random, n: int, degree: int) -> Tuple[int, ...]:
    exps = [0] * n
    for _ in range(degree):
        exps[rng.randrange(n)] += 1
    return tuple(exps)


def identity_matrix(field: FieldSpec, n: int, prec: int) -> List[List[TruncSeries]]:
    one = TruncSeries.one(field, prec)
    zero = TruncSeries.zeros(field, prec)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def rand_suite_map(rng: random.Random, prec: int = 40) -> DmlMap:
    """A = I, random G with valuation 1..3 prime-subfield coefficients."""
    p = rng.choice((2, 3, 5))
    e = rng.randint(1, 2)
    N = rng.randint(1, 3)
    m = rng.randint(1, 3)
    field = field_for(p, m)
    n = N + 1
    d = p ** (e - 1)
    A = identity_matrix(field, n, prec)
    G = []
    for _ in range(n):
        terms = {}
        for _ in range(rng.randint(0, 3)):
            terms[rand_exponents(rng, n, d)] = rand_prime_series(rng, field, prec)
        G.append(HomogPoly(field, N, d, terms))
    f = validate_map(field, p, e, A, G, label="suite")
    assert isinstance(f, DmlMap), f
    return f


def rand_residue_point(rng: random.Random, f: DmlMap) -> Tuple[FqElem, ...]:
    field = f.field
    return (field.one(),) + tuple(
        field.from_int(rng.randrange(field.order)) for _ in range(f.N))


def rand_point(rng: random.Random, field: FieldSpec, N: int,
               prec: int) -> ProjPoint:
    coords = []
    for _ in range(N + 1):
        cs = [field.from_int(rng.randrange(field.order)) for _ in range(prec)]
        coords.append(TruncSeries(field, prec, cs))
    i = rng.randrange(N + 1)
    if coords[i].constant_term().is_zero():
        cs = list(coords[i].coeffs)
        cs[0] = field.one()
        coords[i] = TruncSeries(field, prec, cs)
    return ProjPoint(field, coords)


def fq_det(A: Sequence[Sequence[FqElem]]) -> FqElem:
    field = A[0][0].field
    n = len(A)
    M = [list(row) for row in A]
    det = field.one()
    for c in range(n):
        piv = next((r for r in range(c, n) if not M[r][c].is_zero()), None)
        if piv is None:
            return field.zero()
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det = det * M[c][c]
        inv = M[c][c].inv()
        for r in range(c + 1, n):
            if not M[r][c].is_zero():
                factor = M[r][c] * inv
                M[r] = [M[r][k] - factor * M[c][k] for k in range(n)]
    return det


def rand_gl(rng: random.Random, field: FieldSpec, n: int) -> List[List[FqElem]]:
    while True:
        A = [[field.from_int(rng.randrange(field.order)) for _ in range(n)]
             for _ in range(n)]
        if not fq_det(A).is_zero():
            return A
