"""Finite fields F_{p^m} presented as F_p[a]/(modulus).

Elements are coefficient vectors over F_p in ascending powers of the
generator ``a``, so (c0, c1, c2) means c0 + c1*a + c2*a^2.  The modulus is
monic, user supplied, and checked for irreducibility by exhaustive trial
division (desk scale, m <= 12).  There are no Conway polynomial tables and
no cross-field coercion except the constant embedding F_p -> F_{p^m}.

Frobenius powers x -> x^(p^e) are first-class, including negative e: the
inverse Frobenius is x -> x^(p^(((e mod m) + m) mod m)), never a root
computation.
"""
from __future__ import annotations

from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import (
    DegreeMismatch,
    DivisionByZero,
    FieldMismatch,
    NonPrimeP,
    ParseError,
    ReducibleModulus,
)

Coeffs = Tuple[int, ...]


# ---------------------------------------------------------------------------
# polynomial helpers over F_p (dense coefficient lists, ascending powers)
# ---------------------------------------------------------------------------

def _ptrim(c: List[int]) -> List[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _pmul(u: Sequence[int], v: Sequence[int], p: int) -> List[int]:
    if not u or not v:
        return []
    out = [0] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui:
            for j, vj in enumerate(v):
                out[i + j] = (out[i + j] + ui * vj) % p
    return _ptrim(out)


def _pdivmod(u: Sequence[int], v: Sequence[int], p: int) -> Tuple[List[int], List[int]]:
    """Division with remainder; v need not be monic (its lead is inverted mod p)."""
    r = list(u)
    _ptrim(r)
    dv = len(v) - 1
    inv_lead = pow(v[-1], p - 2, p)
    q = [0] * max(len(r) - dv, 0)
    while len(r) - 1 >= dv and r:
        k = len(r) - 1 - dv
        c = (r[-1] * inv_lead) % p
        q[k] = c
        for i, vi in enumerate(v):
            r[k + i] = (r[k + i] - c * vi) % p
        _ptrim(r)
    return q, r


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _poly_from_index(idx: int, degree: int, p: int) -> List[int]:
    """Monic polynomial of given degree whose lower coefficients are the
    base-p digits of idx (little-endian)."""
    c = []
    for _ in range(degree):
        c.append(idx % p)
        idx //= p
    c.append(1)
    return c


def _find_factor(modulus: Sequence[int], p: int) -> Optional[List[int]]:
    """Exhaustive search for a monic factor of degree 1..deg/2, or None."""
    m = len(modulus) - 1
    for d in range(1, m // 2 + 1):
        for idx in range(p ** d):
            cand = _poly_from_index(idx, d, p)
            _, rem = _pdivmod(modulus, cand, p)
            if not rem:
                return cand
    return None


def _poly_str(coeffs: Sequence[int]) -> str:
    terms = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        if j == 0:
            terms.append(str(c))
        elif j == 1:
            terms.append("a" if c == 1 else f"{c}*a")
        else:
            terms.append(f"a^{j}" if c == 1 else f"{c}*a^{j}")
    return "+".join(terms) if terms else "0"


# ---------------------------------------------------------------------------
# FieldSpec
# ---------------------------------------------------------------------------

class FieldSpec:
    """Immutable description of F_{p^m} together with cached tables."""

    __slots__ = (
        "p", "m", "modulus", "order",
        "_red", "_frob_mats", "_zero", "_one", "_gen", "_gen_pows",
    )

    def __init__(self, p: int, m: int, modulus: Sequence[int],
                 _trusted_irreducible: bool = False):
        if not _is_prime(p):
            raise NonPrimeP(f"p = {p} is not prime")
        if m < 1:
            raise DegreeMismatch(f"m = {m} must be >= 1")
        mod = tuple(c % p for c in modulus)
        if len(mod) != m + 1:
            raise DegreeMismatch(
                f"modulus has {len(mod) - 1 if mod else -1} coefficients past degree 0, expected degree {m}")
        if mod[-1] != 1:
            raise DegreeMismatch("modulus must be monic")
        if not _trusted_irreducible:
            factor = _find_factor(mod, p)
            if factor is not None:
                raise ReducibleModulus(
                    f"modulus {_poly_str(mod)} is divisible by {_poly_str(factor)}")
        self.p = p
        self.m = m
        self.modulus = mod
        self.order = p ** m
        # reduction rows: _red[k] = a^(m+k) reduced mod modulus, k = 0..m-2
        red: List[Coeffs] = []
        cur = [(-c) % p for c in mod[:-1]]  # a^m
        red.append(tuple(cur))
        for _ in range(m - 2):
            nxt = [0] + cur[:-1]
            top = cur[-1]
            if top:
                for i in range(m):
                    nxt[i] = (nxt[i] + top * red[0][i]) % p
            red.append(tuple(nxt))
            cur = nxt
        self._red = red
        self._frob_mats: dict = {}
        self._zero = FqElem(self, (0,) * m)
        self._one = FqElem(self, (1,) + (0,) * (m - 1))
        g = [0] * m
        if m == 1:
            g[0] = 0  # a is not a generator of F_p; unused
        else:
            g[1] = 1
        self._gen = FqElem(self, tuple(g))
        self._gen_pows: dict = {}

    # -- basic elements ------------------------------------------------

    def zero(self) -> "FqElem":
        return self._zero

    def one(self) -> "FqElem":
        return self._one

    def gen(self) -> "FqElem":
        if self.m == 1:
            raise DegreeMismatch("F_p has no generator symbol a")
        return self._gen

    def el(self, coeffs: Sequence[int]) -> "FqElem":
        c = [x % self.p for x in coeffs]
        if len(c) > self.m:
            raise DegreeMismatch(f"{len(c)} coefficients for degree-{self.m} field")
        c += [0] * (self.m - len(c))
        return FqElem(self, tuple(c))

    def from_int(self, idx: int) -> "FqElem":
        """Element with base-p digit vector idx (little-endian); the fixed
        total order on elements is this integer index."""
        c = []
        for _ in range(self.m):
            c.append(idx % self.p)
            idx //= self.p
        return FqElem(self, tuple(c))

    def elements(self) -> Iterator["FqElem"]:
        for idx in range(self.order):
            yield self.from_int(idx)

    # -- coefficient arithmetic (tuples in, tuples out) ------------------

    def _reduce(self, prod: List[int]) -> Coeffs:
        m, p = self.m, self.p
        for k in range(len(prod) - 1, m - 1, -1):
            c = prod[k]
            if c:
                row = self._red[k - m]
                for i in range(m):
                    prod[i] = (prod[i] + c * row[i]) % p
        return tuple(x % p for x in prod[:m])

    def _mul(self, u: Coeffs, v: Coeffs) -> Coeffs:
        m, p = self.m, self.p
        if m == 1:
            return ((u[0] * v[0]) % p,)
        prod = [0] * (2 * m - 1)
        for i in range(m):
            ui = u[i]
            if ui:
                for j in range(m):
                    prod[i + j] += ui * v[j]
        return self._reduce(prod)

    def _inv(self, u: Coeffs) -> Coeffs:
        if not any(u):
            raise DivisionByZero("inverse of 0")
        p, m = self.p, self.m
        if m == 1:
            return (pow(u[0], p - 2, p),)
        # extended Euclid on (modulus, u); invariant s_i * u = r_i mod modulus
        r0, r1 = list(self.modulus), _ptrim(list(u))
        s0: List[int] = []
        s1: List[int] = [1]
        while r1:
            q, r = _pdivmod(r0, r1, p)
            r0, r1 = r1, r
            qs1 = _pmul(q, s1, p)
            n = max(len(s0), len(qs1))
            s_new = [((s0[i] if i < len(s0) else 0) - (qs1[i] if i < len(qs1) else 0)) % p
                     for i in range(n)]
            s0, s1 = s1, _ptrim(s_new)
        # r0 = gcd is a nonzero constant
        c_inv = pow(r0[0], p - 2, p)
        out = [(x * c_inv) % p for x in s0]
        out += [0] * (m - len(out))
        return tuple(out[:m])

    # -- Frobenius -------------------------------------------------------

    def _frob_mat(self, k: int) -> Tuple[Coeffs, ...]:
        """Matrix (columns) of x -> x^(p^k) in the basis 1, a, .., a^(m-1)."""
        k %= self.m
        mat = self._frob_mats.get(k)
        if mat is None:
            g = self._one.coeffs if self.m == 1 else self._gen.coeffs
            # a^(p^k) by repeated p-th powers
            apk = g
            for _ in range(k):
                apk = self._pow(apk, self.p)
            cols = []
            cur = self._one.coeffs
            for _ in range(self.m):
                cols.append(cur)
                cur = self._mul(cur, apk)
            mat = tuple(cols)
            self._frob_mats[k] = mat
        return mat

    def _pow(self, u: Coeffs, n: int) -> Coeffs:
        out = self._one.coeffs
        base = u
        while n:
            if n & 1:
                out = self._mul(out, base)
            base = self._mul(base, base)
            n >>= 1
        return out

    def _frob(self, u: Coeffs, e: int) -> Coeffs:
        k = e % self.m
        if k == 0:
            return u
        cols = self._frob_mat(k)
        p, m = self.p, self.m
        acc = [0] * m
        for j in range(m):
            c = u[j]
            if c:
                col = cols[j]
                for i in range(m):
                    acc[i] += c * col[i]
        return tuple(x % p for x in acc)

    def __eq__(self, other):
        return (isinstance(other, FieldSpec) and self.p == other.p
                and self.m == other.m and self.modulus == other.modulus)

    def __hash__(self):
        return hash((self.p, self.m, self.modulus))

    def __repr__(self):
        return f"F_{{{self.p}^{self.m}}}[a]/({_poly_str(self.modulus)})"


def make_field(p: int, m: int, modulus: Sequence[int]) -> FieldSpec:
    return FieldSpec(p, m, modulus)


# ---------------------------------------------------------------------------
# FqElem
# ---------------------------------------------------------------------------

class FqElem:
    """Element of a FieldSpec; immutable coefficient vector over F_p."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: FieldSpec, coeffs: Coeffs):
        self.field = field
        self.coeffs = coeffs

    def _check(self, other: "FqElem") -> None:
        if self.field != other.field:
            raise FieldMismatch(f"{self.field} vs {other.field}")

    def __add__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        p = self.field.p
        return FqElem(self.field, tuple((a + b) % p for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        p = self.field.p
        return FqElem(self.field, tuple((a - b) % p for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "FqElem":
        p = self.field.p
        return FqElem(self.field, tuple((-a) % p for a in self.coeffs))

    def __mul__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        return FqElem(self.field, self.field._mul(self.coeffs, other.coeffs))

    def __truediv__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        return FqElem(self.field, self.field._mul(self.coeffs, self.field._inv(other.coeffs)))

    def inv(self) -> "FqElem":
        return FqElem(self.field, self.field._inv(self.coeffs))

    def __pow__(self, n: int) -> "FqElem":
        if n < 0:
            return self.inv() ** (-n)
        return FqElem(self.field, self.field._pow(self.coeffs, n))

    def frobenius(self, e: int) -> "FqElem":
        return FqElem(self.field, self.field._frob(self.coeffs, e))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def index(self) -> int:
        """Position in the fixed total element order (base-p digit value)."""
        out = 0
        for c in reversed(self.coeffs):
            out = out * self.field.p + c
        return out

    def subfield_degree(self) -> int:
        """Least d (a divisor of m) with self in F_{p^d}."""
        m = self.field.m
        for d in range(1, m + 1):
            if m % d == 0 and self.field._frob(self.coeffs, d) == self.coeffs:
                return d
        return m

    def __eq__(self, other):
        return (isinstance(other, FqElem) and self.field == other.field
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.field.p, self.field.m, self.coeffs))

    def __str__(self):
        return _poly_str(self.coeffs)

    def __repr__(self):
        return _poly_str(self.coeffs)


def fq_arith(x: FqElem, y: FqElem, op: str) -> FqElem:
    """Dispatch +, -, *, / with field agreement enforced."""
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "/":
        return x / y
    raise ValueError(f"unknown op {op!r}")


def frobenius_pow(x: FqElem, e: int) -> FqElem:
    """x^(p^e) for any integer e; e is reduced mod the order m of Frobenius."""
    return x.frobenius(e)


# ---------------------------------------------------------------------------
# element text syntax:  a+1   2*a^3+1   0
# ---------------------------------------------------------------------------

def parse_element(field: FieldSpec, text: str) -> FqElem:
    s = text.replace(" ", "")
    if not s:
        raise ParseError("empty element string")
    coeffs = [0] * field.m
    sign = 1
    i = 0
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        i = 1
    term = ""
    tokens: List[Tuple[int, str]] = []
    while i <= len(s):
        ch = s[i] if i < len(s) else None
        if ch in ("+", "-", None):
            if not term:
                raise ParseError(f"malformed element {text!r}")
            tokens.append((sign, term))
            if ch is None:
                break
            sign = -1 if ch == "-" else 1
            term = ""
        else:
            term += ch
        i += 1
    for sgn, t in tokens:
        c, j = _parse_term(field, t, text)
        if j >= field.m:
            # reduce a^j via field arithmetic
            val = field.gen() ** j if field.m > 1 else field.one()
            contrib = field.el([c]) * val
            if sgn < 0:
                contrib = -contrib
            for k in range(field.m):
                coeffs[k] = (coeffs[k] + contrib.coeffs[k]) % field.p
        else:
            coeffs[j] = (coeffs[j] + sgn * c) % field.p
    return FqElem(field, tuple(coeffs))


def _parse_term(field: FieldSpec, t: str, full: str) -> Tuple[int, int]:
    """One element term -> (coefficient, power of a)."""
    if t.isdigit():
        return int(t) % field.p, 0
    if "*" in t:
        cs, _, rest = t.partition("*")
        if not cs.isdigit():
            raise ParseError(f"malformed term {t!r} in {full!r}")
        c = int(cs) % field.p
    else:
        rest = t
        c = 1
    if rest == "a":
        j = 1
    elif rest.startswith("a^") and rest[2:].isdigit():
        j = int(rest[2:])
    else:
        raise ParseError(f"malformed term {t!r} in {full!r}")
    if field.m == 1:
        raise ParseError(f"generator a used over prime field in {full!r}")
    return c, j


def format_element(x: FqElem) -> str:
    """Canonical form: ascending powers of a, zero terms omitted, unit
    coefficients omitted except for the constant."""
    return _poly_str(x.coeffs)
