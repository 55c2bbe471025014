"""Return sets {n <= H : f^n(x) on V at valuation >= tau} and their
splitting into arithmetic progressions plus a finite sporadic set.

Membership is precision-qualified: a generator counts as vanishing when its
value has t-adic valuation at least tau.  Exact vanishing is undecidable
from truncated data, so every report carries the horizon and threshold; an
"exact" decomposition means exact agreement with the computed hits on
[0, H], never a claim about the infinite return set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Set, Tuple, Union

from .dynamics import AnyMap, apply_map
from .errors import PrecisionBelowThreshold
from .geometry import ProjPoint, Subvariety, eval_hom
from .series import AtPrecisionZero

Valuation = Union[int, AtPrecisionZero]


def default_threshold(prec: int) -> int:
    """tau = prec - 4: slack against contaminated final digits."""
    if prec <= 4:
        raise PrecisionBelowThreshold(
            f"precision {prec} leaves no room for the default threshold slack")
    return prec - 4


@dataclass(frozen=True)
class ReturnSet:
    horizon: int
    threshold: int
    hits: Tuple[int, ...]                      # strictly increasing
    valuations: Tuple[Tuple[Valuation, ...], ...]  # per n, per generator

    def __contains__(self, n: int) -> bool:
        return n in set(self.hits)


def _meets(v: Valuation, tau: int) -> bool:
    if isinstance(v, AtPrecisionZero):
        return v.prec >= tau
    return v >= tau


def return_set(f: AnyMap, x: ProjPoint, V: Subvariety, H: int,
               tau: int) -> ReturnSet:
    """Walk the orbit once; n is a hit iff every generator of V evaluates at
    f^n(x) to valuation >= tau."""
    if H < 0:
        raise ValueError("horizon must be >= 0")
    if tau > x.prec:
        raise PrecisionBelowThreshold(
            f"threshold {tau} exceeds point precision {x.prec}")
    if tau < 1:
        raise PrecisionBelowThreshold("threshold must be >= 1")
    hits: List[int] = []
    vals: List[Tuple[Valuation, ...]] = []
    cur = x
    for n in range(H + 1):
        row = tuple(eval_hom(h, cur).valuation() for h in V.generators)
        vals.append(row)
        if all(_meets(v, tau) for v in row):
            hits.append(n)
        if n < H:
            cur = apply_map(f, cur)
    return ReturnSet(H, tau, tuple(hits), tuple(vals))


EXACT = "exact_up_to_horizon"
NO_DECOMPOSITION = "no_decomposition_within_bounds"


@dataclass(frozen=True)
class APDecomposition:
    status: str
    horizon: int
    n0: Optional[int]
    sporadic: Tuple[int, ...]
    progressions: Tuple[Tuple[int, int], ...]   # (l, m) meaning {l + m k}

    def expand(self) -> Set[int]:
        out = set(self.sporadic)
        for l, m in self.progressions:
            out.update(range(l, self.horizon + 1, m))
        return out


def _assemble(hits: Set[int], H: int, m: int, n0: int) -> APDecomposition:
    sporadic = tuple(sorted(n for n in hits if n < n0))
    progs = tuple((r, m) for r in range(n0, n0 + m) if r in hits)
    return APDecomposition(EXACT, H, n0, sporadic, progs)


def ap_decompose(rs: ReturnSet, M_max: int) -> APDecomposition:
    """Least period m <= M_max, then least preperiod n0 <= H - 2m, such that
    the hit indicator is m-periodic on [n0, H]; two full periods of window
    are required before claiming exactness."""
    if M_max < 1:
        raise ValueError("M_max must be >= 1")
    H = rs.horizon
    hits = set(rs.hits)
    for m in range(1, M_max + 1):
        for n0 in range(0, H - 2 * m + 1):
            if all((n in hits) == (n + m in hits) for n in range(n0, H - m + 1)):
                dec = _assemble(hits, H, m, n0)
                if dec.expand() != hits:  # soundness re-expansion check
                    raise AssertionError("decomposition fails re-expansion")
                return dec
    return APDecomposition(NO_DECOMPOSITION, H, None, (), ())


def decompose_oracle(hits: Sequence[int], H: int, M_max: int) -> APDecomposition:
    """Independent check: same (m, n0) scan order, but each candidate is
    validated by expanding residues found in [n0, n0+m) and comparing the
    resulting set against hits directly."""
    hset = set(hits)
    if any(n < 0 or n > H for n in hset):
        raise ValueError("hits must lie in [0, H]")
    for m in range(1, M_max + 1):
        for n0 in range(0, H - 2 * m + 1):
            expanded = set(n for n in hset if n < n0)
            for r in range(n0, n0 + m):
                if r in hset:
                    expanded.update(range(r, H + 1, m))
            if expanded == hset:
                return _assemble(hset, H, m, n0)
    return APDecomposition(NO_DECOMPOSITION, H, None, (), ())
