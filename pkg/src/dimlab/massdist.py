"""The convolution measures mu on X(a, b) and mu' on X'(a, b).

mu is the infinite convolution of the fair two-point factors
``(delta_0 + delta_{2^-p}) / 2`` over the free positions ``p``.  mu' adds one
factor ``(delta_0 + delta_g) / 2`` per gap, ``g`` being the number whose digits
are 1 exactly on that gap.  Every atom of positive mass therefore has mass a
power of 1/2, so masses are handled as base-2 logarithms.

The last block of a finite schedule is free and has no gap after it; nothing
is said about digits past ``b_K``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .digitsets import (
    CoverAtom,
    DepthError,
    DigitSet,
    Kind,
    Membership,
    exact_cover_count,
    member,
    sample_point,
    sample_points,
)
from .numerics import DyadicPoint
from .schedule import BlockSchedule, default_window, free_ratio_profile, tied_ratio_profile

__all__ = [
    "BRUTE_MAX_DEPTH",
    "BlockMeasure",
    "HolderResult",
    "brute_force_measure",
    "convolution_support",
    "default_eps",
    "holder_check",
    "interval_log2_measure",
    "interval_measure",
    "sample",
    "samples",
]

BRUTE_MAX_DEPTH = 20


@dataclass(frozen=True)
class BlockMeasure:
    schedule: BlockSchedule
    kind: str = "free"

    def __post_init__(self):
        if self.kind not in ("free", "tied"):
            raise ValueError(f"measure kind must be 'free' or 'tied', got {self.kind!r}")

    @property
    def digit_set(self) -> DigitSet:
        return DigitSet(Kind.TIED_BLOCKS if self.kind == "tied" else Kind.FREE_BLOCKS,
                        self.schedule)


def _as_atom(atom) -> CoverAtom:
    if isinstance(atom, CoverAtom):
        return atom
    l, n = atom
    return CoverAtom.of(l, n)


def interval_log2_measure(m: BlockMeasure, atom) -> int | None:
    """log2 of the mass of a dyadic atom; ``None`` when the mass is 0.

    A positive atom at depth ``n`` has mass ``2^-(free digits up to n)``, a
    tied gap counting as one digit from its first visible position on.
    """
    atom = _as_atom(atom)
    dset = m.digit_set
    dset.check_depth(atom.depth)
    if member(atom.left, dset) is Membership.NO:
        return None
    return -exact_cover_count(dset, atom.depth).log2_count


def interval_measure(m: BlockMeasure, atom) -> Fraction:
    e = interval_log2_measure(m, atom)
    return Fraction(0) if e is None else Fraction(1, 1 << -e)


def _factors(s: BlockSchedule, tied: bool, cap: int) -> list[int]:
    """Point-mass offsets of the two-point factors, scaled by ``2**cap``.

    Digits past ``cap`` are dropped; a gap cut by ``cap`` keeps its visible part.
    """
    out = []
    free = list(range(1, s.a[0] + 1))
    for a, b in zip(s.a, s.b):
        free.extend(range(a + 1, b + 1))
    out.extend(1 << (cap - p) for p in free if p <= cap)
    if tied:
        for lo, hi in s.gaps():
            if lo > cap:
                break
            out.append(sum(1 << (cap - p) for p in range(lo, min(hi, cap) + 1)))
    return out


@lru_cache(maxsize=16)
def convolution_support(m: BlockMeasure, cap: int) -> tuple[np.ndarray, int]:
    """Sorted atoms of the truncated product measure and the number of factors.

    Each atom carries mass ``2**-factors``; offsets occupy disjoint digit
    positions so no two atoms coincide.
    """
    if cap > BRUTE_MAX_DEPTH:
        raise DepthError(f"convolution oracle limited to depth {BRUTE_MAX_DEPTH}, got {cap}")
    if cap > m.schedule.depth:
        raise DepthError(f"depth {cap} is beyond the schedule prefix")
    support = np.zeros(1, dtype=np.int64)
    factors = _factors(m.schedule, m.kind == "tied", cap)
    for v in factors:
        support = np.concatenate([support, support + v])
    support.sort()
    return support, len(factors)


def brute_force_measure(m: BlockMeasure, atom, depth_cap: int | None = None) -> Fraction:
    """Mass of a dyadic atom under the literal finite convolution of factors."""
    atom = _as_atom(atom)
    cap = min(BRUTE_MAX_DEPTH, m.schedule.depth) if depth_cap is None else depth_cap
    if atom.depth > cap:
        raise DepthError(f"atom depth {atom.depth} exceeds the oracle cap {cap}")
    support, nfac = convolution_support(m, cap)
    lo = atom.index << (cap - atom.depth)
    hi = (atom.index + 1) << (cap - atom.depth)
    hits = int(np.searchsorted(support, hi) - np.searchsorted(support, lo))
    return Fraction(hits, 1 << nfac)


# -- Hölder sweep ------------------------------------------------------------------


@dataclass
class HolderResult:
    """Worst value of ``log2 mu(I) + n (d - eps)`` over positive atoms.

    The bound ``mu(I) <= 2^(1+d) |I|^(d-eps)`` holds on the sweep when
    ``max_log2_ratio <= 1 + d``.  All positive atoms of one depth share a mass,
    so each depth contributes one row, with atom 0 (always positive) as witness.
    """

    d: Fraction
    eps: Fraction
    max_log2_ratio: Fraction
    worst_depth: int
    passed: bool
    rows: list[tuple[int, int, Fraction]] = field(default_factory=list)

    @property
    def threshold(self) -> Fraction:
        return 1 + self.d

    def csv_rows(self) -> list[tuple]:
        return [(n, l, f"{r.numerator}/{r.denominator}", f"{float(r):.12g}")
                for n, l, r in self.rows]


def default_eps(m: BlockMeasure, d) -> Fraction:
    """(d - lower window value of the schedule's a-quotient profile) / 2.

    Falls back to ``d / 8`` when ``d`` does not exceed the window value.
    """
    d = Fraction(d)
    prof = (tied_ratio_profile if m.kind == "tied" else free_ratio_profile)(m.schedule)[0]
    k_lo, k_hi = default_window(len(prof.entries))
    lower, _ = prof.window(prof.indices[k_lo - 1], prof.indices[k_hi - 1])
    eps = (d - lower) / 2
    return eps if eps > 0 else d / 8


def holder_check(m: BlockMeasure, d, eps=None, n_max: int | None = None) -> HolderResult:
    d = Fraction(d)
    eps = default_eps(m, d) if eps is None else Fraction(eps)
    if not 0 < eps < d <= 1:
        raise ValueError(f"need 0 < eps < d <= 1, got eps = {eps}, d = {d}")
    dset = m.digit_set
    n_max = dset.depth if n_max is None else n_max
    dset.check_depth(n_max)
    expo = d - eps
    rows = []
    worst, worst_n = None, 0
    for n in range(1, n_max + 1):
        value = -exact_cover_count(dset, n).log2_count + n * expo
        rows.append((n, 0, value))
        if worst is None or value > worst:
            worst, worst_n = value, n
    if worst is None:
        worst = Fraction(0)
    return HolderResult(d, eps, worst, worst_n, worst <= 1 + d, rows)


def sample(m: BlockMeasure, depth: int, seed) -> DyadicPoint:
    """A point whose first ``depth`` digits follow the measure.

    Free digits are fair coins, gap digits are 0 (mu) or one fair coin per gap
    repeated along it (mu').  Positive atoms of a depth have equal mass, so
    this is the uniform atom sampler of the underlying set.
    """
    return sample_point(m.digit_set, depth, seed)


def samples(m: BlockMeasure, depth: int, seed, count: int):
    """``count`` independent draws from one seeded stream."""
    return sample_points(m.digit_set, depth, seed, count)
