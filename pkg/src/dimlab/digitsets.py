"""The digit-constrained sets X(S), X(a, b) and X'(a, b).

A set is described by a block schedule.  Free positions carry arbitrary
digits; the gap positions ``[b_i + 1, a_{i+1}]`` are forced to 0
(``FREE_BLOCKS`` and ``FREE_AT``) or forced to be constant along the whole gap
(``TIED_BLOCKS``).  Positions ``1..a_1`` of a schedule with ``a_1 > 0`` are
free: the set is defined by its gaps, and that schedule has no gap there.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .numerics import DyadicPoint, random_bits, rng
from .schedule import BlockSchedule, validate

__all__ = [
    "CoverAtom",
    "CoverCount",
    "CoverTooLarge",
    "DepthError",
    "DigitSet",
    "Kind",
    "Membership",
    "Segment",
    "brute_cover_count",
    "cover_lines",
    "enumerate_cover",
    "exact_cover_count",
    "member",
    "sample_point",
    "sample_points",
]

DEFAULT_CAP = 2 ** 24
BRUTE_MAX_DEPTH = 24


class DepthError(ValueError):
    """A query asked about digits the schedule prefix does not describe."""


class CoverTooLarge(ValueError):
    def __init__(self, log2_size: int, cap: int):
        self.log2_size = log2_size
        self.cap = cap
        super().__init__(f"cover has 2^{log2_size} points, above the cap of {cap}")


class Kind(str, Enum):
    FREE_AT = "free_at"
    FREE_BLOCKS = "free_blocks"
    TIED_BLOCKS = "tied_blocks"


class Membership(str, Enum):
    YES = "yes"
    NO = "no"
    UNDETERMINED = "undetermined"


FREE, ZERO, TIED = "free", "zero", "tied"


@dataclass(frozen=True)
class Segment:
    """Digit positions ``lo..hi`` (inclusive) sharing one rule."""

    lo: int
    hi: int
    role: str

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class DigitSet:
    kind: Kind
    schedule: BlockSchedule

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    @classmethod
    def free_at(cls, positions) -> DigitSet:
        """X(S) for a finite set ``S`` of positive digit positions.

        ``S`` is cut into maximal runs ``[s, e]`` which become free blocks
        ``(a, b) = (s - 1, e)``; an empty block ``(0, 0)`` is put in front when
        position 1 is not in ``S``.
        """
        pos = sorted(set(int(p) for p in positions))
        if not pos:
            raise ValueError("S must contain at least one position")
        if pos[0] < 1:
            raise ValueError("digit positions start at 1")
        runs = []
        for p in pos:
            if runs and runs[-1][1] == p - 1:
                runs[-1][1] = p
            else:
                runs.append([p, p])
        a = [s - 1 for s, _ in runs]
        b = [e for _, e in runs]
        if a[0] > 0:
            a.insert(0, 0)
            b.insert(0, 0)
        return cls(Kind.FREE_AT, validate(a, b))

    @property
    def tied(self) -> bool:
        return self.kind is Kind.TIED_BLOCKS

    @property
    def depth(self) -> int:
        return self.schedule.depth

    @cached_property
    def segments(self) -> tuple[Segment, ...]:
        s = self.schedule
        gap_role = TIED if self.tied else ZERO
        out = []
        if s.a[0] > 0:
            out.append(Segment(1, s.a[0], FREE))
        for i in range(s.K):
            if s.b[i] > s.a[i]:
                out.append(Segment(s.a[i] + 1, s.b[i], FREE))
            if i + 1 < s.K:
                out.append(Segment(s.b[i] + 1, s.a[i + 1], gap_role))
        return tuple(out)

    def segments_to(self, n: int) -> list[Segment]:
        """Segments clipped to positions ``1..n``."""
        out = []
        for seg in self.segments:
            if seg.lo > n:
                break
            out.append(Segment(seg.lo, min(seg.hi, n), seg.role))
        return out

    def check_depth(self, n: int) -> None:
        if n < 0:
            raise DepthError(f"depth {n} is negative")
        if n > self.depth:
            raise DepthError(f"depth {n} is beyond the schedule prefix (b_K = {self.depth})")


# -- membership -----------------------------------------------------------------


def member(x: DyadicPoint, dset: DigitSet) -> Membership:
    """Decide membership from the digits of ``x`` and the schedule prefix.

    ``NO`` means a visible digit breaks a constraint.  ``YES`` means the point
    itself (digits past its depth are 0) satisfies every constraint the prefix
    states.  ``UNDETERMINED`` means the visible digits are consistent but the
    point itself fails or cannot be judged: a tied gap that is all 1 so far
    and continues past ``x.depth``, or non-zero digits past ``b_K`` where the
    schedule says nothing.
    """
    D = x.depth
    pending = False
    for seg in dset.segments:
        if seg.role == FREE:
            continue
        if seg.lo > D:
            break
        top = min(seg.hi, D)
        width = top - seg.lo + 1
        w = x.digits(seg.lo, width)
        if seg.role == ZERO:
            if w:
                return Membership.NO
        elif w:
            if w != (1 << width) - 1:
                return Membership.NO
            if seg.hi > D:
                pending = True
    if pending:
        return Membership.UNDETERMINED
    if D > dset.depth and x.last_one() > dset.depth:
        return Membership.UNDETERMINED
    return Membership.YES


# -- counting -------------------------------------------------------------------


@dataclass(frozen=True)
class CoverCount:
    """M_{2^-n}, stored as its exact base-2 logarithm."""

    n: int
    log2_count: int

    @property
    def count(self) -> int:
        return 1 << self.log2_count

    def to_dict(self, with_count: bool = True) -> dict:
        out = {"n": self.n, "log2_count": self.log2_count}
        if with_count:
            out["count"] = self.count
        return out

    def to_json(self, with_count: bool = True) -> str:
        return json.dumps(self.to_dict(with_count), sort_keys=True)


def _block_sums(s: BlockSchedule, bonus: int) -> list[int]:
    sums, total = [0], 0
    for a, b in zip(s.a, s.b):
        total += b - a + bonus
        sums.append(total)
    return sums


def exact_cover_count(dset: DigitSet, n: int) -> CoverCount:
    """Number of depth-``n`` dyadic atoms meeting the set, by the block formula.

    With ``S_k = sum_{i<=k} (b_i - a_i)`` (plus one per block for tied sets):
    ``log2 M = S_{k-1} + (n - a_k)`` for ``a_k < n <= b_k`` and ``S_k`` for
    ``b_k < n <= a_{k+1}``.  A tied gap counts as soon as its first digit is
    visible, since both constant fillings are then still possible.
    """
    dset.check_depth(n)
    s = dset.schedule
    lead = s.a[0]
    if n <= lead:
        return CoverCount(n, n)
    bonus = 1 if dset.tied else 0
    sums = _block_sums(s, bonus)
    where, k = s.block_of(n)
    if where == "free":
        log2 = sums[k - 1] + (n - s.a[k - 1])
    else:
        log2 = sums[k]
    return CoverCount(n, lead + log2)


def brute_cover_count(dset: DigitSet, n: int) -> int:
    """Count depth-``n`` prefixes obeying every gap rule visible by depth ``n``.

    Exhaustive over all ``2**n`` prefixes; independent of the block formula.
    """
    if n > BRUTE_MAX_DEPTH:
        raise DepthError(f"exhaustive count limited to n <= {BRUTE_MAX_DEPTH}, got {n}")
    dset.check_depth(n)
    if n == 0:
        return 1
    prefixes = np.arange(1 << n, dtype=np.int64)
    keep = np.ones(prefixes.shape, dtype=bool)
    for lo, hi in dset.schedule.gaps():
        if lo > n:
            break
        top = min(hi, n)
        mask = ((1 << (top - lo + 1)) - 1) << (n - top)
        hit = prefixes & mask
        if dset.tied:
            keep &= (hit == 0) | (hit == mask)
        else:
            keep &= hit == 0
    return int(keep.sum())


# -- covers -----------------------------------------------------------------------


@dataclass(frozen=True)
class CoverAtom:
    """The dyadic atom ``[l / 2**n, (l + 1) / 2**n)``."""

    left: DyadicPoint
    depth: int = field(default=-1)

    def __post_init__(self):
        depth = self.left.depth if self.depth < 0 else self.depth
        left = self.left
        if left.depth < depth:
            left = left.with_depth(depth)
        elif left.depth > depth:
            if left.digits(depth + 1, left.depth - depth):
                raise ValueError("left endpoint is not on the depth grid")
            left = left.with_depth(depth)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "depth", depth)

    @classmethod
    def of(cls, l: int, n: int) -> CoverAtom:
        return cls(DyadicPoint(l, n), n)

    @property
    def index(self) -> int:
        return self.left.mantissa


def _cover_depth(dset: DigitSet, k: int, variant: str | None) -> int:
    s = dset.schedule
    if not 1 <= k <= s.K:
        raise DepthError(f"block index {k} outside 1..{s.K}")
    if not dset.tied:
        if variant not in (None, "plain"):
            raise ValueError(f"variant {variant!r} applies to tied sets only")
        return s.b[k - 1]
    variant = variant or "prime"
    if variant == "prime":
        if k >= s.K:
            raise DepthError(f"D'_{k} needs a_{k + 1}, the schedule has K = {s.K}")
        return s.a[k]
    if variant == "double_prime":
        return s.b[k - 1]
    raise ValueError(f"unknown cover variant {variant!r}")


def enumerate_cover(dset: DigitSet, k: int, variant: str | None = None,
                    cap: int = DEFAULT_CAP) -> list[DyadicPoint]:
    """The finite cover set of block ``k``, in increasing order.

    Free sets give D_k at depth ``b_k``.  Tied sets give D'_k at depth
    ``a_{k+1}`` (``variant="prime"``, the default) or D''_k at depth ``b_k``
    (``variant="double_prime"``).  Every point is the left end of an atom of
    that depth which meets the set, and every such atom appears once.
    """
    n = _cover_depth(dset, k, variant)
    log2 = exact_cover_count(dset, n).log2_count
    if (1 << log2) > cap:
        raise CoverTooLarge(log2, cap)
    choices = []
    for seg in dset.segments_to(n):
        shift = n - seg.hi
        if seg.role == FREE:
            choices.append([v << shift for v in range(1 << seg.length)])
        elif seg.role == TIED:
            choices.append([0, ((1 << seg.length) - 1) << shift])
    return [DyadicPoint(sum(combo), n) for combo in itertools.product(*choices)]


def cover_lines(points) -> str:
    return "".join(p.to_digit_string() + "\n" for p in points)


# -- sampling --------------------------------------------------------------------


def sample_point(dset: DigitSet, depth: int, seed) -> DyadicPoint:
    """A uniformly random depth-``depth`` atom of the set (its left end).

    Free digits are fair coins; each visible gap is all 0, or for tied sets a
    single fair coin repeated along the gap.
    """
    dset.check_depth(depth)
    return _draw(dset.segments_to(depth), depth, rng(seed))


def sample_points(dset: DigitSet, depth: int, seed, count: int):
    """``count`` independent draws as :func:`sample_point`, from one seeded stream."""
    dset.check_depth(depth)
    segments = dset.segments_to(depth)
    state = rng(seed)
    for _ in range(count):
        yield _draw(segments, depth, state)


def _draw(segments, depth: int, state) -> DyadicPoint:
    parts = []
    for seg in segments:
        if seg.role == FREE:
            parts.append((seg.lo, seg.hi, random_bits(state, seg.length)))
        elif seg.role == TIED and random_bits(state, 1):
            parts.append((seg.lo, seg.hi, (1 << seg.length) - 1))
    return DyadicPoint.from_segments(parts, depth)
