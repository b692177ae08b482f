"""Block schedules (a_i, b_i) and their ratio profiles.

A schedule ``0 = a_1 <= b_1 < a_2 < b_2 < ... < a_K < b_K`` splits the digit
positions into free blocks ``[a_i + 1, b_i]`` and constrained gaps
``[b_i + 1, a_{i+1}]``.  Indices in this module are 1-based, as in the
formulas; the tuples themselves are ordinary 0-based Python tuples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Integral
from pathlib import Path

__all__ = [
    "BlockSchedule",
    "RatioEntry",
    "RatioKind",
    "RatioProfile",
    "ScheduleError",
    "SynthesizedSchedule",
    "default_window",
    "free_ratio_profile",
    "growth_violations",
    "load_schedule",
    "natural_density",
    "prime_shift",
    "synthesize",
    "tied_ratio_profile",
    "validate",
]


class ScheduleError(ValueError):
    """A schedule broke one of its defining inequalities."""


@dataclass(frozen=True)
class BlockSchedule:
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))
        problem = _first_violation(self.a, self.b, anchored=False)
        if problem:
            raise ScheduleError(problem)

    @property
    def K(self) -> int:
        return len(self.a)

    @property
    def anchored(self) -> bool:
        return self.a[0] == 0

    @property
    def depth(self) -> int:
        """b_K, the last digit position the prefix speaks about."""
        return self.b[-1]

    def free_blocks(self) -> list[tuple[int, int]]:
        """Digit ranges ``[a_i + 1, b_i]`` (possibly empty for i = 1)."""
        return [(a + 1, b) for a, b in zip(self.a, self.b)]

    def gaps(self) -> list[tuple[int, int]]:
        """Digit ranges ``[b_i + 1, a_{i+1}]`` for i < K."""
        return [(self.b[i] + 1, self.a[i + 1]) for i in range(self.K - 1)]

    def block_of(self, n: int) -> tuple[str, int]:
        """Locate digit position ``n`` as ``("free", k)``, ``("gap", k)`` or ``("lead", 0)``.

        ``("gap", k)`` means ``b_k + 1 <= n <= a_{k+1}``; ``("lead", 0)`` covers the
        positions ``1..a_1`` of a shifted schedule.
        """
        if n < 1 or n > self.depth:
            raise ValueError(f"position {n} outside 1..{self.depth}")
        if n <= self.a[0]:
            return "lead", 0
        lo, hi = 0, self.K - 1
        while lo < hi:  # last k with a_k < n
            mid = (lo + hi + 1) // 2
            if self.a[mid] < n:
                lo = mid
            else:
                hi = mid - 1
        if n <= self.b[lo]:
            return "free", lo + 1
        return "gap", lo + 1

    def to_json(self) -> str:
        return json.dumps({"a": list(self.a), "b": list(self.b)})

    @classmethod
    def from_json(cls, text: str, *, anchored: bool = True) -> BlockSchedule:
        data = json.loads(text)
        if not isinstance(data, dict) or not {"a", "b"} <= set(data):
            raise ScheduleError('schedule JSON must be an object with "a" and "b"')
        return validate(data["a"], data["b"], relaxed_first=not anchored)


def load_schedule(source: str) -> BlockSchedule:
    """Inline JSON or a path to a JSON file."""
    text = source
    if not source.lstrip().startswith("{"):
        text = Path(source).read_text()
    return BlockSchedule.from_json(text)


def _first_violation(a, b, anchored: bool) -> str | None:
    if len(a) != len(b):
        return f"a and b differ in length ({len(a)} vs {len(b)})"
    if not a:
        return "schedule needs at least one block"
    for name, seq in (("a", a), ("b", b)):
        for i, v in enumerate(seq, 1):
            if isinstance(v, bool) or not isinstance(v, Integral):
                return f"{name}[{i}] = {v!r} is not an integer"
    if anchored and a[0] != 0:
        return f"a[1] = {a[0]} but must be 0"
    if a[0] < 0:
        return f"a[1] = {a[0]} is negative"
    if not a[0] <= b[0]:
        return f"a[1] <= b[1] fails: {a[0]} > {b[0]}"
    for i in range(1, len(a)):
        if not b[i - 1] < a[i]:
            return f"b[{i}] < a[{i + 1}] fails: {b[i - 1]} >= {a[i]}"
        if not a[i] < b[i]:
            return f"a[{i + 1}] < b[{i + 1}] fails: {a[i]} >= {b[i]}"
    return None


def validate(a, b, *, relaxed_first: bool = False) -> BlockSchedule:
    """Check the interleaving and return the schedule.

    Raises :class:`ScheduleError` naming the first broken inequality.  With
    ``relaxed_first`` the condition ``a_1 = 0`` is weakened to ``a_1 >= 0``.
    """
    a, b = tuple(a), tuple(b)
    problem = _first_violation(a, b, anchored=not relaxed_first)
    if problem:
        raise ScheduleError(problem)
    return BlockSchedule(a, b)


# -- ratio profiles ----------------------------------------------------------


class RatioKind(str, Enum):
    FREE_OVER_A = "d1"
    FREE_OVER_B = "d2"
    TIED_OVER_A = "d1_tied"
    TIED_OVER_B = "d2_tied"
    DENSITY = "density"


@dataclass(frozen=True)
class RatioEntry:
    k: int
    numerator: int
    denominator: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


@dataclass(frozen=True)
class RatioProfile:
    kind: RatioKind
    entries: tuple[RatioEntry, ...]

    @property
    def values(self) -> list[Fraction]:
        return [e.value for e in self.entries]

    @property
    def indices(self) -> list[int]:
        return [e.k for e in self.entries]

    def at(self, k: int) -> Fraction:
        for e in self.entries:
            if e.k == k:
                return e.value
        raise KeyError(k)

    def window(self, k_lo: int, k_hi: int) -> tuple[Fraction, Fraction]:
        """(min, max) of the values with ``k_lo <= k <= k_hi``."""
        vals = [e.value for e in self.entries if k_lo <= e.k <= k_hi]
        if not vals:
            raise ValueError(f"no {self.kind.value} entries in window [{k_lo}, {k_hi}]")
        return min(vals), max(vals)

    def csv_rows(self) -> list[tuple[int, int, int, str]]:
        return [(e.k, e.numerator, e.denominator, f"{float(e.value):.12g}")
                for e in self.entries]


def _partial_sums(s: BlockSchedule, bonus: int) -> list[int]:
    out, total = [], 0
    for a, b in zip(s.a, s.b):
        total += b - a + bonus
        out.append(total)
    return out


def _profiles(s: BlockSchedule, bonus: int, kinds) -> tuple[RatioProfile, RatioProfile]:
    if s.K < 2:
        raise ScheduleError("the a-quotient profile needs K >= 2 (it uses a_{k+1})")
    sums = _partial_sums(s, bonus)
    over_a = tuple(RatioEntry(k, sums[k - 1], s.a[k]) for k in range(1, s.K))
    # b_1 = 0 leaves the k = 1 quotient undefined; it is omitted
    over_b = tuple(RatioEntry(k, sums[k - 1], s.b[k - 1])
                   for k in range(1, s.K + 1) if s.b[k - 1] > 0)
    return RatioProfile(kinds[0], over_a), RatioProfile(kinds[1], over_b)


def free_ratio_profile(s: BlockSchedule) -> tuple[RatioProfile, RatioProfile]:
    """sum_{i<=k}(b_i - a_i) over a_{k+1} (k < K) and over b_k (k <= K)."""
    return _profiles(s, 0, (RatioKind.FREE_OVER_A, RatioKind.FREE_OVER_B))


def tied_ratio_profile(s: BlockSchedule) -> tuple[RatioProfile, RatioProfile]:
    """As :func:`free_ratio_profile` with every summand increased by one."""
    return _profiles(s, 1, (RatioKind.TIED_OVER_A, RatioKind.TIED_OVER_B))


def natural_density(s: BlockSchedule, N: int) -> Fraction:
    """|S ∩ [1, N]| / N for S the union of the free blocks."""
    if N < 1:
        raise ValueError("N must be at least 1")
    count = sum(max(0, min(b, N) - a) for a, b in zip(s.a, s.b) if a < N)
    return Fraction(count, N)


def default_window(count: int) -> tuple[int, int]:
    """Last third of ``1..count`` (at least one index)."""
    if count < 1:
        raise ValueError("empty profile")
    width = max(1, count // 3)
    return count - width + 1, count


# -- synthesis -----------------------------------------------------------------


@dataclass(frozen=True)
class SynthesizedSchedule:
    base: BlockSchedule
    target_d: Fraction

    @property
    def a(self):
        return self.base.a

    @property
    def b(self):
        return self.base.b

    def quotients(self) -> list[Fraction]:
        """b_k / a_{k+1} for k < K."""
        return [Fraction(self.b[k], self.a[k + 1]) for k in range(self.base.K - 1)]


def growth_violations(s: BlockSchedule) -> list[str]:
    """Finite checks of a_i + i < b_i and of b_i / a_i increasing (i >= 2)."""
    out = []
    for i, (a, b) in enumerate(zip(s.a, s.b), 1):
        if not a + i < b:
            out.append(f"a[{i}] + {i} < b[{i}] fails: {a + i} >= {b}")
    growth = [Fraction(b, a) for a, b in zip(s.a[1:], s.b[1:])]
    for i in range(1, len(growth)):
        if not growth[i] > growth[i - 1]:
            out.append(f"b/a not increasing at i = {i + 2}: {growth[i]} <= {growth[i - 1]}")
    return out


def synthesize(d, K: int) -> SynthesizedSchedule:
    """A K-block schedule with b_k / a_{k+1} -> d and b_k / a_k -> infinity.

    a_1 = 0, b_1 = 2; a_{i+1} = ceil(b_i / d) (b_i (i+1) for d = 0, b_i + 1 for
    d = 1); b_{i+1} = (i+2) a_{i+1} + i + 2.
    """
    d = Fraction(d)
    if not 0 <= d <= 1:
        raise ValueError(f"d = {d} is outside [0, 1]")
    if K < 2:
        raise ValueError("K must be at least 2")
    a, b = [0], [2]
    for i in range(1, K):
        bi = b[-1]
        if d == 0:
            nxt = bi * (i + 1)
        elif d == 1:
            nxt = bi + 1
        else:
            nxt = -((-bi * d.denominator) // d.numerator)
        a.append(nxt)
        b.append((i + 2) * nxt + i + 2)
    base = validate(a, b)
    problems = growth_violations(base)
    if problems:  # pragma: no cover - the recipe guarantees these
        raise ScheduleError("; ".join(problems))
    return SynthesizedSchedule(base, d)


def prime_shift(s: BlockSchedule) -> BlockSchedule:
    """(a_i + i, b_i): the shifted schedule whose set sits inside E_0 and E_f."""
    a = tuple(ai + i for i, ai in enumerate(s.a, 1))
    return validate(a, s.b, relaxed_first=True)
