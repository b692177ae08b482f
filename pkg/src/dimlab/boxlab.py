"""Box-counting profiles of the digit sets and their comparison with the
closed-form dimension quotients.

Counting is done on the dyadic grid: at depth ``n`` the count is the number of
atoms ``[l/2^n, (l+1)/2^n)`` meeting the set, and the ratio row is
``log2(count) / n``.  Inside a free block the ratio rises and inside a gap it
falls, so the block boundaries carry the extreme values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .digitsets import DepthError, DigitSet, exact_cover_count
from .schedule import (
    BlockSchedule,
    RatioProfile,
    ScheduleError,
    default_window,
    free_ratio_profile,
    tied_ratio_profile,
)

__all__ = [
    "CountProfile",
    "CountRow",
    "DimensionReport",
    "FormulaEstimate",
    "ROW_CAP",
    "dimension_report",
    "empirical_box_count",
    "monotonicity_failures",
    "periodic_limits",
    "ratio_profile",
    "window_estimate",
]

ROW_CAP = 2 ** 20


def _q(v: Fraction | None) -> str | None:
    if v is None:
        return None
    return f"{v.numerator}/{v.denominator}"


def empirical_box_count(points, n: int) -> int:
    """Distinct depth-``n`` atoms hit by the points.

    Points shallower than ``n`` are read with zero digits past their depth,
    which puts them in the atom whose left end they are.
    """
    return len({p.prefix(n) for p in points})


@dataclass(frozen=True)
class CountRow:
    n: int
    log2_count: int
    empirical: int | None = None

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.log2_count, self.n)


@dataclass(frozen=True)
class CountProfile:
    rows: tuple[CountRow, ...]
    schedule: BlockSchedule | None = None
    tied: bool = False

    def __post_init__(self):
        object.__setattr__(self, "_by_n", {r.n: r for r in self.rows})

    def row(self, n: int) -> CountRow:
        return self._by_n[n]

    def ratio_at(self, n: int) -> Fraction:
        return self._by_n[n].ratio

    def has(self, n: int) -> bool:
        return n in self._by_n

    @property
    def depths(self) -> list[int]:
        return [r.n for r in self.rows]

    def csv_rows(self) -> list[tuple]:
        out = []
        for r in self.rows:
            emp = "" if r.empirical is None else r.empirical
            out.append((r.n, r.log2_count, emp, _q(r.ratio), f"{float(r.ratio):.12g}"))
        return out


def ratio_profile(dset: DigitSet, n_max: int, points=None, n_min: int = 1) -> CountProfile:
    """Exact rows for ``n = n_min..n_max``; with ``points`` each row also gets
    the number of atoms those points hit."""
    dset.check_depth(n_max)
    if n_min < 1:
        raise ValueError("ratio rows start at n = 1")
    if n_max - n_min + 1 > ROW_CAP:
        raise DepthError(f"{n_max - n_min + 1} rows requested, cap is {ROW_CAP}")
    pts = list(points) if points is not None else None
    rows = []
    for n in range(n_min, n_max + 1):
        emp = empirical_box_count(pts, n) if pts is not None else None
        rows.append(CountRow(n, exact_cover_count(dset, n).log2_count, emp))
    return CountProfile(tuple(rows), dset.schedule, dset.tied)


def boundary_profile(dset: DigitSet) -> CountProfile:
    """Rows only at the depths ``a_{k+1}``, ``b_k`` and ``b_k + 1``.

    These are the extreme points of the ratio, and stay cheap on schedules far
    too deep for a full profile.
    """
    s = dset.schedule
    depths = set()
    for k in range(1, s.K + 1):
        if k < s.K:
            depths.add(s.a[k])
            depths.add(s.b[k - 1] + 1)
        depths.add(s.b[k - 1])
    rows = tuple(CountRow(n, exact_cover_count(dset, n).log2_count)
                 for n in sorted(depths) if 1 <= n <= s.depth)
    return CountProfile(rows, s, dset.tied)


def _lower_depths(s: BlockSchedule, k_lo: int, k_hi: int) -> list[int]:
    return [s.a[k] for k in range(k_lo, min(k_hi, s.K - 1) + 1)]


def _upper_depths(s: BlockSchedule, k_lo: int, k_hi: int, tied: bool) -> list[int]:
    if not tied:
        return [s.b[k - 1] for k in range(k_lo, k_hi + 1) if s.b[k - 1] > 0]
    # a tied gap adds its unit at its first digit, so the peak sits one past b_k
    return [s.b[k - 1] + 1 for k in range(k_lo, min(k_hi, s.K - 1) + 1)]


def window_estimate(profile: CountProfile, window: tuple[int, int] | None = None,
                    by: str = "block") -> tuple[Fraction, Fraction]:
    """Finite stand-ins for the lower and upper limits of the ratio.

    ``by="block"``: ``window`` is a range of block indices ``k`` (default: the
    last third); the lower value is the minimum over the rows at ``a_{k+1}``,
    the upper value the maximum over the rows at ``b_k`` (``b_k + 1`` for tied
    sets; tied and lower rows use ``k <= K - 1``).  ``by="depth"``: ``window`` is a range of depths ``n`` and the
    result is the plain (min, max) of the rows inside it.
    """
    if by == "depth" or profile.schedule is None:
        if window is None:
            depths = profile.depths
        else:
            depths = [n for n in profile.depths if window[0] <= n <= window[1]]
        if not depths:
            raise ValueError(f"no profile rows in depth window {window}")
        vals = [profile.ratio_at(n) for n in depths]
        return min(vals), max(vals)
    if by != "block":
        raise ValueError(f"unknown window mode {by!r}")
    s = profile.schedule
    k_lo, k_hi = window if window is not None else default_window(s.K)
    if not 1 <= k_lo <= k_hi <= s.K:
        raise ValueError(f"block window [{k_lo}, {k_hi}] outside 1..{s.K}")
    # quotients that need a_{k+1} stop at k = K - 1; a window past it falls back to K - 1
    lo_a, hi_a = min(k_lo, s.K - 1), min(k_hi, s.K - 1)
    lows = [profile.ratio_at(n) for n in _lower_depths(s, lo_a, hi_a) if profile.has(n)]
    if profile.tied:
        ups = _upper_depths(s, lo_a, hi_a, True)
    else:
        ups = _upper_depths(s, k_lo, k_hi, False)
    highs = [profile.ratio_at(n) for n in ups if profile.has(n)]
    if not lows or not highs:
        raise ValueError(f"block window [{k_lo}, {k_hi}] has no boundary rows in the profile")
    return min(lows), max(highs)


def monotonicity_failures(profile: CountProfile) -> list[tuple[int, str]]:
    """Depths where the ratio moves the wrong way inside a free block or a gap."""
    s = profile.schedule
    if s is None:
        raise ValueError("monotonicity needs the schedule behind the profile")
    bad = []
    for prev, cur in zip(profile.rows, profile.rows[1:]):
        n = cur.n
        if n != prev.n + 1 or n <= s.a[0] + 1:
            continue
        where, _ = s.block_of(n)
        where_prev, _ = s.block_of(prev.n)
        if where == "free" and where_prev == "free" and cur.ratio < prev.ratio:
            bad.append((n, "decrease inside a free block"))
        if where == "gap" and where_prev == "gap" and cur.ratio > prev.ratio:
            bad.append((n, "increase inside a gap"))
    return bad


# -- reports -----------------------------------------------------------------------


@dataclass(frozen=True)
class FormulaEstimate:
    """One closed-form quotient over a window of block indices.

    ``limit`` is the exact limit of the quotient for the periodic continuation
    of the schedule, filled only when the schedule is arithmetic over the
    window (constant block length and constant period).  ``estimate`` is that
    limit when present, otherwise the window minimum for lower-type quotients
    and the window maximum for upper-type ones.
    """

    kind: str
    window_min: Fraction
    window_max: Fraction
    limit: Fraction | None
    estimate: Fraction

    def to_dict(self) -> dict:
        return {"estimate": _q(self.estimate), "window_min": _q(self.window_min),
                "window_max": _q(self.window_max), "periodic_limit": _q(self.limit),
                "estimate_decimal": float(self.estimate)}


@dataclass
class DimensionReport:
    set_kind: str
    window: tuple[int, int]
    formula: dict[str, FormulaEstimate]
    empirical_lower: Fraction
    empirical_upper: Fraction
    monotonicity_pass: bool
    monotonicity_depth: int
    verdicts: dict[str, bool]
    mismatches: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.monotonicity_pass and all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "set_kind": self.set_kind,
            "formula": {k: v.to_dict() for k, v in self.formula.items()},
            "empirical": {"lower": _q(self.empirical_lower), "upper": _q(self.empirical_upper),
                          "lower_decimal": float(self.empirical_lower),
                          "upper_decimal": float(self.empirical_upper)},
            "monotonicity_pass": self.monotonicity_pass,
            "monotonicity_depth": self.monotonicity_depth,
            "verdicts": self.verdicts,
            "mismatches": self.mismatches,
            "notes": self.notes,
            "window": list(self.window),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def periodic_limits(s: BlockSchedule, window: tuple[int, int]) -> tuple[Fraction, Fraction] | None:
    """(L / P, (L + 1) / P) when ``b_k - a_k = L`` and ``a_{k+1} - a_k = P`` over the window.

    The window is widened by one index to the left so that at least two
    blocks take part; ``None`` when the schedule is not arithmetic there.
    """
    k_lo, k_hi = window
    ks = list(range(max(1, k_lo - 1), k_hi + 1))
    if len(ks) < 2:
        return None
    lengths = {s.b[k - 1] - s.a[k - 1] for k in ks}
    periods = {s.a[k] - s.a[k - 1] for k in ks if k < s.K}
    if len(lengths) != 1 or len(periods) != 1:
        return None
    L, P = lengths.pop(), periods.pop()
    return Fraction(L, P), Fraction(L + 1, P)


def _estimate(name: str, prof: RatioProfile, window, limit, lower_type: bool) -> FormulaEstimate:
    k_lo, k_hi = window
    if not lower_type and prof.entries and prof.indices[0] > k_lo:
        k_lo = prof.indices[0]
    lo, hi = prof.window(k_lo, k_hi)
    est = limit if limit is not None else (lo if lower_type else hi)
    return FormulaEstimate(name, lo, hi, limit, est)


def dimension_report(dset: DigitSet, window: tuple[int, int] | None = None,
                     row_cap: int = ROW_CAP) -> DimensionReport:
    """Closed-form quotients against exact grid counts for one set.

    The empirical side reads the exact count rows at the block boundaries.
    Boundary verdicts demand exact equality: the row at ``a_{k+1}`` is the
    lower quotient at ``k``; for free sets the row at ``b_k`` is the upper
    quotient, for tied sets it is the upper quotient minus ``1/b_k`` (the
    count of D''_k, whose last gap is not yet visible).  Monotonicity is
    checked on every row up to ``min(b_K, row_cap)``.
    """
    s = dset.schedule
    if s.K < 3:
        raise ScheduleError("a dimension report needs K >= 3")
    if not s.anchored:
        raise ScheduleError("a dimension report needs a_1 = 0")
    win = window if window is not None else default_window(s.K)
    d1, d2 = free_ratio_profile(s)
    d1t, d2t = tied_ratio_profile(s)
    lim = periodic_limits(s, win)
    lim_free, lim_tied = (lim if lim else (None, None))
    w_lower = (win[0], min(win[1], s.K - 1))
    if w_lower[0] > w_lower[1]:
        w_lower = (s.K - 1, s.K - 1)
    formula = {
        "d1": _estimate("d1", d1, w_lower, lim_free, True),
        "d2": _estimate("d2", d2, win, lim_free, False),
        "d1_tied": _estimate("d1_tied", d1t, w_lower, lim_tied, True),
        "d2_tied": _estimate("d2_tied", d2t, win, lim_tied, False),
    }

    bounds = boundary_profile(dset)
    tied = dset.tied
    lower_q, upper_q = (d1t, d2t) if tied else (d1, d2)
    mismatches = []
    for e in lower_q.entries:
        got = bounds.ratio_at(s.a[e.k])
        if got != e.value:
            mismatches.append(f"row at n = a_{e.k + 1} = {s.a[e.k]}: {got} != {e.value}")
    for e in upper_q.entries:
        n = s.b[e.k - 1]
        want = Fraction(e.numerator - 1, n) if tied else e.value
        got = bounds.ratio_at(n)
        if got != want:
            mismatches.append(f"row at n = b_{e.k} = {n}: {got} != {want}")
    emp_lo, emp_hi = window_estimate(bounds, win)

    depth = min(s.depth, row_cap)
    rows = ratio_profile(dset, depth)
    mono = monotonicity_failures(rows)
    name_lo, name_hi = ("d1_tied", "d2_tied") if tied else ("d1", "d2")
    verdicts = {
        "boundary_rows_exact": not mismatches,
        f"empirical_lower_equals_{name_lo}_window_min": emp_lo == formula[name_lo].window_min,
        "ratios_in_unit_interval": all(0 <= r.ratio <= 1 for r in rows.rows),
    }
    if not tied:
        verdicts["empirical_upper_equals_d2_window_max"] = emp_hi == formula["d2"].window_max
    notes = []
    if depth < s.depth:
        notes.append(f"monotonicity checked on rows n <= {depth} of {s.depth}")
    if lim is None:
        notes.append("schedule is not arithmetic over the window; estimates are window extremes")
    if tied:
        notes.append("tied upper rows are read at n = b_k + 1, where the k-th gap first counts")
    return DimensionReport(dset.kind.value, tuple(win), formula, emp_lo, emp_hi,
                           not mono, depth, verdicts, mismatches, notes)
