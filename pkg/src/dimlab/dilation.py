"""Dilation sequences and the exact orbits ``r_n x mod 1``.

Three kinds of sequence are supported: an explicit list of integers, the
powers ``2^n`` with ``n`` running through the gaps ``[b_i + 1, a_{i+1}]`` of a
schedule, and the IP-sequence of finite sums of a generator list, ordered by
the binary digits of the index.  Power terms and power-of-two generators are
kept as exponents; ``2^n x mod 1`` is a digit shift, so no term is ever
multiplied out.

For a deep point ``x`` the power orbit can have ~10^8 terms.  Everything that
scans a whole run of exponents works on digit windows of ``x`` instead of on
the individual orbit values:

* ``frac(2^(n+1) x) = 2 frac(2^n x) - xi_{n+1}``, so over a run of ``n`` whose
  next digit ``xi_{n+1}`` is constant the sum of ``||2^n x||`` telescopes to
  ``+-(frac(2^(q+1) x) - frac(2^p x))``;
* ``||2^n x|| <= 2^-m`` is a statement about the digits ``n+1 .. n+m``.
"""
from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import gmpy2
import numpy as np

from .digitsets import DigitSet, Kind, Membership, member
from .numerics import (
    DyadicPoint,
    ExactDistance,
    add_mod1,
    dilate_mod1,
    dist_nearest_int,
    dyadic_fraction,
    shift_mod1,
)
from .schedule import BlockSchedule, prime_shift

__all__ = [
    "DilationSequence",
    "ExactSum",
    "ExceptionalDiagnostics",
    "IPDensityRow",
    "NotInRequiredSet",
    "OrbitRecord",
    "SeparationResult",
    "build_power_blocks",
    "cell_gap_statistic",
    "ef_partial_sum",
    "exceptional_diagnostics",
    "gap_statistic",
    "ip_density_condition",
    "ip_sequence",
    "ip_term",
    "ip_term_exponents",
    "orbit",
    "orbit_cells",
    "quarter_distance_check",
    "separation_bound_check",
]

EXPLICIT, POWER_BLOCKS, IP = "explicit", "power_blocks", "ip"
_CHUNK = 1 << 22


class NotInRequiredSet(ValueError):
    """The point is not in the set a bound is stated for."""


# -- sequences ---------------------------------------------------------------------


@dataclass(frozen=True)
class DilationSequence:
    """``kind`` decides which field carries the data.

    * explicit: ``terms``, positive integers;
    * power_blocks: ``runs``, disjoint increasing inclusive exponent ranges;
    * ip: ``gen_exponents`` (generators ``2^e``) or ``generators`` (any
      positive integers).  Term ``l`` is the sum of the generators selected by
      the binary digits of ``l``, lowest digit first.
    """

    kind: str
    terms: tuple[int, ...] = ()
    runs: tuple[tuple[int, int], ...] = ()
    generators: tuple[int, ...] = ()
    gen_exponents: tuple[int, ...] = ()
    _starts: tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind == EXPLICIT:
            if any(isinstance(t, bool) or int(t) != t or t <= 0 for t in self.terms):
                raise ValueError("explicit terms must be positive integers")
        elif self.kind == POWER_BLOCKS:
            prev = -1
            starts, total = [], 0
            for lo, hi in self.runs:
                if lo <= prev or hi < lo or lo < 0:
                    raise ValueError("power exponents must strictly increase")
                prev = hi
                starts.append(total)
                total += hi - lo + 1
            object.__setattr__(self, "_starts", tuple(starts))
        elif self.kind == IP:
            if self.generators and self.gen_exponents:
                raise ValueError("give generators or generator exponents, not both")
            if any(g <= 0 for g in self.generators) or any(e < 0 for e in self.gen_exponents):
                raise ValueError("IP generators must be positive")
        else:
            raise ValueError(f"unknown sequence kind {self.kind!r}")

    @classmethod
    def explicit(cls, terms) -> DilationSequence:
        return cls(EXPLICIT, terms=tuple(int(t) for t in terms))

    def __len__(self) -> int:
        if self.kind == EXPLICIT:
            return len(self.terms)
        if self.kind == POWER_BLOCKS:
            return sum(hi - lo + 1 for lo, hi in self.runs)
        return (1 << self.generator_count) - 1

    @property
    def generator_count(self) -> int:
        return len(self.gen_exponents) or len(self.generators)

    def exponent(self, n: int) -> int:
        """Exponent of the ``n``-th power term (1-based)."""
        if self.kind != POWER_BLOCKS:
            raise TypeError("only power sequences have a single exponent per term")
        if not 1 <= n <= len(self):
            raise IndexError(n)
        j = bisect.bisect_right(self._starts, n - 1) - 1
        return self.runs[j][0] + (n - 1 - self._starts[j])

    def exponents(self):
        for lo, hi in self.runs:
            yield from range(lo, hi + 1)

    def clipped_runs(self, N: int | None = None) -> list[tuple[int, int]]:
        """Exponent runs covering the first ``N`` terms."""
        if N is None:
            return list(self.runs)
        out, left = [], N
        for lo, hi in self.runs:
            if left <= 0:
                break
            take = min(hi - lo + 1, left)
            out.append((lo, lo + take - 1))
            left -= take
        return out

    def term(self, n: int):
        """Descriptor of term ``n``: an int, an exponent, or an exponent tuple."""
        if self.kind == EXPLICIT:
            return self.terms[n - 1]
        if self.kind == POWER_BLOCKS:
            return self.exponent(n)
        if self.gen_exponents:
            return ip_term_exponents(self.gen_exponents, n)
        return ip_term(self.generators, n)


def build_power_blocks(s: BlockSchedule) -> DilationSequence:
    """All ``2^n`` with ``b_i + 1 <= n <= a_{i+1}``, as exponent runs."""
    return DilationSequence(POWER_BLOCKS, runs=tuple(s.gaps()))


def ip_sequence(generators=None, *, exponents=None) -> DilationSequence:
    if exponents is not None:
        return DilationSequence(IP, gen_exponents=tuple(int(e) for e in exponents))
    return DilationSequence(IP, generators=tuple(int(g) for g in generators))


def _check_index(count: int, l: int) -> None:
    if not 1 <= l < (1 << count):
        raise IndexError(f"IP index {l} outside 1..{(1 << count) - 1}")


def ip_term(p, l: int) -> int:
    """``sum eps_k p_k`` where ``l = sum eps_k 2^(k-1)``."""
    _check_index(len(p), l)
    total, k = 0, 0
    while l:
        if l & 1:
            total += p[k]
        l >>= 1
        k += 1
    return total


def ip_term_exponents(exps, l: int) -> tuple[int, ...]:
    """The exponents ``e_k`` selected by the binary digits of ``l``."""
    _check_index(len(exps), l)
    return tuple(exps[k] for k in range(l.bit_length()) if (l >> k) & 1)


# -- orbits ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitRecord:
    index: int
    term: object
    value: DyadicPoint
    distance: ExactDistance

    def distance_log2_bound(self) -> int | None:
        return self.distance.log2_upper()

    def csv_row(self, digit_limit: int = 64) -> tuple:
        term = self.term
        if isinstance(term, tuple):
            term = " ".join(str(e) for e in term)
        bound = self.distance_log2_bound()
        return (self.index, term, self.value.to_digit_string(digit_limit),
                "" if bound is None else bound)


def _term_value(x: DyadicPoint, seq: DilationSequence, n: int) -> DyadicPoint:
    if seq.kind == EXPLICIT:
        return dilate_mod1(seq.terms[n - 1], x)
    if seq.kind == POWER_BLOCKS:
        return shift_mod1(x, seq.exponent(n))
    if seq.gen_exponents:
        acc = DyadicPoint(0, 0)
        for e in ip_term_exponents(seq.gen_exponents, n):
            acc = add_mod1(acc, shift_mod1(x, e))
        return acc
    acc = DyadicPoint(0, 0)
    for g, bit in zip(seq.generators, bin(n)[:1:-1]):
        if bit == "1":
            acc = add_mod1(acc, dilate_mod1(g, x))
    return acc


def orbit(x: DyadicPoint, seq: DilationSequence, N: int, start: int = 1) -> list[OrbitRecord]:
    """Exact records for terms ``start .. start + N - 1``."""
    if start < 1 or start + N - 1 > len(seq):
        raise IndexError(f"sequence has {len(seq)} terms, asked for {start}..{start + N - 1}")
    out = []
    for n in range(start, start + N):
        v = _term_value(x, seq, n)
        out.append(OrbitRecord(n, seq.term(n), v, dist_nearest_int(v)))
    return out


# -- digit-window helpers -----------------------------------------------------------


def _tz(v) -> int:
    return int(gmpy2.bit_scan1(gmpy2.mpz(v), 0))


def _first_digit_after(x: DyadicPoint, e: int, digit: int) -> int | None:
    """First position ``> e`` holding ``digit``; ``None`` if there is none.

    The probe window grows geometrically so the cost follows the distance
    found, not the depth of ``x``.
    """
    pos, width = e + 1, 64
    while pos <= x.depth:
        w = min(width, x.depth - pos + 1)
        win = x.window(pos, w)
        if digit == 0:
            win = win ^ ((1 << w) - 1)
        if win:
            return pos + w - gmpy2.mpz(win).bit_length()
        pos += w
        width *= 4
    if digit == 0:
        return max(pos, e + 1)
    return None


def _bits(win, count: int) -> np.ndarray:
    """Digits of a ``count``-digit window as a uint8 array, first digit first."""
    nbytes = (count + 7) // 8
    raw = int(win).to_bytes(nbytes, "big") if count else b""
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    return bits[nbytes * 8 - count:]


def _next_digit_runs(x: DyadicPoint, p: int, q: int):
    """Split ``p..q`` into maximal runs where ``xi_{n+1}`` is constant.

    Yields ``(p', q', c)``.
    """
    count = q - p + 1
    win = x.window(p + 1, count)
    if win == 0:
        yield p, q, 0
        return
    if win == (1 << count) - 1:
        yield p, q, 1
        return
    for lo in range(p, q + 1, _CHUNK):
        hi = min(q, lo + _CHUNK - 1)
        bits = _bits(x.window(lo + 1, hi - lo + 1), hi - lo + 1)
        cuts = np.flatnonzero(np.diff(bits)) + 1
        edges = [0, *cuts.tolist(), len(bits)]
        for a, b in zip(edges, edges[1:]):
            yield lo + a, lo + b - 1, int(bits[a])


# -- exact sums -----------------------------------------------------------------------


class ExactSum:
    """``base + sum_t c_t frac(2^t x)``, an exact number kept unevaluated.

    Comparisons first bound each ``frac(2^t x)`` by a short digit window and
    widen the window only while the bounds straddle the other operand, so a
    sum over a very deep point is usually decided from a few hundred digits.
    ``exact()`` gives the rational itself.
    """

    def __init__(self, x: DyadicPoint, coeffs: dict[int, int] | None = None, base=0):
        self.x = x
        self.coeffs = {t: c for t, c in (coeffs or {}).items() if c and t < x.depth}
        self.base = Fraction(base)
        self._exact = None

    def _frac_bounds(self, t: int, w: int) -> tuple[Fraction, Fraction]:
        rem = self.x.depth - t
        if rem <= w:
            v = dyadic_fraction(self.x.window(t + 1, rem), rem)
            return v, v
        win = int(self.x.window(t + 1, w))
        return Fraction(win, 1 << w), Fraction(win + 1, 1 << w)

    def bounds(self, width: int = 64) -> tuple[Fraction, Fraction]:
        lo = hi = self.base
        for t, c in self.coeffs.items():
            f_lo, f_hi = self._frac_bounds(t, width)
            if c > 0:
                lo += c * f_lo
                hi += c * f_hi
            else:
                lo += c * f_hi
                hi += c * f_lo
        return lo, hi

    def exact(self) -> Fraction:
        if self._exact is None:
            # frac(2^t x) = window(t+1 .. D) / 2^(D-t); sum over the common 2^D
            D = self.x.depth
            num = 0
            for t, c in self.coeffs.items():
                num += c * (gmpy2.mpz(self.x.window(t + 1, D - t)) << t)
            self._exact = self.base + dyadic_fraction(num, D) if num >= 0 \
                else self.base - dyadic_fraction(-num, D)
        return self._exact

    def compare(self, other) -> int:
        if isinstance(other, ExactSum):
            if other.x != self.x:
                return _sign(self.exact() - other.exact())
            diff = ExactSum(self.x, dict(self.coeffs), self.base - other.base)
            for t, c in other.coeffs.items():
                diff.coeffs[t] = diff.coeffs.get(t, 0) - c
            diff.coeffs = {t: c for t, c in diff.coeffs.items() if c}
            return diff.compare(0)
        if not isinstance(other, Rational):
            return NotImplemented
        q = Fraction(other)
        width = 64
        while self._exact is None and width < self.x.depth:
            lo, hi = self.bounds(width)
            if hi < q:
                return -1
            if lo > q:
                return 1
            if lo == hi:
                return 0
            width *= 16
        return _sign(self.exact() - q)

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __eq__(self, other):
        r = self.compare(other)
        return r if r is NotImplemented else r == 0

    __hash__ = None

    def __float__(self) -> float:
        lo, hi = self.bounds(96)
        return float((lo + hi) / 2)

    def describe(self, exact_limit: int = 4096) -> dict:
        """JSON-ready view: the exact value when the point is shallow, bounds otherwise."""
        if self.x.depth <= exact_limit:
            v = self.exact()
            return {"exact": f"{v.numerator}/{v.denominator}", "decimal": float(v)}
        lo, hi = self.bounds(128)
        return {"lower": f"{lo.numerator}/{lo.denominator}",
                "upper": f"{hi.numerator}/{hi.denominator}", "decimal": float(self)}

    def __repr__(self) -> str:
        return f"ExactSum(~{float(self):.12g}, {len(self.coeffs)} terms)"


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def ef_partial_sum(x: DyadicPoint, seq: DilationSequence, N: int | None = None) -> ExactSum:
    """``sum_{n <= N} ||r_n x||`` exactly (all terms when ``N`` is None)."""
    if seq.kind != POWER_BLOCKS:
        count = len(seq) if N is None else N
        total = sum((r.distance.value for r in orbit(x, seq, count)), Fraction(0)) \
            if count else Fraction(0)
        return ExactSum(x, {}, total)
    coeffs: dict[int, int] = {}
    for p, q in seq.clipped_runs(N):
        if p >= x.depth:
            continue
        for a, b, c in _next_digit_runs(x, p, min(q, x.depth - 1)):
            sign = 1 if c == 0 else -1
            coeffs[b + 1] = coeffs.get(b + 1, 0) + sign
            coeffs[a] = coeffs.get(a, 0) - sign
    return ExactSum(x, coeffs)


# -- the separation bound ----------------------------------------------------------------


@dataclass
class SeparationResult:
    """Outcome of checking ``||2^n0 x|| <= 2^-(a_i + i - n0)`` over a power sequence.

    ``worst_margin`` is the smallest ``floor(log2(bound / distance))`` seen
    (``None`` when every checked distance is 0).  ``violations`` lists
    ``(i, first n0, last n0)`` per block with failures.
    """

    passed: bool
    checked: int
    worst_margin: int | None
    worst_block: int | None
    violations: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def witness(self) -> tuple[int, int] | None:
        """``(i, n0)`` of the violation nearest the offending digit."""
        if not self.violations:
            return None
        i, _, last = self.violations[0]
        return i, last

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checked": self.checked,
                "worst_margin_log2": self.worst_margin, "worst_block": self.worst_block,
                "violations": [list(v) for v in self.violations]}


def _last_position(win, e: int, lo: int) -> int:
    """Position of the last 1 in a window ending at ``e``; ``lo`` if the window is 0."""
    return lo if win == 0 else e - _tz(win)


def separation_bound_check(x: DyadicPoint, s: BlockSchedule, N: int | None = None,
                           require_member: bool = True) -> SeparationResult:
    """Check the separation bound for ``x`` against the powers of ``s``.

    For ``b_{i-1} + 1 <= n0 <= a_i`` (``i >= 2``) and ``e = a_i + i`` the bound
    ``||2^n0 x|| <= 2^(n0 - e)`` holds exactly when the digits ``n0+1 .. e``
    are all 0, all 1, or are ``0..01`` followed by nothing.  Each condition
    holds on an upper segment of ``n0``, so one window per block decides all
    of its ``n0``.  With ``require_member`` the point must lie in
    X(a', b), ``a'_i = a_i + i``, up to its depth.
    """
    shifted = prime_shift(s)
    if require_member:
        verdict = member(x, DigitSet(Kind.FREE_BLOCKS, shifted))
        if verdict is Membership.NO:
            raise NotInRequiredSet("x is not in X(a', b) for a'_i = a_i + i")
    budget = float("inf") if N is None else N
    checked = 0
    worst, worst_block = None, None
    violations = []
    last_one = x.last_one()
    for i in range(2, s.K + 1):
        if budget <= 0:
            break
        lo, hi = s.b[i - 2] + 1, s.a[i - 1]
        hi = min(hi, lo + budget - 1)
        budget -= hi - lo + 1
        checked += hi - lo + 1
        e = s.a[i - 1] + i
        L = e - lo
        win = x.window(lo + 1, L)
        mask = (1 << L) - 1
        z_zero = _last_position(win, e, lo)
        z_ones = _last_position(win ^ mask, e, lo)
        z_tie = None
        if win & 1 and last_one <= e:
            z_tie = _last_position(win >> 1, e - 1, lo)
        thresholds = [z_zero, z_ones] + ([z_tie] if z_tie is not None else [])
        threshold = min(thresholds)
        if threshold > lo:
            violations.append((i, lo, min(threshold, hi + 1) - 1))
        margins = []
        if z_zero <= hi:
            f = _first_digit_after(x, e, 1)
            if f is not None:
                margins.append(f - e - 1 + (1 if last_one == f else 0))
        if z_ones <= hi:
            g = _first_digit_after(x, e, 0)
            margins.append(g - e - 1)
        if z_tie is not None and z_tie <= hi:
            margins.append(0)
        for m in margins:
            if worst is None or m < worst:
                worst, worst_block = m, i
    return SeparationResult(not violations, checked, worst, worst_block, violations)


# -- cells and gap statistics --------------------------------------------------------------


def _run_cells(x: DyadicPoint, p: int, q: int, m: int) -> Counter:
    """Resolution-``m`` cells of ``2^n x mod 1`` for ``n = p..q``, with multiplicity."""
    count = q - p + 1
    win = x.window(p + 1, count + m - 1)
    full = (1 << (count + m - 1)) - 1
    if win == 0:
        return Counter({0: count})
    if win == full:
        return Counter({(1 << m) - 1: count})
    cells: Counter = Counter()
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    for lo in range(p, q + 1, _CHUNK):
        hi = min(q, lo + _CHUNK - 1)
        span = hi - lo + m
        bits = _bits(x.window(lo + 1, span), span).astype(np.int64)
        windows = np.lib.stride_tricks.sliding_window_view(bits, m)
        vals, counts = np.unique(windows @ weights, return_counts=True)
        cells.update(dict(zip(vals.tolist(), counts.tolist())))
    return cells


def orbit_cells(x: DyadicPoint, seq: DilationSequence, m: int, N: int | None = None,
                skip: int = 0) -> Counter:
    """Cells ``floor(2^m (r_n x mod 1))`` of orbit terms ``skip+1 .. N``, counted."""
    if m < 1:
        raise ValueError("resolution must be at least 1")
    if seq.kind != POWER_BLOCKS:
        count = (len(seq) if N is None else N) - skip
        return Counter(r.value.prefix(m) for r in orbit(x, seq, count, start=skip + 1))
    cells: Counter = Counter()
    seen = 0
    for p, q in seq.clipped_runs(N):
        if seen + (q - p + 1) <= skip:
            seen += q - p + 1
            continue
        start = p + max(0, skip - seen)
        seen += q - p + 1
        cells.update(_run_cells(x, start, q, m))
    return cells


def cell_gap_statistic(cells, m: int) -> Fraction:
    """Longest circular run of empty cells among the ``2^m`` cells, over ``2^m``."""
    size = 1 << m
    occupied = sorted(set(int(c) for c in cells))
    if not occupied:
        raise ValueError("gap statistic needs at least one orbit value")
    longest = occupied[0] + size - occupied[-1] - 1
    for a, b in zip(occupied, occupied[1:]):
        longest = max(longest, b - a - 1)
    return Fraction(longest, size)


def gap_statistic(records, m: int) -> Fraction:
    """Largest empty arc, in whole resolution-``m`` cells, among the orbit values."""
    cells = []
    for r in records:
        v = r.value if isinstance(r, OrbitRecord) else r
        cells.append(v.prefix(m))
    return cell_gap_statistic(cells, m)


def quarter_distance_check(x: DyadicPoint, seq: DilationSequence, k: int = 2,
                           N: int | None = None, skip: int = 0) -> tuple[bool, int | None]:
    """Is ``||r_n x|| <= 2^-k`` for every term ``skip+1 .. N``?

    Returns ``(ok, first failing index)``.  The first ``k`` digits of
    ``r_n x mod 1`` decide it, apart from the single boundary value
    ``2^-k`` itself (digits ``0..01`` and nothing after).
    """
    if seq.kind != POWER_BLOCKS:
        count = (len(seq) if N is None else N) - skip
        for r in orbit(x, seq, count, start=skip + 1):
            if r.distance.value > Fraction(1, 1 << k):
                return False, r.index
        return True, None
    good = {0, (1 << k) - 1}
    index = 0
    for p, q in seq.clipped_runs(N):
        for n_lo in range(p, q + 1, _CHUNK):
            n_hi = min(q, n_lo + _CHUNK - 1)
            if index + (n_hi - n_lo + 1) <= skip:
                index += n_hi - n_lo + 1
                continue
            cells = _run_cells(x, n_lo, n_hi, k)
            bad = set(cells) - good
            if bad:
                for n in range(n_lo, n_hi + 1):
                    index += 1
                    if index <= skip:
                        continue
                    c = x.digits(n + 1, k)
                    if c in good:
                        continue
                    if c == 1 and x.last_one() <= n + k:
                        continue
                    return False, index
            else:
                index += n_hi - n_lo + 1
    return True, None


# -- density condition and diagnostics ---------------------------------------------------------


@dataclass
class IPDensityRow:
    h: int
    partial_sum: ExactSum
    below_one: bool

    def to_dict(self) -> dict:
        return {"h": self.h, "partial_sum": self.partial_sum.describe(),
                "below_one": self.below_one}


def ip_density_condition(x: DyadicPoint, s: BlockSchedule, h_max: int,
                         N: int | None = None) -> list[IPDensityRow]:
    """Partial sums ``sum ||h 2^n x||`` over the first ``N`` gap exponents, ``h <= h_max``.

    A row with ``below_one`` marks an ``h`` for which the sum has stayed
    below 1 on this prefix.  Nothing is claimed about divergence.
    """
    if h_max < 1:
        raise ValueError("h_max must be at least 1")
    seq = build_power_blocks(s)
    rows = []
    for h in range(1, h_max + 1):
        total = ef_partial_sum(dilate_mod1(h, x) if h > 1 else x, seq, N)
        rows.append(IPDensityRow(h, total, total < 1))
    return rows


@dataclass
class ExceptionalDiagnostics:
    terms: int
    tail_start: int
    e0_tail_max: Fraction
    ef_partial_sum: ExactSum
    gap_stat: Fraction
    resolution: int

    def to_dict(self) -> dict:
        t = self.e0_tail_max
        return {
            "terms": self.terms,
            "tail_start": self.tail_start,
            "e0_tail_max": f"{t.numerator}/{t.denominator}" if t.denominator.bit_length() < 4096
            else {"log2_upper": _log2_upper(t)},
            "ef_partial_sum": self.ef_partial_sum.describe(),
            "ef_below_one": bool(self.ef_partial_sum < 1),
            "gap_statistic": f"{self.gap_stat.numerator}/{self.gap_stat.denominator}",
            "resolution": self.resolution,
        }


def _log2_upper(v: Fraction) -> int | None:
    if v == 0:
        return None
    e = v.numerator.bit_length() - v.denominator.bit_length()
    while Fraction(2) ** e < v:
        e += 1
    while Fraction(2) ** (e - 1) >= v:
        e -= 1
    return e


def _tail_max(x: DyadicPoint, seq: DilationSequence, start: int, N: int) -> Fraction:
    """Max of ``||r_n x||`` for ``n = start..N``.

    Along a run where the next digit is constant the distance doubles at each
    step, so only the last index of each such run can be the maximum.
    """
    if seq.kind != POWER_BLOCKS:
        recs = orbit(x, seq, N - start + 1, start=start)
        return max(r.distance.value for r in recs)
    ends = []
    index = 0
    for p, q in seq.runs:
        if index >= N:
            break
        q = min(q, p + (N - index) - 1)
        lo_idx = index + 1
        index += q - p + 1
        if index < start:
            continue
        if lo_idx < start:
            p += start - lo_idx
        if p >= x.depth:
            ends.append(p)
            continue
        for _, b, _c in _next_digit_runs(x, p, min(q, x.depth - 1)):
            ends.append(b)
        if q >= x.depth:
            ends.append(q)
    best = Fraction(0)
    for n in ends:
        best = max(best, dist_nearest_int(shift_mod1(x, n)).value)
    return best


def exceptional_diagnostics(x: DyadicPoint, seq: DilationSequence, N: int | None = None,
                            m: int = 4) -> ExceptionalDiagnostics:
    N = len(seq) if N is None else N
    if N < 1:
        raise ValueError("need at least one orbit term")
    tail_start = N - max(1, N // 4) + 1
    return ExceptionalDiagnostics(
        terms=N,
        tail_start=tail_start,
        e0_tail_max=_tail_max(x, seq, tail_start, N),
        ef_partial_sum=ef_partial_sum(x, seq, N),
        gap_stat=cell_gap_statistic(orbit_cells(x, seq, m, N), m),
        resolution=m,
    )
