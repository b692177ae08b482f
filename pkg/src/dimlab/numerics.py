"""Exact dyadic arithmetic on the circle.

Points of [0, 1) are stored as ``mantissa / 2**depth`` with an arbitrary
precision mantissa.  Digit ``k`` (1-indexed from the binary point) is bit
``depth - k`` of the mantissa; digits past ``depth`` are zero, i.e. the
eventually-zero expansion is used for every dyadic rational.

Mantissas are plain ``int`` for anything built by hand; samplers may hand
back ``gmpy2.mpz`` mantissas for very deep points, which behave as integers
everywhere in this package.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational

import gmpy2

__all__ = [
    "DyadicPoint",
    "ExactDistance",
    "add_mod1",
    "dilate_mod1",
    "dist_nearest_int",
    "dyadic_fraction",
    "parse_point",
    "random_bits",
    "rng",
    "shift_mod1",
]


def _check_nonneg_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def dyadic_fraction(m, depth: int) -> Fraction:
    """``m / 2**depth`` in lowest terms without a gcd.

    The only common factors are powers of 2, so stripping trailing zeros
    reduces the fraction.  ``Fraction(m, 2**depth)`` would run a gcd on
    numbers of ``depth`` bits, which is hopeless at depth 10^9.
    """
    m = int(m)
    if m == 0:
        return Fraction(0)
    tz = min((m & -m).bit_length() - 1, depth)
    m >>= tz
    depth -= tz
    if m.bit_length() < 4096:
        return Fraction(m, 1 << depth)
    f = object.__new__(Fraction)
    f._numerator, f._denominator = m, 1 << depth
    return f


@dataclass(frozen=True)
class DyadicPoint:
    """The point ``mantissa / 2**depth`` of the circle [0, 1)."""

    mantissa: int
    depth: int

    def __post_init__(self):
        _check_nonneg_int("mantissa", self.mantissa)
        _check_nonneg_int("depth", self.depth)
        if self.mantissa.bit_length() > self.depth:
            raise ValueError(
                f"mantissa needs {self.mantissa.bit_length()} bits, depth is {self.depth}")

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, depth: int = 0) -> DyadicPoint:
        return cls(0, depth)

    @classmethod
    def from_digits(cls, text: str) -> DyadicPoint:
        """Parse ``"0.b1b2...bn"``; the depth is the number of digits written."""
        m = re.fullmatch(r"\s*0?\.([01]*)\s*", text)
        if m is None:
            raise ValueError(f"not a binary digit string: {text!r}")
        digits = m.group(1)
        return cls(int(digits, 2) if digits else 0, len(digits))

    @classmethod
    def from_segments(cls, segments, depth: int) -> DyadicPoint:
        """Pack ``(lo, hi, bits)`` digit segments (sorted, disjoint) into a point.

        ``bits`` holds digits ``lo..hi`` with digit ``lo`` most significant;
        positions not covered are zero.  The mantissa is built most significant
        segment first so a deep point costs one full-width operation.
        """
        acc, pos = 0, 0
        for lo, hi, bits in segments:
            if lo <= pos or hi > depth:
                raise ValueError("segments must be sorted, disjoint and within depth")
            acc = (acc << (hi - pos)) | bits
            pos = hi
        return cls(acc << (depth - pos) if depth > pos else acc, depth)

    @classmethod
    def from_hex(cls, hex_mantissa: str, depth: int) -> DyadicPoint:
        return cls(int(hex_mantissa, 16), depth)

    @classmethod
    def from_fraction(cls, value, depth: int | None = None) -> DyadicPoint:
        """Build from a dyadic rational in [0, 1); ``1/3`` and friends are rejected."""
        q = Fraction(value)
        if not 0 <= q < 1:
            raise ValueError(f"{q} is not in [0, 1)")
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not a dyadic rational")
        need = den.bit_length() - 1
        if depth is None:
            depth = need
        if depth < need:
            raise ValueError(f"{q} needs depth {need}, got {depth}")
        return cls(q.numerator << (depth - need), depth)

    # -- views ----------------------------------------------------------------

    @property
    def value(self) -> Fraction:
        return dyadic_fraction(self.mantissa, self.depth)

    def digit(self, k: int) -> int:
        if k < 1:
            raise IndexError("digits are 1-indexed")
        if k > self.depth:
            return 0
        if isinstance(self.mantissa, _MPZ):
            return int(self.mantissa.bit_test(self.depth - k))
        return (self.mantissa >> (self.depth - k)) & 1

    def digits(self, start: int, count: int) -> int:
        """Digits ``start .. start+count-1`` packed into an int, first digit high."""
        if start < 1:
            raise IndexError("digits are 1-indexed")
        if count <= 0:
            return 0
        end = start + count - 1
        if start > self.depth:
            return 0
        if end <= self.depth:
            return _bit_range(self.mantissa, self.depth - end, self.depth - start + 1)
        visible = self.depth - start + 1
        return _bit_range(self.mantissa, 0, visible) << (end - self.depth)

    def window(self, start: int, count: int):
        """Like :meth:`digits` but keeps the mantissa's integer type (no copy to int)."""
        if start < 1:
            raise IndexError("digits are 1-indexed")
        if count <= 0 or start > self.depth:
            return 0
        end = start + count - 1
        if end <= self.depth:
            return _bit_range(self.mantissa, self.depth - end, self.depth - start + 1, raw=True)
        visible = self.depth - start + 1
        return _bit_range(self.mantissa, 0, visible, raw=True) << (end - self.depth)

    def prefix(self, n: int) -> int:
        """floor(2**n * x): the first ``n`` digits as an integer."""
        if n <= self.depth:
            return int(self.mantissa >> (self.depth - n))
        return int(self.mantissa) << (n - self.depth)

    def last_one(self) -> int:
        """Position of the last non-zero digit (0 for the point 0)."""
        if self.mantissa == 0:
            return 0
        return self.depth - _trailing_zeros(self.mantissa)

    def with_depth(self, depth: int) -> DyadicPoint:
        """Same value at a larger depth, or truncated to a smaller one."""
        if depth >= self.depth:
            return DyadicPoint(self.mantissa << (depth - self.depth), depth)
        return DyadicPoint(self.mantissa >> (self.depth - depth), depth)

    def to_digit_string(self, limit: int | None = None) -> str:
        if self.depth == 0:
            return "0."
        if limit is not None and self.depth > limit:
            return "0." + format(self.digits(1, limit), f"0{limit}b") + "..."
        return "0." + format(int(self.mantissa), f"0{self.depth}b")

    def to_hex(self) -> tuple[str, int]:
        return format(int(self.mantissa), "x"), self.depth

    def __str__(self) -> str:
        return self.to_digit_string(limit=64)

    def __float__(self) -> float:
        if self.depth <= 1000:
            return float(self.value)
        return float(Fraction(self.digits(1, 64), 1 << 64))


_MPZ = type(gmpy2.mpz(0))


def _bit_range(m, lo: int, hi: int, raw: bool = False):
    """Bits ``lo .. hi-1`` of ``m`` (bit 0 least significant) as an int.

    Picks whichever extraction touches the fewest limbs; on deep mantissas this
    is the difference between microseconds and a full-width pass.  ``raw``
    leaves an mpz result as an mpz.
    """
    width = hi - lo
    if isinstance(m, _MPZ):
        if width <= 4096:
            out = m[lo:hi]
        elif hi < m.bit_length() - lo:
            out = gmpy2.f_div_2exp(gmpy2.f_mod_2exp(m, hi), lo)
        else:
            out = gmpy2.f_mod_2exp(gmpy2.f_div_2exp(m, lo), width)
        return out if raw else int(out)
    if hi < m.bit_length() - lo:
        return (m & ((1 << hi) - 1)) >> lo
    return (m >> lo) & ((1 << width) - 1)


def _mod_2exp(m, n: int):
    """``m mod 2**n`` without building the ``n``-bit mask for mpz input."""
    if isinstance(m, _MPZ):
        return gmpy2.f_mod_2exp(m, n)
    return m & ((1 << n) - 1)


def _is_pow2(m) -> bool:
    if isinstance(m, _MPZ):
        return m > 0 and m.bit_scan1(0) == m.bit_length() - 1
    return m > 0 and m & (m - 1) == 0


def _trailing_zeros(m) -> int:
    if isinstance(m, _MPZ):
        return int(m.bit_scan1(0))
    m = int(m)
    # grow the probe so the cost tracks the answer, not the size of m
    width = 64
    while True:
        low = m & ((1 << width) - 1)
        if low:
            return (low & -low).bit_length() - 1
        width *= 4


@dataclass(frozen=True, order=False)
class ExactDistance:
    """||x||, the distance to the nearest integer, as a dyadic in [0, 1/2]."""

    point: DyadicPoint

    def __post_init__(self):
        p = self.point
        if p.depth and p.mantissa.bit_length() == p.depth and not _is_pow2(p.mantissa):
            raise ValueError("distance exceeds 1/2")

    @property
    def value(self) -> Fraction:
        return self.point.value

    def log2_upper(self) -> int | None:
        """Smallest ``e`` with distance <= 2**e; ``None`` for distance 0."""
        m, d = self.point.mantissa, self.point.depth
        if m == 0:
            return None
        e = m.bit_length() - d
        if _is_pow2(m):
            return e - 1
        return e

    def __lt__(self, other):
        return self.value < _as_fraction(other)

    def __le__(self, other):
        return self.value <= _as_fraction(other)

    def __gt__(self, other):
        return self.value > _as_fraction(other)

    def __ge__(self, other):
        return self.value >= _as_fraction(other)


def _as_fraction(v) -> Fraction:
    if isinstance(v, ExactDistance):
        return v.value
    if isinstance(v, DyadicPoint):
        return v.value
    if isinstance(v, Rational):
        return Fraction(v)
    raise TypeError(f"cannot compare with {type(v).__name__}")


def shift_mod1(x: DyadicPoint, n: int) -> DyadicPoint:
    """2**n * x mod 1: drop the first ``n`` digits."""
    _check_nonneg_int("n", n)
    if n >= x.depth:
        return DyadicPoint(0, 0)
    depth = x.depth - n
    return DyadicPoint(_mod_2exp(x.mantissa, depth), depth)


def dilate_mod1(h: int, x: DyadicPoint) -> DyadicPoint:
    """h * x mod 1 at the depth of ``x``."""
    _check_nonneg_int("h", h)
    if h == 0:
        raise ValueError("dilation factor must be positive")
    return DyadicPoint(_mod_2exp(x.mantissa * h, x.depth), x.depth)


def add_mod1(x: DyadicPoint, y: DyadicPoint) -> DyadicPoint:
    depth = max(x.depth, y.depth)
    total = (x.mantissa << (depth - x.depth)) + (y.mantissa << (depth - y.depth))
    return DyadicPoint(_mod_2exp(total, depth), depth)


def dist_nearest_int(x: DyadicPoint) -> ExactDistance:
    if x.depth == 0:
        return ExactDistance(DyadicPoint(0, 0))
    m = x.mantissa
    # above one half exactly when digit 1 is set and some later digit is too
    if m.bit_length() == x.depth and not _is_pow2(m):
        m = _mod_2exp(-m, x.depth) if isinstance(m, _MPZ) else (1 << x.depth) - m
    return ExactDistance(DyadicPoint(m, x.depth))


_HEX_FORM = re.compile(r"\s*0x([0-9a-fA-F]+):(\d+)\s*")


def parse_point(text: str) -> DyadicPoint:
    """Accepts ``0.1011`` digit strings or ``0x<hex>:<depth>`` pairs."""
    m = _HEX_FORM.fullmatch(text)
    if m:
        return DyadicPoint.from_hex(m.group(1), int(m.group(2)))
    return DyadicPoint.from_digits(text)


def rng(seed: int):
    """Seeded bit source used by every sampler in the package."""
    return gmpy2.random_state(int(seed))


def random_bits(state, n: int):
    """``n`` uniform random bits as a non-negative integer (an mpz)."""
    if n <= 0:
        return gmpy2.mpz(0)
    return gmpy2.mpz_urandomb(state, n)
