"""Shared strategies and small oracles for the test suite."""
from fractions import Fraction

from hypothesis import strategies as st

from dimlab.numerics import DyadicPoint
from dimlab.schedule import validate

# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@st.composite
def schedules(draw, max_blocks=6, max_depth=64, min_blocks=1):
    """Valid anchored schedules with b_K <= max_depth."""
    K = draw(st.integers(min_blocks, max_blocks))
    a, b = [0], [draw(st.integers(0, 4))]
    for _ in range(1, K):
        if b[-1] + 2 > max_depth:
            break
        a.append(b[-1] + draw(st.integers(1, 5)))
        b.append(a[-1] + draw(st.integers(1, 6)))
        if b[-1] > max_depth:
            a.pop()
            b.pop()
            break
    if b[0] == 0 and len(a) == 1:
        b[0] = 1
    return validate(a, b)


@st.composite
def points(draw, max_depth=48):
    depth = draw(st.integers(0, max_depth))
    return DyadicPoint(draw(st.integers(0, (1 << depth) - 1)), depth)


def digits_of(x: DyadicPoint) -> list[int]:
    return [x.digit(k) for k in range(1, x.depth + 1)]


def frac_part(q: Fraction) -> Fraction:
    return q - (q.numerator // q.denominator)


def brute_dist(q: Fraction) -> Fraction:
    f = frac_part(q)
    return min(f, 1 - f)
