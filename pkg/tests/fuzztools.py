"""Containment fuzz drivers shared by the unit suite and the acceptance gate.

Oracles:
  * add/sub/mul/div/sq/pow_int: exact rational arithmetic via Fraction.
  * sqrt: exact comparison of squared endpoints via Fraction.
  * exp/sin/cos: mpmath at 40 significant digits, with a 1e-30 guard band
    for the oracle's own final rounding.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath

from conecert.interval import (
    Interval,
    DivisionByZeroInterval,
    sqrt,
    exp,
    sin,
    cos,
    sq,
    pow_int,
)


def _rand_float(rng: random.Random) -> float:
    # Mix magnitudes so subnormal-free but wide-dynamic-range cases appear.
    exp10 = rng.uniform(-12.0, 12.0)
    return rng.uniform(-1.0, 1.0) * 10.0**exp10


def rand_interval(rng: random.Random) -> Interval:
    a = _rand_float(rng)
    if rng.random() < 0.25:
        return Interval(a, a)
    b = a + abs(_rand_float(rng)) * rng.choice([1e-18, 1e-9, 1.0])
    return Interval(min(a, b), max(a, b))


def _rand_member(rng: random.Random, iv: Interval) -> float:
    if iv.lo == iv.hi:
        return iv.lo
    t = rng.random()
    x = iv.lo + t * (iv.hi - iv.lo)
    return min(max(x, iv.lo), iv.hi)


def fuzz_arith_containment(n: int, seed: int = 20260819) -> int:
    """n cases per operation; exact member results must land inside."""
    rng = random.Random(seed)
    checked = 0
    for _ in range(n):
        a = rand_interval(rng)
        b = rand_interval(rng)
        x = _rand_member(rng, a)
        y = _rand_member(rng, b)
        fx, fy = Fraction(x), Fraction(y)

        r = a + b
        assert Fraction(r.lo) <= fx + fy <= Fraction(r.hi), (a, b, x, y, "+")
        r = a - b
        assert Fraction(r.lo) <= fx - fy <= Fraction(r.hi), (a, b, x, y, "-")
        r = a * b
        assert Fraction(r.lo) <= fx * fy <= Fraction(r.hi), (a, b, x, y, "*")
        if not (b.lo <= 0.0 <= b.hi):
            r = a / b
            assert Fraction(r.lo) <= fx / fy <= Fraction(r.hi), (a, b, x, y, "/")
        else:
            try:
                a / b
                raise AssertionError("division by zero interval did not raise")
            except DivisionByZeroInterval:
                pass
        r = sq(a)
        assert Fraction(r.lo) <= fx * fx <= Fraction(r.hi), (a, x, "sq")
        k = rng.randrange(0, 6)
        if k < 0 and a.lo <= 0.0 <= a.hi:
            k = 1
        r = pow_int(a, k)
        assert Fraction(r.lo) <= fx**k <= Fraction(r.hi), (a, x, k, "pow")
        checked += 1
    return checked


def fuzz_sqrt_containment(n: int, seed: int = 97) -> int:
    rng = random.Random(seed)
    for _ in range(n):
        a = rand_interval(rng)
        a = Interval(abs(a.lo), max(abs(a.lo), abs(a.hi)))
        x = _rand_member(rng, a)
        r = sqrt(a)
        # lo <= sqrt(x) <= hi iff lo^2 <= x and x <= hi^2 for nonnegatives.
        assert Fraction(r.lo) ** 2 <= Fraction(x), (a, x)
        assert Fraction(x) <= Fraction(r.hi) ** 2, (a, x)
    return n


_GUARD = mpmath.mpf("1e-30")


def fuzz_elem_containment(n: int, seed: int = 4242) -> int:
    """exp/sin/cos against mpmath; arguments kept in a sane range."""
    rng = random.Random(seed)
    old_dps = mpmath.mp.dps
    mpmath.mp.dps = 40
    try:
        for _ in range(n):
            lo = rng.uniform(-30.0, 30.0)
            hi = lo + abs(rng.gauss(0.0, 1.0)) * rng.choice([1e-12, 1e-3, 1.0])
            a = Interval(lo, hi)
            x = _rand_member(rng, a)
            mx = mpmath.mpf(x)
            for op, oracle in ((exp, mpmath.exp), (sin, mpmath.sin), (cos, mpmath.cos)):
                r = op(a)
                y = oracle(mx)
                assert mpmath.mpf(r.lo) <= y + _GUARD, (op.__name__, a, x)
                assert y - _GUARD <= mpmath.mpf(r.hi), (op.__name__, a, x)
    finally:
        mpmath.mp.dps = old_dps
    return n


def _ulp(x: float) -> Fraction:
    ax = abs(x)
    return Fraction(math.nextafter(ax, math.inf)) - Fraction(ax)


def fuzz_width_growth(n: int, seed: int = 7) -> int:
    """Width beyond the exact range stays within 4 ulp for rational ops."""
    rng = random.Random(seed)
    for _ in range(n):
        a = rand_interval(rng)
        b = rand_interval(rng)
        cases = [
            (a + b, [Fraction(u) + Fraction(v) for u in (a.lo, a.hi) for v in (b.lo, b.hi)]),
            (a - b, [Fraction(u) - Fraction(v) for u in (a.lo, a.hi) for v in (b.lo, b.hi)]),
            (a * b, [Fraction(u) * Fraction(v) for u in (a.lo, a.hi) for v in (b.lo, b.hi)]),
        ]
        if not (b.lo <= 0.0 <= b.hi):
            cases.append(
                (a / b, [Fraction(u) / Fraction(v) for u in (a.lo, a.hi) for v in (b.lo, b.hi)])
            )
        for r, corners in cases:
            exact_w = max(corners) - min(corners)
            got_w = Fraction(r.hi) - Fraction(r.lo)
            slack = got_w - exact_w
            budget = 4 * max(_ulp(r.lo), _ulp(r.hi))
            assert slack <= budget, (a, b, r, float(slack), float(budget))
    return n
