"""Interval arithmetic with outward rounding, the substrate for every certificate.

All operations satisfy containment: if x is in a and y is in b then the exact
value x op y lies in op(a, b).  Directed rounding is emulated by nudging
endpoints with math.nextafter after each float operation, since CPython gives
no access to hardware rounding modes.  The cost is at most one ulp of extra
width per endpoint for rational operations (add, sub, mul, div, sqrt) and two
ulps for transcendental kernels (exp, sin, cos), whose libm implementations
are accurate to one ulp but not correctly rounded.

Width growth per operation is therefore bounded by 4 ulp beyond the exact
range for rational operations and 6 ulp for transcendental ones.  Intervals
are closed, endpoints may be +-inf (unbounded enclosure), NaN endpoints are
rejected at construction.  Empty intersection is represented by None, never
by an interval with lo > hi.

Intervals are immutable by convention: no method mutates endpoints, so values
can be shared freely across threads.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

_INF = math.inf
_NINF = -math.inf
_nextafter = math.nextafter

__all__ = [
    "Interval",
    "IVector",
    "IMatrix",
    "Box",
    "DomainError",
    "DivisionByZeroInterval",
    "sqrt",
    "exp",
    "sin",
    "cos",
    "pow_int",
    "sq",
    "idot",
    "decimal_to_interval",
    "vec_norm_sup",
    "mat_opnorm_upper",
    "box_hull",
    "box_intersect",
    "box_subdivide",
    "box_midpoint",
]


class DomainError(ValueError):
    """Elementary function evaluated on an interval outside its domain."""


class DivisionByZeroInterval(ZeroDivisionError):
    """Division by an interval whose enclosure contains zero."""


def _mk(lo: float, hi: float) -> "Interval":
    # Internal fast constructor, skips validation.  Callers guarantee lo <= hi
    # and no NaN by construction.
    iv = Interval.__new__(Interval)
    iv.lo = lo
    iv.hi = hi
    return iv


def _mul_ep(a: float, b: float) -> float:
    # Endpoint product with the convention 0 * inf = 0, which is the correct
    # range endpoint when one factor is exactly zero.
    p = a * b
    if p != p:  # NaN, only reachable as 0 * inf
        return 0.0
    return p


_MAXF = 1.7976931348623157e308


def _add_dn(a: float, b: float) -> float:
    # Directed addition rounding down, exactly rounded via the TwoSum error
    # term: a + b = s + err holds exactly in the absence of overflow, so the
    # nudge is skipped whenever the float sum is already exact or below.
    s = a + b
    if s != s:  # inf - inf
        return _NINF
    if s == _INF:
        return _MAXF  # overflow certifies the exact sum exceeds maxfloat
    if s == _NINF:
        return _NINF
    bp = s - a
    ap = s - bp
    err = (a - ap) + (b - bp)
    return s if err >= 0.0 else _nextafter(s, _NINF)


def _add_up(a: float, b: float) -> float:
    s = a + b
    if s != s:
        return _INF
    if s == _INF:
        return _INF
    if s == _NINF:
        return -_MAXF
    bp = s - a
    ap = s - bp
    err = (a - ap) + (b - bp)
    return s if err <= 0.0 else _nextafter(s, _INF)


class Interval:
    """Closed interval [lo, hi] of doubles with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if lo != lo or hi != hi:
            raise ValueError("NaN endpoint")
        if lo > hi:
            raise ValueError(f"inverted endpoints: [{lo!r}, {hi!r}]")
        self.lo = lo
        self.hi = hi

    # -- constructors --------------------------------------------------------

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def from_json(cls, pair: Sequence[float]) -> "Interval":
        lo, hi = pair
        return cls(float(lo), float(hi))

    # -- structure -----------------------------------------------------------

    @property
    def width(self) -> float:
        # Rounded up so a reported width is itself an upper bound.
        return _nextafter(self.hi - self.lo, _INF) if self.hi != self.lo else 0.0

    @property
    def rad(self) -> float:
        return 0.5 * self.width

    @property
    def mid(self) -> float:
        if self.lo == _NINF and self.hi == _INF:
            return 0.0
        m = 0.5 * (self.lo + self.hi)
        if m != m or m == _INF or m == _NINF:
            m = 0.5 * self.lo + 0.5 * self.hi
        # Clamp: the reported midpoint must lie inside the interval.
        return min(max(m, self.lo), self.hi)

    @property
    def mag(self) -> float:
        """sup |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        """inf |x| over the interval."""
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def is_subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def strictly_inside(self, other: "Interval") -> bool:
        return other.lo < self.lo and self.hi < other.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Interval") -> "Interval | None":
        """Exact intersection, None when empty."""
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return _mk(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        return _mk(min(self.lo, other.lo), max(self.hi, other.hi))

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other) -> "Interval":
        if not isinstance(other, Interval):
            other = _mk(float(other), float(other))
        return _mk(_add_dn(self.lo, other.lo), _add_up(self.hi, other.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        if not isinstance(other, Interval):
            other = _mk(float(other), float(other))
        return _mk(_add_dn(self.lo, -other.hi), _add_up(self.hi, -other.lo))

    def __rsub__(self, other) -> "Interval":
        o = float(other)
        return _mk(_add_dn(o, -self.hi), _add_up(o, -self.lo))

    def __mul__(self, other) -> "Interval":
        if not isinstance(other, Interval):
            o = float(other)
            if o >= 0.0:
                lo, hi = _mul_ep(self.lo, o), _mul_ep(self.hi, o)
            else:
                lo, hi = _mul_ep(self.hi, o), _mul_ep(self.lo, o)
            return _mk(_nextafter(lo, _NINF), _nextafter(hi, _INF))
        p1 = _mul_ep(self.lo, other.lo)
        p2 = _mul_ep(self.lo, other.hi)
        p3 = _mul_ep(self.hi, other.lo)
        p4 = _mul_ep(self.hi, other.hi)
        return _mk(
            _nextafter(min(p1, p2, p3, p4), _NINF),
            _nextafter(max(p1, p2, p3, p4), _INF),
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        if not isinstance(other, Interval):
            other = _mk(float(other), float(other))
        if other.lo <= 0.0 <= other.hi:
            raise DivisionByZeroInterval(f"denominator {other!r} contains zero")
        q1 = self.lo / other.lo
        q2 = self.lo / other.hi
        q3 = self.hi / other.lo
        q4 = self.hi / other.hi
        return _mk(
            _nextafter(min(q1, q2, q3, q4), _NINF),
            _nextafter(max(q1, q2, q3, q4), _INF),
        )

    def __rtruediv__(self, other) -> "Interval":
        return _mk(float(other), float(other)) / self

    def __neg__(self) -> "Interval":
        return _mk(-self.hi, -self.lo)

    def __abs__(self) -> "Interval":
        if self.lo >= 0.0:
            return _mk(self.lo, self.hi)
        if self.hi <= 0.0:
            return _mk(-self.hi, -self.lo)
        return _mk(0.0, max(-self.lo, self.hi))

    # -- misc ----------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def to_json(self) -> list[float]:
        return [self.lo, self.hi]


# -- elementary functions ----------------------------------------------------


def sqrt(x: Interval) -> Interval:
    """Square root.  Requires x.lo >= 0, otherwise DomainError."""
    if x.lo < 0.0:
        raise DomainError(f"sqrt of interval containing negatives: {x!r}")
    # math.sqrt is correctly rounded, one nudge per endpoint suffices.
    lo = _nextafter(math.sqrt(x.lo), _NINF) if x.lo != 0.0 else 0.0
    hi = _nextafter(math.sqrt(x.hi), _INF) if x.hi != 0.0 else 0.0
    return _mk(max(lo, 0.0), hi)


def _pad2_down(v: float) -> float:
    return _nextafter(_nextafter(v, _NINF), _NINF)


def _pad2_up(v: float) -> float:
    return _nextafter(_nextafter(v, _INF), _INF)


def exp(x: Interval) -> Interval:
    # libm exp is accurate to 1 ulp, pad 2 ulp outward.
    try:
        lo = _pad2_down(math.exp(x.lo))
    except OverflowError:
        lo = 1.7976931348623157e308
    try:
        hi = _pad2_up(math.exp(x.hi))
    except OverflowError:
        hi = _INF
    return _mk(max(lo, 0.0), hi)


# math.pi rounds down from the true pi.
_PI_LO = math.pi
_PI_HI = _nextafter(math.pi, _INF)
_TWO_PI_HI = _nextafter(2.0 * _PI_HI, _INF)


def _trig_range(x: Interval, crit_offset: float, fn) -> Interval:
    """Shared range enclosure for sin (crit_offset 0.5) and cos (0.0).

    Critical points sit at (k + crit_offset) * pi.  The enclosure hulls the
    padded endpoint values and +-1 for every critical point whose interval
    enclosure meets x.
    """
    if x.hi - x.lo >= _TWO_PI_HI or max(abs(x.lo), abs(x.hi)) > 1e12:
        # Full period covered, or argument reduction no longer trustworthy.
        return _mk(-1.0, 1.0)
    lo_v = fn(x.lo)
    hi_v = fn(x.hi)
    lo = min(lo_v, hi_v)
    hi = max(lo_v, hi_v)
    lo = _pad2_down(lo)
    hi = _pad2_up(hi)
    k_min = math.floor(x.lo / _PI_LO - crit_offset) - 1
    k_max = math.ceil(x.hi / _PI_LO - crit_offset) + 1
    for k in range(k_min, k_max + 1):
        m = k + crit_offset  # dyadic, exact
        if m >= 0:
            c_lo, c_hi = m * _PI_LO, m * _PI_HI
        else:
            c_lo, c_hi = m * _PI_HI, m * _PI_LO
        c_lo = _nextafter(c_lo, _NINF)
        c_hi = _nextafter(c_hi, _INF)
        if c_lo <= x.hi and x.lo <= c_hi:
            # sin: extremum +1 at even k, -1 at odd k; cos: +1 at even, -1 odd.
            if k % 2 == 0:
                hi = 1.0
            else:
                lo = -1.0
    return _mk(max(lo, -1.0), min(hi, 1.0))


def sin(x: Interval) -> Interval:
    return _trig_range(x, 0.5, math.sin)


def cos(x: Interval) -> Interval:
    return _trig_range(x, 0.0, math.cos)


def sq(x: Interval) -> Interval:
    """x*x with the dependency resolved, result always >= 0."""
    if x.lo >= 0.0:
        return _mk(
            max(_nextafter(x.lo * x.lo, _NINF), 0.0),
            _nextafter(x.hi * x.hi, _INF),
        )
    if x.hi <= 0.0:
        return _mk(
            max(_nextafter(x.hi * x.hi, _NINF), 0.0),
            _nextafter(x.lo * x.lo, _INF),
        )
    m = max(-x.lo, x.hi)
    return _mk(0.0, _nextafter(m * m, _INF))


def pow_int(x: Interval, n: int) -> Interval:
    """x**n for integer n, resolving the even-power dependency.

    Negative n requires 0 not in x, otherwise DomainError.
    """
    if n == 0:
        return _mk(1.0, 1.0)
    if n < 0:
        if x.lo <= 0.0 <= x.hi:
            raise DomainError(f"negative power of interval containing zero: {x!r}")
        try:
            return _mk(1.0, 1.0) / pow_int(x, -n)
        except DivisionByZeroInterval as e:  # pragma: no cover - defensive
            raise DomainError(str(e)) from e
    if n == 1:
        return _mk(x.lo, x.hi)
    if n == 2:
        return sq(x)
    if n % 2 == 1:
        lo = _pad2_down(math.pow(x.lo, n))
        hi = _pad2_up(math.pow(x.hi, n))
        return _mk(lo, hi)
    # even power
    if x.lo >= 0.0:
        lo, hi = x.lo, x.hi
    elif x.hi <= 0.0:
        lo, hi = -x.hi, -x.lo
    else:
        lo, hi = 0.0, max(-x.lo, x.hi)
    return _mk(
        max(_pad2_down(math.pow(lo, n)), 0.0),
        _pad2_up(math.pow(hi, n)),
    )


def idot(xs: Sequence[Interval], ys: Sequence[Interval]) -> Interval:
    """Fused interval dot product sum(xs[i] * ys[i]).

    Accumulates endpoint floats directly with one outward nudge per term,
    avoiding intermediate Interval allocation.  The hot path of the Taylor
    series recurrences.
    """
    lo = 0.0
    hi = 0.0
    for x, y in zip(xs, ys):
        p1 = _mul_ep(x.lo, y.lo)
        p2 = _mul_ep(x.lo, y.hi)
        p3 = _mul_ep(x.hi, y.lo)
        p4 = _mul_ep(x.hi, y.hi)
        lo = _nextafter(lo + _nextafter(min(p1, p2, p3, p4), _NINF), _NINF)
        hi = _nextafter(hi + _nextafter(max(p1, p2, p3, p4), _INF), _INF)
    return _mk(lo, hi)


def decimal_to_interval(s: str) -> Interval:
    """Tightest interval around an exact decimal literal.

    The decimal is compared exactly against the nearest double via Fraction,
    so the result is the double itself when representable and the bracketing
    one-ulp interval otherwise.  Used for configuration values such as mass
    ratios given as decimal strings.
    """
    f = float(s)
    if math.isinf(f):
        raise ValueError(f"decimal out of double range: {s}")
    exact = Fraction(s)
    approx = Fraction(f)
    if approx == exact:
        return _mk(f, f)
    if approx < exact:
        return _mk(f, _nextafter(f, _INF))
    return _mk(_nextafter(f, _NINF), f)


# -- vectors and matrices ----------------------------------------------------


class IVector:
    """Vector of intervals, componentwise sound."""

    __slots__ = ("c",)

    def __init__(self, comps: Iterable[Interval | float]):
        self.c = [
            x if isinstance(x, Interval) else Interval(float(x)) for x in comps
        ]

    @classmethod
    def from_floats(cls, xs: Iterable[float]) -> "IVector":
        return cls([Interval(float(x)) for x in xs])

    @classmethod
    def zeros(cls, n: int) -> "IVector":
        return cls([Interval(0.0) for _ in range(n)])

    def __len__(self) -> int:
        return len(self.c)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.c)

    def __getitem__(self, i):
        return self.c[i]

    def __add__(self, other: "IVector") -> "IVector":
        return IVector([a + b for a, b in zip(self.c, other.c)])

    def __sub__(self, other: "IVector") -> "IVector":
        return IVector([a - b for a, b in zip(self.c, other.c)])

    def __neg__(self) -> "IVector":
        return IVector([-a for a in self.c])

    def scale(self, s) -> "IVector":
        return IVector([a * s for a in self.c])

    def mid(self) -> list[float]:
        return [a.mid for a in self.c]

    def widths(self) -> list[float]:
        return [a.width for a in self.c]

    def max_width(self) -> float:
        return max(a.width for a in self.c)

    def hull(self, other: "IVector") -> "IVector":
        return IVector([a.hull(b) for a, b in zip(self.c, other.c)])

    def contains(self, other) -> bool:
        if isinstance(other, IVector):
            return all(b in a for a, b in zip(self.c, other.c))
        return all(float(x) in a for a, x in zip(self.c, other))

    def is_subset_of(self, other: "IVector") -> bool:
        return all(a.is_subset_of(b) for a, b in zip(self.c, other.c))

    def strictly_inside(self, other: "IVector") -> bool:
        return all(a.strictly_inside(b) for a, b in zip(self.c, other.c))

    def __eq__(self, other) -> bool:
        return isinstance(other, IVector) and self.c == other.c

    def __repr__(self) -> str:
        return f"IVector({self.c!r})"

    def to_json(self) -> list[list[float]]:
        return [a.to_json() for a in self.c]

    @classmethod
    def from_json(cls, data) -> "IVector":
        return cls([Interval.from_json(p) for p in data])


# A Box is an IVector regarded as a product of intervals.
Box = IVector


class IMatrix:
    """Dense matrix of intervals."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Iterable[Interval | float]]):
        self.rows = [
            [x if isinstance(x, Interval) else Interval(float(x)) for x in row]
            for row in rows
        ]

    @classmethod
    def from_floats(cls, rows) -> "IMatrix":
        return cls([[Interval(float(x)) for x in row] for row in rows])

    @classmethod
    def identity(cls, n: int) -> "IMatrix":
        return cls(
            [[Interval(1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def row(self, i: int) -> list[Interval]:
        return list(self.rows[i])

    def col(self, j: int) -> list[Interval]:
        return [r[j] for r in self.rows]

    def __add__(self, other: "IMatrix") -> "IMatrix":
        return IMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)]
        )

    def __sub__(self, other: "IMatrix") -> "IMatrix":
        return IMatrix(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)]
        )

    def __neg__(self) -> "IMatrix":
        return IMatrix([[-a for a in row] for row in self.rows])

    def scale(self, s) -> "IMatrix":
        return IMatrix([[a * s for a in row] for row in self.rows])

    def transpose(self) -> "IMatrix":
        n, m = self.shape
        return IMatrix([[self.rows[i][j] for i in range(n)] for j in range(m)])

    def matvec(self, v: IVector) -> IVector:
        return IVector([idot(row, v.c) for row in self.rows])

    def matmul(self, other: "IMatrix") -> "IMatrix":
        cols = [other.col(j) for j in range(other.shape[1])]
        return IMatrix([[idot(row, col) for col in cols] for row in self.rows])

    def symmetrize(self) -> "IMatrix":
        """(M + M^T) / 2, entrywise interval arithmetic."""
        n, m = self.shape
        half = Interval(0.5)
        return IMatrix(
            [
                [(self.rows[i][j] + self.rows[j][i]) * half for j in range(m)]
                for i in range(n)
            ]
        )

    def mid(self) -> list[list[float]]:
        return [[a.mid for a in row] for row in self.rows]

    def max_width(self) -> float:
        return max(a.width for row in self.rows for a in row)

    def hull(self, other: "IMatrix") -> "IMatrix":
        return IMatrix(
            [
                [a.hull(b) for a, b in zip(ra, rb)]
                for ra, rb in zip(self.rows, other.rows)
            ]
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, IMatrix) and self.rows == other.rows

    def __repr__(self) -> str:
        return f"IMatrix({self.rows!r})"

    def to_json(self):
        return [[a.to_json() for a in row] for row in self.rows]

    @classmethod
    def from_json(cls, data) -> "IMatrix":
        return cls([[Interval.from_json(p) for p in row] for row in data])


# -- norms -------------------------------------------------------------------


def vec_norm_sup(v: IVector) -> Interval:
    """Enclosure of the Euclidean norm over the box: sqrt(sum x_i^2)."""
    acc = Interval(0.0)
    for comp in v.c:
        acc = acc + sq(comp)
    # A sum of squares is nonnegative; clamp rounding fuzz before sqrt.
    return sqrt(_mk(max(acc.lo, 0.0), acc.hi))


def mat_opnorm_upper(m: IMatrix) -> float:
    """Upper bound on the spectral norm, valid for every point matrix in m.

    Computed as min(Frobenius, sqrt(norm_1 * norm_inf)) of the entrywise
    absolute-value majorant, each accumulation rounded upward.
    """
    n_rows, n_cols = m.shape
    mags = [[a.mag for a in row] for row in m.rows]
    fro2 = 0.0
    for row in mags:
        for x in row:
            fro2 = _nextafter(fro2 + _nextafter(x * x, _INF), _INF)
    fro = _nextafter(math.sqrt(fro2), _INF)
    norm_inf = 0.0
    for row in mags:
        s = 0.0
        for x in row:
            s = _nextafter(s + x, _INF)
        norm_inf = max(norm_inf, s)
    norm_1 = 0.0
    for j in range(n_cols):
        s = 0.0
        for i in range(n_rows):
            s = _nextafter(s + mags[i][j], _INF)
        norm_1 = max(norm_1, s)
    holder = _nextafter(math.sqrt(_nextafter(norm_1 * norm_inf, _INF)), _INF)
    return min(fro, holder)


# -- box operations ----------------------------------------------------------


def box_hull(a: Box, b: Box) -> Box:
    return a.hull(b)


def box_intersect(a: Box, b: Box) -> Box | None:
    out = []
    for x, y in zip(a.c, b.c):
        z = x.intersect(y)
        if z is None:
            return None
        out.append(z)
    return IVector(out)


def box_midpoint(a: Box) -> list[float]:
    return a.mid()


def box_subdivide(box: Box, axis: int, k: int) -> list[Box]:
    """Split one axis into k pieces that share endpoints, so the union covers.

    Interior cut points are floats between lo and hi; consecutive pieces share
    them exactly, hence no gap can open.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    comp = box.c[axis]
    lo, hi = comp.lo, comp.hi
    cuts = [lo]
    for i in range(1, k):
        t = lo + (hi - lo) * (i / k)
        t = min(max(t, cuts[-1]), hi)
        cuts.append(t)
    cuts.append(hi)
    pieces = []
    for i in range(k):
        sub = list(box.c)
        sub[axis] = Interval(cuts[i], cuts[i + 1])
        pieces.append(IVector(sub))
    return pieces


# -- serialization helpers ---------------------------------------------------


def dumps(obj) -> str:
    """JSON text for Interval, IVector and IMatrix, shortest round-trip floats."""
    if isinstance(obj, (Interval, IVector, IMatrix)):
        obj = obj.to_json()
    return json.dumps(obj)
