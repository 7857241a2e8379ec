"""Validated ODE integration and rigorous Poincare sections.

A set of states is carried as a Lohner doubleton

    midpoint + init_basis * init_remainder + basis * remainder,

where the midpoint and the two bases are floating point and the two
remainders are interval boxes.  The initial set rides the raw product of
step transport matrices in init_basis (a parallelepiped, so the dominant
term never pays the wrapping cost of re-boxing), while the per-step
defects - Lagrange tails, midpoint rounding, transport-product rounding -
accumulate in the QR-rotated basis * remainder part.  Every operation
keeps the invariant that the exact flow image of the initial set stays
inside the represented set.

One Taylor step uses four series expansions:
  * a thin series at the midpoint (order p) plus a Lagrange coefficient of
    order p+1 evaluated over the rough tube, enclosing phi_h(midpoint);
  * an interval series at the current box (order p) for the variational
    coefficients, plus the variational Lagrange coefficient of order p+1
    over the tube with the a-priori matrix bound W, enclosing D(phi_h)
    over the box.
The mean value theorem then gives
phi_h(m + C r0 + B r) in phi_h(m) + [V] (C r0 + B r), the products [V] C
and [V] B are split into float midpoints plus interval defects, and the
error basis is renewed by QR with sorted columns to control wrapping.

Poincare crossings monitor the rough tube of every step, land a float
time on the section with the midpoint series, and project the set onto
the section through the correlated mean-value form

    P_i in p_i - [F_i(Z)/F_k(Z)] (p_k - value),

evaluated jointly over the shared remainder coordinates so that signs
survive at widths where independent bounds would not.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .interval import (
    Box,
    IMatrix,
    Interval,
    IVector,
    exp,
    idot,
    mat_opnorm_upper,
    sq,
    sqrt,
    vec_norm_sup,
)
from .linalg import verified_inverse

__all__ = [
    "EnclosureFailure",
    "TransversalityFailure",
    "LostCrossing",
    "VectorFieldBounds",
    "FlowEnclosure",
    "Section",
    "LinearTaylorField",
    "bounds_for",
    "gronwall_bounds",
    "a_priori_enclosure",
    "taylor_step",
    "integrate_to_time",
    "poincare_crossing",
    "write_trajectory_csv",
]


class EnclosureFailure(RuntimeError):
    """A rough enclosure or a remainder target could not be achieved."""


class TransversalityFailure(RuntimeError):
    """The section velocity enclosure contains zero or has the wrong sign."""


class LostCrossing(RuntimeError):
    """No certified first crossing within the time or step budget."""


@dataclass(frozen=True)
class VectorFieldBounds:
    """Certified bounds over a stated box.

    mu_bound >= sup ||F||, L >= sup ||DF||, and
    ||DF(p1) - DF(p2)|| <= M ||p1 - p2|| on the box.
    """

    mu_bound: float
    L: float
    M: float

    def __post_init__(self):
        if min(self.mu_bound, self.L, self.M) < 0.0:
            raise ValueError("bounds must be nonnegative")


def bounds_for(field, box: Box) -> VectorFieldBounds:
    """Evaluate VectorFieldBounds from the field's interval oracles.

    M comes from the component Hessians: the Frobenius norm of the stacked
    gradient rows of DF dominates the Lipschitz constant of DF on a convex
    box.
    """
    mu_bound = vec_norm_sup(field.vector_field(box)).hi
    l_bound = mat_opnorm_upper(field.jacobian(box))
    acc = Interval(0.0)
    for h in field.hessians(box):
        for row in h.rows:
            for entry in row:
                acc = acc + sq(entry)
    m_bound = sqrt(Interval(max(acc.lo, 0.0), acc.hi)).hi
    return VectorFieldBounds(mu_bound, l_bound, m_bound)


def gronwall_bounds(b: VectorFieldBounds, t: float, dist: float):
    """Upper bounds for the two flow-difference estimates.

    g1 bounds ||phi_t(p1) - phi_t(p2) - (p1 - p2)|| by
    (e^{|t|L} - 1) ||p1 - p2||; g2 bounds
    ||F(phi_t(p1)) - F(phi_t(p2)) - (F(p1) - F(p2))|| by
    (L (e^{L|t|} - 1) + |t| e^{L|t|} mu M) ||p1 - p2||.  Both are rounded
    upward; both vanish exactly at t = 0.
    """
    if dist < 0.0:
        raise ValueError("dist must be nonnegative")
    if t == 0.0 or dist == 0.0:
        return (0.0, 0.0)
    at = abs(t)
    e_lt = exp(Interval(b.L) * at)
    g1 = ((e_lt - 1.0) * dist).hi
    g2 = (
        (Interval(b.L) * (e_lt - 1.0) + at * e_lt * b.mu_bound * b.M) * dist
    ).hi
    return (g1, g2)


# -- set representation ----------------------------------------------------------


class FlowEnclosure:
    """Doubleton midpoint + init_basis r0 + basis r at an interval of times.

    The represented set contains the exact flow image of the initial set
    at every represented time.  init_basis carries the transported initial
    box (init_remainder stays fixed over the whole integration); basis and
    remainder hold the accumulated step errors.  Either part may be absent
    by passing an all-zero remainder.
    """

    __slots__ = (
        "midpoint", "basis", "remainder", "init_basis", "init_remainder",
        "time",
    )

    def __init__(
        self,
        midpoint,
        basis,
        remainder: Box,
        time: Interval,
        init_basis=None,
        init_remainder: Box | None = None,
    ):
        self.midpoint = [float(x) for x in midpoint]
        self.basis = [[float(x) for x in row] for row in basis]
        self.remainder = remainder
        n = len(self.midpoint)
        if init_basis is None:
            init_basis = [
                [1.0 if i == j else 0.0 for j in range(n)] for i in range(n)
            ]
        if init_remainder is None:
            init_remainder = IVector([Interval(0.0)] * n)
        self.init_basis = [[float(x) for x in row] for row in init_basis]
        self.init_remainder = init_remainder
        self.time = time

    @property
    def dim(self) -> int:
        return len(self.midpoint)

    @classmethod
    def from_box(cls, box: Box, time: Interval | None = None) -> "FlowEnclosure":
        mid = box.mid()
        n = len(mid)
        ident = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
        r0 = IVector([box[i] - mid[i] for i in range(n)])
        zeros = IVector([Interval(0.0)] * n)
        return cls(
            mid, ident, zeros, time if time is not None else Interval(0.0),
            ident, r0,
        )

    def as_box(self) -> Box:
        n = self.dim
        coords = list(self.init_remainder) + list(self.remainder)
        out = []
        for i in range(n):
            row = [Interval(x) for x in self.init_basis[i]] + [
                Interval(x) for x in self.basis[i]
            ]
            out.append(self.midpoint[i] + idot(row, coords))
        return IVector(out)

    def max_width(self) -> float:
        return self.as_box().max_width()

    def __repr__(self) -> str:
        return (
            f"FlowEnclosure(t={self.time!r}, box={self.as_box()!r})"
        )


@dataclass(frozen=True)
class Section:
    """Hyperplane {x_index = value} with a required transversal velocity
    sign: +1 means the coordinate must be increasing at the crossing."""

    index: int
    value: float
    direction: int

    def __post_init__(self):
        if self.direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")


# -- generic linear field ---------------------------------------------------------


class _CoeffSeries:
    """Plain coefficient table satisfying the series protocol."""

    __slots__ = ("coeffs", "order", "sign")

    def __init__(self, coeffs: list, sign: float):
        self.coeffs = coeffs
        self.order = len(coeffs) - 1
        self.sign = sign

    def coefficient(self, k: int) -> IVector:
        return self.coeffs[k]


class LinearTaylorField:
    """x' = A x with interval-exact Taylor recurrences, mainly for tests
    and demonstrations: c_{k+1} = A c_k / (k+1)."""

    def __init__(self, a: IMatrix):
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("matrix must be square")
        self.a = a
        self.dim = n

    def vector_field(self, x) -> IVector:
        return self.a.matvec(_as_ivector(x, self.dim))

    def jacobian(self, x) -> IMatrix:
        return self.a

    def hessians(self, x) -> list:
        zero = Interval(0.0)
        n = self.dim
        return [IMatrix([[zero] * n for _ in range(n)]) for _ in range(n)]

    def expand(self, u0, order: int) -> _CoeffSeries:
        coeffs = [_as_ivector(u0, self.dim)]
        for k in range(order):
            coeffs.append(self.a.matvec(coeffs[k]).scale(1.0 / (k + 1)))
        return _CoeffSeries(coeffs, 1.0)

    def expand_variational(self, sol, v0: IMatrix, order: int) -> list:
        out = [v0]
        for k in range(order):
            out.append(self.a.matmul(out[k]).scale(Interval(1.0 / (k + 1))))
        return out


def _as_ivector(x, n: int) -> IVector:
    if isinstance(x, IVector):
        v = x
    else:
        v = IVector(
            [c if isinstance(c, Interval) else Interval(float(c)) for c in x]
        )
    if len(v) != n:
        raise ValueError(f"expected {n} components")
    return v


# -- rough enclosures -------------------------------------------------------------


def _picard(field, x0: Box, t_range: Interval) -> Box:
    """Box Z with x0 + t_range * F(Z) contained in Z (all trajectories from
    x0 over t_range stay in Z)."""
    f0 = field.vector_field(x0)  # genuinely singular start propagates
    n = len(x0)
    scale = max(t_range.mag, 1e-300)
    pad = [
        Interval(-2.0 * scale * f0[i].mag - 1e-300,
                 2.0 * scale * f0[i].mag + 1e-300)
        for i in range(n)
    ]
    z = IVector([x0[i] + pad[i] for i in range(n)])
    for _ in range(20):
        try:
            fz = field.vector_field(z)
        except ArithmeticError as err:
            raise EnclosureFailure(
                f"rough enclosure inflated into a singularity: {err}"
            ) from err
        cand = IVector([x0[i] + fz[i] * t_range for i in range(n)])
        if not all(
            math.isfinite(cand[i].lo) and math.isfinite(cand[i].hi)
            for i in range(n)
        ):
            raise EnclosureFailure("rough enclosure escaped to infinity")
        if cand.is_subset_of(z):
            return cand
        grown = []
        for i in range(n):
            w = 0.1 * cand[i].width + 1e-300
            grown.append(z[i].hull(cand[i]) + Interval(-w, w))
        z = IVector(grown)
    raise EnclosureFailure("rough enclosure did not stabilize in 20 attempts")


def a_priori_enclosure(field, x0: Box, h: float) -> Box:
    """First-order Picard enclosure of all trajectories from x0 over [0, h]."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    return _picard(field, x0, Interval(0.0, h))


# -- the Taylor step --------------------------------------------------------------


def _opnorm_inf(m: IMatrix) -> float:
    worst = 0.0
    for row in m.rows:
        acc = Interval(0.0)
        for entry in row:
            acc = acc + entry.mag
        worst = max(worst, acc.hi)
    return worst


def _horner_vec(series, order: int, h: float, tail: IVector) -> IVector:
    acc = tail
    for k in range(order, -1, -1):
        c = series.coefficient(k)
        acc = IVector([a * h + b for a, b in zip(acc, c)])
    return acc


def _horner_mat(mats: list, order: int, h: float, tail: IMatrix) -> IMatrix:
    acc = tail
    for k in range(order, -1, -1):
        acc = acc.scale(Interval(h)) + mats[k]
    return acc


class _StepData:
    __slots__ = ("image", "transport", "tube", "sol_err", "var_err")

    def __init__(self, image, transport, tube, sol_err, var_err):
        self.image = image  # IVector enclosing phi_h(midpoint)
        self.transport = transport  # IMatrix enclosing D(phi_h) over the box
        self.tube = tube  # rough enclosure over [0, h]
        self.sol_err = sol_err  # magnitude of the solution Lagrange term
        self.var_err = var_err  # magnitude of the variational Lagrange term


def _expand_step(field, enc: FlowEnclosure, h: float, order: int) -> _StepData:
    n = enc.dim
    x0 = enc.as_box()
    tube = a_priori_enclosure(field, x0, h)

    ser_m = field.expand(IVector.from_floats(enc.midpoint), order)
    ser_z = field.expand(tube, order + 1)
    sol_tail = ser_z.coefficient(order + 1)
    image = _horner_vec(ser_m, order, h, sol_tail)

    ser_x = field.expand(x0, order)
    v_x = field.expand_variational(ser_x, IMatrix.identity(n), order)
    l_inf = _opnorm_inf(field.jacobian(tube))
    b = (exp(Interval(l_inf) * h) - 1.0).hi
    w0 = IMatrix(
        [
            [
                Interval(1.0 if i == j else 0.0) + Interval(-b, b)
                for j in range(n)
            ]
            for i in range(n)
        ]
    )
    v_z = field.expand_variational(ser_z, w0, order + 1)
    var_tail = v_z[order + 1]
    transport = _horner_mat(v_x, order, h, var_tail)

    hp = h ** (order + 1)
    sol_err = max(c.mag for c in sol_tail) * hp
    var_err = max(e.mag for row in var_tail.rows for e in row) * hp
    return _StepData(image, transport, tube, sol_err, var_err)


def _assemble(enc: FlowEnclosure, data: _StepData, h: float) -> FlowEnclosure:
    """Lohner doubleton update: new midpoint, transported init part, QR
    error basis, rigorous remainder."""
    n = enc.dim
    m_new = [c.mid for c in data.image]
    defect = IVector([data.image[i] - m_new[i] for i in range(n)])

    tc_full = data.transport.matmul(IMatrix.from_floats(enc.init_basis))
    c_new = tc_full.mid()
    c_delta = tc_full - IMatrix.from_floats(c_new)

    tb_full = data.transport.matmul(IMatrix.from_floats(enc.basis))
    m_mid = tb_full.mid()
    m_delta = tb_full - IMatrix.from_floats(m_mid)

    err = (
        defect
        + c_delta.matvec(enc.init_remainder)
        + m_delta.matvec(enc.remainder)
    )

    # sort columns so the dominant stretched directions lead the QR
    rads = [0.5 * r.width for r in enc.remainder]
    weights = []
    for j in range(n):
        col = sum(m_mid[i][j] ** 2 for i in range(n)) ** 0.5
        weights.append(-col * max(rads[j], 1e-300))
    perm = sorted(range(n), key=lambda j: weights[j])
    a = np.array([[m_mid[i][perm[j]] for j in range(n)] for i in range(n)])
    q_np, _ = np.linalg.qr(a)
    q = [[float(q_np[i][j]) for j in range(n)] for i in range(n)]
    q_inv = verified_inverse(IMatrix.from_floats(q))

    rem = q_inv.matmul(IMatrix.from_floats(m_mid)).matvec(enc.remainder)
    rem = rem + q_inv.matvec(err)
    return FlowEnclosure(
        m_new, q, rem, enc.time + h, c_new, enc.init_remainder
    )


def taylor_step(field, enc: FlowEnclosure, h: float, order: int = 20):
    """One validated step of size exactly h.

    Raises EnclosureFailure when the rough enclosure cannot be stabilized;
    the caller is expected to halve h.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    data = _expand_step(field, enc, h, order)
    return _assemble(enc, data, h)


def _advance(field, enc, h_try, order, tol, h_min):
    """One accepted adaptive step: (enclosure, tube, h_used)."""
    h = h_try
    diam = enc.max_width()
    while True:
        try:
            data = _expand_step(field, enc, h, order)
            if data.sol_err <= tol and data.var_err * max(diam, 1e-30) <= tol:
                return _assemble(enc, data, h), data, h
        except EnclosureFailure:
            pass
        h *= 0.5
        if h < h_min:
            raise EnclosureFailure(
                f"no acceptable step above h_min={h_min:g}"
            )


def integrate_to_time(
    field,
    enc: FlowEnclosure,
    t_final: float,
    order: int = 20,
    tol: float = 1e-14,
    h_init: float = 0.02,
    h_min: float = 1e-9,
    h_max: float = 0.5,
    observer=None,
) -> FlowEnclosure:
    """Propagate until the represented time reaches t_final (exactly, up to
    the outward rounding of the accumulated time interval)."""
    if t_final <= enc.time.hi:
        raise ValueError("t_final must exceed the current time")
    h_try = min(h_init, h_max)
    slack = 1e-15 * max(1.0, abs(t_final))
    while True:
        remaining = t_final - enc.time.hi
        if remaining <= slack:
            return enc
        clipped = min(h_try, remaining)
        enc, data, h_used = _advance(field, enc, clipped, order, tol, h_min)
        if observer is not None:
            observer(enc, data.tube)
        if h_used == clipped and h_used == h_try:
            h_try = min(h_try * 1.4, h_max)
        elif h_used < clipped:
            h_try = h_used
        if enc.time.hi >= t_final - 1e-15 * max(1.0, abs(t_final)):
            return enc


# -- Poincare crossings ------------------------------------------------------------


def _float_newton_time(field, enc, h_step, section, order):
    """Float time where the midpoint series meets the section (no rigor)."""
    ser = field.expand(IVector.from_floats(enc.midpoint), order)
    coeffs = [ser.coefficient(k)[section.index].mid for k in range(order + 1)]
    dcoeffs = [k * coeffs[k] for k in range(1, order + 1)]

    def p(t):
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * t + c
        return acc - section.value

    def dp(t):
        acc = 0.0
        for c in reversed(dcoeffs):
            acc = acc * t + c
        return acc

    t = 0.5 * h_step
    for _ in range(80):
        d = dp(t)
        if d == 0.0:
            break
        step = p(t) / d
        t -= step
        t = min(max(t, 0.0), h_step)
        if abs(step) < 1e-16 * max(1.0, abs(t)):
            break
    if not (0.0 < t < h_step) or abs(p(t)) > 1e-10:
        raise LostCrossing("float landing on the section did not converge")
    return t


def _cross_in_step(field, enc, h_step, section, order):
    """Certified section image for a step whose end lies strictly past the
    section.  Returns the on-section FlowEnclosure or raises."""
    n = enc.dim
    k = section.index
    t_star = _float_newton_time(field, enc, h_step, section, order)

    data = _expand_step(field, enc, t_star, order)
    # first-crossing inside the step needs monotone section coordinate
    f_tube = field.vector_field(data.tube)[k]
    if 0.0 in f_tube or (f_tube.hi < 0.0) != (section.direction < 0):
        raise TransversalityFailure(
            f"section velocity over the step tube: {f_tube!r}"
        )

    m_c = data.transport.matmul(IMatrix.from_floats(enc.init_basis))
    m_b = data.transport.matmul(IMatrix.from_floats(enc.basis))
    coords = list(enc.init_remainder) + list(enc.remainder)
    p_rows = [
        data.image[i] + idot(list(m_c.row(i)) + list(m_b.row(i)), coords)
        for i in range(n)
    ]
    x_star = IVector(p_rows)

    # transition tube around the section, both time directions
    g = x_star[k] - section.value
    f_here = field.vector_field(x_star)[k]
    if 0.0 in f_here:
        raise TransversalityFailure(
            f"section velocity on the crossing set: {f_here!r}"
        )
    d_time = 1.2 * (abs(g) / abs(f_here)).hi + 1e-300
    for _ in range(12):
        tube = _picard(field, x_star, Interval(-d_time, d_time))
        fz = field.vector_field(tube)
        fzk = fz[k]
        if 0.0 in fzk or (fzk.hi < 0.0) != (section.direction < 0):
            raise TransversalityFailure(
                f"section velocity over the transition tube: {fzk!r}"
            )
        delta = (section.value - x_star[k]) / fzk
        if delta.mag <= d_time:
            break
        d_time *= 2.0
    else:
        raise EnclosureFailure("transition tube did not capture the crossing")

    # correlated projection onto the section
    pk_off = data.image[k] - section.value
    mids = []
    rems = []
    time_cross = enc.time + t_star + delta
    out_rows: list[Interval] = []
    for i in range(n):
        if i == k:
            out_rows.append(Interval(section.value))
            continue
        rho = fz[i] / fzk
        terms = [m_c.rows[i][j] - rho * m_c.rows[k][j] for j in range(n)] + [
            m_b.rows[i][j] - rho * m_b.rows[k][j] for j in range(n)
        ]
        out_rows.append(data.image[i] - rho * pk_off + idot(terms, coords))
    for i in range(n):
        if i == k:
            mids.append(section.value)
            rems.append(Interval(0.0))
        else:
            m = out_rows[i].mid
            mids.append(m)
            rems.append(out_rows[i] - m)
    basis = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    return FlowEnclosure(mids, basis, IVector(rems), time_cross)


def poincare_crossing(
    field,
    enc: FlowEnclosure,
    section: Section,
    order: int = 20,
    tol: float = 1e-14,
    h_init: float = 0.02,
    h_min: float = 1e-9,
    h_max: float = 0.5,
    max_time: float = 100.0,
    observer=None,
) -> FlowEnclosure:
    """Certified first crossing of the section.

    The set must start strictly off-section.  Every step's rough tube is
    checked: steps whose tube stays clear of the section cannot contain a
    crossing; the step that lands strictly past the section is refined
    into an on-section enclosure via the correlated mean-value projection.
    Grazing or undecided steps are retried at half the step size down to
    h_min, then reported as LostCrossing.
    """
    k = section.index
    g0 = enc.as_box()[k] - section.value
    if 0.0 in g0:
        raise ValueError("initial set is not strictly off-section")
    side = 1 if g0.lo > 0.0 else -1
    if section.direction != -side:
        raise ValueError(
            "required crossing sign is inconsistent with the starting side"
        )
    t_start = enc.time.lo
    h_try = min(h_init, h_max)
    while True:
        if enc.time.hi - t_start > max_time:
            raise LostCrossing(f"no crossing within time budget {max_time}")
        h = h_try
        while True:
            try:
                data = _expand_step(field, enc, h, order)
            except EnclosureFailure:
                h *= 0.5
                if h < h_min:
                    raise
                continue
            diam = enc.max_width()
            if data.sol_err > tol or data.var_err * max(diam, 1e-30) > tol:
                h *= 0.5
                if h < h_min:
                    raise EnclosureFailure(
                        f"no acceptable step above h_min={h_min:g}"
                    )
                continue
            tube_gap = data.tube[k] - section.value
            if 0.0 not in tube_gap:
                # tube clear of the section: certified no crossing here
                enc = _assemble(enc, data, h)
                if observer is not None:
                    observer(enc, data.tube)
                if h == h_try:
                    h_try = min(h_try * 1.4, h_max)
                break
            enc_end = _assemble(enc, data, h)
            end_gap = enc_end.as_box()[k] - section.value
            crossed = (end_gap.hi < 0.0) if side > 0 else (end_gap.lo > 0.0)
            if crossed:
                return _cross_in_step(field, enc, h, section, order)
            # grazing or undecided: shrink the step
            h *= 0.5
            if h < h_min:
                raise LostCrossing(
                    "section contact could not be resolved above h_min"
                )


# -- trajectory output --------------------------------------------------------------


def write_trajectory_csv(path, enclosures) -> None:
    """Stream per-step enclosures: t_lo, t_hi, then lo/hi per coordinate."""
    rows = list(enclosures)
    if not rows:
        raise ValueError("no enclosures to write")
    n = rows[0].dim
    header = ["t_lo", "t_hi"]
    for i in range(n):
        header += [f"x{i}_lo", f"x{i}_hi"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for e in rows:
            box = e.as_box()
            row = [repr(e.time.lo), repr(e.time.hi)]
            for i in range(n):
                row += [repr(box[i].lo), repr(box[i].hi)]
            writer.writerow(row)
