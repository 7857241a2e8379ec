"""Validated integration and Poincare section tests.

Oracle notes:
  * [TRIVIAL]  zero fields, t=0 bounds, formula specializations, quarter
               circle on the rotation field.
  * [DERIVED]  closed-form flows (exp, harmonic oscillator, linear saddle),
               scipy RK45 at rtol 1e-12 as a containment reference, float
               RK4 pair sampling for the Gronwall consistency check.
"""

from __future__ import annotations

import csv
import math
import random

import pytest

from conecert.interval import IMatrix, Interval, IVector, decimal_to_interval
from conecert.flow import (
    EnclosureFailure,
    FlowEnclosure,
    LinearTaylorField,
    LostCrossing,
    Section,
    TransversalityFailure,
    VectorFieldBounds,
    a_priori_enclosure,
    bounds_for,
    gronwall_bounds,
    integrate_to_time,
    poincare_crossing,
    taylor_step,
    write_trajectory_csv,
)
from conecert.rtbp import (
    RtbpParams,
    RtbpTaylorField,
    State,
    jacobi_constant,
    vector_field_floats,
)

MU = "0.0042538634220"


def rtbp_field() -> RtbpTaylorField:
    return RtbpTaylorField(RtbpParams(decimal_to_interval(MU)))


class AffineField:
    """x' = A x + b test double implementing the series protocol."""

    def __init__(self, a, b):
        self.a = IMatrix.from_floats(a)
        self.b = IVector.from_floats(b)
        self.dim = len(b)

    def vector_field(self, x) -> IVector:
        v = x if isinstance(x, IVector) else IVector.from_floats(list(x))
        return self.a.matvec(v) + self.b

    def jacobian(self, x) -> IMatrix:
        return self.a

    def hessians(self, x) -> list:
        zero = Interval(0.0)
        n = self.dim
        return [IMatrix([[zero] * n for _ in range(n)]) for _ in range(n)]

    def expand(self, u0, order: int):
        coeffs = [u0 if isinstance(u0, IVector) else IVector.from_floats(u0)]
        for k in range(order):
            nxt = self.a.matvec(coeffs[k])
            if k == 0:
                nxt = nxt + self.b
            coeffs.append(nxt.scale(1.0 / (k + 1)))
        return _Series(coeffs)

    def expand_variational(self, sol, v0: IMatrix, order: int) -> list:
        out = [v0]
        for k in range(order):
            out.append(self.a.matmul(out[k]).scale(Interval(1.0 / (k + 1))))
        return out


class _Series:
    def __init__(self, coeffs):
        self.coeffs = coeffs
        self.order = len(coeffs) - 1

    def coefficient(self, k):
        return self.coeffs[k]


def harmonic() -> LinearTaylorField:
    return LinearTaylorField(IMatrix.from_floats([[0.0, 1.0], [-1.0, 0.0]]))


# -- Gronwall bounds -------------------------------------------------------------


def test_gronwall_zero_time():
    b = VectorFieldBounds(3.0, 2.0, 1.0)
    assert gronwall_bounds(b, 0.0, 5.0) == (0.0, 0.0)  # [TRIVIAL]
    assert gronwall_bounds(b, 1.0, 0.0) == (0.0, 0.0)


def test_gronwall_scalar_linear_equality():
    # x' = x has phi_t(p) = e^t p, so g1 at t=1 equals (e-1) dist exactly;
    # the bound must sit just above it.  [DERIVED]
    b = VectorFieldBounds(10.0, 1.0, 0.0)
    for dist in (1.0, 0.25, 3.5e-7):
        g1, g2 = gronwall_bounds(b, 1.0, dist)
        exact = (math.e - 1.0) * dist
        assert g1 >= exact
        assert g1 - exact < 1e-12 * max(1.0, exact)
        # mu*M = 0 specialization: g2 = L (e^{Lt} - 1) dist  [TRIVIAL]
        assert abs(g2 - exact) < 1e-12 * max(1.0, exact)


def test_gronwall_negative_time_symmetric():
    b = VectorFieldBounds(1.0, 0.7, 2.0)
    assert gronwall_bounds(b, -0.3, 1.0) == gronwall_bounds(b, 0.3, 1.0)


def test_gronwall_rejects_negative_dist():
    b = VectorFieldBounds(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        gronwall_bounds(b, 1.0, -1.0)
    with pytest.raises(ValueError):
        VectorFieldBounds(-1.0, 1.0, 1.0)


def test_bounds_for_rtbp_box():
    # Certified sups dominate float samples inside the box.  [TRIVIAL]
    field = rtbp_field()
    box = IVector(
        [
            Interval(-0.82, -0.78),
            Interval(0.08, 0.12),
            Interval(0.03, 0.07),
            Interval(-0.72, -0.68),
        ]
    )
    vb = bounds_for(field, box)
    rng = random.Random(1)
    mu = field.params.mu.mid
    for _ in range(100):
        pt = [box[i].lo + rng.random() * box[i].width for i in range(4)]
        f = vector_field_floats(pt, mu)
        assert math.sqrt(sum(c * c for c in f)) <= vb.mu_bound
    assert vb.L > 0.0 and vb.M > 0.0


def test_gronwall_consistency_sampled_pairs():
    # ||phi_t(p1) - phi_t(p2) - (p1 - p2)|| <= g1 over random pairs, with
    # float RK4 standing in for the true flow.  [DERIVED]
    field = rtbp_field()
    mu = field.params.mu.mid
    box = IVector(
        [
            Interval(-0.805, -0.795),
            Interval(0.095, 0.105),
            Interval(0.045, 0.055),
            Interval(-0.705, -0.695),
        ]
    )
    t = 0.2
    tubes = []
    integrate_to_time(
        field,
        FlowEnclosure.from_box(box),
        t,
        order=18,
        tol=1e-12,
        observer=lambda enc, tube: tubes.append(tube),
    )
    hull = tubes[0]
    for tb in tubes[1:]:
        hull = IVector([hull[i].hull(tb[i]) for i in range(4)])
    vb = bounds_for(field, hull)

    def rk4(x):
        x = list(x)
        n = 400
        h = t / n
        for _ in range(n):
            k1 = vector_field_floats(x, mu)
            k2 = vector_field_floats(
                [x[i] + 0.5 * h * k1[i] for i in range(4)], mu
            )
            k3 = vector_field_floats(
                [x[i] + 0.5 * h * k2[i] for i in range(4)], mu
            )
            k4 = vector_field_floats([x[i] + h * k3[i] for i in range(4)], mu)
            x = [
                x[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
                for i in range(4)
            ]
        return x

    rng = random.Random(17)
    for _ in range(25):
        p1 = [box[i].lo + rng.random() * box[i].width for i in range(4)]
        p2 = [box[i].lo + rng.random() * box[i].width for i in range(4)]
        dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(p1, p2)))
        g1, _ = gronwall_bounds(vb, t, dist)
        q1, q2 = rk4(p1), rk4(p2)
        dev = math.sqrt(
            sum(
                (q1[i] - q2[i] - (p1[i] - p2[i])) ** 2
                for i in range(4)
            )
        )
        assert dev <= g1


# -- a priori enclosures -----------------------------------------------------------


def test_a_priori_zero_field():
    f = LinearTaylorField(IMatrix.from_floats([[0.0]]))
    x0 = IVector([Interval(1.0, 2.0)])
    z = a_priori_enclosure(f, x0, 0.5)
    assert x0.is_subset_of(z)
    assert z[0].width < x0[0].width + 1e-14  # few-ulp Picard inflation only


def test_a_priori_constant_field():
    # x' = 1 from [0,0] over [0, 0.1] must cover [0, 0.1].  [TRIVIAL]
    f = AffineField([[0.0]], [1.0])
    z = a_priori_enclosure(f, IVector.from_floats([0.0]), 0.1)
    assert Interval(0.0, 0.1).is_subset_of(z[0])


def test_a_priori_contains_harmonic_arc():
    # Closed-form arc (cos t, -sin t) sampled at 10^3 times.  [DERIVED]
    z = a_priori_enclosure(harmonic(), IVector.from_floats([1.0, 0.0]), 0.01)
    for j in range(1001):
        t = 0.01 * j / 1000.0
        assert math.cos(t) in z[0]
        assert -math.sin(t) in z[1]


def test_a_priori_failure_blowup():
    class Quadratic:
        dim = 1

        def vector_field(self, x):
            v = x if isinstance(x, IVector) else IVector.from_floats(x)
            return IVector([sqr for sqr in (v[0] * v[0],)])

    with pytest.raises(EnclosureFailure):
        a_priori_enclosure(Quadratic(), IVector.from_floats([100.0]), 1.0)
    with pytest.raises(ValueError):
        a_priori_enclosure(harmonic(), IVector.from_floats([1.0, 0.0]), 0.0)


# -- Taylor steps ------------------------------------------------------------------


def test_step_zero_field():
    f = LinearTaylorField(IMatrix.from_floats([[0.0, 0.0], [0.0, 0.0]]))
    e0 = FlowEnclosure.from_box(IVector([Interval(1.0, 1.25), Interval(2.0)]))
    e1 = taylor_step(f, e0, 0.25, order=5)
    assert 0.25 in e1.time
    b0, b1 = e0.as_box(), e1.as_box()
    for a, b in zip(b0, b1):
        assert a.is_subset_of(b)
        assert b.width <= a.width + 1e-13  # [TRIVIAL]


def test_step_accumulates_e():
    # x' = x from 1 to t=1 in validated steps encloses e.  [DERIVED]
    f = LinearTaylorField(IMatrix.from_floats([[1.0]]))
    e0 = FlowEnclosure.from_box(IVector.from_floats([1.0]))
    e1 = integrate_to_time(f, e0, 1.0, order=15, tol=1e-16)
    assert math.e in e1.as_box()[0]
    assert e1.as_box()[0].width < 1e-10
    assert 1.0 in e1.time and e1.time.width < 1e-13


def test_step_harmonic_closed_form():
    e0 = FlowEnclosure.from_box(IVector.from_floats([1.0, 0.0]))
    e1 = integrate_to_time(harmonic(), e0, 2.0, order=15, tol=1e-15)
    b = e1.as_box()
    assert math.cos(2.0) in b[0]
    assert -math.sin(2.0) in b[1]
    assert b.max_width() < 1e-9  # [DERIVED]


def test_step_rejects_bad_h():
    with pytest.raises(ValueError):
        taylor_step(harmonic(), FlowEnclosure.from_box(IVector.from_floats([1.0, 0.0])), -0.1)


def test_containment_regression_rtbp():
    # Spec invariant: tightly integrated float points from inside the box
    # stay inside the validated enclosure at the matched time.  [DERIVED]
    scipy_integrate = pytest.importorskip("scipy.integrate")
    field = rtbp_field()
    mu = field.params.mu.mid
    r = 1e-9
    center = [-0.8, 0.1, 0.05, -0.7]
    box = IVector([Interval(c - r, c + r) for c in center])
    e1 = integrate_to_time(
        field, FlowEnclosure.from_box(box), 0.5, order=20, tol=1e-15
    )
    target = e1.as_box()
    rng = random.Random(3)
    for _ in range(20):
        pt = [c + rng.uniform(-r, r) for c in center]
        sol = scipy_integrate.solve_ivp(
            lambda t, y: vector_field_floats(y, mu),
            (0.0, 0.5),
            pt,
            rtol=1e-12,
            atol=1e-14,
            dense_output=True,
        )
        final = sol.y[:, -1]
        for i in range(4):
            assert target[i].lo <= final[i] <= target[i].hi


def test_energy_conserved_along_enclosure():
    # Jacobi integral enclosures at every step intersect the initial one.
    # [DERIVED: conservation oracle]
    field = rtbp_field()
    p = field.params
    x0 = IVector.from_floats([-0.8, 0.1, 0.05, -0.7])
    c0 = jacobi_constant(State.from_ivector(x0), p)
    seen = []

    def obs(enc, tube):
        seen.append(jacobi_constant(State.from_ivector(enc.as_box()), p))

    integrate_to_time(
        field, FlowEnclosure.from_box(x0), 1.0, order=20, tol=1e-14,
        observer=obs,
    )
    assert len(seen) >= 10
    for c in seen:
        assert c.intersects(c0)


def test_halving_recovers_from_large_h():
    # Spec invariant: step-size halving eventually succeeds away from the
    # primaries even when the initial step is hopeless.
    field = rtbp_field()
    e0 = FlowEnclosure.from_box(IVector.from_floats([-0.8, 0.1, 0.05, -0.7]))
    e1 = integrate_to_time(
        field, e0, 0.1, order=20, tol=1e-14, h_init=64.0, h_max=64.0
    )
    assert 0.1 in e1.time


# -- Poincare crossings -------------------------------------------------------------


def test_crossing_quarter_circle():
    # Rotation from (1,0) to {x=0}: image (0,-1), time pi/2.  [TRIVIAL]
    e0 = FlowEnclosure.from_box(IVector.from_floats([1.0, 0.0]))
    cr = poincare_crossing(harmonic(), e0, Section(0, 0.0, -1), order=15)
    b = cr.as_box()
    assert 0.0 in b[0] and b[0].width < 1e-300
    assert -1.0 in b[1] and b[1].width < 1e-9
    assert math.pi / 2 in cr.time and cr.time.width < 1e-9


def test_crossing_saddle_logarithmic_time():
    # x' = x, y' = -y from (eps, 1) to {y = eps}: time ln(1/eps), image
    # x = eps e^{t} = 1.  [DERIVED]
    eps = 0.01
    f = LinearTaylorField(IMatrix.from_floats([[1.0, 0.0], [0.0, -1.0]]))
    e0 = FlowEnclosure.from_box(IVector.from_floats([eps, 1.0]))
    cr = poincare_crossing(f, e0, Section(1, eps, -1), order=15, max_time=20.0)
    assert math.log(1.0 / eps) in cr.time
    assert cr.time.width < 1e-8
    b = cr.as_box()
    assert 1.0 in b[0] and b[0].width < 1e-8
    # exact on-section representation; as_box pads one ulp outward
    assert cr.midpoint[1] == eps and cr.remainder[1].width == 0.0
    assert eps in b[1] and b[1].width < 1e-16


def test_crossing_time_width_shrinks_under_subdivision():
    # Spec invariant: crossing time width is monotone under initial-set
    # subdivision.
    r = 1e-3
    full = IVector([Interval(1.0 - r, 1.0 + r), Interval(-r, r)])
    half = IVector([Interval(1.0 - r / 2, 1.0 + r / 2), Interval(-r / 2, r / 2)])
    sec = Section(0, 0.0, -1)
    t_full = poincare_crossing(
        harmonic(), FlowEnclosure.from_box(full), sec, order=15
    ).time
    t_half = poincare_crossing(
        harmonic(), FlowEnclosure.from_box(half), sec, order=15
    ).time
    assert t_half.width < t_full.width


def test_crossing_rtbp_hits_section():
    # Transport a small box near the periodic region down to {Y = 0} and
    # confirm the crossing is certified and on-section.
    field = rtbp_field()
    x0 = IVector.from_floats([-0.45, 0.05, 0.05, -0.55])
    f0 = field.vector_field(x0)
    assert f0[1].hi < 0.0  # heading toward Y = 0 already
    e0 = FlowEnclosure.from_box(x0)
    cr = poincare_crossing(
        field, e0, Section(1, 0.0, -1), order=18, tol=1e-14, max_time=5.0
    )
    b = cr.as_box()
    assert cr.midpoint[1] == 0.0 and cr.remainder[1].width == 0.0
    assert 0.0 in b[1] and b[1].width < 1e-300
    assert cr.time.lo > 0.0


def test_crossing_validation_errors():
    sec_bad = Section(0, 0.0, 1)  # wrong required sign for this start
    e0 = FlowEnclosure.from_box(IVector.from_floats([1.0, 0.0]))
    with pytest.raises(ValueError):
        poincare_crossing(harmonic(), e0, sec_bad, order=10)
    on_section = FlowEnclosure.from_box(IVector.from_floats([0.0, 1.0]))
    with pytest.raises(ValueError):
        poincare_crossing(harmonic(), on_section, Section(0, 0.0, -1), order=10)
    with pytest.raises(ValueError):
        Section(0, 0.0, 2)


def test_crossing_budget_exhaustion():
    # Circling forever above the section: no crossing within max_time.
    f = harmonic()
    e0 = FlowEnclosure.from_box(IVector.from_floats([0.0, 0.5]))
    # orbit radius 0.5 never reaches x = 2
    with pytest.raises(LostCrossing):
        poincare_crossing(f, e0, Section(0, 2.0, 1), order=10, max_time=3.0)


def test_crossing_tangency_is_refused():
    # Parabolic apex exactly on the section: grazing cannot be certified.
    f = AffineField([[0.0, 1.0], [0.0, 0.0]], [0.0, -1.0])
    # x(t) = -1 + t - t^2/2 has apex -0.5 at t=1
    e0 = FlowEnclosure.from_box(IVector.from_floats([-1.0, 1.0]))
    with pytest.raises((LostCrossing, TransversalityFailure)):
        poincare_crossing(
            f, e0, Section(0, -0.5, 1), order=10, max_time=3.0, h_min=1e-6
        )


def test_crossing_near_tangency_resolution():
    # Just below the apex the crossing is steep enough to resolve at h_min;
    # closer than the step resolution it must be refused, never
    # mis-certified.
    f = AffineField([[0.0, 1.0], [0.0, 0.0]], [0.0, -1.0])
    e0 = FlowEnclosure.from_box(IVector.from_floats([-1.0, 1.0]))
    off = 1e-12
    cr = poincare_crossing(
        f, e0, Section(0, -0.5 - off, 1), order=10, max_time=3.0, h_min=1e-6
    )
    assert 1.0 - math.sqrt(2.0 * off) in cr.time
    e1 = FlowEnclosure.from_box(IVector.from_floats([-1.0, 1.0]))
    with pytest.raises((TransversalityFailure, LostCrossing)):
        poincare_crossing(
            f,
            e1,
            Section(0, -0.5 - 1e-16, 1),
            order=10,
            max_time=3.0,
            h_min=1e-6,
        )


def test_crossing_past_apex_succeeds():
    # Well below the apex the same field crosses transversally.
    f = AffineField([[0.0, 1.0], [0.0, 0.0]], [0.0, -1.0])
    e0 = FlowEnclosure.from_box(IVector.from_floats([-1.0, 1.0]))
    cr = poincare_crossing(f, e0, Section(0, -0.9, 1), order=10, max_time=3.0)
    # x(t) = -0.9 at t = 1 - sqrt(0.8): first root of the parabola
    t_exact = 1.0 - math.sqrt(0.8)
    assert t_exact in cr.time
    assert cr.time.width < 1e-10


# -- representation and output -------------------------------------------------------


def test_flow_enclosure_round_trip():
    box = IVector([Interval(1.0, 1.5), Interval(-2.0, -1.0)])
    e = FlowEnclosure.from_box(box)
    back = e.as_box()
    assert box.is_subset_of(back)
    assert back.max_width() <= box.max_width() + 1e-14
    assert e.dim == 2
    assert 0.0 in e.time


def test_trajectory_csv(tmp_path):
    path = tmp_path / "orbit.csv"
    rows = []

    def obs(enc, tube):
        rows.append(enc)

    e0 = FlowEnclosure.from_box(IVector.from_floats([1.0, 0.0]))
    integrate_to_time(harmonic(), e0, 1.0, order=12, tol=1e-13, observer=obs)
    write_trajectory_csv(path, rows)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["t_lo", "t_hi", "x0_lo", "x0_hi", "x1_lo", "x1_hi"]
    assert len(data) == len(rows) + 1
    last_t = 0.0
    for row in data[1:]:
        vals = [float(x) for x in row]
        assert vals[0] <= vals[1]
        assert vals[2] <= vals[3] and vals[4] <= vals[5]
        assert vals[0] >= last_t
        last_t = vals[0]
    with pytest.raises(ValueError):
        write_trajectory_csv(tmp_path / "empty.csv", [])
