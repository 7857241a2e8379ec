"""Planar circular restricted three-body problem, Hamiltonian form.

Rotating frame, primaries of mass 1 - mu at (mu, 0) and mu at (mu - 1, 0),
positions (X, Y) and momenta P_X = X' - Y, P_Y = Y' + X:

  H = (P_X^2 + P_Y^2) / 2 + Y P_X - X P_Y - (1 - mu) / r1 - mu / r2
  X'   = P_X + Y
  Y'   = P_Y - X
  P_X' = P_Y - (1 - mu) d1 / r1^3 - mu d2 / r2^3
  P_Y' = -P_X - Y ((1 - mu) / r1^3 + mu / r2^3)

with d1 = X - mu, d2 = X - mu + 1, r_i^2 = d_i^2 + Y^2.  Everything here
is interval arithmetic unless the name says floats.

The module also builds the local chart at the interior collinear
libration point: a verified linear change C putting the linearization
into the Jordan form diag(lambda, -lambda, rot(v)), composed with a cubic
polynomial change psi that straightens the unstable direction.  The local
vector field and its Jacobian are obtained through verified linear solves
against D(Phi), never by inverting Phi.
"""

from __future__ import annotations

from dataclasses import dataclass

from .interval import (
    Box,
    IMatrix,
    Interval,
    IVector,
    idot,
    sq,
    sqrt,
)
from .linalg import (
    interval_newton,
    solve_interval_linear,
    solve_interval_linear_cols,
)

__all__ = [
    "CollisionSingularity",
    "ChartError",
    "RtbpParams",
    "State",
    "LocalChart",
    "K_COEFFS",
    "hamiltonian",
    "jacobi_constant",
    "vector_field",
    "jacobian",
    "hessians",
    "vector_field_floats",
    "jacobian_floats",
    "libration_L1",
    "jordan_basis",
    "jordan_residual",
    "psi",
    "dpsi",
    "d2psi",
    "total_change",
    "d_total_change",
    "d2_total_change",
    "local_field",
    "local_jacobian",
    "symmetry_S",
    "RtbpTaylorField",
    "RtbpSolutionSeries",
]


class CollisionSingularity(ArithmeticError):
    """A distance enclosure to one of the primaries reached zero."""


class ChartError(RuntimeError):
    """Chart construction failed its internal verification."""


@dataclass(frozen=True)
class RtbpParams:
    """Mass parameter enclosure; mu is the smaller primary's mass."""

    mu: Interval

    def __post_init__(self):
        if not (0.0 < self.mu.lo <= self.mu.hi < 1.0):
            raise ValueError("mu must lie strictly inside (0, 1)")

    @classmethod
    def from_float(cls, mu: float) -> "RtbpParams":
        return cls(Interval(mu))


@dataclass(frozen=True)
class State:
    X: Interval
    Y: Interval
    P_X: Interval
    P_Y: Interval

    @classmethod
    def from_floats(cls, x, y, px, py) -> "State":
        return cls(Interval(x), Interval(y), Interval(px), Interval(py))

    @classmethod
    def from_ivector(cls, v: IVector) -> "State":
        return cls(v[0], v[1], v[2], v[3])

    def as_ivector(self) -> IVector:
        return IVector([self.X, self.Y, self.P_X, self.P_Y])


def _coerce(s) -> tuple:
    if isinstance(s, State):
        return (s.X, s.Y, s.P_X, s.P_Y)
    if isinstance(s, IVector):
        comps = tuple(s.c)
    else:
        comps = tuple(
            x if isinstance(x, Interval) else Interval(float(x)) for x in s
        )
    if len(comps) != 4:
        raise ValueError("state needs four components")
    return comps


def _distance_squares(x: Interval, y: Interval, mu: Interval):
    d1 = x - mu
    d2 = d1 + 1.0
    ysq = sq(y)
    s1 = sq(d1) + ysq
    s2 = sq(d2) + ysq
    if s1.lo <= 0.0 or s2.lo <= 0.0:
        raise CollisionSingularity(
            f"distance enclosure touches a primary: r1^2={s1}, r2^2={s2}"
        )
    return d1, d2, s1, s2


def hamiltonian(s, p: RtbpParams) -> Interval:
    x, y, px, py = _coerce(s)
    mu = p.mu
    d1, d2, s1, s2 = _distance_squares(x, y, mu)
    kinetic = (sq(px) + sq(py)) * 0.5 + y * px - x * py
    return kinetic - (1.0 - mu) / sqrt(s1) - mu / sqrt(s2)


def jacobi_constant(s, p: RtbpParams) -> Interval:
    """Jacobi integral C = 2 Omega - (X'^2 + Y'^2).

    Written through Omega and velocities, not through H, so that the
    identity H = -C/2 is a genuine cross-check of both routes.
    """
    x, y, px, py = _coerce(s)
    mu = p.mu
    d1, d2, s1, s2 = _distance_squares(x, y, mu)
    omega = (sq(x) + sq(y)) * 0.5 + (1.0 - mu) / sqrt(s1) + mu / sqrt(s2)
    xdot = px + y
    ydot = py - x
    return omega * 2.0 - sq(xdot) - sq(ydot)


def _inv_r3(s: Interval) -> Interval:
    # s = r^2, returns r^-3 = 1 / (s sqrt(s))
    return 1.0 / (s * sqrt(s))


def vector_field(s, p: RtbpParams) -> IVector:
    x, y, px, py = _coerce(s)
    mu = p.mu
    m1 = 1.0 - mu
    d1, d2, s1, s2 = _distance_squares(x, y, mu)
    w1 = _inv_r3(s1)
    w2 = _inv_r3(s2)
    return IVector(
        [
            px + y,
            py - x,
            py - m1 * (d1 * w1) - mu * (d2 * w2),
            -px - y * (m1 * w1 + mu * w2),
        ]
    )


def _second_partials(d1, d2, s1, s2, y, mu):
    """Omega_XX, Omega_XY, Omega_YY of the gradient part of the field."""
    m1 = 1.0 - mu
    w1, w2 = _inv_r3(s1), _inv_r3(s2)
    v1, v2 = w1 / s1, w2 / s2
    ysq = sq(y)
    uxx = m1 * (w1 - 3.0 * (sq(d1) * v1)) + mu * (w2 - 3.0 * (sq(d2) * v2))
    uxy = (m1 * (d1 * v1) + mu * (d2 * v2)) * y * (-3.0)
    uyy = m1 * (w1 - 3.0 * (ysq * v1)) + mu * (w2 - 3.0 * (ysq * v2))
    return uxx, uxy, uyy


def jacobian(s, p: RtbpParams) -> IMatrix:
    x, y, px, py = _coerce(s)
    mu = p.mu
    d1, d2, s1, s2 = _distance_squares(x, y, mu)
    uxx, uxy, uyy = _second_partials(d1, d2, s1, s2, y, mu)
    z = Interval(0.0)
    one = Interval(1.0)
    return IMatrix(
        [
            [z, one, one, z],
            [-one, z, z, one],
            [-uxx, -uxy, z, one],
            [-uxy, -uyy, -one, z],
        ]
    )


def hessians(s, p: RtbpParams) -> list:
    """Hessians of the four field components; rows 0, 1 are linear.

    Third partials of Omega with z = r^-7:
      Omega_XXX = sum m (-9 d v + 15 d^3 z)
      Omega_XXY = sum m (-3 Y v + 15 d^2 Y z)
      Omega_XYY = sum m (-3 d v + 15 d Y^2 z)
      Omega_YYY = sum m (-9 Y v + 15 Y^3 z)
    """
    x, y, px, py = _coerce(s)
    mu = p.mu
    m1 = 1.0 - mu
    d1, d2, s1, s2 = _distance_squares(x, y, mu)
    ysq = sq(y)
    zero = Interval(0.0)
    uxxx = uxxy = uxyy = uyyy = zero
    for m, d, ssq in ((m1, d1, s1), (mu, d2, s2)):
        w = _inv_r3(ssq)
        v = w / ssq
        zz = v / ssq
        dsq = sq(d)
        uxxx = uxxx + m * (d * v * (-9.0) + d * dsq * zz * 15.0)
        uxxy = uxxy + m * (y * v * (-3.0) + dsq * y * zz * 15.0)
        uxyy = uxyy + m * (d * v * (-3.0) + d * ysq * zz * 15.0)
        uyyy = uyyy + m * (y * v * (-9.0) + y * ysq * zz * 15.0)
    zmat = IMatrix([[zero] * 4 for _ in range(4)])
    h2 = IMatrix(
        [
            [-uxxx, -uxxy, zero, zero],
            [-uxxy, -uxyy, zero, zero],
            [zero, zero, zero, zero],
            [zero, zero, zero, zero],
        ]
    )
    h3 = IMatrix(
        [
            [-uxxy, -uxyy, zero, zero],
            [-uxyy, -uyyy, zero, zero],
            [zero, zero, zero, zero],
            [zero, zero, zero, zero],
        ]
    )
    return [zmat, zmat, h2, h3]


def vector_field_floats(x, mu: float) -> tuple:
    """Double precision twin for non-rigorous guesses and oracles."""
    X, Y, PX, PY = (float(c) for c in x)
    d1 = X - mu
    d2 = d1 + 1.0
    s1 = d1 * d1 + Y * Y
    s2 = d2 * d2 + Y * Y
    w1 = s1 ** -1.5
    w2 = s2 ** -1.5
    m1 = 1.0 - mu
    return (
        PX + Y,
        PY - X,
        PY - m1 * d1 * w1 - mu * d2 * w2,
        -PX - Y * (m1 * w1 + mu * w2),
    )


def jacobian_floats(x, mu: float) -> list:
    X, Y, PX, PY = (float(c) for c in x)
    d1 = X - mu
    d2 = d1 + 1.0
    s1 = d1 * d1 + Y * Y
    s2 = d2 * d2 + Y * Y
    m1 = 1.0 - mu
    w1, w2 = s1 ** -1.5, s2 ** -1.5
    v1, v2 = s1 ** -2.5, s2 ** -2.5
    uxx = m1 * (w1 - 3.0 * d1 * d1 * v1) + mu * (w2 - 3.0 * d2 * d2 * v2)
    uxy = -3.0 * Y * (m1 * d1 * v1 + mu * d2 * v2)
    uyy = m1 * (w1 - 3.0 * Y * Y * v1) + mu * (w2 - 3.0 * Y * Y * v2)
    return [
        [0.0, 1.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0, 1.0],
        [-uxx, -uxy, 0.0, 1.0],
        [-uxy, -uyy, -1.0, 0.0],
    ]


# -- libration point ----------------------------------------------------------


def _l1_equation(x: Interval, mu: Interval) -> Interval:
    # collinear equilibrium between the primaries: mu - 1 < x < mu
    return x + (1.0 - mu) / sq(mu - x) - mu / sq(x - mu + 1.0)


def _l1_derivative(x: Interval, mu: Interval) -> Interval:
    a = mu - x
    b = x - mu + 1.0
    return 1.0 + ((1.0 - mu) * 2.0) / (sq(a) * a) + (mu * 2.0) / (sq(b) * b)


def _l1_equation_float(x: float, mu: float) -> float:
    return x + (1.0 - mu) / (mu - x) ** 2 - mu / (x - mu + 1.0) ** 2


def libration_L1(p: RtbpParams) -> IVector:
    """Enclosure of the interior collinear point (x, 0, 0, x).

    The momentum convention puts P_Y = x at the equilibrium.  The X
    coordinate is verified by interval Newton; the equation is strictly
    increasing between the primaries so the root is simple.
    """
    mu_mid = p.mu.mid
    lo, hi = mu_mid - 1.0 + 1e-9, mu_mid - 1e-9
    flo = _l1_equation_float(lo, mu_mid)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _l1_equation_float(mid, mu_mid)
        if (flo < 0.0) == (fm < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 4e-16 * abs(lo):
            break
    guess = 0.5 * (lo + hi)
    pad = max(1e-8, 1e4 * p.mu.width)
    box = IVector([Interval(guess - pad, guess + pad)])

    def f(b: Box) -> IVector:
        return IVector([_l1_equation(b[0], p.mu)])

    def df(b: Box) -> IMatrix:
        return IMatrix([[_l1_derivative(b[0], p.mu)]])

    result = interval_newton(f, df, box, x0=[guess])
    if result.verdict != "UniqueRoot":
        raise ChartError(f"L1 enclosure failed: {result.verdict}")
    x = result.root_box[0]
    zero = Interval(0.0)
    return IVector([x, zero, zero, x])


# -- Jordan-form linear chart --------------------------------------------------


K_COEFFS = (
    (),
    (-0.4426997319120566, 0.2117307906593041),
    (0.7204702544171099, -0.2077414984788253),
    (0.6096754412253178, -1.6248371332133488),
)
"""Quadratic and cubic coefficients (a2, a3) of the polynomial part of the
unstable-direction parameterization K_1..K_3; K_0(x) = x.  Numerically
obtained for the homoclinic mass-parameter band and shared across it."""


@dataclass(frozen=True)
class LocalChart:
    """Verified chart data at L1 for one mass-parameter enclosure."""

    mu: Interval
    L1: IVector
    C: IMatrix
    lam: Interval
    v: Interval
    gamma: Interval
    c2: Interval
    s1: Interval
    s2: Interval
    K_coeffs: tuple = K_COEFFS

    def to_json(self) -> dict:
        return {
            "mu": self.mu.to_json(),
            "L1": self.L1.to_json(),
            "C": self.C.to_json(),
            "lambda": self.lam.to_json(),
            "v": self.v.to_json(),
            "gamma": self.gamma.to_json(),
            "c2": self.c2.to_json(),
            "s1": self.s1.to_json(),
            "s2": self.s2.to_json(),
            "K_coeffs": [list(k) for k in self.K_coeffs],
        }


def _quadratic_factor(w: Interval, c2: Interval) -> Interval:
    # lambda^2 and -v^2 solve w^2 + (2 - c2) w + (1 + c2 - 2 c2^2) = 0
    return sq(w) + (2.0 - c2) * w + (1.0 + c2 - (sq(c2) * 2.0))


def _quadratic_factor_d(w: Interval, c2: Interval) -> Interval:
    return w * 2.0 + (2.0 - c2)


def _certify_quadratic_root(guess: float, c2: Interval) -> Interval:
    box = IVector([Interval(guess - 1e-5, guess + 1e-5)])

    def f(b: Box) -> IVector:
        return IVector([_quadratic_factor(b[0], c2)])

    def df(b: Box) -> IMatrix:
        return IMatrix([[_quadratic_factor_d(b[0], c2)]])

    result = interval_newton(f, df, box, x0=[guess])
    if result.verdict != "UniqueRoot":
        raise ChartError(f"eigenvalue factor root failed: {result.verdict}")
    return result.root_box[0]


_JORDAN_PATTERN = {(0, 0): "lam", (1, 1): "-lam", (2, 3): "v", (3, 2): "-v"}


def jordan_residual(chart: LocalChart, p: RtbpParams) -> IMatrix:
    """(C)^-1 DF(L1) C minus the Jordan pattern; all entries contain 0
    for a valid chart."""
    dfl = jacobian(chart.L1, p)
    r = solve_interval_linear_cols(chart.C, dfl.matmul(chart.C))
    rows = [list(r.row(i)) for i in range(4)]
    for (i, j), name in _JORDAN_PATTERN.items():
        val = {
            "lam": chart.lam,
            "-lam": -chart.lam,
            "v": chart.v,
            "-v": -chart.v,
        }[name]
        rows[i][j] = rows[i][j] - val
    return IMatrix(rows)


def jordan_basis(p: RtbpParams) -> LocalChart:
    """Build the verified linear chart at L1.

    gamma is the distance from L1 to the smaller primary, c2 the standard
    collinear-point coefficient; lambda and v come from the quadratic
    factor of the characteristic polynomial, certified by interval
    Newton.  The assembled chart is rejected unless the Jordan residual
    encloses zero.
    """
    l1 = libration_L1(p)
    mu = p.mu
    x = l1[0]
    gamma = x + 1.0 - mu
    g3 = sq(gamma) * gamma
    c2 = (mu + (1.0 - mu) * g3 / _cube(1.0 - gamma)) / g3
    c2m = c2.mid
    disc = (2.0 - c2m) ** 2 - 4.0 * (1.0 + c2m - 2.0 * c2m * c2m)
    root = disc**0.5
    w_plus = 0.5 * (c2m - 2.0 + root)
    w_minus = 0.5 * (c2m - 2.0 - root)
    wp = _certify_quadratic_root(w_plus, c2)
    wm = _certify_quadratic_root(w_minus, c2)
    if wp.lo <= 0.0 or wm.hi >= 0.0:
        raise ChartError("eigenvalue factor roots have unexpected signs")
    lam = sqrt(wp)
    v = sqrt(-wm)

    lam2 = sq(lam)
    lam3 = lam2 * lam
    v2 = sq(v)
    v3 = v2 * v
    four3c2 = 4.0 + c2 * 3.0
    s1_arg = (lam * 2.0) * (four3c2 * lam2 + 4.0 + c2 * 5.0 - sq(c2) * 6.0)
    s2_arg = v * (four3c2 * v2 - 4.0 - c2 * 5.0 + sq(c2) * 6.0)
    if s1_arg.lo <= 0.0 or s2_arg.lo <= 0.0:
        raise ChartError("normalization under the square roots not positive")
    s1 = sqrt(s1_arg)
    s2 = sqrt(s2_arg)

    two_c2_1 = c2 * 2.0 + 1.0
    col0 = [
        lam * 2.0 / s1,
        (lam2 - two_c2_1) / s1,
        (lam2 + two_c2_1) / s1,
        (lam3 + (1.0 - c2 * 2.0) * lam) / s1,
    ]
    col1 = [-col0[0], col0[1], col0[2], -col0[3]]
    zero = Interval(0.0)
    col2 = [
        zero,
        (-v2 - two_c2_1) / s2,
        (-v2 + two_c2_1) / s2,
        zero,
    ]
    col3 = [
        v * 2.0 / s2,
        zero,
        zero,
        (-v3 + (1.0 - c2 * 2.0) * v) / s2,
    ]
    cols = (col0, col1, col2, col3)
    c_mat = IMatrix([[cols[j][i] for j in range(4)] for i in range(4)])

    chart = LocalChart(
        mu=mu, L1=l1, C=c_mat, lam=lam, v=v, gamma=gamma, c2=c2, s1=s1, s2=s2
    )
    residual = jordan_residual(chart, p)
    for i in range(4):
        for j in range(4):
            if 0.0 not in residual.rows[i][j]:
                raise ChartError(
                    f"Jordan residual entry ({i},{j}) excludes zero: "
                    f"{residual.rows[i][j]}"
                )
    return chart


def _cube(x: Interval) -> Interval:
    return sq(x) * x


# -- nonlinear chart -----------------------------------------------------------


def _k_val(i: int, x: Interval) -> Interval:
    a2, a3 = K_COEFFS[i]
    return sq(x) * (a2 + x * a3)


def _k_prime(i: int, x: Interval) -> Interval:
    a2, a3 = K_COEFFS[i]
    return x * (2.0 * a2 + x * (3.0 * a3))


def _k_second(i: int, x: Interval) -> Interval:
    a2, a3 = K_COEFFS[i]
    return x * (6.0 * a3) + 2.0 * a2


def psi(q: IVector) -> IVector:
    """psi_0 = x - sum y_i K_i'(x); psi_i = K_i(x) + y_i (K_0' = 1)."""
    x = q[0]
    ys = (q[1], q[2], q[3])
    head = x - (
        ys[0] * _k_prime(1, x) + ys[1] * _k_prime(2, x) + ys[2] * _k_prime(3, x)
    )
    return IVector(
        [head, _k_val(1, x) + ys[0], _k_val(2, x) + ys[1], _k_val(3, x) + ys[2]]
    )


def dpsi(q: IVector) -> IMatrix:
    x = q[0]
    ys = (q[1], q[2], q[3])
    zero = Interval(0.0)
    one = Interval(1.0)
    d00 = 1.0 - (
        ys[0] * _k_second(1, x)
        + ys[1] * _k_second(2, x)
        + ys[2] * _k_second(3, x)
    )
    return IMatrix(
        [
            [d00, -_k_prime(1, x), -_k_prime(2, x), -_k_prime(3, x)],
            [_k_prime(1, x), one, zero, zero],
            [_k_prime(2, x), zero, one, zero],
            [_k_prime(3, x), zero, zero, one],
        ]
    )


def d2psi(q: IVector) -> list:
    """Hessians of the four psi components; K_i''' = 6 a3 is constant."""
    x = q[0]
    ys = (q[1], q[2], q[3])
    zero = Interval(0.0)
    h = []
    d2_head_xx = -(
        ys[0] * (6.0 * K_COEFFS[1][1])
        + ys[1] * (6.0 * K_COEFFS[2][1])
        + ys[2] * (6.0 * K_COEFFS[3][1])
    )
    row0 = [d2_head_xx, -_k_second(1, x), -_k_second(2, x), -_k_second(3, x)]
    h.append(
        IMatrix(
            [
                row0,
                [row0[1], zero, zero, zero],
                [row0[2], zero, zero, zero],
                [row0[3], zero, zero, zero],
            ]
        )
    )
    for i in (1, 2, 3):
        rows = [[zero] * 4 for _ in range(4)]
        rows[0][0] = _k_second(i, x)
        h.append(IMatrix(rows))
    return h


def total_change(q: IVector, chart: LocalChart) -> IVector:
    """Phi(q) = L1 + C psi(q), from local to original coordinates."""
    return chart.L1 + chart.C.matvec(psi(q))


def d_total_change(q: IVector, chart: LocalChart) -> IMatrix:
    return chart.C.matmul(dpsi(q))


def d2_total_change(q: IVector, chart: LocalChart) -> list:
    hs = d2psi(q)
    out = []
    for a in range(4):
        acc = hs[0].scale(chart.C.rows[a][0])
        for b in (1, 2, 3):
            acc = acc + hs[b].scale(chart.C.rows[a][b])
        out.append(acc)
    return out


def local_field(q: IVector, chart: LocalChart, p: RtbpParams) -> IVector:
    """F_hat(q) through the verified solve D(Phi) F_hat = F(Phi(q))."""
    x = total_change(q, chart)
    return solve_interval_linear(d_total_change(q, chart), vector_field(x, p))


def local_jacobian(
    q: IVector, chart: LocalChart, p: RtbpParams, fhat: IVector | None = None
) -> IMatrix:
    """DF_hat(q) = D(Phi)^-1 (DF(Phi) D(Phi) - D^2(Phi) F_hat).

    The tensor is applied to F_hat first; the outer inverse is a verified
    columnwise solve.
    """
    x = total_change(q, chart)
    dphi = d_total_change(q, chart)
    if fhat is None:
        fhat = solve_interval_linear(dphi, vector_field(x, p))
    d2phi = d2_total_change(q, chart)
    tensor_rows = [list(d2phi[a].matvec(fhat)) for a in range(4)]
    rhs = jacobian(x, p).matmul(dphi) - IMatrix(tensor_rows)
    return solve_interval_linear_cols(dphi, rhs)


def symmetry_S(s):
    """(X, Y, P_X, P_Y) -> (X, -Y, -P_X, P_Y); conjugates the flow to its
    time reversal."""
    x, y, px, py = _coerce(s)
    if isinstance(s, State):
        return State(x, -y, -px, py)
    return IVector([x, -y, -px, py])


# -- Taylor series recurrences --------------------------------------------------


def _conv(a: list, b: list, k: int) -> Interval:
    """sum_{j=0..k} a[j] b[k-j]."""
    return idot(a[: k + 1], b[k::-1])


def _power_next(s: list, pw: list, a: float, k: int) -> Interval:
    """Coefficient k of P = S^a given p[0..k-1]; k >= 1.

    k s0 p_k = sum_{j<k} (a (k - j) - j) s_{k-j} p_j.
    """
    terms = [s[k - j] * (a * (k - j) - j) for j in range(k)]
    num = idot(terms, pw[:k])
    return num / (s[0] * float(k))


class RtbpSolutionSeries:
    """Taylor coefficients of one solution, with cached auxiliary series.

    u[i][k] is the k-th coefficient of coordinate i.  The distance and
    inverse-power series are kept for the variational recurrence.
    """

    __slots__ = (
        "u",
        "d1",
        "d2",
        "y2",
        "d1sq",
        "d2sq",
        "s1",
        "s2",
        "w1",
        "w2",
        "order",
        "mu",
        "sign",
    )

    def __init__(self, u0: IVector, mu: Interval, sign: float):
        x, y, px, py = _coerce(u0)
        self.u = [[x], [y], [px], [py]]
        self.mu = mu
        self.sign = sign
        self.order = 0
        d1 = x - mu
        d2 = d1 + 1.0
        self.d1 = [d1]
        self.d2 = [d2]
        self.y2 = [sq(y)]
        self.d1sq = [sq(d1)]
        self.d2sq = [sq(d2)]
        s1 = self.d1sq[0] + self.y2[0]
        s2 = self.d2sq[0] + self.y2[0]
        if s1.lo <= 0.0 or s2.lo <= 0.0:
            raise CollisionSingularity(
                f"distance enclosure touches a primary: r1^2={s1}, r2^2={s2}"
            )
        self.s1 = [s1]
        self.s2 = [s2]
        self.w1 = [_inv_r3(s1)]
        self.w2 = [_inv_r3(s2)]

    def extend(self) -> None:
        """Append coefficient order+1 to every series."""
        k = self.order
        u = self.u
        mu = self.mu
        m1 = 1.0 - mu
        d1w1 = _conv(self.d1, self.w1, k)
        d2w2 = _conv(self.d2, self.w2, k)
        yw1 = _conv(u[1], self.w1, k)
        yw2 = _conv(u[1], self.w2, k)
        f0 = u[2][k] + u[1][k]
        f1 = u[3][k] - u[0][k]
        f2 = u[3][k] - m1 * d1w1 - mu * d2w2
        f3 = -u[2][k] - (m1 * yw1 + mu * yw2)
        factor = self.sign / (k + 1.0)
        u[0].append(f0 * factor)
        u[1].append(f1 * factor)
        u[2].append(f2 * factor)
        u[3].append(f3 * factor)
        self.order = k + 1
        kk = k + 1
        self.d1.append(u[0][kk])
        self.d2.append(u[0][kk])
        self.y2.append(_conv(u[1], u[1], kk))
        self.d1sq.append(_conv(self.d1, self.d1, kk))
        self.d2sq.append(_conv(self.d2, self.d2, kk))
        self.s1.append(self.d1sq[kk] + self.y2[kk])
        self.s2.append(self.d2sq[kk] + self.y2[kk])
        self.w1.append(_power_next(self.s1, self.w1, -1.5, kk))
        self.w2.append(_power_next(self.s2, self.w2, -1.5, kk))

    def coefficient(self, k: int) -> IVector:
        return IVector([self.u[i][k] for i in range(4)])

    def second_partial_series(self, upto: int) -> tuple:
        """Series of Omega_XX, Omega_XY, Omega_YY up to index upto."""
        mu = self.mu
        m1 = 1.0 - mu
        v1 = [self.w1[0] / self.s1[0]]
        v2 = [self.w2[0] / self.s2[0]]
        for k in range(1, upto + 1):
            v1.append(_power_next(self.s1, v1, -2.5, k))
            v2.append(_power_next(self.s2, v2, -2.5, k))
        uxx, uxy, uyy = [], [], []
        d1v1 = []
        d2v2 = []
        for k in range(upto + 1):
            a1 = _conv(self.d1sq, v1, k)
            a2 = _conv(self.d2sq, v2, k)
            uxx.append(
                m1 * (self.w1[k] - a1 * 3.0) + mu * (self.w2[k] - a2 * 3.0)
            )
            d1v1.append(_conv(self.d1, v1, k))
            d2v2.append(_conv(self.d2, v2, k))
            c1 = _conv(self.y2, v1, k)
            c2 = _conv(self.y2, v2, k)
            uyy.append(
                m1 * (self.w1[k] - c1 * 3.0) + mu * (self.w2[k] - c2 * 3.0)
            )
        mix = [m1 * d1v1[k] + mu * d2v2[k] for k in range(upto + 1)]
        for k in range(upto + 1):
            uxy.append(_conv(self.u[1], mix, k) * (-3.0))
        return uxx, uxy, uyy


class RtbpTaylorField:
    """Taylor-coefficient machinery the validated integrator drives.

    expand() produces the solution series from an interval initial
    condition; expand_variational() the series of the variational matrix
    along it.  reverse=True expands the series of the time-reversed
    field.
    """

    dim = 4

    def __init__(self, params: RtbpParams, reverse: bool = False):
        self.params = params
        self.reverse = reverse
        self.sign = -1.0 if reverse else 1.0

    def vector_field(self, x) -> IVector:
        f = vector_field(x, self.params)
        return -f if self.reverse else f

    def jacobian(self, x) -> IMatrix:
        j = jacobian(x, self.params)
        return -j if self.reverse else j

    def hessians(self, x) -> list:
        hs = hessians(x, self.params)
        return [-h for h in hs] if self.reverse else hs

    def expand(self, u0, order: int) -> RtbpSolutionSeries:
        series = RtbpSolutionSeries(u0, self.params.mu, self.sign)
        for _ in range(order):
            series.extend()
        return series

    def expand_variational(
        self, sol: RtbpSolutionSeries, v0: IMatrix, order: int
    ) -> list:
        """Coefficients V_0..V_order of V' = DF(u(t)) V, V_0 given."""
        if order > sol.order:
            raise ValueError("solution series too short for this order")
        uxx, uxy, uyy = sol.second_partial_series(max(order - 1, 0))
        v = [[[v0.rows[i][j]] for j in range(4)] for i in range(4)]
        sign = sol.sign
        for k in range(order):
            factor = sign / (k + 1.0)
            for j in range(4):
                c0 = v[0][j]
                c1 = v[1][j]
                c2 = v[2][j]
                c3 = v[3][j]
                r0 = c1[k] + c2[k]
                r1 = -c0[k] + c3[k]
                r2 = -_conv(uxx, c0, k) - _conv(uxy, c1, k) + c3[k]
                r3 = -_conv(uxy, c0, k) - _conv(uyy, c1, k) - c2[k]
                c0.append(r0 * factor)
                c1.append(r1 * factor)
                c2.append(r2 * factor)
                c3.append(r3 * factor)
        return [
            IMatrix([[v[i][j][k] for j in range(4)] for i in range(4)])
            for k in range(order + 1)
        ]
