"""Verified linear algebra: interval linear solves, positive definiteness,
and the interval Newton operator.

Every routine returns enclosures or verdicts that remain valid for all point
selections inside the interval inputs.  Floating-point preconditioners come
from numpy; soundness never depends on them, only enclosure quality does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interval import (
    Box,
    IMatrix,
    Interval,
    IVector,
    box_intersect,
    mat_opnorm_upper,
    sq,
    sqrt,
    vec_norm_sup,
)

__all__ = [
    "SingularEnclosure",
    "PDVerdict",
    "NewtonResult",
    "solve_interval_linear",
    "solve_interval_linear_cols",
    "verified_inverse",
    "is_positive_definite",
    "interval_newton",
]


class SingularEnclosure(ArithmeticError):
    """The interval matrix could not be verified invertible."""


@dataclass(frozen=True)
class PDVerdict:
    """Outcome of a positive definiteness check.

    verified False means inconclusive, never a claim of indefiniteness.
    margin is a lower bound on the quantity that had to stay positive
    (Cholesky pivots, or preconditioned Gershgorin disc left ends).
    """

    verified: bool
    method: str
    margin: float


@dataclass(frozen=True)
class NewtonResult:
    """Interval Newton outcome.

    UniqueRoot: exactly one zero in the returned root_box (subset of X).
    NoRoot: no zero anywhere in X, root_box is None.
    Inconclusive: no conclusion; root_box is the best remaining candidate.
    """

    verdict: str
    root_box: Box | None
    iterations: int = 0


def _precondition(a: IMatrix) -> tuple[np.ndarray, IMatrix, float]:
    """Midpoint inverse Y, interval defect E = I - Y a, and an upper bound
    on ||E||.  Raises SingularEnclosure when no contraction is certified."""
    n, m = a.shape
    if n != m:
        raise ValueError("square matrix required")
    mid = np.array(a.mid(), dtype=float)
    try:
        y = np.linalg.inv(mid)
    except np.linalg.LinAlgError as e:
        raise SingularEnclosure("midpoint matrix not invertible") from e
    if not np.all(np.isfinite(y)):
        raise SingularEnclosure("midpoint inverse overflowed")
    ym = IMatrix.from_floats(y.tolist())
    e = IMatrix.identity(n) - ym.matmul(a)
    rho = mat_opnorm_upper(e)
    if not rho < 1.0:
        raise SingularEnclosure(f"defect norm {rho} >= 1, inversion unverified")
    return y, e, rho


def solve_interval_linear(a: IMatrix, b: IVector) -> IVector:
    """Enclosure of {x : A x = v, A in a, v in b} via the Krawczyk step
    with midpoint preconditioning.

    Raises SingularEnclosure when invertibility cannot be certified.  The
    returned box contains the solution for every selection, which also proves
    each such selection of A is invertible on the relevant right-hand sides.
    """
    y, e, rho = _precondition(a)
    n = a.shape[0]
    xhat = y @ np.array(b.mid(), dtype=float)
    xhat_iv = IVector.from_floats(xhat.tolist())
    ym = IMatrix.from_floats(y.tolist())
    # r0 = Y (b - A xhat): residual pushed through the preconditioner.
    r0 = ym.matvec(b - a.matvec(xhat_iv))
    r0_norm = vec_norm_sup(r0).hi
    bound = r0_norm / (1.0 - rho)
    bound = np.nextafter(bound, np.inf)
    ball = IVector([Interval(-bound, bound) for _ in range(n)])
    enclosure = xhat_iv + r0 + e.matvec(ball)
    # Two tightening sweeps of the contraction x -> xhat + r0 + E (x - xhat).
    for _ in range(2):
        refined = xhat_iv + r0 + e.matvec(enclosure - xhat_iv)
        inter = box_intersect(refined, enclosure)
        if inter is None:  # pragma: no cover - contraction keeps them nested
            break
        enclosure = inter
    return enclosure


def solve_interval_linear_cols(a: IMatrix, b: IMatrix) -> IMatrix:
    """Columnwise solve A X = B sharing one preconditioning of A."""
    y, e, rho = _precondition(a)
    n = a.shape[0]
    ym = IMatrix.from_floats(y.tolist())
    cols = []
    for j in range(b.shape[1]):
        bj = IVector(b.col(j))
        xhat = y @ np.array(bj.mid(), dtype=float)
        xhat_iv = IVector.from_floats(xhat.tolist())
        r0 = ym.matvec(bj - a.matvec(xhat_iv))
        bound = np.nextafter(vec_norm_sup(r0).hi / (1.0 - rho), np.inf)
        ball = IVector([Interval(-bound, bound) for _ in range(n)])
        col = xhat_iv + r0 + e.matvec(ball)
        for _ in range(2):
            refined = xhat_iv + r0 + e.matvec(col - xhat_iv)
            inter = box_intersect(refined, col)
            if inter is None:  # pragma: no cover
                break
            col = inter
        cols.append(col)
    return IMatrix(
        [[cols[j][i] for j in range(len(cols))] for i in range(n)]
    )


def verified_inverse(a: IMatrix) -> IMatrix:
    """Interval enclosure of A^{-1} for every A in a."""
    return solve_interval_linear_cols(a, IMatrix.identity(a.shape[0]))


def _cholesky_verdict(m: IMatrix) -> PDVerdict:
    n = m.shape[0]
    low: list[list[Interval]] = [[Interval(0.0)] * n for _ in range(n)]
    margin = np.inf
    for j in range(n):
        d = m[j, j]
        for k in range(j):
            d = d - sq(low[j][k])
        if not d.lo > 0.0:
            return PDVerdict(False, "IntervalCholesky", d.lo)
        margin = min(margin, d.lo)
        ljj = sqrt(d)
        low[j][j] = ljj
        for i in range(j + 1, n):
            s = m[i, j]
            for k in range(j):
                s = s - low[i][k] * low[j][k]
            low[i][j] = s / ljj
    return PDVerdict(True, "IntervalCholesky", float(margin))


def _gershgorin_verdict(m: IMatrix) -> PDVerdict:
    n = m.shape[0]
    mid = np.array(m.mid(), dtype=float)
    mid = 0.5 * (mid + mid.T)
    try:
        lf = np.linalg.cholesky(mid)
        s = np.linalg.inv(lf)
    except np.linalg.LinAlgError:
        return PDVerdict(False, "Gershgorin", -np.inf)
    if not np.all(np.isfinite(s)):
        return PDVerdict(False, "Gershgorin", -np.inf)
    sm = IMatrix.from_floats(s.tolist())
    g = sm.matmul(m).matmul(sm.transpose())
    margin = np.inf
    for i in range(n):
        radius = 0.0
        for j in range(n):
            if j != i:
                radius = np.nextafter(radius + g[i, j].mag, np.inf)
        left = g[i, i].lo - radius
        margin = min(margin, left)
    return PDVerdict(bool(margin > 0.0), "Gershgorin", float(margin))


def is_positive_definite(m: IMatrix, method: str = "auto") -> PDVerdict:
    """Verify x^T M x > 0 for all x != 0 and every selection of M.

    The matrix is symmetrized first (the quadratic form only sees the
    symmetric part).  Interval Cholesky is attempted first; on failure the
    Gershgorin test after midpoint congruence preconditioning.  A False
    verdict is always inconclusive rather than a disproof.
    """
    msym = m.symmetrize()
    if method == "cholesky":
        return _cholesky_verdict(msym)
    if method == "gershgorin":
        return _gershgorin_verdict(msym)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    verdict = _cholesky_verdict(msym)
    if verdict.verified:
        return verdict
    fallback = _gershgorin_verdict(msym)
    return fallback if fallback.verified else verdict


def interval_newton(f, df, x: Box, x0=None, max_iter: int = 50) -> NewtonResult:
    """Interval Newton operator N(x0, X) = x0 - [Df(X)]^{-1} f(x0).

    N inside the interior of X proves a unique zero in N; N disjoint from X
    proves there is none.  On UniqueRoot the box is refined by re-applying
    the operator until the width improves by less than 1 percent per sweep
    or max_iter sweeps elapse.

    Parameters: f maps a Box to an IVector of enclosures, df maps a Box to
    an IMatrix enclosing every Jacobian over the box, x0 defaults to the
    midpoint and must lie in X.
    """
    current = x
    if x0 is None:
        x0 = current.mid()
    else:
        x0 = [float(v) for v in x0]
    if not current.contains(x0):
        raise ValueError("x0 outside X")

    def newton_image(box: Box, point: list[float]) -> Box | None:
        fx0 = f(IVector.from_floats(point))
        jac = df(box)
        delta = solve_interval_linear(jac, fx0)
        return IVector.from_floats(point) - delta

    try:
        image = newton_image(current, x0)
    except SingularEnclosure:
        return NewtonResult("Inconclusive", current, 0)

    inter = box_intersect(image, current)
    if inter is None:
        return NewtonResult("NoRoot", None, 1)
    if not image.strictly_inside(current):
        return NewtonResult("Inconclusive", inter, 1)

    # Unique zero certified; refine.
    current = inter
    iterations = 1
    while iterations < max_iter:
        prev_width = current.max_width()
        if prev_width == 0.0:
            break
        try:
            image = newton_image(current, current.mid())
        except SingularEnclosure:  # pragma: no cover - cannot resingularize
            break
        inter = box_intersect(image, current)
        if inter is None:  # pragma: no cover - root cannot vanish
            break
        current = inter
        iterations += 1
        if current.max_width() > 0.99 * prev_width:
            break
    return NewtonResult("UniqueRoot", current, iterations)
