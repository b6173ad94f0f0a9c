"""Metric, curvature operator on (1,1)-forms and scalar curvature at a radial point.

Everything is evaluated at z = (r, 0, ..., 0) with t = log r^2; rotational
symmetry makes this point representative of its whole sphere.  (1,1)-arrays
xi^{alpha beta-bar} are flattened row-major, index ``alpha * n + beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import eval_f, eval_g, eval_h, eval_L_scaled


class CurvatureError(RuntimeError):
    """Raised when the eigen-solver fails on a curvature-operator matrix."""


@dataclass(frozen=True)
class MetricAtRadius:
    """Metric components at the radial point and derivatives of the Ricci potential.

    ``ricci_potential_derivs`` holds the first three t-derivatives of
    ``f_R(t) = n t - (n-1) log phi - log phi'`` (so that Ric = i dd-bar f_R).
    ``field_coefficient`` is ``(f_R' + phi) / phi'``; the radial field it
    multiplies is holomorphic exactly when it is constant.
    """

    t: float
    g_radial: float
    g_tangent: float
    det_g: float
    ricci_potential_derivs: tuple
    field_coefficient: float

    def inverse(self):
        """Diagonal of the inverse metric at the radial point."""
        return 1.0 / self.g_radial, 1.0 / self.g_tangent


@dataclass(frozen=True)
class CurvatureSample:
    t: float
    a: float
    b: float
    c_curv: float
    scalar_R: float
    op_matrix: np.ndarray
    min_eigenvalue: float


@dataclass(frozen=True)
class PositivityResult:
    """Inequalities (A)-(D) at one radius, with the quantities they compare."""

    t: float
    A: bool
    B: bool
    C: bool
    D: bool
    a: float
    a_plus_b: float
    c_combo: float
    d_margin: float
    min_eigenvalue: float

    @property
    def all_hold(self):
        return self.A and self.B and self.C and self.D and self.min_eigenvalue > 0


def _log_derivs(p0, p1, p2, p3):
    """First three t-derivatives of log(p) from p and its derivatives."""
    r1, r2, r3 = p1 / p0, p2 / p0, p3 / p0
    return r1, r2 - r1**2, r3 - 3 * r1 * r2 + 2 * r1**3


def ricci_potential_derivatives(profile, t):
    """``(f_R', f_R'', f_R''')`` at t (vectorized)."""
    phi, p1, p2, p3, p4 = profile.evaluate(t, order=4)
    n = profile.n
    l1, l2, l3 = _log_derivs(phi, p1, p2, p3)
    m1, m2, m3 = _log_derivs(p1, p2, p3, p4)
    return n - (n - 1) * l1 - m1, -(n - 1) * l2 - m2, -(n - 1) * l3 - m3


def metric_at(profile, t):
    """Metric quantities at the radial point with log|z|^2 = t."""
    t = float(t)
    phi, p1, _, _ = profile.evaluate(t)
    n = profile.n
    e = math.exp(-t)
    fr = tuple(float(v) for v in ricci_potential_derivatives(profile, t))
    return MetricAtRadius(
        t=t,
        g_radial=e * p1,
        g_tangent=e * phi,
        det_g=math.exp(-n * t) * p1 * phi ** (n - 1),
        ricci_potential_derivs=fr,
        field_coefficient=(fr[0] + phi) / p1,
    )


def abc_from_derivs(phi, p1, p2, p3):
    """The coefficient functions a, b, c of the curvature form from phi and its derivatives."""
    # written in successive differences, which vanish exactly on flat data
    d0, d1, d2 = p1 - phi, p2 - p1, p3 - p2
    a = phi - p1
    mid = d1 - 2 * d0
    b = d0**2 / phi - mid
    c = mid * (d1 + 2 * d0) / phi + (1 / p1 - 1 / phi) * d1**2 - (d2 - 5 * d1 + 6 * d0)
    return a, b, c


def abc_at(profile, t):
    """``(a, b, c_curv)`` at t (scalar or array)."""
    return abc_from_derivs(*profile.evaluate(t))


def form_matrix(n, a, a_plus_b, c_combo, t):
    """Matrix of the curvature form on (1,1)-arrays, with the e^{-2t} prefactor.

    Takes a, a+b and c+2a+4b, the combinations the form depends on, so c is
    never formed by cancellation.  Arguments may be arrays of equal shape;
    the result then has shape ``(..., n*n, n*n)``.  For every xi,
    ``xi^H M xi`` equals

        e^{-2t} [ a (|tr xi|^2 + sum |xi^{ab}|^2)
                  + b (sum_a |xi^{1a}|^2 + conj(xi^{11}) tr xi + xi^{11} conj(tr xi)
                       + sum_a |xi^{a1}|^2)
                  + c |xi^{11}|^2 ].
    """
    a, ab, combo, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, a_plus_b, c_combo, t)))
    b = ab - a
    size = n * n
    m = np.zeros(a.shape + (size, size))
    diag = np.arange(n) * (n + 1)
    eye = np.arange(size)
    first_row = np.arange(1, n)
    first_col = np.arange(1, n) * n
    m[..., diag[:, None], diag[None, :]] += a[..., None, None]
    m[..., eye, eye] += a[..., None]
    m[..., first_row, first_row] += b[..., None]
    m[..., first_col, first_col] += b[..., None]
    m[..., 0, diag[1:]] += b[..., None]
    m[..., diag[1:], 0] += b[..., None]
    # the xi^{11} entry collects 2a + 4b + c
    m[..., 0, 0] = combo
    return m * np.exp(-2.0 * t)[..., None, None]


def combos_at(profile, t, route="auto"):
    """``(a, a+b, c+2a+4b)`` at t.

    ``route="definition"`` evaluates the defining formulas from phi and its
    first three derivatives.  ``route="kernel"`` (soliton profiles only) uses
    the special-function kernels, free of the cancellation the definitions
    suffer at small and large phi.  ``"auto"`` takes the kernel route when
    the profile carries soliton parameters.
    """
    if route == "auto":
        route = "definition" if profile.params is None else "kernel"
    if route == "kernel":
        if profile.params is None:
            raise ValueError("kernel route needs a soliton profile")
        kr = kernel_route(profile.params, profile.evaluate(t)[0])
        return kr["a"], kr["a_plus_b"], kr["c_combo"]
    if route != "definition":
        raise ValueError(f"unknown route {route!r}")
    a, b, c = abc_at(profile, t)
    return a, a + b, c + 2 * a + 4 * b


def curvature_form_matrix(profile, t, route="auto"):
    """Hermitian ``n^2 x n^2`` matrix of the curvature operator on (1,1)-forms at t."""
    t = float(t)
    return form_matrix(profile.n, *combos_at(profile, t, route), t)


def min_eigenvalues(matrices):
    """Smallest eigenvalue of each Hermitian matrix; CurvatureError on failure."""
    matrices = np.asarray(matrices)
    if not np.all(np.isfinite(matrices)):
        raise CurvatureError("curvature-operator matrix has non-finite entries")
    try:
        return np.linalg.eigvalsh(matrices)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise CurvatureError(f"eigenvalue computation failed: {exc}") from exc


def scalar_curvature(profile, t):
    """``R = (n-1) f_R' / phi + f_R'' / phi'`` at t (scalar or array)."""
    phi, p1, _, _ = profile.evaluate(t)
    fr1, fr2, _ = ricci_potential_derivatives(profile, t)
    val = (profile.n - 1) * fr1 / phi + fr2 / p1
    return float(val) if np.ndim(t) == 0 else val


def scalar_curvature_log(n, t, w, w1, w2, w3):
    """Scalar curvature from ``w = log(phi) - t`` and its first three t-derivatives.

    Vanishes identically on flat data (w constant), with no cancellation.
    """
    v1 = 1.0 + w1
    fr1 = -n * w1 - w2 / v1
    fr2 = -n * w2 - w3 / v1 + (w2 / v1) ** 2
    return np.exp(-t - w) * ((n - 1) * fr1 + fr2 / v1)


def d_margin(n, a, a_plus_b, c_combo):
    """``n/(n-1) a (c+2a+4b) - (a+b)^2``; +inf for n = 1 where (D) is vacuous."""
    if n == 1:
        return np.full(np.shape(a), np.inf)
    return n / (n - 1) * a * c_combo - a_plus_b**2


def positivity_scan(profile, ts, route="auto"):
    """Check (A)-(D) and the smallest eigenvalue at every t in ``ts``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    a, ab, combo = (np.atleast_1d(v) for v in combos_at(profile, ts, route))
    margin = np.atleast_1d(d_margin(profile.n, a, ab, combo))
    eig = min_eigenvalues(form_matrix(profile.n, a, ab, combo, ts))
    return [
        PositivityResult(
            t=float(ts[i]),
            A=bool(a[i] > 0),
            B=bool(ab[i] > 0),
            C=bool(combo[i] > 0),
            D=bool(margin[i] > 0),
            a=float(a[i]),
            a_plus_b=float(ab[i]),
            c_combo=float(combo[i]),
            d_margin=float(margin[i]),
            min_eigenvalue=float(eig[i]),
        )
        for i in range(ts.size)
    ]


def positivity_check(profile, t, route="auto"):
    """Inequalities (A)-(D) and the minimum eigenvalue at a single radius.

    For n = 1 condition (D) has no content and is reported as true.
    """
    return positivity_scan(profile, [t], route)[0]


def curvature_sample(profile, t, route="auto"):
    t = float(t)
    a, b, c = abc_at(profile, t)
    m = curvature_form_matrix(profile, t, route)
    return CurvatureSample(
        t=t, a=a, b=b, c_curv=c,
        scalar_R=scalar_curvature(profile, t),
        op_matrix=m,
        min_eigenvalue=float(min_eigenvalues(m)[()]),
    )


def kernel_route(params, phi):
    """a, a+b, c+2a+4b and the (D) margin from the special-function kernels.

    Independent of phi'' and phi'''; returns a dict of arrays.  The (D)
    margin is ``n^2 (lam-1)^2 phi'^2 / ((n-1) lam^{2n} phi^{2n-2}) * e^{-2x} L(x)``
    with x = lam phi (infinite for n = 1).
    """
    phi = np.asarray(phi, dtype=float)
    n, lam = params.n, params.lam
    x = lam * phi
    a = params.kernel_factor * phi ** (1 - n) * np.asarray(eval_f(n + 1, x))
    p1 = phi - a
    ab = (lam - 1) * p1 / (lam ** (n + 1) * phi**n) * -np.asarray(eval_g(n + 1, x))
    combo = (lam - 1) * p1**2 / x ** (n + 1) * -np.asarray(eval_h(n, x))
    if n == 1:
        margin = np.full(phi.shape, np.inf)
    else:
        margin = (
            n**2 * (lam - 1) ** 2 * p1**2 / ((n - 1) * lam ** (2 * n) * phi ** (2 * n - 2))
            * np.asarray(eval_L_scaled(n, x))
        )
    return {"a": a, "a_plus_b": ab, "c_combo": combo, "d_margin": margin}
