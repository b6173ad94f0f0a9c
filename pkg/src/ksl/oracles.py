"""Independent reference computations used to cross-check the main routes.

Nothing here is used by the production code paths; these functions take a
different, slower road to the same quantities.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .soliton import ode_rhs


def quadratic_form_direct(n, a, b, c, t, xi):
    """The curvature form on one (1,1)-array ``xi`` (shape (n, n)), summed term by term."""
    xi = np.asarray(xi, dtype=complex)
    trace = sum(xi[k, k] for k in range(n))
    a_part = abs(trace) ** 2 + sum(abs(xi[i, j]) ** 2 for i in range(n) for j in range(n))
    b_part = (
        sum(abs(xi[0, k]) ** 2 for k in range(n))
        + 2.0 * (np.conj(xi[0, 0]) * trace).real
        + sum(abs(xi[k, 0]) ** 2 for k in range(n))
    )
    return math.exp(-2.0 * t) * (a * a_part + b * b_part + c * abs(xi[0, 0]) ** 2)


def quadratic_form_scale(n, a, b, c, t, xi):
    """Sum of absolute term sizes, the natural yardstick for relative errors of the form."""
    xi = np.asarray(xi, dtype=complex)
    size = np.sum(np.abs(xi) ** 2) + abs(np.trace(xi)) ** 2
    return math.exp(-2.0 * t) * (abs(a) + 2 * abs(b) + abs(c)) * size


def soliton_ivp(params, t_lo, t_hi, rtol=1e-13):
    """phi(t) from the first-order ODE by DOP853, anchored at phi(0) = 1.

    Returns a callable evaluating phi on arrays inside [t_lo, t_hi].
    """
    if not t_lo < 0 < t_hi:
        raise ValueError("the interval must contain the anchor t = 0")

    def rhs(_, y):
        return ode_rhs(params, np.maximum(y, 1e-300))

    kw = dict(method="DOP853", rtol=rtol, atol=0.0, dense_output=True)
    up = solve_ivp(rhs, (0.0, t_hi), [1.0], **kw)
    down = solve_ivp(rhs, (0.0, t_lo), [1.0], **kw)
    if not (up.success and down.success):
        raise RuntimeError("soliton IVP failed")

    def phi(t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, up.sol(np.maximum(t, 0.0))[0], down.sol(np.minimum(t, 0.0))[0])

    return phi


def ambient_scalar_curvature(params, ts, rel_step=5e-3):
    """Scalar curvature at the radial points with log|z|^2 = ts, from ambient differences.

    ``log det g`` is written as a function on R^{2n} and its complex Laplacian
    taken by fourth-order central differences along each real axis through
    z = (r, 0, ..., 0); then ``R = -sum_i g^{i i-bar} d_i d_i-bar log det g``.
    """
    n = params.n
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    phi_of = soliton_ivp(params, min(ts.min(), 0.0) - 2.0, max(ts.max(), 0.0) + 2.0)

    def log_det(sq):
        t = np.log(sq)
        phi = phi_of(t)
        return -n * t + np.log(ode_rhs(params, phi)) + (n - 1) * np.log(phi)

    out = np.empty(ts.size)
    weights = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    offsets = np.arange(-2, 3)
    for k, t in enumerate(ts):
        r = math.exp(0.5 * t)
        h = rel_step * r
        disp = offsets * h
        # |z + h e|^2 along the radial real axis, and along any orthogonal axis
        radial = log_det((r + disp) ** 2) @ weights / h**2
        ortho = log_det(r**2 + disp**2) @ weights / h**2
        phi = float(phi_of(t))
        phi1 = float(ode_rhs(params, phi))
        g_rad, g_tan = math.exp(-t) * phi1, math.exp(-t) * phi
        # d d-bar = (d_xx + d_yy)/4 in each complex direction
        ddbar_first = 0.25 * (radial + ortho)
        ddbar_other = 0.5 * ortho
        out[k] = -(ddbar_first / g_rad + (n - 1) * ddbar_other / g_tan)
    return out


def reduced_form(n, a, a_plus_b, c_combo, t, xi):
    """Lower bound of the curvature form after Cauchy-Schwarz on the diagonal block.

    Drops the off-diagonal entries xi^{ab}, a, b >= 2, and bounds
    sum_{a>=2} |xi^{aa}|^2 below by |sum_{a>=2} xi^{aa}|^2 / (n-1).
    """
    xi = np.asarray(xi, dtype=complex)
    rest = sum(xi[k, k] for k in range(1, n))
    edge = sum(abs(xi[0, k]) ** 2 + abs(xi[k, 0]) ** 2 for k in range(1, n))
    val = c_combo * abs(xi[0, 0]) ** 2 + a_plus_b * (2.0 * (xi[0, 0] * np.conj(rest)).real + edge)
    if n > 1:
        val += n / (n - 1) * a * abs(rest) ** 2
    return math.exp(-2.0 * t) * val
