"""Special-function kernels f_k, g_k, h_k, l and L.

All kernels are built on

    f_k(x) = (-1)^k * sum_{j >= k} (-x)^j / j!,   x >= 0,

the alternating tail of the exponential series.  ``f_k`` is evaluated by two
routes that never cancel catastrophically:

* small x: the equivalent positive series
  ``f_k(x) = e^{-x} sum_{m>=0} x^{k+m} / ((k-1)! m! (k+m))``;
* large x: the closed form ``(-1)^k (e^{-x} - sum_{j<k} (-x)^j / j!)``.

Every function accepts a scalar or an array and returns the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MAX_ORDER = 12
# switch to the closed form above k + SWITCH_OFFSET
SWITCH_OFFSET = 10.0
# e^{2x} overflows double precision just above x = 354
L_EXPONENT_LIMIT = 700.0

_SERIES_RTOL = 1e-18
_SERIES_MAX_TERMS = 2000


class KernelValue(NamedTuple):
    """Value of ``L`` together with a flag marking e^{-2x}-scaled entries."""

    value: np.ndarray | float
    scaled: np.ndarray | bool


def _check_order(k, lowest=0, max_order=MAX_ORDER, name="k"):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {k!r}")
    if k < lowest:
        raise ValueError(f"{name} must be >= {lowest}, got {k}")
    if k > max_order:
        raise ValueError(f"{name}={k} exceeds the configured maximum order {max_order}")
    return int(k)


def _as_argument(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("kernel argument must be finite")
    if np.any(arr < 0):
        raise ValueError("kernel argument must be nonnegative")
    return arr


def _wrap(values, like):
    return float(values) if np.ndim(like) == 0 else values


def _f_series(k, x):
    """Positive-term series route, k >= 1."""
    term = x**k / math.factorial(k - 1)
    total = term / k
    m = 0
    while True:
        m += 1
        term = term * x / m
        contrib = term / (k + m)
        total = total + contrib
        if np.all(contrib <= _SERIES_RTOL * total) or m >= _SERIES_MAX_TERMS:
            break
    return np.exp(-x) * total


def _f_closed(k, x):
    """Closed-form route; exact cancellation only at small x."""
    poly = np.zeros_like(x)
    term = np.ones_like(x)
    for j in range(k):
        if j:
            term = term * (-x) / j
        poly = poly + term
    return (-1) ** k * (np.exp(-x) - poly)


def eval_f(k, x, *, max_order=MAX_ORDER):
    """Evaluate ``f_k(x)`` to near machine precision for x in [0, 100] and beyond.

    Parameters
    ----------
    k : int
        Series order, ``0 <= k <= max_order``.
    x : float or array_like
        Nonnegative argument(s).
    """
    k = _check_order(k, 0, max_order)
    arr = _as_argument(x)
    if k == 0:
        return _wrap(np.exp(-arr), x)
    xs = np.atleast_1d(arr)
    out = np.empty_like(xs)
    small = xs < k + SWITCH_OFFSET
    if np.any(small):
        out[small] = _f_series(k, xs[small])
    if np.any(~small):
        out[~small] = _f_closed(k, xs[~small])
    return _wrap(out.reshape(arr.shape), x)


def eval_g(k, x, *, max_order=MAX_ORDER):
    """``g_k(x) = (k-1+x) (k-1)! f_k(x) - x^k``; nonpositive on x >= 0."""
    k = _check_order(k, 1, max_order)
    arr = _as_argument(x)
    if k == 1:
        # f_1 - 1 = -f_0 exactly; the generic form cancels to zero for large x
        return _wrap(-arr * np.exp(-arr), x)
    val = (k - 1 + arr) * math.factorial(k - 1) * np.asarray(eval_f(k, arr)) - arr**k
    return _wrap(val, x)


def eval_h(k, x, *, max_order=MAX_ORDER):
    """``h_k(x) = (k-1+(k-1+x)^2) k! f_k(x) - k (k-1+x) x^k``; nonpositive on x >= 0."""
    k = _check_order(k, 1, max_order)
    arr = _as_argument(x)
    if k == 1:
        return _wrap(-(arr**2) * np.exp(-arr), x)
    shift = k - 1 + arr
    val = (k - 1 + shift**2) * math.factorial(k) * np.asarray(eval_f(k, arr)) - k * shift * arr**k
    return _wrap(val, x)


def eval_l(n, x, *, max_order=MAX_ORDER):
    """``l(x) = (n-1)! f_n(x) ((2-2n)x - x^2 - n(n-1)) + x^{n+1} + (n-1) x^n``.

    Its (n-1)-th derivative is ``(n-1)! x^2 e^{-x}``, and l(0) = ... = l^{(n-1)}(0) = 0.
    """
    n = _check_order(n, 1, max_order, name="n")
    arr = _as_argument(x)
    if n == 1:
        # x^2 (1 - f_1) cancels completely at large x
        return _wrap(arr**2 * np.exp(-arr), x)
    quad = (2 - 2 * n) * arr - arr**2 - n * (n - 1)
    val = math.factorial(n - 1) * np.asarray(eval_f(n, arr)) * quad + arr ** (n + 1) + (n - 1) * arr**n
    return _wrap(val, x)


def eval_L_scaled(n, x, *, max_order=MAX_ORDER):
    """``e^{-2x} L(x) = F^2 - F (x^n + n x^{n-1}) + x^{2n-1}`` with ``F = (n-1)! f_n(x)``.

    This is the left-hand side of the inequality certifying condition (D).
    """
    n = _check_order(n, 1, max_order, name="n")
    arr = _as_argument(x)
    if n == 1:
        # F = 1 - e^{-x} gives e^{-x} (e^{-x} + x - 1) exactly
        return _wrap(np.exp(-arr) * (arr + np.expm1(-arr)), x)
    big_f = math.factorial(n - 1) * np.asarray(eval_f(n, arr))
    val = big_f**2 - big_f * (arr**n + n * arr ** (n - 1)) + arr ** (2 * n - 1)
    return _wrap(val, x)


def eval_L(n, x, *, max_order=MAX_ORDER):
    """Evaluate ``L(x)``; entries with 2x above the exponent limit come back scaled.

    Returns
    -------
    KernelValue
        ``value`` holds L(x) where ``scaled`` is False and e^{-2x} L(x) where it
        is True.
    """
    arr = _as_argument(x)
    scaled_val = np.asarray(eval_L_scaled(n, arr, max_order=max_order))
    scaled = 2.0 * arr > L_EXPONENT_LIMIT
    value = np.where(scaled, scaled_val, scaled_val * np.exp(np.where(scaled, 0.0, 2.0 * arr)))
    if np.ndim(x) == 0:
        return KernelValue(float(value), bool(scaled))
    return KernelValue(value, scaled)


# finite-difference machinery for the identity report


def fd_weights(offsets, order):
    """Finite-difference weights for the ``order``-th derivative on integer ``offsets``."""
    offsets = np.asarray(offsets, dtype=float)
    m = len(offsets)
    vander = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


def fd_derivative(func, x, order, step, accuracy=4):
    """Central (or forward, near x = 0) difference approximation of a derivative.

    ``func`` must accept arrays; ``step`` may be a scalar or one step per point.
    Points whose central stencil would reach below zero use a forward stencil
    of the same accuracy.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    step = np.broadcast_to(np.asarray(step, dtype=float), x.shape)
    half = (order + accuracy - 1) // 2
    central = np.arange(-half, half + 1)
    forward = np.arange(order + accuracy)
    out = np.empty_like(x)
    use_c = x - half * step >= 0
    for mask, offs in ((use_c, central), (~use_c, forward)):
        if np.any(mask):
            h = step[mask][:, None]
            pts = x[mask][:, None] + offs[None, :] * h
            vals = np.asarray(func(pts.ravel())).reshape(pts.shape)
            out[mask] = vals @ fd_weights(offs, order) / h[:, 0] ** order
    return out


# high-order differences of l: l cancels like x^3 * eps at large x, so the
# step grows with x; eighth-order stencils keep truncation below 1e-6
def _high_order_step(x):
    return 0.03 * (1.0 + 0.2 * x)


def _scaled_residual(approx, exact, values):
    # roundoff in a difference quotient scales with the differentiated values
    return float(np.max(np.abs(approx - exact) / (1.0 + np.abs(values))))


@dataclass
class IdentityReport:
    """Maximum derivative-chain residuals over a grid.

    Residuals are ``|FD - claimed| / (1 + |F|)`` with F the differentiated
    kernel, so that kernels of size 1e6 and 1e-6 are judged alike.
    """

    n: int
    step: float
    residuals: dict = field(default_factory=dict)

    @property
    def worst(self):
        return max(self.residuals.values(), default=0.0)

    def passed(self, tol):
        return all(r < tol for r in self.residuals.values())


def kernel_identity_report(n, grid, step=1e-4):
    """Check the derivative chains of the kernels with finite differences.

    Chains checked: ``f_k' = f_{k-1}`` (1 <= k <= n+1), ``g_{k+1}' = k g_k``
    (1 <= k <= n), ``h_{k+1}' = (k+1) h_k`` (1 <= k <= n-1) and
    ``l^{(n-1)} = (n-1)! x^2 e^{-x}``.
    """
    n = _check_order(n, 1, MAX_ORDER - 1, name="n")
    grid = _as_argument(grid)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    if grid[-1] > 100:
        raise ValueError("grid must lie within [0, 100]")

    def chain(func, claimed, order=1, h=step, accuracy=4):
        approx = fd_derivative(func, grid, order, h, accuracy)
        return _scaled_residual(approx, claimed, func(grid))

    report = IdentityReport(n=n, step=step)
    report.residuals["f"] = max(
        chain(lambda t, k=k: np.asarray(eval_f(k, t)), eval_f(k - 1, grid)) for k in range(1, n + 2)
    )
    report.residuals["g"] = max(
        chain(lambda t, k=k: np.asarray(eval_g(k + 1, t)), k * np.asarray(eval_g(k, grid)))
        for k in range(1, n + 1)
    )
    report.residuals["h"] = max(
        (
            chain(lambda t, k=k: np.asarray(eval_h(k + 1, t)), (k + 1) * np.asarray(eval_h(k, grid)))
            for k in range(1, n)
        ),
        default=0.0,
    )
    target = math.factorial(n - 1) * grid**2 * np.exp(-grid)
    if n == 1:
        report.residuals["l"] = _scaled_residual(np.asarray(eval_l(1, grid)), target, target)
    else:
        report.residuals["l"] = chain(
            lambda t: np.asarray(eval_l(n, t)),
            target,
            n - 1,
            step if n == 2 else _high_order_step(grid),
            4 if n == 2 else 8,
        )
    return report
