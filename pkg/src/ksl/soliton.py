"""Radial profiles of the expanding gradient Kähler-Ricci solitons on C^n.

A U(n)-invariant Kähler potential u(t), t = log|z|^2, is described by
phi = u'(t).  The soliton equation reduces to the autonomous ODE

    phi' = Phi(phi) = phi - K phi^{1-n} f_{n+1}(lambda phi),
    K = (lambda - 1) n! / lambda^{n+1},

so profiles are built in the phi variable: t(phi) is a quadrature of
1 / Phi and all t-derivatives of phi come from analytic derivatives of Phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .kernels import MAX_ORDER, eval_f


class QuadratureError(RuntimeError):
    """Adaptive quadrature of t(phi) failed to reach its tolerance."""


class SpanError(ValueError):
    """A requested t or phi lies outside what a profile covers."""


@dataclass(frozen=True)
class SolitonParams:
    """Complex dimension ``n`` and soliton parameter ``lam`` > 1."""

    n: int
    lam: float

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.n + 1 > MAX_ORDER:
            raise ValueError(f"n={self.n} needs f_(n+1) beyond the kernel order limit {MAX_ORDER}")
        if not math.isfinite(self.lam) or self.lam <= 1.0:
            raise ValueError(f"lambda must be a finite real > 1, got {self.lam!r}")

    @property
    def ode_constant(self):
        """The integration constant c = (-1)^(n-1) n! (1 - lambda) selecting the complete branch."""
        return (-1) ** (self.n - 1) * math.factorial(self.n) * (1.0 - self.lam)

    @property
    def kernel_factor(self):
        return (self.lam - 1.0) * math.factorial(self.n) / self.lam ** (self.n + 1)


def _check_phi(phi):
    arr = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("phi must be finite and positive")
    return arr


def ode_rhs(params, phi):
    """``Phi(phi)``, the right-hand side of the first-order soliton ODE ``phi' = Phi(phi)``."""
    arr = _check_phi(phi)
    n, lam = params.n, params.lam
    val = arr - params.kernel_factor * arr ** (1 - n) * np.asarray(eval_f(n + 1, lam * arr))
    return float(val) if np.ndim(phi) == 0 else val


def ode_rhs_derivatives(params, phi):
    """Return ``(Phi, Phi', Phi'', Phi''')`` in the phi variable, using f_k' = f_{k-1}."""
    arr = _check_phi(phi)
    n, lam, k = params.n, params.lam, params.kernel_factor
    x = lam * arr
    f_hi = np.asarray(eval_f(n + 1, x))
    f_mid = np.asarray(eval_f(n, x))
    f_lo = np.asarray(eval_f(n - 1, x))
    # f_0' = -f_0 closes the chain for n = 1
    f_lolo = np.asarray(eval_f(n - 2, x)) if n >= 2 else -f_lo
    p = [arr ** (1 - n - j) for j in range(4)]
    a0 = k * p[0] * f_hi
    a1 = k * ((1 - n) * p[1] * f_hi + lam * p[0] * f_mid)
    a2 = k * ((1 - n) * (-n) * p[2] * f_hi + 2 * (1 - n) * lam * p[1] * f_mid + lam**2 * p[0] * f_lo)
    a3 = k * (
        (1 - n) * (-n) * (-n - 1) * p[3] * f_hi
        + 3 * (1 - n) * (-n) * lam * p[2] * f_mid
        + 3 * (1 - n) * lam**2 * p[1] * f_lo
        + lam**3 * p[0] * f_lolo
    )
    return arr - a0, 1.0 - a1, -a2, -a3


def t_derivatives(params, phi, order=3):
    """Return the t-derivatives ``phi', ..., phi^(order)`` at the given phi values (order 3 or 4)."""
    big, d1, d2, d3 = ode_rhs_derivatives(params, phi)
    out = (big, d1 * big, (d2 * big + d1**2) * big)
    if order == 4:
        out += ((d3 * big**2 + 4 * big * d1 * d2 + d1**3) * big,)
    return out


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled radial profile phi(t) with its first three t-derivatives.

    ``params`` is set for soliton-built profiles (which then evaluate exactly
    between nodes) and ``None`` for custom ones (log-space Hermite
    interpolation).  ``s`` tags flow snapshots.
    """

    t: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    n: int
    params: SolitonParams | None = None
    gauge: float = 0.0
    s: float | None = None
    _interp: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("t", "phi", "phi1", "phi2", "phi3"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        size = self.t.size
        if size < 2 or any(getattr(self, k).shape != (size,) for k in ("phi", "phi1", "phi2", "phi3")):
            raise ValueError("profile arrays must be 1-d, of equal length >= 2")
        if not np.all(np.isfinite(np.stack([self.t, self.phi, self.phi1, self.phi2, self.phi3]))):
            raise ValueError("profile contains non-finite values")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t grid must be strictly increasing")
        if np.any(self.phi <= 0) or np.any(self.phi1 <= 0):
            raise ValueError("profile requires phi > 0 and phi' > 0")
        if self.params is not None and self.params.n != self.n:
            raise ValueError("profile n disagrees with its soliton parameters")

    @property
    def kind(self):
        return "custom" if self.params is None else "soliton"

    @property
    def t_min(self):
        return float(self.t[0])

    @property
    def t_max(self):
        return float(self.t[-1])

    def __len__(self):
        return self.t.size

    def _check_t(self, t):
        arr = np.asarray(t, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.t_min), abs(self.t_max))
        if np.any(arr < self.t_min - tol) or np.any(arr > self.t_max + tol) or not np.all(np.isfinite(arr)):
            raise SpanError(f"t outside profile span [{self.t_min}, {self.t_max}]")
        return np.clip(arr, self.t_min, self.t_max)

    def evaluate(self, t, order=3):
        """Return phi and its t-derivatives up to ``order`` (3 or 4) at arbitrary t in the span.

        The fourth derivative is exact on soliton profiles and the derivative
        of the interpolant otherwise.
        """
        if order not in (3, 4):
            raise ValueError("order must be 3 or 4")
        arr = self._check_t(t)
        flat = np.atleast_1d(arr).ravel()
        if self.params is not None:
            phi = _invert_t(self, flat)
            out = (phi, *t_derivatives(self.params, phi, order))
        else:
            out = self._hermite(flat, order)
        if np.ndim(t) == 0:
            return tuple(float(v[0]) for v in out)
        return tuple(v.reshape(arr.shape) for v in out)

    def _hermite(self, t, order=3):
        if not self._interp:
            v = np.log(self.phi)
            r1 = self.phi1 / self.phi
            r2 = self.phi2 / self.phi
            r3 = self.phi3 / self.phi
            self._interp["v"] = CubicHermiteSpline(self.t, v, r1)
            self._interp["r1"] = CubicHermiteSpline(self.t, r1, r2 - r1**2)
            self._interp["r2"] = CubicHermiteSpline(self.t, r2, r3 - r1 * r2)
            self._interp["r3"] = CubicHermiteSpline(self.t, r3, np.gradient(r3, self.t))
        phi = np.exp(self._interp["v"](t))
        r1, r2, r3 = (self._interp[k](t) for k in ("r1", "r2", "r3"))
        out = (phi, phi * r1, phi * r2, phi * r3)
        if order == 4:
            # (phi'''/phi)' = phi''''/phi - r1 r3
            out += (phi * (self._interp["r3"](t, 1) + r1 * r3),)
        return out

    def with_gauge(self, shift):
        """Translate the profile in t (phi-parametrized data unchanged)."""
        return RadialProfile(
            self.t + shift, self.phi, self.phi1, self.phi2, self.phi3, self.n,
            self.params, self.gauge + shift, self.s,
        )


def flat_profile(n, t_min=-12.0, t_max=30.0, node_count=2001):
    """The Euclidean metric, phi = e^t."""
    t = np.linspace(t_min, t_max, node_count)
    e = np.exp(t)
    return RadialProfile(t, e, e, e, e, n)


# Gauss-Legendre rules in log(phi) for the t(phi) quadrature
_GL_LOW = np.polynomial.legendre.leggauss(8)
_GL_HIGH = np.polynomial.legendre.leggauss(16)


def _gl_integral(params, lo, hi, rule):
    nodes, weights = rule
    ulo, uhi = np.log(lo), np.log(hi)
    mid, half = 0.5 * (uhi + ulo), 0.5 * (uhi - ulo)
    psi = np.exp(mid[:, None] + half[:, None] * nodes[None, :])
    integrand = psi / ode_rhs(params, psi.ravel()).reshape(psi.shape)
    return half * (integrand @ weights)


def t_increments(params, lo, hi, tol=1e-12, max_depth=30):
    """Adaptive Gauss-Legendre values of ``int_lo^hi dpsi / Phi(psi)`` per interval.

    Intervals whose 8- and 16-point rules disagree beyond ``tol`` (relative)
    are bisected in log(phi) until they agree.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    out = np.zeros(lo.shape)
    owner = np.arange(lo.size)
    for _ in range(max_depth):
        fine = _gl_integral(params, lo, hi, _GL_HIGH)
        coarse = _gl_integral(params, lo, hi, _GL_LOW)
        ok = np.abs(fine - coarse) <= tol * np.maximum(np.abs(fine), 1e-300)
        np.add.at(out, owner[ok], fine[ok])
        if np.all(ok):
            return out
        lo, hi, owner = lo[~ok], hi[~ok], owner[~ok]
        mid = np.sqrt(lo * hi)
        lo, hi, owner = np.concatenate([lo, mid]), np.concatenate([mid, hi]), np.concatenate([owner, owner])
    raise QuadratureError(f"t(phi) quadrature did not converge on {lo.size} subintervals")


def default_phi_max(lam):
    # lambda * phi <= 700 keeps e^{lambda phi} representable and the
    # raw-derivative curvature formulas well conditioned
    return min(math.exp(40.0), 700.0 / lam)


def build_profile(params, phi_min=1e-6, phi_max=None, node_count=4096, gauge=0.0, t_span_limit=1000.0):
    """Solve the soliton ODE on a log-uniform phi grid.

    The t-translation is fixed by ``t(phi = 1) = gauge``.

    Raises
    ------
    QuadratureError
        if the adaptive quadrature of t(phi) does not converge.
    SpanError
        if the resulting t span exceeds ``t_span_limit``.
    """
    if phi_max is None:
        phi_max = default_phi_max(params.lam)
    if not (0 < phi_min < phi_max) or not math.isfinite(phi_max):
        raise ValueError("need 0 < phi_min < phi_max < inf")
    if node_count < 16:
        raise ValueError("node_count must be >= 16")
    phi = np.geomspace(phi_min, phi_max, node_count)
    phi[0], phi[-1] = phi_min, phi_max
    steps = t_increments(params, phi[:-1], phi[1:])
    t = np.concatenate([[0.0], np.cumsum(steps)])
    if phi_min != 1.0:
        offset = float(t_increments(params, [min(1.0, phi_min)], [max(1.0, phi_min)])[0])
        t = t + (offset if phi_min > 1.0 else -offset)
    t = t + gauge
    if t[-1] - t[0] > t_span_limit:
        raise SpanError(f"t span {t[-1] - t[0]:.3g} exceeds the limit {t_span_limit}")
    if np.any(np.diff(t) <= 0):
        raise QuadratureError("phi range too fine for double precision in t")
    phi1, phi2, phi3 = t_derivatives(params, phi)
    return RadialProfile(t, phi, phi1, phi2, phi3, params.n, params, gauge)


def _invert_t(profile, t):
    """Exact phi(t) on a soliton profile by Newton iteration on t(phi)."""
    params = profile.params
    idx = np.clip(np.searchsorted(profile.t, t, side="right") - 1, 0, len(profile) - 2)
    t0, t1 = profile.t[idx], profile.t[idx + 1]
    v0, v1 = np.log(profile.phi[idx]), np.log(profile.phi[idx + 1])
    # log-linear start, then Newton on T(phi) - t with T'(phi) = 1 / Phi(phi)
    w = (t - t0) / (t1 - t0)
    phi = np.exp(v0 + w * (v1 - v0))
    anchor = profile.phi[idx]
    for _ in range(50):
        seg = _gl_integral(params, np.minimum(anchor, phi), np.maximum(anchor, phi), _GL_HIGH)
        seg = np.where(phi >= anchor, seg, -seg)
        err = t0 + seg - t
        new = phi * np.exp(-err * ode_rhs(params, phi) / phi)
        done = np.abs(new - phi) <= 4e-16 * phi
        phi = new
        if np.all(done):
            break
    return phi


def soliton_residual(profile, lam):
    """Max over nodes of ``|phi''/phi' + ((n-1)/phi + lam) phi' - n - phi|``."""
    n = profile.n
    res = (
        profile.phi2 / profile.phi1
        + ((n - 1) / profile.phi + lam) * profile.phi1
        - n
        - profile.phi
    )
    return float(np.max(np.abs(res)))
