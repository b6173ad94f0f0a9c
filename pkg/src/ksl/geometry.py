"""Geodesic distance from the origin, ball volumes and curvature-decay statistics.

Straight lines through the origin are geodesics of a U(n)-invariant metric,
so the distance is ``d(t) = (1/2) int_{-inf}^t sqrt(phi') dt`` and the ball
volume is ``omega_{2n-1}/(2n) * phi^n`` with ``omega_{2n-1} = 2 pi^n/(n-1)!``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import CubicHermiteSpline

from .curvature import scalar_curvature


def sphere_area(n):
    """Area of the unit sphere S^{2n-1} in R^{2n}."""
    return 2.0 * math.pi**n / math.factorial(n - 1)


def asymptotic_volume_constant(n, lam):
    """Limit of Vol(B(O, d)) / d^{2n} on the soliton with parameter ``lam``."""
    return sphere_area(n) / (2 * n * lam**n)


def distance_profile(profile):
    """Geodesic distance d at every node of ``profile``.

    Uses the trapezoid rule with the Euler-Maclaurin end correction (exact
    derivative of the integrand from phi''), plus the tail below t_min where
    phi ~ phi(t_min) e^{t - t_min}.
    """
    t = profile.t
    root = np.sqrt(profile.phi1)
    f = 0.5 * root
    df = 0.25 * profile.phi2 / root
    h = np.diff(t)
    pieces = 0.5 * h * (f[:-1] + f[1:]) + h**2 / 12.0 * (df[:-1] - df[1:])
    tail = root[0]
    return t.copy(), tail + np.concatenate([[0.0], np.cumsum(pieces)])


def distance_at(profile, t):
    """Geodesic distance at arbitrary t, by Hermite interpolation of the node values."""
    arr = profile._check_t(t)
    nodes, d = distance_profile(profile)
    spline = CubicHermiteSpline(nodes, d, 0.5 * np.sqrt(profile.phi1))
    val = spline(arr)
    return float(val) if np.ndim(t) == 0 else val


def distance_adaptive(profile, t, epsrel=1e-12):
    """Geodesic distance at t by adaptive quadrature of the interpolated profile."""
    t = float(t)
    profile._check_t(t)
    tail = math.sqrt(profile.evaluate(profile.t_min)[1])
    if t == profile.t_min:
        return tail
    # split at the nodes so quad sees smooth pieces
    inner = profile.t[(profile.t > profile.t_min) & (profile.t < t)]
    knots = inner[:: max(1, inner.size // 40)]
    val, _ = quad(
        lambda s: 0.5 * math.sqrt(profile.evaluate(s)[1]),
        profile.t_min, t, epsabs=0.0, epsrel=epsrel, limit=400, points=knots if knots.size else None,
    )
    return tail + val


def volume_of_ball(profile, t):
    """Volume of the geodesic ball about the origin bounded by the sphere at t."""
    phi = profile.evaluate(t)[0]
    val = sphere_area(profile.n) / (2 * profile.n) * np.asarray(phi) ** profile.n
    return float(val) if np.ndim(t) == 0 else val


class InsufficientSpanError(ValueError):
    pass


@dataclass
class DecayReport:
    """Per-node decay statistics and the bound constants they witness.

    Columns: t, d, vol, R, vol_ratio = vol/d^{2n}, Rd2 = R d^2,
    avgR_scaled = (1+d) * (mean of R over B(O,d)), thm3_ratio = I(d)/log(2+d)
    where I(d) = int_{B(O,d)} R / rho^{2n-2}.
    """

    n: int
    columns: dict
    constants: dict = field(default_factory=dict)
    tails: dict = field(default_factory=dict)

    COLUMNS = ("t", "d", "vol", "R", "vol_ratio", "Rd2", "avgR_scaled", "thm3_ratio")

    def __getitem__(self, key):
        return self.columns[key]

    def __len__(self):
        return len(self.columns["t"])

    def rows(self):
        for i in range(len(self)):
            yield {k: float(self.columns[k][i]) for k in self.COLUMNS}


def decay_report(profile, min_decades=4.0, rtol_monotone=1e-9):
    """Tabulate volume growth and curvature decay over the profile.

    Raises
    ------
    InsufficientSpanError
        if phi spans fewer than ``min_decades`` decades.
    """
    n = profile.n
    phi, p1 = profile.phi, profile.phi1
    if math.log10(phi[-1] / phi[0]) < min_decades:
        raise InsufficientSpanError(f"profile spans fewer than {min_decades} decades of phi")
    omega = sphere_area(n)
    t, d = distance_profile(profile)
    vol = omega / (2 * n) * phi**n
    R = np.asarray(scalar_curvature(profile, t))

    # below t_min: phi ~ phi0 e^{t - t0}, R ~ R(t_min), d^2 ~ d0^2 phi / phi0
    weight = 0.5 * omega * phi ** (n - 1) * p1
    mass_tail = 0.5 * omega * R[0] * phi[0] ** n / n
    mass = mass_tail + cumulative_simpson(R * weight, x=t, initial=0.0)
    weighted_tail = 0.5 * omega * R[0] * phi[0] ** n / d[0] ** (2 * n - 2)
    weighted = weighted_tail + cumulative_simpson(R * weight / d ** (2 * n - 2), x=t, initial=0.0)

    cols = {
        "t": t,
        "d": d,
        "vol": vol,
        "R": R,
        "vol_ratio": vol / d ** (2 * n),
        "Rd2": R * d**2,
        "avgR_scaled": (1 + d) * mass / vol,
        "thm3_ratio": weighted / np.log(2 + d),
    }
    for name, col in cols.items():
        if not np.all(np.isfinite(col)):
            raise FloatingPointError(f"non-finite entries in decay column {name}")
    ratio = cols["vol_ratio"]
    if np.any(np.diff(ratio) > rtol_monotone * ratio[:-1]):
        warnings.warn("vol/d^2n increases somewhere along the profile", RuntimeWarning, stacklevel=2)
    constants = {
        "c1_hat": float(ratio.min()),
        "c2_hat": float(cols["thm3_ratio"].max()),
        "C_hat": float(cols["avgR_scaled"].max()),
    }
    return DecayReport(n=n, columns=cols, constants=constants, tails={"mass": mass_tail, "weighted": weighted_tail})
