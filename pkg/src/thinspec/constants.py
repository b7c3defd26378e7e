"""Closed-form spectral constants and thresholds for thin convex domains.

Everything here reduces to Bessel zeros and values: the dimensional
constant C_n = -Gamma(n/2) (2/x_m)^((n-2)/2) J_((n-2)/2)(x_m) with x_m the
first minimum of t^(-(n-2)/2) J_((n-2)/2)(t), the simplicity thresholds
eps_k = pi / (4 (j_{0,1} + (k-1) pi / 2)) and delta_n = sqrt(C_n) / (sqrt(8)
j_{(n-2)/2,1}), the diameter-normalized eigenvalue ceilings, and the weaker
k^-3 simplicity threshold obtained through the collapsing-segment route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .bessel import bessel_j, bessel_zero
from .errors import SolverError, ThinspecError

_XM_ROUTE_TOL = 1e-8

FORMULAS = {
    "x_m": "first minimum of t^(-(n-2)/2) * J_((n-2)/2)(t); equals j_(n/2,1)",
    "c_n": "-Gamma(n/2) * (2/x_m)^((n-2)/2) * J_((n-2)/2)(x_m)",
    "eps_k": "pi / (4 * (j_(0,1) + (k-1)*pi/2))",
    "delta_n": "sqrt(C_n) / (sqrt(8) * j_((n-2)/2,1))",
    "manifold_c": "C_n / 18",
    "kroger_2d": "4 * (j_(0,1) + (k-1)*pi/2)^2",
    "kroger_odd": "4 * j_((n-2)/2,(k+1)/2)^2",
    "kroger_even": "(j_((n-2)/2,k/2) + j_((n-2)/2,(k+2)/2))^2",
    "alt_simplicity": "2*(pi-j_(0,1))*(k*pi+j_(0,1)) / ((k+1)^2*pi^2*((k+1)^2*pi^2+1))",
}


def gamma_half(n: int) -> float:
    """Gamma(n/2) for integer n >= 1 via the half-integer closed forms."""
    if n < 1:
        raise ThinspecError("gamma_half needs n >= 1")
    if n % 2 == 0:
        return float(math.factorial(n // 2 - 1))
    m = (n - 1) // 2
    double_fact = 1
    for j in range(2 * m - 1, 0, -2):
        double_fact *= j
    return math.sqrt(math.pi) * double_fact / 2.0**m


def eps_k(k: int) -> float:
    """Width/diameter threshold below which the first k eigenvalues are simple."""
    if k < 1:
        raise ThinspecError("eps_k needs k >= 1")
    return math.pi / (4.0 * (bessel_zero(0.0, 1) + (k - 1) * math.pi / 2.0))


def alt_simplicity_threshold(k: int) -> float:
    """Weaker simplicity threshold from the 1D segment bounds; decays like k^-3."""
    if k < 1:
        raise ThinspecError("alt_simplicity_threshold needs k >= 1")
    j01 = bessel_zero(0.0, 1)
    kp = (k + 1) ** 2 * math.pi**2
    return 2.0 * (math.pi - j01) * (k * math.pi + j01) / (kp * (kp + 1.0))


def kroger_bound(n: int, k: int) -> float:
    """Upper bound for the k-th Neumann eigenvalue of a diameter-1 convex body."""
    if n < 2 or k < 1:
        raise ThinspecError("kroger_bound needs n >= 2, k >= 1")
    nu = (n - 2) / 2.0
    if n == 2:
        return 4.0 * (bessel_zero(0.0, 1) + (k - 1) * math.pi / 2.0) ** 2
    if k % 2 == 1:
        return 4.0 * bessel_zero(nu, (k + 1) // 2) ** 2
    return (bessel_zero(nu, k // 2) + bessel_zero(nu, k // 2 + 1)) ** 2


def _golden_minimize(f, a: float, b: float, tol: float = 1e-6) -> float:
    """Golden-section search on a unimodal f, polished with parabolic fits."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    center = 0.5 * (a + b)
    # Flatness of f near its minimum limits golden section to ~sqrt(eps).
    # Parabolic fits with shrinking stencils recover the minimizer; the
    # stencil must stay wide enough that rounding noise in f cannot tilt
    # the fitted vertex, yet narrow enough that the cubic term does not.
    # Fixed widths suit integrands whose curvature scale is O(1).
    for d in (1e-4, 1e-5):
        g0, g1, g2 = f(center - d), f(center), f(center + d)
        denom = g0 - 2.0 * g1 + g2
        if denom <= 0.0:
            break
        center = center + d * (g0 - g2) / (2.0 * denom)
    return center


@dataclass(frozen=True)
class PaperConstants:
    """All closed-form constants for dimension n, cross-checked at build time."""

    n: int
    x_m: float
    c_n: float
    delta_n: float
    manifold_c: float

    def eps_k(self, k: int) -> float:
        return eps_k(k)

    def kroger(self, k: int) -> float:
        return kroger_bound(self.n, k)


@lru_cache(maxsize=None)
def constants(n: int) -> PaperConstants:
    """Compute PaperConstants for 2 <= n <= 20 with the two-route x_m check."""
    if not 2 <= n <= 20:
        raise ThinspecError("constants supports 2 <= n <= 20")
    nu = (n - 2) / 2.0

    def profile(t: float) -> float:
        return t ** (-nu) * bessel_j(nu, t)

    lo = bessel_zero(nu, 1)
    hi = bessel_zero(nu, 2)
    x_m_min = _golden_minimize(profile, lo, hi)
    x_m_zero = bessel_zero(n / 2.0, 1)
    if abs(x_m_min - x_m_zero) > _XM_ROUTE_TOL:
        raise SolverError(
            f"x_m routes disagree for n={n}: minimize={x_m_min!r}, "
            f"derivative zero={x_m_zero!r}"
        )
    x_m = x_m_zero
    c_n = -gamma_half(n) * (2.0 / x_m) ** nu * bessel_j(nu, x_m)
    if not 0.0 < c_n <= 1.0:
        raise SolverError(f"C_n={c_n} outside (0, 1] for n={n}")
    delta_n = math.sqrt(c_n) / (math.sqrt(8.0) * bessel_zero(nu, 1))
    return PaperConstants(
        n=n, x_m=x_m, c_n=c_n, delta_n=delta_n, manifold_c=c_n / 18.0
    )
