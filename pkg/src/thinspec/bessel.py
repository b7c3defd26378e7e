"""Bessel functions J_nu and their positive zeros, self-contained.

Two evaluation regimes: an exact-rational power series for
x <= 12 + 2*nu (summed with ``fractions.Fraction`` so the alternating-series
cancellation costs no precision), and the large-argument modulus/phase
asymptotic expansion beyond, truncated at its smallest term.  The two
regimes are cross-checked against each other on the overlap band the first
time the asymptotic branch is used for a given order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import SolverError, ThinspecError

NU_MAX = 50.0
X_MAX = 500.0

# Smallest gap between consecutive positive zeros of J_nu over nu >= 0 is
# j_{0,2} - j_{0,1} ~ 3.115, so a unit scan step cannot skip a sign change.
_SCAN_STEP = 1.0

_ASYMPTOTIC_ABS_TOL = 1e-13


def _series_switch(nu: float) -> float:
    return 12.0 + 2.0 * nu


def _validate(nu: float, x: float) -> None:
    if not (0.0 <= nu <= NU_MAX):
        raise ThinspecError(f"order nu={nu} outside supported range [0, {NU_MAX}]")
    if not (0.0 <= x <= X_MAX):
        raise ThinspecError(f"argument x={x} outside supported range [0, {X_MAX}]")


def _series_sum(nu: float, x: float) -> float:
    """S(nu, x) = sum_m (-1)^m (x^2/4)^m / (m! (nu+1)...(nu+m)), exactly.

    J_nu(x) = (x/2)^nu / Gamma(nu+1) * S(nu, x); the sum S carries the sign
    of J_nu and is returned correctly rounded to double.
    """
    q = Fraction(x) * Fraction(x) / 4
    nu_f = Fraction(nu)
    term = Fraction(1)
    total = Fraction(1)
    m = 0
    # Terms decay monotonically once (m+1)(nu+m+1) > x^2/4; run the tail
    # until it is negligible at double precision even against the largest
    # partial sum.
    qf = float(q)
    while True:
        m += 1
        term = -term * q / (m * (nu_f + m))
        total += term
        if (m + 1) * (nu + m + 1) > qf:
            if abs(float(term)) < 1e-26 * max(1.0, abs(float(total))):
                break
        if m > 700:  # unreachable for x <= X_MAX; guards infinite loops
            raise SolverError("Bessel series did not terminate")
    return float(total)


def _series_j(nu: float, x: float) -> float:
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    log_pref = nu * math.log(x / 2.0) - math.lgamma(nu + 1.0)
    return math.exp(log_pref) * _series_sum(nu, x)


def _asymptotic_j(nu: float, x: float) -> tuple[float, float]:
    """Modulus/phase expansion; returns (value, absolute error estimate)."""
    mu4 = 4.0 * nu * nu
    inv8x = 1.0 / (8.0 * x)
    p_sum = 1.0
    q_sum = 0.0
    a = 1.0
    prev = math.inf
    err = math.inf
    for k in range(1, 80):
        a *= (mu4 - (2 * k - 1) ** 2) * inv8x / k
        mag = abs(a)
        if mag >= prev:
            err = prev
            break
        rem = k % 4
        if rem == 0:
            p_sum += a
        elif rem == 1:
            q_sum += a
        elif rem == 2:
            p_sum -= a
        else:
            q_sum -= a
        prev = mag
        if mag < 1e-18:
            err = mag
            break
    omega = x - nu * math.pi / 2.0 - math.pi / 4.0
    env = math.sqrt(2.0 / (math.pi * x))
    return env * (math.cos(omega) * p_sum - math.sin(omega) * q_sum), env * err


@lru_cache(maxsize=None)
def _overlap_check(nu: float) -> bool:
    """Cross-check series against asymptotic just above the switch point."""
    x0 = _series_switch(nu)
    for x in (x0 * 1.001, x0 * 1.05, min(x0 * 1.25, X_MAX)):
        approx, err = _asymptotic_j(nu, x)
        if err > _ASYMPTOTIC_ABS_TOL:
            continue  # asymptotic unused there; exact series takes over
        exact = _series_j(nu, x)
        if abs(approx - exact) > 1e-11 * max(1.0, abs(exact)) + 1e-11:
            raise SolverError(
                f"Bessel series/asymptotic overlap mismatch at nu={nu}, x={x}: "
                f"{exact!r} vs {approx!r}"
            )
    return True


def bessel_j(nu: float, x: float) -> float:
    """J_nu(x) for 0 <= nu <= 50 and 0 <= x <= 500."""
    _validate(nu, x)
    if x <= _series_switch(nu):
        return _series_j(nu, x)
    _overlap_check(nu)
    value, err = _asymptotic_j(nu, x)
    if err > _ASYMPTOTIC_ABS_TOL:
        # Exact series is valid for every x, only slower; use it whenever the
        # truncated expansion cannot certify full double accuracy.
        return _series_j(nu, x)
    return value


def _sign_value(nu: float, x: float) -> float:
    """A quantity with the sign of J_nu(x), cheap and underflow-free."""
    if x <= _series_switch(nu):
        return _series_sum(nu, x)
    return bessel_j(nu, x)


@lru_cache(maxsize=None)
def bessel_zero(nu: float, k: int) -> float:
    """k-th positive zero of J_nu, accurate to 1e-10 or better."""
    if k < 1:
        raise ThinspecError(f"zero index k={k} must be >= 1")
    _validate(nu, 0.0)
    lo = max(0.25, float(nu))
    f_lo = _sign_value(nu, lo)
    if f_lo <= 0.0:
        raise SolverError(f"unexpected sign of J_{nu} below its first zero")
    found = 0
    hi = lo
    while found < k:
        hi = lo + _SCAN_STEP
        if hi > X_MAX:
            raise SolverError(
                f"bracket search for j_({nu},{k}) exceeded supported range"
            )
        f_hi = _sign_value(nu, hi)
        if f_lo == 0.0 or (f_lo > 0.0) != (f_hi > 0.0):
            found += 1
            if found == k:
                break
        lo, f_lo = hi, f_hi
    a, b = lo, hi
    fa = _sign_value(nu, a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a < 4e-16 * max(1.0, mid):
            break
        fm = _sign_value(nu, mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (fa > 0.0):
            a, fa = mid, fm
        else:
            b = mid
    root = 0.5 * (a + b)
    if abs(bessel_j(nu, root)) > 1e-9:
        raise SolverError(f"bisection for j_({nu},{k}) landed off the zero")
    return root


@dataclass(frozen=True)
class BesselZeroTable:
    """Ascending positive zeros j_{nu,1..K} with verification metadata."""

    order: float
    zeros: tuple[float, ...]
    tolerance: float

    @classmethod
    def compute(cls, nu: float, count: int, tolerance: float = 1e-10) -> "BesselZeroTable":
        zeros = tuple(bessel_zero(nu, k) for k in range(1, count + 1))
        prev = 0.0
        for k, z in enumerate(zeros, start=1):
            if not (prev < z <= prev + math.pi + nu + 1.0 if k > 1 else z > 0.0):
                raise SolverError(f"zero table bracket violated at j_({nu},{k})")
            if abs(bessel_j(nu, z)) > tolerance:
                raise SolverError(f"|J_{nu}(j_{k})| exceeds {tolerance}")
            prev = z
        return cls(order=nu, zeros=zeros, tolerance=tolerance)
