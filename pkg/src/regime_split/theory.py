"""Closed-form theoretical quantities: exponential error bounds, the
population separation curve, its optimal band and the chi-square type
information distance between two densities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .core import DomainError, RegimeSplitError

Density = Callable[[float], float]

QUAD_EPSABS = 1e-10
TAIL_SD = 12.0


class NoSuchLag(RegimeSplitError):
    pass


class QuadratureFailure(RegimeSplitError):
    pass


class NoRootInRange(RegimeSplitError):
    pass


class DivisionBySupportGap(RegimeSplitError, ZeroDivisionError):
    pass


@dataclass(frozen=True)
class CramerConstants:
    """Constants of the uniform Cramer condition ``E exp(t y) <= exp(g t^2 / 2)``, ``|t| <= H``."""

    g: float
    H: float

    def __post_init__(self) -> None:
        if not (self.g > 0 and self.H > 0):
            raise DomainError("g and H must be positive")


def gaussian_cramer(sigma: float = 1.0) -> CramerConstants:
    """``g = sigma^2``; the Gaussian bound holds for every ``t`` so ``H = 10/sigma`` is a convention."""
    return CramerConstants(sigma**2, 10.0 / sigma)


@dataclass(frozen=True)
class MixingProfile:
    """Mixing coefficients ``psi(1) >= psi(2) >= ... >= 0``; the last value
    is taken to persist beyond the listed lags."""

    psi_coefficients: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.psi_coefficients)
        if any(v < 0 for v in c):
            raise DomainError("mixing coefficients must be nonnegative")
        if any(b > a for a, b in zip(c, c[1:])):
            raise DomainError("mixing coefficients must be nonincreasing")
        object.__setattr__(self, "psi_coefficients", c)

    def at(self, lag: int) -> float:
        c = self.psi_coefficients
        if not c:
            return 0.0
        return c[min(lag, len(c)) - 1]


def gamma_of(x: float, cc: CramerConstants) -> float:
    """``gamma(x)`` with ``ln(1 + gamma) = x^2/(4g)`` for ``x <= gH`` and ``xH/4`` beyond."""
    if not x > 0:
        raise DomainError("x must be positive")
    expo = x * x / (4 * cc.g) if x <= cc.g * cc.H else x * cc.H / 4
    return math.expm1(expo)


def phi0_for_gamma(gamma: float, mp: MixingProfile) -> int:
    """Smallest lag ``l >= 1`` with ``psi(l) <= gamma``."""
    for lag in range(1, len(mp.psi_coefficients) + 1):
        if mp.at(lag) <= gamma:
            return lag
    if mp.at(len(mp.psi_coefficients) + 1) <= gamma:
        return max(1, len(mp.psi_coefficients) + 1)
    raise NoSuchLag(f"mixing coefficients never fall below {gamma}")


def phi0_of(x: float, mp: MixingProfile, cc: CramerConstants) -> int:
    return phi0_for_gamma(gamma_of(x, cc), mp)


def _rate(v: float, phi0: int, cc: CramerConstants) -> float:
    if not v > 0:
        raise DomainError("argument must be positive")
    if phi0 < 1:
        raise DomainError("phi0 must be at least 1")
    return min(cc.H * v / (8 * phi0), v * v / (16 * phi0**2 * cc.g))


def type1_rate(C: float, phi0: int, cc: CramerConstants) -> float:
    """Exponent ``L(C) = min(HC/(8 phi0), C^2/(16 phi0^2 g))``."""
    return _rate(C, phi0, cc)


def type2_rate(delta: float, phi0: int, cc: CramerConstants) -> float:
    """Exponent ``L(delta)``, same form with ``delta = max|Psi| - C``."""
    return _rate(delta, phi0, cc)


def error_bound(rate: float, phi0: int, n: int) -> float:
    """``min(1, 4 phi0 exp(-rate * N))``."""
    return min(1.0, 4 * phi0 * math.exp(-rate * n))


def type1_bound(C: float, phi0: int, cc: CramerConstants, n: int) -> float:
    return error_bound(type1_rate(C, phi0, cc), phi0, n)


def type2_bound(delta: float, phi0: int, cc: CramerConstants, n: int) -> float:
    """Trivial bound ``1`` when ``delta <= 0`` (threshold above the signal)."""
    if delta <= 0:
        return 1.0
    return error_bound(type2_rate(delta, phi0, cc), phi0, n)


@dataclass(frozen=True)
class GaussianDensity:
    """Picklable normal density that also reports its location and scale."""

    mu: float = 0.0
    sigma: float = 1.0

    def __call__(self, x: float) -> float:
        z = (x - self.mu) / self.sigma
        return math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))


def _quad(fn: Callable[[float], float], a: float, b: float, points: Sequence[float] = ()) -> float:
    if b <= a:
        return 0.0
    pts = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, a, b, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=500, points=pts)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not math.isfinite(val):
        raise QuadratureFailure("quadrature returned a non-finite value")
    return float(val)


def _mixture(eps: float, h: float, f0: Density) -> Density:
    return lambda x: (1 - eps) * f0(x) + eps * f0(x - h)


def _scale(f0: Density, sd: float | None) -> float:
    if sd is not None:
        return sd
    return getattr(f0, "sigma", 1.0)


def theoretical_psi(b: float, epsilon: float, h: float, f0: Density, sd: float | None = None) -> float:
    """Population curve ``Psi(b) = r(b) - eps h d(b)`` over ``[eps h - b, eps h + b]``.

    ``r`` and ``d`` are the first and zeroth moments of the mixture over the
    band.  Limits are clipped to ``12`` standard deviations beyond the
    component centers (``sd`` defaults to ``f0.sigma`` or 1).
    """
    if not b > 0:
        raise DomainError("b must be positive")
    f = _mixture(epsilon, h, f0)
    m = epsilon * h
    w = TAIL_SD * _scale(f0, sd)
    a = max(m - b, min(0.0, h) - w)
    c = min(m + b, max(0.0, h) + w)
    pts = (0.0, h)
    r = _quad(lambda x: x * f(x), a, c, pts)
    d = _quad(f, a, c, pts)
    return r - m * d


def optimal_band(
    epsilon: float, h: float, f0: Density, b_max: float | None = None, sd: float | None = None
) -> float:
    """Root of ``f(eps h + b) = f(eps h - b)``, the stationarity condition of ``Psi``.

    Sign changes are bracketed on 64 geometric subdivisions of
    ``(0, b_max]`` and refined by bisection; among several roots the one with
    the largest ``|Psi|`` wins.

    Raises
    ------
    DomainError
        If ``eps * h == 0``.
    NoRootInRange
        If no sign change is found.
    """
    m = epsilon * h
    if m == 0:
        raise DomainError("optimal band needs eps*h != 0")
    s = _scale(f0, sd)
    if b_max is None:
        b_max = abs(h) + TAIL_SD * s
    f = _mixture(epsilon, h, f0)
    g = lambda b: f(m + b) - f(m - b)  # noqa: E731
    pts = np.geomspace(b_max * 1e-6, b_max, 65)
    vals = [g(b) for b in pts]
    roots = []
    for i in range(64):
        if vals[i] * vals[i + 1] < 0:
            lo, hi, glo = pts[i], pts[i + 1], vals[i]
            while hi - lo > 1e-13 * max(1.0, hi):
                mid = 0.5 * (lo + hi)
                gm = g(mid)
                if gm == 0:
                    lo = hi = mid
                    break
                if (gm < 0) == (glo < 0):
                    lo, glo = mid, gm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    if not roots:
        raise NoRootInRange(f"no root of the band condition in (0, {b_max}]")
    if len(roots) == 1:
        return float(roots[0])
    return float(max(roots, key=lambda b: abs(theoretical_psi(b, epsilon, h, f0, sd))))


def max_theoretical_psi(epsilon: float, h: float, f0: Density, sd: float | None = None) -> float:
    """``max_b |Psi(b)|``, attained at :func:`optimal_band`."""
    return abs(theoretical_psi(optimal_band(epsilon, h, f0, sd=sd), epsilon, h, f0, sd))


def info_bound_J(
    epsilon: float, f0: Density, f1: Density, window: tuple[float, float] | None = None
) -> float:
    """``J(eps) = integral (f0 - f1)^2 / f_eps`` with ``f_eps = (1 - eps) f0 + eps f1``.

    ``window`` defaults to 12 standard deviations around both components
    when they are :class:`GaussianDensity` instances.

    Raises
    ------
    DivisionBySupportGap
        If ``f_eps`` vanishes where ``f0 != f1``.
    """
    if not 0 <= epsilon <= 1:
        raise DomainError("epsilon must lie in [0, 1]")
    if window is None:
        comps = [f0, f1]
        if not all(isinstance(c, GaussianDensity) for c in comps):
            raise DomainError("window is required for non-Gaussian densities")
        window = (
            min(c.mu - TAIL_SD * c.sigma for c in comps),  # type: ignore[attr-defined]
            max(c.mu + TAIL_SD * c.sigma for c in comps),  # type: ignore[attr-defined]
        )

    def integrand(x: float) -> float:
        a, b = f0(x), f1(x)
        num = (a - b) ** 2
        if num == 0:
            return 0.0
        fe = (1 - epsilon) * a + epsilon * b
        if fe <= 0:
            raise DivisionBySupportGap(f"mixture density vanishes at {x} while f0 != f1")
        return num / fe

    pts = [c.mu for c in (f0, f1) if isinstance(c, GaussianDensity)]
    return max(0.0, _quad(integrand, window[0], window[1], pts))
