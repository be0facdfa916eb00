"""Binary mixture detection and estimation.

Three variants share one pipeline (reference point, band scan, threshold
test, estimates):

* ``symmetric``: bands ``|x - theta| < b`` around the sample mean, for
  shift mixtures ``(1 - eps) f0(x) + eps f0(x - h)``;
* ``asymmetric``: centered observations are ordinary when
  ``-phi(b) <= y <= b`` for a caller-supplied ``phi``;
* ``variance_contamination``: squared deviations ``y = (x - mu)^2`` with
  ``theta(1 - phi(b)) <= y <= theta(1 + b)`` and the Gaussian closed form
  ``phi(b) = 1 - b / (e^b - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.special import lambertw

from .core import (
    BandPartition,
    DetectionConfig,
    DetectionReport,
    DomainError,
    RegimeSplitError,
    Sample,
    require_size,
    validate_sample,
)
from .statistic import (
    ScanResult,
    _result,
    interval_scan,
    make_grid,
    nested_scan,
    partition_by_band,
    sample_mean,
    scan,
)


class DegenerateEpsilon(RegimeSplitError):
    """Rejection with an empty abnormal set, so no fraction can be estimated."""


class NoRoot(RegimeSplitError):
    pass


class ZeroDenominator(RegimeSplitError, ZeroDivisionError):
    pass


class NegativePhi(DomainError):
    pass


EPS_LOW = 1e-6
EPS_HIGH = 0.5


@dataclass(frozen=True)
class MixtureEstimate:
    epsilon_hat: float
    h_hat: float
    method: Literal["nonparametric", "consistent_system"]
    theta: float


def nonparametric_estimate(report: DetectionReport) -> MixtureEstimate:
    """``(eps*, h*)`` of a rejecting symmetric report."""
    if report.epsilon_hat is None or report.h_hat is None:
        raise DegenerateEpsilon("report carries no fraction estimate")
    return MixtureEstimate(report.epsilon_hat, float(report.h_hat), "nonparametric", float(report.center))


# ---------------------------------------------------------------------------
# thresholds


def _threshold(cfg: DetectionConfig, C: float | None, n: int) -> float:
    if C is not None:
        if not C > 0:
            raise DomainError("threshold C must be positive")
        return float(C)
    if cfg.threshold is None:
        raise DomainError("no threshold given and none configured")
    return cfg.threshold.resolve(n, BinaryStatistic(cfg))


@dataclass(frozen=True)
class BinaryStatistic:
    """``x -> J`` under a detection config; hashable so thresholds can be cached."""

    cfg: DetectionConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "cfg", self.cfg.replace(threshold=None))

    def __call__(self, x: np.ndarray) -> float:
        return binary_scan(x, self.cfg)[0].J


# ---------------------------------------------------------------------------
# symmetric


def detect_symmetric(s: Sample | np.ndarray, cfg: DetectionConfig, C: float | None = None) -> DetectionReport:
    """Test for a shift mixture and estimate ``eps* = N2(b*)/N``, ``h* = theta/eps*``.

    Parameters
    ----------
    s : Sample or array_like
        Observations.
    cfg : DetectionConfig
        Grid and size settings.
    C : float, optional
        Decision threshold; resolved from ``cfg.threshold`` when omitted.

    Raises
    ------
    SampleTooSmall
        If ``N < cfg.n_min``.
    """
    x = validate_sample(s).values
    require_size(x.size, cfg.n_min)
    res = _symmetric_scan(x, cfg)
    c = _threshold(cfg, C, x.size)
    part = partition_by_band(x, res.center, res.b_star)
    return _report(res, part, c, h_from_center=True)


def _symmetric_scan(x: np.ndarray, cfg: DetectionConfig) -> ScanResult:
    theta = sample_mean(x)
    return scan(x, theta, make_grid(np.abs(x - theta), cfg))


def _report(res: ScanResult, part: BandPartition, C: float, h_from_center: bool, center=None) -> DetectionReport:
    center = res.center if center is None else center
    if res.J <= C:
        return DetectionReport(res.J, res.b_star, C, "homogeneous", part, center=center)
    if part.n2 == 0:
        return DetectionReport(
            res.J, res.b_star, C, "switches", part, center=center, diagnostics=("DegenerateEpsilon",)
        )
    eps = part.n2 / part.n
    h = res.center / eps if h_from_center else None
    return DetectionReport(res.J, res.b_star, C, "switches", part, epsilon_hat=eps, h_hat=h, center=center)


# ---------------------------------------------------------------------------
# consistent estimates


def _consistent_residual(theta: float, b: float, f0: Callable, den: float, eps: float) -> float:
    h = theta / eps
    num = f0(theta - b - h) - f0(theta + b - h)
    return (1.0 - eps) * den - eps * num


def consistent_estimates(
    s: Sample | np.ndarray,
    b_star: float,
    f0: Callable[[float], float],
    tol: float = 1e-10,
) -> MixtureEstimate:
    """Solve ``eps*h = theta`` together with the first-order condition at ``b_star``.

    With ``h = theta/eps`` substituted the system is the scalar equation

        (1 - eps) [f0(theta+b) - f0(theta-b)] = eps [f0(theta-b-h) - f0(theta+b-h)],

    bracketed over ``eps`` in ``(1e-6, 0.5]`` (first sign change from below)
    and refined by bisection.

    Raises
    ------
    ZeroDenominator
        If ``f0(theta + b) == f0(theta - b)``.
    NoRoot
        If no sign change is found.
    """
    if not b_star > 0:
        raise DomainError("b_star must be positive")
    theta = sample_mean(s)
    den = f0(theta + b_star) - f0(theta - b_star)
    if den == 0:
        raise ZeroDenominator("f0(theta + b) equals f0(theta - b)")
    if theta == 0:
        raise NoRoot("theta = 0 forces eps*h = 0")
    g = lambda e: _consistent_residual(theta, b_star, f0, den, e)  # noqa: E731
    pts = np.geomspace(EPS_LOW, EPS_HIGH, 65)
    vals = [g(e) for e in pts]
    lo = hi = None
    for i in range(len(pts) - 1):
        if vals[i] == 0:
            lo = hi = pts[i]
            break
        if vals[i] * vals[i + 1] < 0:
            lo, hi = pts[i], pts[i + 1]
            break
    else:
        if vals[-1] == 0:
            lo = hi = pts[-1]
    if lo is None:
        raise NoRoot("no sign change for eps in (1e-6, 0.5]")
    glo = g(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            lo = hi = mid
            break
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    eps = 0.5 * (lo + hi)
    return MixtureEstimate(float(eps), float(theta / eps), "consistent_system", float(theta))


def consistent_residuals(est: MixtureEstimate, b_star: float, f0: Callable[[float], float]) -> tuple[float, float]:
    """Residuals of both equations at an estimate (for solver checks)."""
    e, h, t = est.epsilon_hat, est.h_hat, est.theta
    r1 = e * h - t
    r2 = (1 - e) * (f0(t + b_star) - f0(t - b_star)) - e * (f0(t - b_star - h) - f0(t + b_star - h))
    return float(r1), float(r2)


# ---------------------------------------------------------------------------
# asymmetric


def _phi_value(phi: Callable[[float], float], b: float) -> float:
    v = float(phi(b))
    if v < 0:
        raise NegativePhi(f"phi({b}) = {v} is negative")
    return v


def asymmetric_partition(y: Sample | np.ndarray, b: float, phi: Callable[[float], float]) -> BandPartition:
    """Ordinary iff ``-phi(b) <= y_i <= b`` for already centered ``y``."""
    v = validate_sample(y).values
    lo = -_phi_value(phi, b)
    return BandPartition.from_mask(b, (v >= lo) & (v <= b))


def detect_asymmetric(s: Sample | np.ndarray, cfg: DetectionConfig, C: float | None = None) -> DetectionReport:
    """Asymmetric band detection; only ``eps*`` is estimated."""
    if cfg.phi is None:
        raise DomainError("the asymmetric variant needs a phi function")
    x = validate_sample(s).values
    require_size(x.size, cfg.n_min)
    res = _asymmetric_scan(x, cfg)
    c = _threshold(cfg, C, x.size)
    part = asymmetric_partition(x - res.center, res.b_star, cfg.phi)
    return _report(res, part, c, h_from_center=False)


def _asymmetric_scan(x: np.ndarray, cfg: DetectionConfig) -> ScanResult:
    theta = sample_mean(x)
    y = x - theta
    grid = make_grid(np.abs(y), cfg)
    lower = -np.array([_phi_value(cfg.phi, b) for b in grid])  # type: ignore[arg-type]
    # Psi is translation invariant, so it can be evaluated on y
    psi_values, n1 = interval_scan(y, lower, grid)
    return _result(grid, psi_values, n1, theta)


# ---------------------------------------------------------------------------
# variance contamination


def variance_phi(b: float | np.ndarray) -> float | np.ndarray:
    """``phi(b) = 1 - b/(e^b - 1)``, with the limit ``0`` at ``b = 0``."""
    b_arr = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(b_arr == 0, 1.0, b_arr / np.expm1(b_arr))
    out = 1.0 - ratio
    return float(out) if np.ndim(out) == 0 else out


def variance_entry_band(y: np.ndarray, theta: float) -> np.ndarray:
    """Smallest ``b >= 0`` at which each ``y_i`` becomes ordinary.

    Above ``theta`` the upper bound ``theta(1 + b)`` gives ``b = y/theta - 1``.
    Below it ``b/(e^b - 1) = y/theta`` is solved on the lower Lambert-W
    branch: ``b = -W_{-1}(-r e^{-r}) - r``.  ``y = 0`` never enters.
    """
    r = np.asarray(y, dtype=float) / theta
    out = np.empty_like(r)
    above = r >= 1
    out[above] = r[above] - 1
    below = ~above & (r > 0)
    rr = r[below]
    with np.errstate(all="ignore"):
        out[below] = -lambertw(-rr * np.exp(-rr), k=-1).real - rr
    out[~above & ~below] = np.inf
    return out


def variance_partition(y: np.ndarray, theta: float, b: float) -> BandPartition:
    """Direct rule ``theta(1 - phi(b)) <= y <= theta(1 + b)``."""
    lo = theta * (1 - variance_phi(b))
    return BandPartition.from_mask(b, (y >= lo) & (y <= theta * (1 + b)))


def _variance_scan(x: np.ndarray, cfg: DetectionConfig) -> tuple[ScanResult, np.ndarray, float]:
    mu = sample_mean(x)
    y = (x - mu) ** 2
    theta = float(np.mean(y))
    if theta == 0:
        grid = make_grid(np.zeros(1), cfg)
        return _result(grid, np.zeros(grid.size), np.zeros(grid.size, dtype=int), mu), np.full(x.size, np.inf), 0.0
    entry = variance_entry_band(y, theta)
    grid = make_grid(entry[np.isfinite(entry)], cfg)
    psi_values, n1 = nested_scan(y, entry, grid, strict=False)
    return _result(grid, psi_values, n1, mu), entry, theta


def variance_contamination_detect(
    s: Sample | np.ndarray, cfg: DetectionConfig, C: float | None = None
) -> DetectionReport:
    """Detect variance contamination ``(1 - eps) N(mu, s^2) + eps N(mu, L^2)``.

    The scan runs over squared deviations; ``center`` in the report is the
    estimated mean ``mu`` and only ``eps*`` is estimated.
    """
    x = validate_sample(s).values
    require_size(x.size, cfg.n_min)
    res, entry, _ = _variance_scan(x, cfg)
    c = _threshold(cfg, C, x.size)
    part = BandPartition.from_mask(res.b_star, entry <= res.b_star)
    return _report(res, part, c, h_from_center=False)


# ---------------------------------------------------------------------------
# dispatch


def binary_scan(s: Sample | np.ndarray, cfg: DetectionConfig) -> tuple[ScanResult, str]:
    """Scan under ``cfg.variant`` without thresholding."""
    x = validate_sample(s).values
    if cfg.variant == "symmetric":
        return _symmetric_scan(x, cfg), "symmetric"
    if cfg.variant == "asymmetric":
        return _asymmetric_scan(x, cfg), "asymmetric"
    return _variance_scan(x, cfg)[0], "variance_contamination"


def detect(s: Sample | np.ndarray, cfg: DetectionConfig, C: float | None = None) -> DetectionReport:
    """Run the detector selected by ``cfg.variant``."""
    if cfg.variant == "symmetric":
        return detect_symmetric(s, cfg, C)
    if cfg.variant == "asymmetric":
        return detect_asymmetric(s, cfg, C)
    return variance_contamination_detect(s, cfg, C)


def gaussian_pdf(mu: float = 0.0, sigma: float = 1.0) -> Callable[[float], float]:
    """Scalar normal density, handy as ``f0``."""
    c = 1.0 / (sigma * math.sqrt(2 * math.pi))

    def f(x: float) -> float:
        z = (x - mu) / sigma
        return c * math.exp(-0.5 * z * z)

    return f
