"""Multivariate detection: vector separation statistic and the norm reduction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binary import _threshold, _report
from .core import (
    BandPartition,
    DetectionConfig,
    DetectionReport,
    EmptyGrid,
    VectorSample,
    require_size,
    validate_vectors,
)
from .multiclass import MulticlassReport, Peel, detect_multiclass
from .statistic import ScanResult, make_grid


@dataclass(frozen=True, eq=False)
class VectorScanResult:
    grid: np.ndarray
    psi_vectors: np.ndarray
    norms: np.ndarray
    J: float
    b_star: float
    center: np.ndarray


def vector_mean(vs: VectorSample | np.ndarray) -> np.ndarray:
    v = validate_vectors(vs).vectors
    # column by column, centered on the first row as in the univariate mean
    return np.array([v[0, j] + np.mean(v[:, j] - v[0, j]) for j in range(v.shape[1])])


def distances(v: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Euclidean distances; exactly ``|x - c|`` in dimension one."""
    diff = v - center
    if v.shape[1] == 1:
        return np.abs(diff[:, 0])
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def vector_scan(vs: VectorSample | np.ndarray, center: np.ndarray, grid: np.ndarray) -> VectorScanResult:
    """Vector ``Psi_N(b) = (N2 sum_ord - N1 sum_abn)/N^2`` with ``J = max ||Psi||``."""
    v = validate_vectors(vs).vectors
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise EmptyGrid()
    n = v.shape[0]
    d = distances(v, center)
    order = np.argsort(d, kind="stable")
    prefix = np.vstack([np.zeros(v.shape[1]), np.cumsum(v[order], axis=0)])
    total = prefix[-1]
    n1 = np.searchsorted(d[order], g, side="left")
    s1 = prefix[n1]
    psi = ((n - n1)[:, None] * s1 - n1[:, None] * (total - s1)) / n**2
    norms = np.abs(psi[:, 0]) if v.shape[1] == 1 else np.sqrt(np.einsum("ij,ij->i", psi, psi))
    i = int(np.argmax(norms))
    return VectorScanResult(g, psi, norms, float(norms[i]), float(g[i]), np.asarray(center, dtype=float))


@dataclass(frozen=True)
class VectorStatistic:
    """``vectors -> J`` for Monte Carlo calibration."""

    cfg: DetectionConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "cfg", self.cfg.replace(threshold=None))

    def __call__(self, v: np.ndarray) -> float:
        v = validate_vectors(v).vectors
        c = vector_mean(v)
        return vector_scan(v, c, make_grid(distances(v, c), self.cfg)).J


def detect_multivariate_binary(
    vs: VectorSample | np.ndarray, cfg: DetectionConfig, C: float | None = None
) -> DetectionReport:
    """Binary detection on vectors; on rejection ``a* = theta/eps*`` is a vector.

    In dimension one the report coincides with the univariate symmetric
    detector (scalars instead of length-1 vectors).
    """
    v = validate_vectors(vs).vectors
    require_size(v.shape[0], cfg.n_min)
    theta = vector_mean(v)
    d = distances(v, theta)
    res = vector_scan(v, theta, make_grid(d, cfg))
    if C is None and cfg.threshold is not None:
        c = cfg.threshold.resolve(v.shape[0], VectorStatistic(cfg))
    else:
        c = _threshold(cfg, C, v.shape[0])
    part = BandPartition.from_mask(res.b_star, d < res.b_star)
    scalar = v.shape[1] == 1
    center = float(theta[0]) if scalar else theta
    rep = _report(ScanResult(res.grid, res.norms, None, res.J, res.b_star, 0.0), part, c, h_from_center=False)  # type: ignore[arg-type]
    h = None
    if rep.epsilon_hat is not None:
        h = center / rep.epsilon_hat
    return DetectionReport(
        rep.J, rep.b_star, rep.C, rep.decision, part, rep.epsilon_hat, h, center, rep.diagnostics
    )


def norms(vs: VectorSample | np.ndarray) -> np.ndarray:
    v = validate_vectors(vs).vectors
    return distances(v, np.zeros(v.shape[1]))


def detect_multivariate_multiclass(
    vs: VectorSample | np.ndarray,
    cfg: DetectionConfig,
    C: float | None = None,
    B: float = 1.0,
    max_classes: int = 10,
    peel: Peel = "magnitude",
) -> MulticlassReport:
    """Multiclass detection on the Euclidean norms ``||X_n||``."""
    return detect_multiclass(norms(vs), cfg, C, B, max_classes, peel)
