"""The separation statistic ``Psi_N(b)`` and its scan over band widths.

For a band half-width ``b`` around a reference point, observations closer
than ``b`` are *ordinary* and the rest *abnormal*.  With ``S1``/``S2`` the
sums over the two groups and ``n1``/``n2`` their sizes,

    Psi_N(b) = (n2 * S1 - n1 * S2) / N**2,

and the decision statistic is ``J = max_b |Psi_N(b)|``.  Because ``Psi_N`` is
piecewise constant in ``b`` and the ordinary sets are nested, a scan only
needs the observations sorted by deviation and one prefix sum, which gives an
``O(N log N)`` evaluation over any grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import BandPartition, DetectionConfig, EmptyGrid, Sample, validate_sample


@dataclass(frozen=True, eq=False)
class ScanResult:
    grid: np.ndarray
    psi_values: np.ndarray
    n1: np.ndarray
    J: float
    b_star: float
    center: float

    @property
    def index(self) -> int:
        """Position of ``b_star`` in the grid."""
        return int(np.argmax(np.abs(self.psi_values)))

    @property
    def psi_at_b_star(self) -> float:
        return float(self.psi_values[self.index])


def sample_mean(s: Sample | np.ndarray) -> float:
    """Arithmetic mean, computed around the first observation.

    Centering first makes a constant sample return its value exactly.
    """
    x = validate_sample(s).values
    x0 = x[0]
    return float(x0 + np.mean(x - x0))


def partition_by_band(s: Sample | np.ndarray, center: float, b: float) -> BandPartition:
    """Ordinary iff ``|x - center| < b``; everything else (ties included) is abnormal."""
    if b < 0:
        raise ValueError("band half-width must be nonnegative")
    x = validate_sample(s).values
    return BandPartition.from_mask(b, np.abs(x - center) < b)


def _exact_sum(values: np.ndarray) -> Fraction:
    return sum(map(Fraction, values.tolist()), Fraction(0))


def psi(s: Sample | np.ndarray, p: BandPartition) -> float:
    """``Psi_N(b)`` from its definition ``(n2*S1 - n1*S2) / N**2``.

    Evaluated in exact rational arithmetic and rounded once, so the value
    is correctly rounded even when the two terms nearly cancel.
    """
    x = validate_sample(s).values
    n = x.size
    s1 = _exact_sum(x[p.ordinary_indices])
    s2 = _exact_sum(x[p.abnormal_indices])
    return float((p.n2 * s1 - p.n1 * s2) / n**2)


def psi_total_form(s: Sample | np.ndarray, p: BandPartition) -> float:
    """Equivalent form ``(N*S1 - n1*sum(x)) / N**2`` used in the error bounds.

    Exact like :func:`psi`, so the two forms agree bit for bit.
    """
    x = validate_sample(s).values
    n = x.size
    s1 = _exact_sum(x[p.ordinary_indices])
    return float((n * s1 - p.n1 * _exact_sum(x)) / n**2)


def breakpoint_grid(deviations: np.ndarray, b_max: float | None = None) -> np.ndarray:
    """Every distinct positive deviation (each one starts a new partition).

    When ``b_max`` cuts through the deviations, ``b_max`` itself is appended
    since it realises one more partition.  Returns ``[b_max or 1.0]`` when no
    deviation is positive.
    """
    d = np.unique(deviations)
    d = d[d > 0]
    if b_max is not None:
        top = d[-1] if d.size else 0.0
        d = d[d <= b_max]
        if b_max < top and (d.size == 0 or d[-1] < b_max):
            d = np.append(d, b_max)
    if d.size == 0:
        return np.array([b_max if b_max is not None else 1.0])
    return d


def geometric_grid(deviations: np.ndarray, n_grid: int = 200, b_max: float | None = None) -> np.ndarray:
    """``n_grid`` points spaced geometrically from ``top/n_grid`` to ``top``.

    ``top`` is the largest deviation, capped at ``b_max``.
    """
    top = float(np.max(deviations)) if np.size(deviations) else 0.0
    if b_max is not None:
        top = min(top, b_max) if top > 0 else b_max
    if top <= 0:
        return np.array([1.0])
    if n_grid == 1:
        return np.array([top])
    return np.geomspace(top / n_grid, top, n_grid)


def make_grid(deviations: np.ndarray, cfg: DetectionConfig) -> np.ndarray:
    if isinstance(cfg.grid, tuple):
        g = np.asarray(cfg.grid, dtype=float)
        if cfg.b_max is not None:
            g = g[g <= cfg.b_max]
            if g.size == 0:
                raise EmptyGrid()
        return g
    if cfg.grid == "breakpoints":
        return breakpoint_grid(deviations, cfg.b_max)
    return geometric_grid(deviations, cfg.n_grid, cfg.b_max)


def nested_scan(values: np.ndarray, keys: np.ndarray, grid: np.ndarray, strict: bool) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``Psi`` when observation ``i`` is ordinary iff ``keys[i] < b``
    (``strict``) or ``keys[i] <= b``.

    Returns ``(psi_values, n1)`` aligned with ``grid``.
    """
    n = values.size
    order = np.argsort(keys, kind="stable")
    k_sorted = keys[order]
    prefix = np.concatenate(([0.0], np.cumsum(values[order])))
    total = prefix[-1]
    n1 = np.searchsorted(k_sorted, grid, side="left" if strict else "right")
    s1 = prefix[n1]
    n2 = n - n1
    psi_values = (n2 * s1 - n1 * (total - s1)) / n**2
    return psi_values, n1


def interval_scan(values: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``Psi`` when observation ``i`` is ordinary iff ``lower[j] <= values[i] <= upper[j]``.

    One column per pair ``(lower[j], upper[j])``; the sets need not be nested.
    """
    n = values.size
    v = np.sort(values)
    prefix = np.concatenate(([0.0], np.cumsum(v)))
    total = prefix[-1]
    lo = np.searchsorted(v, lower, side="left")
    hi = np.searchsorted(v, upper, side="right")
    n1 = np.maximum(hi - lo, 0)
    s1 = np.where(hi > lo, prefix[np.maximum(hi, lo)] - prefix[lo], 0.0)
    n2 = n - n1
    return (n2 * s1 - n1 * (total - s1)) / n**2, n1


def _result(grid: np.ndarray, psi_values: np.ndarray, n1: np.ndarray, center: float) -> ScanResult:
    i = int(np.argmax(np.abs(psi_values)))
    return ScanResult(
        grid=grid,
        psi_values=psi_values,
        n1=n1,
        J=float(abs(psi_values[i])),
        b_star=float(grid[i]),
        center=float(center),
    )


def scan(s: Sample | np.ndarray, center: float, grid: np.ndarray) -> ScanResult:
    """Evaluate ``Psi_N`` on ``grid`` around ``center`` and locate its maximum.

    ``b_star`` is the smallest grid point attaining ``J``.
    """
    x = validate_sample(s).values
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise EmptyGrid()
    if np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing and positive")
    psi_values, n1 = nested_scan(x, np.abs(x - center), g, strict=True)
    return _result(g, psi_values, n1, center)


def scan_sample(s: Sample | np.ndarray, cfg: DetectionConfig, center: float | None = None) -> ScanResult:
    """Scan around ``center`` (default: the sample mean) on the grid ``cfg`` asks for."""
    x = validate_sample(s).values
    c = sample_mean(x) if center is None else center
    grid = make_grid(np.abs(x - c), cfg)
    return scan(x, c, grid)
