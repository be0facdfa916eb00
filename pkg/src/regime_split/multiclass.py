"""Recursive detection of several switching classes in a univariate sample.

Each step takes the histogram mode of the working sample as the reference
point, scans bands ``0 < b <= B`` around it and tests ``J`` against the
threshold.  On rejection the class around the mode is removed and the
procedure repeats on what is left, until homogeneity is accepted, the
sample runs out or ``max_classes`` is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .core import (
    DetectionConfig,
    DetectionReport,
    DomainError,
    BandPartition,
    RegimeSplitError,
    Sample,
    require_size,
    validate_sample,
)
from .statistic import make_grid, scan

Peel = Literal["magnitude", "band"]
StopReason = Literal["accepted", "exhausted", "max_classes"]


class MaxClassesExceeded(RegimeSplitError):
    """Recorded in :attr:`MulticlassReport.stop_reason`, never raised by the detector."""


def default_bins(n: int) -> int:
    return max(2, math.ceil(math.sqrt(n)))


def histogram_mode(s: Sample | np.ndarray, bins: int | None = None, n_min: int = 1) -> float:
    """Midpoint of the fullest histogram bin (leftmost on ties).

    Bins span ``[min, max]`` of the sample; ``bins`` defaults to
    ``ceil(sqrt(N))``.
    """
    x = validate_sample(s).values
    require_size(x.size, n_min)
    k = default_bins(x.size) if bins is None else int(bins)
    if k < 2:
        raise DomainError("need at least 2 bins")
    counts, edges = np.histogram(x, bins=k)
    i = int(np.argmax(counts))
    return float((edges[i] + edges[i + 1]) / 2)


@dataclass(frozen=True, eq=False)
class MulticlassReport:
    """Outcome of recursive peeling.

    ``k_hat`` counts rejecting steps (switches; classes are ``k_hat + 1``).
    ``epsilon_total`` is the first step's abnormal fraction, an estimate of
    the combined weight of all switched classes.  ``class_fractions`` holds
    the fraction of the original sample removed at each later rejecting
    step followed by what remained at the end, all relative to the original
    ``N``.
    """

    k_hat: int
    class_fractions: tuple[float, ...]
    class_centers: tuple[float, ...]
    peel_trace: tuple[DetectionReport, ...]
    epsilon_total: float | None
    stop_reason: StopReason
    n: int
    diagnostics: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        rejecting = sum(r.decision == "switches" for r in self.peel_trace)
        if rejecting != self.k_hat:
            raise DomainError("k_hat must count the rejecting steps")
        if self.stop_reason == "accepted" and len(self.peel_trace) != self.k_hat + 1:
            raise DomainError("an accepted run ends with one homogeneous step")
        if any(not 0 < f < 1 for f in self.class_fractions) and self.k_hat:
            raise DomainError("class fractions must lie in (0, 1)")
        if sum(self.class_fractions) > 1 + 1e-12:
            raise DomainError("class fractions cannot sum above 1")

    @property
    def n_classes(self) -> int:
        return self.k_hat + 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "k_hat": self.k_hat,
            "n_classes": self.n_classes,
            "epsilon_total": self.epsilon_total,
            "class_fractions": list(self.class_fractions),
            "class_centers": list(self.class_centers),
            "stop_reason": self.stop_reason,
            "N": self.n,
            "peel_trace": [r.to_dict() for r in self.peel_trace],
            "diagnostics": list(self.diagnostics),
        }


@dataclass(frozen=True)
class ModeStepStatistic:
    """``J`` of one peeling step (mode reference, bands up to ``B``); hashable
    so Monte Carlo thresholds can be cached per working size."""

    cfg: DetectionConfig
    B: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "cfg", _step_config(self.cfg, self.B).replace(threshold=None))

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        c = histogram_mode(x)
        return scan(x, c, make_grid(np.abs(x - c), self.cfg)).J


def _step_config(cfg: DetectionConfig, B: float) -> DetectionConfig:
    b_max = B if cfg.b_max is None else min(B, cfg.b_max)
    return cfg.replace(b_max=b_max, variant="symmetric", phi=None)


def _step_report(res, part: BandPartition, C: float) -> DetectionReport:
    if res.J <= C:
        return DetectionReport(res.J, res.b_star, C, "homogeneous", part, center=res.center)
    return DetectionReport(
        res.J, res.b_star, C, "switches", part, epsilon_hat=part.n2 / part.n, center=res.center
    )


def detect_multiclass(
    s: Sample | np.ndarray,
    cfg: DetectionConfig,
    C: float | None = None,
    B: float = 1.0,
    max_classes: int = 10,
    peel: Peel = "magnitude",
) -> MulticlassReport:
    """Estimate the number of switching classes by recursive peeling.

    Parameters
    ----------
    s : Sample or array_like
        Observations.
    cfg : DetectionConfig
        Grid settings, ``n_min`` (the working sample must stay at least this
        large) and, when ``C`` is omitted, the threshold spec, resolved anew
        for every working size.
    C : float, optional
        Fixed threshold for every step.
    B : float
        Minimum separation between class magnitudes; the scan is limited to
        ``0 < b <= B``.
    max_classes : int
        Upper bound on the number of rejecting steps.
    peel : {"magnitude", "band"}
        What a rejecting step removes.  ``"band"`` drops the ordinary
        observations ``|x - m| < b*`` around the mode ``m``.
        ``"magnitude"`` keeps only ``|x| >= |m| + b*``, i.e. it also drops the
        inner tail, since classes are ordered by ``|h|``.

    Raises
    ------
    SampleTooSmall
        If the original sample is below ``cfg.n_min``.
    """
    if not B > 0:
        raise DomainError("B must be positive")
    if max_classes < 1:
        raise DomainError("max_classes must be at least 1")
    if peel not in ("magnitude", "band"):
        raise DomainError(f"unknown peel rule {peel!r}")
    x = validate_sample(s).values
    n0 = x.size
    require_size(n0, cfg.n_min)
    step_cfg = _step_config(cfg, B)
    statistic = ModeStepStatistic(cfg, B)
    trace: list[DetectionReport] = []
    sizes: list[int] = []
    centers: list[float] = []
    stop: StopReason = "exhausted"
    diagnostics: list[str] = []
    work = x
    while work.size >= cfg.n_min:
        center = histogram_mode(work)
        res = scan(work, center, make_grid(np.abs(work - center), step_cfg))
        if C is not None:
            c = float(C)
        elif cfg.threshold is not None:
            c = cfg.threshold.resolve(work.size, statistic)
        else:
            raise DomainError("no threshold given and none configured")
        ordinary = np.abs(work - center) < res.b_star
        rep = _step_report(res, BandPartition.from_mask(res.b_star, ordinary), c)
        trace.append(rep)
        sizes.append(work.size)
        centers.append(center)
        if rep.decision == "homogeneous":
            stop = "accepted"
            break
        if peel == "band":
            work = work[~ordinary]
        else:
            work = work[np.abs(work) >= abs(center) + res.b_star]
        if len(trace) >= max_classes:
            stop = "max_classes"
            diagnostics.append("MaxClassesExceeded")
            break
    k_hat = sum(r.decision == "switches" for r in trace)
    fractions: list[float] = []
    if k_hat:
        # removed at each later rejecting step, then the final remainder
        after = sizes[1:] + [work.size]
        for i in range(1, k_hat):
            removed = sizes[i] - after[i]
            if removed:
                fractions.append(removed / n0)
        if work.size:
            fractions.append(work.size / n0)
    eps_total = trace[0].epsilon_hat if trace and trace[0].decision == "switches" else None
    return MulticlassReport(
        k_hat=k_hat,
        class_fractions=tuple(fractions),
        class_centers=tuple(centers),
        peel_trace=tuple(trace),
        epsilon_total=eps_total,
        stop_reason=stop,
        n=n0,
        diagnostics=tuple(diagnostics),
    )
