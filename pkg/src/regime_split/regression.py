"""Switching-coefficient regression reduced to univariate detection.

Each coefficient gets its own univariate sequence and the binary detector
runs on every sequence.  Two sequences are supported:

* a single response vector ``y`` (length ``N``) yields the influence
  sequence ``beta_i = beta_hat + N (X'X)^{-1} x_i r_i``, whose average is
  exactly ``beta_hat``;
* a response panel ``y`` (``n x R``, one column per replicate regression on
  the shared design) yields the per-replicate OLS estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .binary import detect_symmetric
from .core import DetectionConfig, DetectionReport, DimensionMismatch, InvalidSample, RegimeSplitError, Sample


class RankDeficient(RegimeSplitError, ValueError):
    pass


def trend_design(n: int) -> np.ndarray:
    """Columns ``1`` and ``t`` for ``t = 1..n``."""
    t = np.arange(1, n + 1, dtype=float)
    return np.column_stack([np.ones(n), t])


@dataclass(frozen=True, eq=False)
class RegressionData:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim not in (1, 2) or y.shape[0] != X.shape[0]:
            raise DimensionMismatch("X must be N x k and y must have N rows")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise InvalidSample("regression data must be finite")
        n, k = X.shape
        if n <= k:
            raise RankDeficient(f"need more observations ({n}) than coefficients ({k})")
        if np.linalg.matrix_rank(X) < k:
            raise RankDeficient("design matrix does not have full column rank")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def k(self) -> int:
        return int(self.X.shape[1])

    @property
    def is_panel(self) -> bool:
        return self.y.ndim == 2


@dataclass(frozen=True, eq=False)
class OLSFit:
    beta: np.ndarray
    residuals: np.ndarray
    xtx_inv: np.ndarray


def ols_fit(d: RegressionData) -> OLSFit:
    """``beta_hat = (X'X)^{-1} X'y`` and residuals; columnwise for a panel."""
    X = d.X
    xtx = X.T @ X
    try:
        xtx_inv = np.linalg.inv(xtx)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("X'X is singular") from exc
    beta, *_ = np.linalg.lstsq(X, d.y, rcond=None)
    return OLSFit(beta, d.y - X @ beta, xtx_inv)


def influence_sequence(d: RegressionData, leverage: bool = False) -> np.ndarray:
    """``N x k`` matrix of ``beta_hat + N (X'X)^{-1} x_i r_i``.

    With ``leverage=True`` each term is divided by ``N h_ii`` instead, the
    inverse-leverage rescaling.
    """
    if d.is_panel:
        raise DimensionMismatch("influence sequences need a single response vector")
    fit = ols_fit(d)
    n = d.X.shape[0]
    terms = (d.X @ fit.xtx_inv) * fit.residuals[:, None]
    if leverage:
        h = np.einsum("ij,jk,ik->i", d.X, fit.xtx_inv, d.X)
        return fit.beta + terms / h[:, None]
    return fit.beta + n * terms


def coefficient_sequence(d: RegressionData, j: int, leverage: bool = False) -> Sample:
    """Univariate sequence carrying coefficient ``j`` (0-based).

    A panel gives the ``R`` replicate estimates of coefficient ``j``; a single
    response gives the influence sequence.
    """
    if not 0 <= j < d.k:
        raise IndexError(f"coefficient index {j} out of range for k={d.k}")
    if d.is_panel:
        seq = ols_fit(d).beta[j]
    else:
        seq = influence_sequence(d, leverage)[:, j]
    seq = np.ascontiguousarray(seq)
    seq.setflags(write=False)
    return Sample(seq)


@dataclass(frozen=True, eq=False)
class RegressionSwitchReport:
    per_coefficient: tuple[DetectionReport, ...]
    any_switch: bool
    epsilon_hat: float | None
    pooled_coefficient: int | None

    def __post_init__(self) -> None:
        if self.any_switch != any(r.decision == "switches" for r in self.per_coefficient):
            raise ValueError("any_switch must match the per-coefficient decisions")

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_coefficient": [r.to_dict() for r in self.per_coefficient],
            "any_switch": self.any_switch,
            "epsilon_hat": self.epsilon_hat,
            "pooled_coefficient": self.pooled_coefficient,
        }


def detect_switching_regression(
    d: RegressionData, cfg: DetectionConfig, C: float | None = None, leverage: bool = False
) -> RegressionSwitchReport:
    """Run the symmetric detector on every coefficient sequence.

    The pooled ``epsilon_hat`` is taken from the rejecting coefficient with
    the largest ``J`` (smallest index on ties).
    """
    reports = tuple(detect_symmetric(coefficient_sequence(d, j, leverage), cfg, C) for j in range(d.k))
    rejecting = [(r.J, -j, j) for j, r in enumerate(reports) if r.decision == "switches"]
    if not rejecting:
        return RegressionSwitchReport(reports, False, None, None)
    j = max(rejecting)[2]
    return RegressionSwitchReport(reports, True, reports[j].epsilon_hat, j)
