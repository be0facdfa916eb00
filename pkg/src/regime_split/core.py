"""Shared domain types, errors and input validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Sequence

import numpy as np


class RegimeSplitError(Exception):
    """Base class for every error raised by the package."""


class InvalidSample(RegimeSplitError, ValueError):
    pass


class EmptySample(InvalidSample):
    def __init__(self) -> None:
        super().__init__("sample is empty")


class NonFiniteValue(InvalidSample):
    """A NaN or infinite entry; ``index`` is 1-based."""

    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"non-finite value at position {index}")


class DimensionMismatch(InvalidSample):
    pass


class SampleTooSmall(RegimeSplitError, ValueError):
    def __init__(self, n: int, n_min: int) -> None:
        self.n = n
        self.n_min = n_min
        super().__init__(f"sample of size {n} is below the minimum {n_min}")


class EmptyGrid(RegimeSplitError, ValueError):
    def __init__(self) -> None:
        super().__init__("scan grid is empty")


class DomainError(RegimeSplitError, ValueError):
    pass


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered univariate sample of finite reals."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class VectorSample:
    """``N`` observations of dimension ``k``, stored as an ``(N, k)`` array."""

    vectors: np.ndarray

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return self.n


def validate_sample(values: Sample | Sequence[float] | np.ndarray) -> Sample:
    """Check that ``values`` is a nonempty sequence of finite reals.

    Raises
    ------
    EmptySample
        If there are no observations.
    NonFiniteValue
        On the first NaN or infinite entry (1-based position).
    """
    if isinstance(values, Sample):
        return values
    arr = np.array(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySample()
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteValue(int(bad[0]) + 1)
    return Sample(_freeze(arr))


def validate_vectors(vectors: VectorSample | Sequence[Sequence[float]] | np.ndarray) -> VectorSample:
    if isinstance(vectors, VectorSample):
        return vectors
    try:
        arr = np.array(vectors, dtype=float)
    except ValueError as exc:  # ragged input
        raise DimensionMismatch("vectors do not share a common dimension") from exc
    if arr.ndim == 1:
        if arr.size == 0:
            raise EmptySample()
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array of vectors, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise EmptySample()
    if arr.shape[1] == 0:
        raise DimensionMismatch("vectors have dimension 0")
    bad = np.flatnonzero(~np.isfinite(arr).all(axis=1))
    if bad.size:
        raise NonFiniteValue(int(bad[0]) + 1)
    return VectorSample(_freeze(arr))


def require_size(n: int, n_min: int) -> None:
    if n < n_min:
        raise SampleTooSmall(n, n_min)


@dataclass(frozen=True, eq=False)
class BandPartition:
    """Split of a sample into ordinary and abnormal observations at band ``b``.

    Index arrays are 0-based positions into the sample.
    """

    b: float
    ordinary_indices: np.ndarray
    abnormal_indices: np.ndarray

    @property
    def n1(self) -> int:
        return int(self.ordinary_indices.size)

    @property
    def n2(self) -> int:
        return int(self.abnormal_indices.size)

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @classmethod
    def from_mask(cls, b: float, ordinary: np.ndarray) -> "BandPartition":
        ordinary = np.asarray(ordinary, dtype=bool)
        return cls(
            float(b),
            _freeze(np.flatnonzero(ordinary)),
            _freeze(np.flatnonzero(~ordinary)),
        )

    def ordinary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.ordinary_indices] = True
        return mask

    def to_dict(self) -> dict[str, Any]:
        return {"b": self.b, "n1": self.n1, "n2": self.n2}


ThresholdKind = Literal["fixed", "formula", "monte_carlo"]


@dataclass(frozen=True)
class ThresholdSpec:
    """How the decision threshold ``C`` is obtained.

    Use the constructors :meth:`fixed`, :meth:`formula` and
    :meth:`monte_carlo`; :meth:`resolve` turns the spec into a number for a
    given sample size.  Monte Carlo specs carry a homogeneous generator and
    optionally a tuple of ``sizes`` at which quantiles are tabulated and then
    interpolated log-log (used when the working sample size changes, as in
    multiclass peeling).
    """

    kind: ThresholdKind
    C: float | None = None
    sigma: float = 1.0
    rho: float = 0.0
    alpha: float = 0.95
    trials: int = 1000
    generator: Any = None
    seed: int = 0
    sizes: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed":
            if self.C is None or not self.C > 0:
                raise DomainError("a fixed threshold must be positive")
        elif self.kind == "formula":
            if not 0 < self.alpha < 1:
                raise DomainError("alpha must lie in (0, 1)")
            if not self.sigma > 0:
                raise DomainError("sigma must be positive")
            if not 0 <= self.rho < 1:
                raise DomainError("rho must lie in [0, 1)")
        elif self.kind == "monte_carlo":
            if not 0 < self.alpha < 1:
                raise DomainError("alpha must lie in (0, 1)")
            if self.trials < 100:
                raise DomainError("Monte Carlo calibration needs at least 100 trials")
            if self.generator is None:
                raise DomainError("Monte Carlo calibration needs a homogeneous generator")
        else:
            raise DomainError(f"unknown threshold kind {self.kind!r}")

    @classmethod
    def fixed(cls, C: float) -> "ThresholdSpec":
        return cls("fixed", C=float(C))

    @classmethod
    def formula(cls, sigma: float = 1.0, rho: float = 0.0, alpha: float = 0.95) -> "ThresholdSpec":
        return cls("formula", sigma=float(sigma), rho=float(rho), alpha=float(alpha))

    @classmethod
    def monte_carlo(
        cls,
        generator: Any,
        alpha: float = 0.95,
        trials: int = 1000,
        seed: int = 0,
        sizes: Sequence[int] | None = None,
    ) -> "ThresholdSpec":
        return cls(
            "monte_carlo",
            alpha=float(alpha),
            trials=int(trials),
            generator=generator,
            seed=int(seed),
            sizes=None if sizes is None else tuple(int(s) for s in sizes),
        )

    def resolve(self, n: int, statistic: Callable[[np.ndarray], float] | None = None) -> float:
        """Threshold for a sample of size ``n``.

        ``statistic`` is the decision statistic the threshold is meant for;
        it is only consulted by Monte Carlo specs.
        """
        if self.kind == "fixed":
            return float(self.C)  # type: ignore[arg-type]
        from .calibration import formula_threshold, resolve_monte_carlo

        if self.kind == "formula":
            return formula_threshold(n, self.sigma, self.rho, self.alpha)
        if statistic is None:
            raise DomainError("Monte Carlo thresholds need the decision statistic")
        return resolve_monte_carlo(self, n, statistic)


Variant = Literal["symmetric", "asymmetric", "variance_contamination"]
GridMode = Literal["geometric", "breakpoints"]


@dataclass(frozen=True)
class DetectionConfig:
    """Scan and decision settings shared by the detectors.

    ``grid`` is ``"geometric"`` (``n_grid`` points spaced geometrically up to
    the largest deviation), ``"breakpoints"`` (every distinct deviation, the
    exact maximum) or an explicit strictly increasing tuple of positive band
    widths.  ``b_max`` caps the scan.
    """

    threshold: ThresholdSpec | None = None
    grid: GridMode | tuple[float, ...] = "geometric"
    n_grid: int = 200
    b_max: float | None = None
    variant: Variant = "symmetric"
    phi: Callable[[float], float] | None = None
    n_min: int = 20

    def __post_init__(self) -> None:
        if isinstance(self.grid, str):
            if self.grid not in ("geometric", "breakpoints"):
                raise DomainError(f"unknown grid mode {self.grid!r}")
        else:
            g = np.asarray(self.grid, dtype=float)
            if g.size == 0:
                raise EmptyGrid()
            if np.any(g <= 0) or np.any(np.diff(g) <= 0):
                raise DomainError("grid must be strictly increasing and positive")
            object.__setattr__(self, "grid", tuple(float(v) for v in g))
        if self.b_max is not None and not self.b_max > 0:
            raise DomainError("b_max must be positive")
        if self.n_grid < 1:
            raise DomainError("n_grid must be at least 1")
        if self.variant == "asymmetric" and self.phi is None:
            raise DomainError("the asymmetric variant needs a phi function")
        if self.variant not in ("symmetric", "asymmetric", "variance_contamination"):
            raise DomainError(f"unknown variant {self.variant!r}")

    def replace(self, **changes: Any) -> "DetectionConfig":
        from dataclasses import replace

        return replace(self, **changes)


Decision = Literal["homogeneous", "switches"]


@dataclass(frozen=True, eq=False)
class DetectionReport:
    """Outcome of one binary detection.

    The constructor enforces the report invariants: ``decision`` is
    ``"switches"`` exactly when ``J > C``, and on rejection ``epsilon_hat``
    equals ``n2 / N`` of the partition at ``b_star``.
    """

    J: float
    b_star: float
    C: float
    decision: Decision
    partition_at_b_star: BandPartition
    epsilon_hat: float | None = None
    h_hat: float | np.ndarray | None = None
    center: float | np.ndarray | None = None
    diagnostics: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.J >= 0:
            raise DomainError("J must be nonnegative")
        if (self.decision == "switches") != (self.J > self.C):
            raise DomainError("decision must be 'switches' exactly when J > C")
        p = self.partition_at_b_star
        if self.decision == "switches" and p.n2 > 0:
            if self.epsilon_hat is None or self.epsilon_hat != p.n2 / p.n:
                raise DomainError("epsilon_hat must equal n2/N on rejection")
        elif self.epsilon_hat is not None:
            raise DomainError("epsilon_hat is only reported on rejection")

    @property
    def n(self) -> int:
        return self.partition_at_b_star.n

    def to_dict(self) -> dict[str, Any]:
        def _num(v: Any) -> Any:
            if v is None:
                return None
            if isinstance(v, np.ndarray):
                return [float(x) for x in v]
            return float(v)

        return {
            "J": float(self.J),
            "b_star": float(self.b_star),
            "C": float(self.C),
            "decision": self.decision,
            "epsilon_hat": _num(self.epsilon_hat),
            "h_hat": _num(self.h_hat),
            "center": _num(self.center),
            "partition_at_b_star": self.partition_at_b_star.to_dict(),
            "diagnostics": list(self.diagnostics),
        }
