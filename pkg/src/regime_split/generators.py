"""Seeded synthetic data for every experiment model.

Randomness comes from numpy's ``PCG64`` bit generator.  A stream is
identified by ``(seed, *stream_ids)`` and built as
``PCG64(SeedSequence(seed, spawn_key=stream_ids))``, so each Monte Carlo
trial owns an independent stream regardless of which worker runs it.
Within a draw, latent labels are drawn first (one uniform per
observation), then the noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

import numpy as np
from scipy.signal import lfilter

from .core import RegimeSplitError, Sample, VectorSample
from .regression import RegressionData, trend_design


class InvalidSpec(RegimeSplitError, ValueError):
    pass


def rng_stream(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))))


def _check_fractions(eps: tuple[float, ...]) -> None:
    if any(not 0 <= e < 1 for e in eps) or sum(eps) >= 1:
        raise InvalidSpec("fractions must lie in [0, 1) and sum to less than 1")


def _draw_classes(rng: np.random.Generator, n: int, eps: tuple[float, ...]) -> np.ndarray:
    """Class 0 with probability ``1 - sum(eps)``, class ``i`` with ``eps[i-1]``."""
    u = rng.random(n)
    cls = np.zeros(n, dtype=np.int64)
    edge = 0.0
    for i, e in enumerate(eps, start=1):
        cls[(u >= edge) & (u < edge + e)] = i
        edge += e
    return cls


@dataclass(frozen=True)
class ShiftMixture:
    """``(1 - eps) N(mu, sigma^2) + eps N(mu + h, sigma^2)``."""

    epsilon: float
    h: float
    sigma: float = 1.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        _check_fractions((self.epsilon,))
        if not self.sigma > 0:
            raise InvalidSpec("sigma must be positive")

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        lab = _draw_classes(rng, n, (self.epsilon,))
        return self.mu + self.sigma * rng.standard_normal(n) + self.h * lab, lab


@dataclass(frozen=True)
class VarianceMixture:
    """``(1 - eps) N(mu, sigma^2) + eps N(mu, Lambda^2)``."""

    epsilon: float
    Lambda: float
    sigma: float = 1.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        _check_fractions((self.epsilon,))
        if not (self.sigma > 0 and self.Lambda > 0):
            raise InvalidSpec("scales must be positive")

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        lab = _draw_classes(rng, n, (self.epsilon,))
        scale = np.where(lab == 1, self.Lambda, self.sigma)
        return self.mu + scale * rng.standard_normal(n), lab


@dataclass(frozen=True)
class MulticlassMixture:
    """Univariate classes ``N(h_j, sigma^2)``.

    ``shifts[0]`` is the base class with weight ``1 - sum(epsilons)``;
    ``shifts[i]`` has weight ``epsilons[i-1]``.  When ``B`` is given, the
    gaps ``|h_{j+1}| - |h_j|`` must be at least ``B``.
    """

    epsilons: tuple[float, ...]
    shifts: tuple[float, ...]
    sigma: float = 1.0
    B: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "shifts", tuple(float(h) for h in self.shifts))
        _check_fractions(self.epsilons)
        if len(self.shifts) != len(self.epsilons) + 1:
            raise InvalidSpec("need one more shift than fractions")
        if not self.sigma > 0:
            raise InvalidSpec("sigma must be positive")
        if self.B is not None:
            mags = [abs(h) for h in self.shifts]
            if any(b - a < self.B for a, b in zip(mags, mags[1:])):
                raise InvalidSpec("class separation is below B")

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        cls = _draw_classes(rng, n, self.epsilons)
        return np.asarray(self.shifts)[cls] + self.sigma * rng.standard_normal(n), cls


@dataclass(frozen=True)
class AR1:
    """``x(n) = rho x(n-1) + sigma xi_n`` after ``burn_in`` discarded steps from 0."""

    rho: float
    sigma: float = 1.0
    burn_in: int = 1000

    def __post_init__(self) -> None:
        if not abs(self.rho) < 1:
            raise InvalidSpec("|rho| must be below 1")
        if not self.sigma > 0 or self.burn_in < 0:
            raise InvalidSpec("sigma must be positive and burn_in nonnegative")

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        xi = self.sigma * rng.standard_normal(n + self.burn_in)
        x = lfilter([1.0], [1.0, -self.rho], xi)
        return x[self.burn_in :], np.zeros(n, dtype=np.int64)


@dataclass(frozen=True)
class MVGaussianMixture:
    """Vector classes ``N(h_j, Sigma)``, weights as in :class:`MulticlassMixture`."""

    epsilons: tuple[float, ...]
    shifts: tuple[tuple[float, ...], ...]
    covariance: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "shifts", tuple(tuple(float(v) for v in h) for h in self.shifts))
        object.__setattr__(self, "covariance", tuple(tuple(float(v) for v in r) for r in self.covariance))
        _check_fractions(self.epsilons)
        if len(self.shifts) != len(self.epsilons) + 1:
            raise InvalidSpec("need one more shift vector than fractions")
        S = np.asarray(self.covariance)
        k = len(self.shifts[0])
        if S.shape != (k, k) or any(len(h) != k for h in self.shifts):
            raise InvalidSpec("shift vectors and covariance disagree in dimension")
        if not np.allclose(S, S.T):
            raise InvalidSpec("covariance must be symmetric")
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise InvalidSpec("covariance must be positive definite") from exc

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        cls = _draw_classes(rng, n, self.epsilons)
        L = np.linalg.cholesky(np.asarray(self.covariance))
        z = rng.standard_normal((n, L.shape[0]))
        return z @ L.T + np.asarray(self.shifts)[cls], cls


@dataclass(frozen=True)
class SwitchingRegression:
    """Trend regression ``y = c1 + c2 t + u`` whose coefficients are ``beta1``
    with probability ``epsilon`` and ``beta0`` otherwise.

    With ``panel=None`` a single regression of length ``N`` switches per
    observation.  With ``panel=n`` the draw is ``N`` independent regressions
    of length ``n`` (sharing the design ``t = 1..n``), each with its own
    coefficient switch; ``y`` is then an ``n x N`` matrix.
    """

    beta0: tuple[float, ...]
    beta1: tuple[float, ...]
    epsilon: float
    noise_sigma: float = 1.0
    panel: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta0", tuple(float(v) for v in self.beta0))
        object.__setattr__(self, "beta1", tuple(float(v) for v in self.beta1))
        _check_fractions((self.epsilon,))
        if len(self.beta0) != 2 or len(self.beta1) != 2:
            raise InvalidSpec("the trend design has two coefficients")
        if not self.noise_sigma > 0:
            raise InvalidSpec("noise_sigma must be positive")
        if self.panel is not None and self.panel < 3:
            raise InvalidSpec("panel regressions need at least 3 observations")

    def draw(self, rng: np.random.Generator, n: int) -> tuple[RegressionData, np.ndarray]:
        lab = _draw_classes(rng, n, (self.epsilon,))
        B = np.where(lab[:, None] == 1, self.beta1, self.beta0)
        if self.panel is None:
            X = trend_design(n)
            y = (X * B).sum(axis=1) + self.noise_sigma * rng.standard_normal(n)
        else:
            X = trend_design(self.panel)
            y = X @ B.T + self.noise_sigma * rng.standard_normal((self.panel, n))
        return RegressionData(X, y), lab


Model = Union[ShiftMixture, VarianceMixture, MulticlassMixture, AR1, MVGaussianMixture, SwitchingRegression]
MODELS: dict[str, type] = {
    "shift_mixture": ShiftMixture,
    "variance_mixture": VarianceMixture,
    "multiclass": MulticlassMixture,
    "ar1": AR1,
    "mv_gaussian_mixture": MVGaussianMixture,
    "switching_regression": SwitchingRegression,
}
KIND_OF = {cls: kind for kind, cls in MODELS.items()}


@dataclass(frozen=True)
class GeneratorSpec:
    model: Any
    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        if type(self.model) not in KIND_OF:
            raise InvalidSpec(f"unknown model {self.model!r}")
        if self.n < 1:
            raise InvalidSpec("N must be at least 1")

    @property
    def kind(self) -> str:
        return KIND_OF[type(self.model)]


@dataclass(frozen=True, eq=False)
class Generated:
    data: Union[Sample, VectorSample, RegressionData]
    labels: np.ndarray


def _wrap(raw: Any) -> Union[Sample, VectorSample, RegressionData]:
    if isinstance(raw, RegressionData):
        return raw
    raw.setflags(write=False)
    return VectorSample(raw) if raw.ndim == 2 else Sample(raw)


def draw(model: Any, n: int, seed: int, *stream: int) -> tuple[Any, np.ndarray]:
    """Raw ``(data, labels)`` from the stream ``(seed, *stream)``."""
    return model.draw(rng_stream(seed, *stream), n)


def generate(spec: GeneratorSpec, *stream: int) -> Generated:
    """Data and latent labels (0 ordinary, ``j >= 1`` switched class ``j``)."""
    raw, labels = draw(spec.model, spec.n, spec.seed, *stream)
    return Generated(_wrap(raw), labels)
