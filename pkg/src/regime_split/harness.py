"""Monte Carlo replication engine and the table presets.

A plan is a list of cells (model, N, threshold); every cell is replicated
``R`` times on the streams ``(seed, cell, r)`` and the records are
aggregated into one table row per cell.  Trials are independent and
results are collected in index order, so tables do not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np

from .binary import BinaryStatistic, detect
from .calibration import FORMULA_NOTE, _quantile_se, formula_threshold, order_quantile
from .core import DetectionConfig, RegimeSplitError, ThresholdSpec
from .generators import (
    MVGaussianMixture,
    MulticlassMixture,
    ShiftMixture,
    SwitchingRegression,
    VarianceMixture,
    draw,
)
from .multiclass import ModeStepStatistic, detect_multiclass
from .multivariate import norms
from .parallel import map_indexed
from .regression import detect_switching_regression
from .theory import CramerConstants, GaussianDensity, gaussian_cramer, max_theoretical_psi, type1_bound, type2_bound

log = logging.getLogger(__name__)

Task = Literal["calibrate", "binary", "multiclass", "regression"]


class UnknownPreset(RegimeSplitError, KeyError):
    def __str__(self) -> str:
        return f"unknown preset {self.args[0]!r}"


class InvalidPlan(RegimeSplitError, ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    model: Any
    n: int
    C: float | None = None
    scenario: str = ""


@dataclass(frozen=True)
class ExperimentPlan:
    """What to simulate, how to detect and how often.

    ``cells`` fix the model, sample size and (optionally) the threshold of
    every table row; a cell without ``C`` resolves it from
    ``cfg.threshold``.  ``alphas`` are the quantile levels of a
    ``calibrate`` plan; ``B``, ``max_classes``, ``peel`` and ``true_k``
    configure ``multiclass`` plans.
    """

    name: str
    task: Task
    cells: tuple[Cell, ...]
    cfg: DetectionConfig = field(default_factory=DetectionConfig)
    replications: int = 1000
    seed: int = 0
    alphas: tuple[float, ...] = (0.95,)
    B: float | None = None
    max_classes: int = 10
    peel: str = "magnitude"
    true_k: int | None = None
    cramer: CramerConstants = field(default_factory=gaussian_cramer)
    phi0: int = 1

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise InvalidPlan("replications must be at least 1")
        if not self.cells:
            raise InvalidPlan("a plan needs at least one cell")
        if self.task not in ("calibrate", "binary", "multiclass", "regression"):
            raise InvalidPlan(f"unknown task {self.task!r}")
        if self.task == "multiclass" and (self.B is None or self.true_k is None):
            raise InvalidPlan("multiclass plans need B and true_k")
        if self.task == "calibrate" and not all(0 < a < 1 for a in self.alphas):
            raise InvalidPlan("alphas must lie in (0, 1)")

    @classmethod
    def over_sizes(
        cls, name: str, task: Task, model: Any, sizes, thresholds=None, scenario: str = "", **kw: Any
    ) -> "ExperimentPlan":
        cs = [None] * len(sizes) if thresholds is None else list(thresholds)
        if len(cs) != len(sizes):
            raise InvalidPlan("one threshold per sample size")
        cells = tuple(Cell(model, int(n), c, scenario) for n, c in zip(sizes, cs))
        return cls(name, task, cells, **kw)

    def with_(self, **changes: Any) -> "ExperimentPlan":
        return replace(self, **changes)


COLUMNS: dict[str, tuple[str, ...]] = {
    "calibrate": ("scenario", "N", "alpha", "R", "C_mc", "quantile_se", "C_formula", "type1_rate", "type1_se", "type1_bound"),
    "binary": (
        "scenario", "N", "R", "C", "epsilon", "rejection_rate", "w2", "w2_se", "type1_rate", "type1_se",
        "mean_epsilon_hat", "epsilon_hat_se", "delta", "type1_bound", "type2_bound",
    ),
    "multiclass": ("scenario", "N", "R", "true_k", "k_error_rate", "k_error_se", "mean_k_hat", "mean_epsilon_total"),
    "regression": (
        "scenario", "N", "R", "C", "epsilon", "w2", "w2_se", "mean_epsilon_hat",
        "w2_c1", "w2_c2", "mean_epsilon_hat_c1", "mean_epsilon_hat_c2",
    ),
}


@dataclass(frozen=True, eq=False)
class ExperimentTable:
    name: str
    columns: tuple[str, ...]
    rows: tuple[dict[str, Any], ...]
    metadata: dict[str, Any]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns + ("error",)
        w.writerow(cols)
        for row in self.rows:
            w.writerow([_fmt(row.get(c)) for c in cols])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "columns": list(self.columns), "rows": list(self.rows), "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def column(self, name: str) -> list[Any]:
        return [r.get(name) for r in self.rows]


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def binomial_se(p: float, r: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / r)


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _se_of_mean(values: list[float]) -> float | None:
    if len(values) < 2:
        return None
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


# ---------------------------------------------------------------------------
# trials


class _Trial:
    """Picklable ``flat index -> record`` for a whole plan."""

    def __init__(self, plan: ExperimentPlan, thresholds: list[float | None]) -> None:
        self.plan = plan
        self.thresholds = thresholds

    def __call__(self, flat: int) -> Any:
        plan = self.plan
        ci, r = divmod(flat, plan.replications)
        cell = plan.cells[ci]
        try:
            data, _ = draw(cell.model, cell.n, plan.seed, ci, r)
            return _record(plan, cell, data, self.thresholds[ci])
        except RegimeSplitError as exc:
            return ("error", f"{type(exc).__name__}: {exc}")


def _record(plan: ExperimentPlan, cell: Cell, data: Any, C: float | None) -> Any:
    if plan.task == "calibrate":
        return BinaryStatistic(plan.cfg)(data)
    if plan.task == "binary":
        rep = detect(data, plan.cfg, C)
        return (rep.decision == "switches", rep.epsilon_hat)
    if plan.task == "multiclass":
        x = norms(data) if isinstance(cell.model, MVGaussianMixture) else data
        rep = detect_multiclass(x, plan.cfg, C, plan.B, plan.max_classes, plan.peel)  # type: ignore[arg-type]
        return (rep.k_hat, rep.epsilon_total)
    rep = detect_switching_regression(data, plan.cfg, C)
    per = tuple((r.decision == "switches", r.epsilon_hat) for r in rep.per_coefficient)
    return (rep.any_switch, rep.epsilon_hat, per)


def _resolve_threshold(plan: ExperimentPlan, cell: Cell) -> float | None:
    if plan.task == "calibrate" or cell.C is not None:
        return cell.C
    spec = plan.cfg.threshold
    if spec is None:
        raise InvalidPlan(f"cell N={cell.n} has no threshold and the plan configures none")
    if plan.task == "multiclass":
        # warm the per-size cache; detection resolves thresholds step by step
        spec.resolve(cell.n, ModeStepStatistic(plan.cfg, plan.B))  # type: ignore[arg-type]
        return None
    return spec.resolve(cell.n, BinaryStatistic(plan.cfg))


# ---------------------------------------------------------------------------
# aggregation


def _epsilon_of(model: Any) -> float | None:
    return getattr(model, "epsilon", None)


def _aggregate(plan: ExperimentPlan, cell: Cell, C: float | None, recs: list[Any]) -> list[dict[str, Any]]:
    errors = [r[1] for r in recs if isinstance(r, tuple) and r and r[0] == "error"]
    ok = [r for r in recs if not (isinstance(r, tuple) and r and r[0] == "error")]
    base: dict[str, Any] = {"scenario": cell.scenario, "N": cell.n, "R": len(ok)}
    err = f"{len(errors)} of {len(recs)} trials failed; first: {errors[0]}" if errors else None
    if not ok:
        return [dict(base, error=err)]
    R = len(ok)
    if plan.task == "calibrate":
        J = np.asarray(ok, dtype=float)
        rows = []
        for a in plan.alphas:
            c_mc = order_quantile(J, a)
            p1 = float(np.mean(J > c_mc))
            row = dict(base, alpha=a, C_mc=c_mc, quantile_se=_quantile_se(np.sort(J), a))
            row.update(type1_rate=p1, type1_se=binomial_se(p1, R), type1_bound=_bound1(plan, c_mc, cell.n))
            if plan.cfg.variant == "symmetric":
                row["C_formula"] = formula_threshold(cell.n, 1.0, 0.0, a)
            row["error"] = err
            rows.append(row)
        return rows
    if plan.task == "binary":
        rej = [r[0] for r in ok]
        eps_hat = [r[1] for r in ok if r[1] is not None]
        p = float(np.mean(rej))
        eps = _epsilon_of(cell.model)
        row = dict(base, C=C, epsilon=eps, rejection_rate=p, mean_epsilon_hat=_mean(eps_hat), epsilon_hat_se=_se_of_mean(eps_hat))
        if eps:
            row.update(w2=1 - p, w2_se=binomial_se(p, R))
            if isinstance(cell.model, ShiftMixture) and C is not None:
                delta = max_theoretical_psi(eps, cell.model.h, GaussianDensity(0.0, cell.model.sigma)) - C
                row.update(delta=delta, type2_bound=type2_bound(delta, plan.phi0, plan.cramer, cell.n))
        else:
            row.update(type1_rate=p, type1_se=binomial_se(p, R))
            if C is not None:
                row["type1_bound"] = _bound1(plan, C, cell.n)
        row["error"] = err
        return [row]
    if plan.task == "multiclass":
        k = np.asarray([r[0] for r in ok])
        p = float(np.mean(k != plan.true_k))
        et = [r[1] for r in ok if r[1] is not None]
        return [dict(base, true_k=plan.true_k, k_error_rate=p, k_error_se=binomial_se(p, R),
                     mean_k_hat=float(np.mean(k)), mean_epsilon_total=_mean(et), error=err)]
    any_rej = [r[0] for r in ok]
    p = float(np.mean(any_rej))
    row = dict(base, C=C, epsilon=_epsilon_of(cell.model), w2=1 - p, w2_se=binomial_se(p, R),
               mean_epsilon_hat=_mean([r[1] for r in ok if r[1] is not None]))
    for j in range(min(2, len(ok[0][2]))):
        pj = float(np.mean([r[2][j][0] for r in ok]))
        row[f"w2_c{j + 1}"] = 1 - pj
        row[f"mean_epsilon_hat_c{j + 1}"] = _mean([r[2][j][1] for r in ok if r[2][j][1] is not None])
    row["error"] = err
    return [row]


def _bound1(plan: ExperimentPlan, C: float, n: int) -> float | None:
    if not C > 0:
        return None
    return type1_bound(C, plan.phi0, plan.cramer, n)


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> ExperimentTable:
    """Replicate every cell and aggregate.

    Cells whose threshold cannot be resolved, or whose trials raise, carry
    an ``error`` entry instead of aborting the table.
    """
    t0 = time.perf_counter()
    thresholds: list[float | None] = []
    cell_errors: dict[int, str] = {}
    for i, cell in enumerate(plan.cells):
        try:
            thresholds.append(_resolve_threshold(plan, cell))
        except RegimeSplitError as exc:
            thresholds.append(None)
            cell_errors[i] = f"{type(exc).__name__}: {exc}"
    R = plan.replications
    live = [i for i in range(len(plan.cells)) if i not in cell_errors]
    trial = _Trial(plan, thresholds)
    flat = map_indexed(lambda k: trial(live[k // R] * R + k % R), len(live) * R, workers)
    rows: list[dict[str, Any]] = []
    for i, cell in enumerate(plan.cells):
        if i in cell_errors:
            rows.append({"scenario": cell.scenario, "N": cell.n, "R": 0, "error": cell_errors[i]})
            continue
        j = live.index(i)
        rows.extend(_aggregate(plan, cell, thresholds[i], flat[j * R : (j + 1) * R]))
    cols = COLUMNS[plan.task]
    rows = [{c: _clean(r.get(c)) for c in cols + ("error",)} for r in rows]
    meta: dict[str, Any] = {"plan": plan.name, "task": plan.task, "replications": R, "seed": plan.seed}
    if plan.task == "calibrate" and plan.cfg.variant == "symmetric":
        meta["note"] = FORMULA_NOTE
    log.info("plan %s finished in %.2f s", plan.name, time.perf_counter() - t0)
    return ExperimentTable(plan.name, cols, tuple(rows), meta)


def _clean(v: Any) -> Any:
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# presets

SIZES_9 = (50, 100, 300, 500, 800, 1000, 1200, 1500, 2000)
SIZES_MULTI = (100, 200, 300, 500, 700, 1000, 1500)
# working sizes at which peeling thresholds are tabulated, then interpolated
CALIBRATION_SIZES = (20, 30, 45, 70, 100, 150, 220, 330, 500, 750, 1100, 1600, 2500)
BIVARIATE_COVARIANCE = ((0.745, -0.07), (-0.07, 0.51))
BIVARIATE_SHIFTS = ((0.0, 0.0), (1.0, 2.0), (2.0, 3.0))
PRESET_SEED = 20_240_601
REGRESSION_PANEL = 100


def _multiclass_threshold(alpha: float) -> ThresholdSpec:
    return ThresholdSpec.monte_carlo(
        ShiftMixture(0.0, 0.0), alpha=alpha, trials=1000, seed=PRESET_SEED, sizes=CALIBRATION_SIZES
    )


def _preset(name: str) -> ExperimentPlan:
    seed = PRESET_SEED + int(name[5:])
    if name == "table1":
        return ExperimentPlan.over_sizes(name, "calibrate", ShiftMixture(0.0, 0.0), SIZES_9, alphas=(0.95, 0.99), seed=seed)
    if name == "table2":
        cells = tuple(Cell(ShiftMixture(0.1, 2.0), n, c, "h=2.0") for n, c in zip((300, 500, 800, 1000), (0.0710, 0.0534, 0.044, 0.038)))
        cells += tuple(Cell(ShiftMixture(0.1, 1.5), n, c, "h=1.5") for n, c in zip((800, 1200, 2000, 3000), (0.044, 0.037, 0.029, 0.022)))
        return ExperimentPlan(name, "binary", cells, seed=seed)
    var_cfg = DetectionConfig(variant="variance_contamination")
    if name == "table3":
        return ExperimentPlan.over_sizes(name, "calibrate", VarianceMixture(0.0, 1.0), SIZES_9, cfg=var_cfg, alphas=(0.95, 0.99), seed=seed)
    if name == "table4":
        return ExperimentPlan.over_sizes(
            name, "binary", VarianceMixture(0.05, 3.0), (300, 500, 800, 1000), (0.1570, 0.1419, 0.1252, 0.1244),
            scenario="Lambda=3, eps=0.05", cfg=var_cfg, seed=seed,
        )
    if name == "table5":
        return ExperimentPlan.over_sizes(
            name, "binary", VarianceMixture(0.01, 5.0), (1000, 1200, 1500, 2000, 3000), (0.1244, 0.1146, 0.1107, 0.1075, 0.1019),
            scenario="Lambda=5, eps=0.01", cfg=var_cfg, seed=seed,
        )
    if name == "table6":
        model = MulticlassMixture((0.3, 0.15), (1.0, 3.0, 7.0), B=2.0)
        cfg = DetectionConfig(grid="breakpoints", threshold=_multiclass_threshold(0.99))
        return ExperimentPlan.over_sizes(name, "multiclass", model, SIZES_MULTI, scenario="h=(1,3,7)", cfg=cfg, B=2.0, true_k=2, seed=seed)
    if name == "table7":
        model = MVGaussianMixture((0.3, 0.15), BIVARIATE_SHIFTS, BIVARIATE_COVARIANCE)
        cfg = DetectionConfig(grid="breakpoints", threshold=_multiclass_threshold(0.95))
        B = math.sqrt(13) - math.sqrt(5)
        return ExperimentPlan.over_sizes(name, "multiclass", model, SIZES_MULTI, scenario="2-D norms", cfg=cfg, B=B, true_k=2, seed=seed)
    if name in ("table8", "table9"):
        eps, b1 = (0.05, (1.0, 2.0)) if name == "table8" else (0.1, (1.0, 1.5))
        model = SwitchingRegression((1.0, 1.0), b1, eps, panel=REGRESSION_PANEL)
        return ExperimentPlan.over_sizes(
            name, "regression", model, (300, 500, 800, 1000), (0.07, 0.05, 0.04, 0.03),
            scenario=f"beta1=(1,1), beta2=({b1[0]:g},{b1[1]:g})", seed=seed,
        )
    raise UnknownPreset(name)


PRESETS = tuple(f"table{i}" for i in range(1, 10))


def preset(name: str, replications: int = 1000, seed: int | None = None) -> ExperimentPlan:
    """Plan for one of ``table1`` ... ``table9`` (``R = 1000`` by default).

    Raises
    ------
    UnknownPreset
    """
    if name not in PRESETS:
        raise UnknownPreset(name)
    plan = _preset(name).with_(replications=int(replications))
    return plan if seed is None else plan.with_(seed=int(seed))
