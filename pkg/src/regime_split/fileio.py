"""CSV data files and ``key = value`` spec files.

Spec and plan files are INI-style: ``[section]`` headers followed by
``key = value`` lines.  Lists are comma separated; matrices separate rows
with ``;`` and entries with spaces or commas, e.g.
``covariance = 0.745 -0.07; -0.07 0.51``.
"""

from __future__ import annotations

import configparser
import csv
import math
from pathlib import Path
from typing import Any

import numpy as np

from .core import DetectionConfig, RegimeSplitError, ThresholdSpec
from .generators import MODELS, InvalidSpec
from .regression import RegressionData

DATA_COLUMNS = "index,value | index,x1..xk | index,y,x1..xk"


class SpecParseError(RegimeSplitError, ValueError):
    pass


class DataParseError(RegimeSplitError, ValueError):
    pass


# ---------------------------------------------------------------------------
# spec files


def read_spec(path: str | Path) -> dict[str, dict[str, str]]:
    """Sections of a spec file as plain dictionaries (keys lower-cased)."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise SpecParseError(f"{path}: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def _float(v: str, key: str) -> float:
    try:
        return float(v)
    except ValueError as exc:
        raise SpecParseError(f"{key}: not a number: {v!r}") from exc


def _int(v: str, key: str) -> int:
    try:
        return int(v)
    except ValueError as exc:
        raise SpecParseError(f"{key}: not an integer: {v!r}") from exc


def _floats(v: str, key: str) -> tuple[float, ...]:
    return tuple(_float(p.strip(), key) for p in v.split(",") if p.strip())


def _matrix(v: str, key: str) -> tuple[tuple[float, ...], ...]:
    rows = [r.strip() for r in v.split(";") if r.strip()]
    return tuple(tuple(_float(p, key) for p in r.replace(",", " ").split()) for r in rows)


MODEL_FIELDS: dict[str, dict[str, str]] = {
    "shift_mixture": {"epsilon": "float", "h": "float", "sigma": "float", "mu": "float"},
    "variance_mixture": {"epsilon": "float", "lambda": "float", "sigma": "float", "mu": "float"},
    "multiclass": {"epsilons": "floats", "shifts": "floats", "sigma": "float", "b": "float"},
    "ar1": {"rho": "float", "sigma": "float", "burn_in": "int"},
    "mv_gaussian_mixture": {"epsilons": "floats", "shifts": "matrix", "covariance": "matrix"},
    "switching_regression": {
        "beta0": "floats", "beta1": "floats", "epsilon": "float", "noise_sigma": "float", "panel": "int",
    },
}
ATTR = {"lambda": "Lambda", "b": "B"}


def build_model(section: dict[str, str]) -> Any:
    """Generator model from a ``[model]`` section with a ``kind`` key."""
    kind = section.get("kind")
    if kind not in MODELS:
        raise SpecParseError(f"unknown model kind {kind!r}; expected one of {sorted(MODELS)}")
    fields = MODEL_FIELDS[kind]
    kwargs: dict[str, Any] = {}
    for key, raw in section.items():
        if key == "kind":
            continue
        if key not in fields:
            raise SpecParseError(f"unknown key {key!r} for model {kind}")
        typ = fields[key]
        val = {"float": _float, "int": _int, "floats": _floats, "matrix": _matrix}[typ](raw, key)
        kwargs[ATTR.get(key, key)] = val
    try:
        return MODELS[kind](**kwargs)
    except TypeError as exc:
        raise SpecParseError(f"model {kind}: {exc}") from exc
    except InvalidSpec as exc:
        raise SpecParseError(f"model {kind}: {exc}") from exc


def build_config(section: dict[str, str] | None, threshold: ThresholdSpec | None = None) -> DetectionConfig:
    """Detection config from an optional ``[detector]`` section."""
    s = dict(section or {})
    kw: dict[str, Any] = {"threshold": threshold}
    if "variant" in s:
        kw["variant"] = s.pop("variant")
    if "grid" in s:
        g = s.pop("grid")
        kw["grid"] = g if g in ("geometric", "breakpoints") else _floats(g, "grid")
    if "n_grid" in s:
        kw["n_grid"] = _int(s.pop("n_grid"), "n_grid")
    if "b_max" in s:
        kw["b_max"] = _float(s.pop("b_max"), "b_max")
    if "n_min" in s:
        kw["n_min"] = _int(s.pop("n_min"), "n_min")
    if s:
        raise SpecParseError(f"unknown detector keys {sorted(s)}")
    try:
        return DetectionConfig(**kw)
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"detector: {exc}") from exc


def build_threshold(section: dict[str, str] | None) -> ThresholdSpec | None:
    """``[threshold]`` with ``kind = fixed | formula | monte_carlo``."""
    if not section:
        return None
    s = dict(section)
    kind = s.pop("kind", None)
    try:
        if kind == "fixed":
            return ThresholdSpec.fixed(_float(s["c"], "c"))
        if kind == "formula":
            return ThresholdSpec.formula(
                _float(s.get("sigma", "1"), "sigma"), _float(s.get("rho", "0"), "rho"), _float(s.get("alpha", "0.95"), "alpha")
            )
        if kind == "monte_carlo":
            model = build_model({"kind": "shift_mixture", "epsilon": "0", "h": "0"})
            sizes = tuple(int(v) for v in _floats(s["sizes"], "sizes")) if "sizes" in s else None
            return ThresholdSpec.monte_carlo(
                model,
                alpha=_float(s.get("alpha", "0.95"), "alpha"),
                trials=_int(s.get("trials", "1000"), "trials"),
                seed=_int(s.get("seed", "0"), "seed"),
                sizes=sizes,
            )
    except KeyError as exc:
        raise SpecParseError(f"threshold: missing key {exc}") from exc
    except ValueError as exc:
        raise SpecParseError(f"threshold: {exc}") from exc
    raise SpecParseError(f"unknown threshold kind {kind!r}")


# ---------------------------------------------------------------------------
# CSV


def _fmt(v: float) -> str:
    # shortest representation that round-trips exactly
    return repr(float(v))


def write_data_csv(path: str | Path, data: Any) -> None:
    """Write a Sample, VectorSample or RegressionData with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(data, RegressionData):
            xs = [f"x{j + 1}" for j in range(data.k)]
            ys = ["y"] if data.y.ndim == 1 else [f"y{r + 1}" for r in range(data.y.shape[1])]
            w.writerow(["index", *ys, *xs])
            y2 = data.y[:, None] if data.y.ndim == 1 else data.y
            for i in range(data.X.shape[0]):
                w.writerow([i + 1, *map(_fmt, y2[i]), *map(_fmt, data.X[i])])
        elif hasattr(data, "vectors"):
            v = data.vectors
            w.writerow(["index", *[f"x{j + 1}" for j in range(v.shape[1])]])
            for i, row in enumerate(v):
                w.writerow([i + 1, *map(_fmt, row)])
        else:
            w.writerow(["index", "value"])
            for i, x in enumerate(data.values):
                w.writerow([i + 1, _fmt(x)])


def label_names(labels: np.ndarray, n_classes: int) -> list[str]:
    if n_classes <= 2:
        return ["ordinary" if v == 0 else "abnormal" for v in labels]
    return ["ordinary" if v == 0 else f"switch_{v}" for v in labels]


def write_labels_csv(path: str | Path, labels: np.ndarray, n_classes: int) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label"])
        for i, name in enumerate(label_names(labels, n_classes)):
            w.writerow([i + 1, name])


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and numeric body of a CSV file; an ``index`` column is dropped."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataParseError(f"{path}: empty file (a header row is required)")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataParseError(f"{path}: line {k} has {len(r)} fields, header has {len(header)}")
    try:
        arr = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise DataParseError(f"{path}: {exc}") from exc
    if header and header[0].lower() == "index":
        header, arr = header[1:], arr[:, 1:]
    if not header:
        raise DataParseError(f"{path}: no data columns")
    return header, arr


def columns_like(header: list[str], prefix: str) -> list[int]:
    idx = [i for i, h in enumerate(header) if h.startswith(prefix) and (h == prefix or h[len(prefix):].isdigit())]
    return sorted(idx, key=lambda i: int(header[i][len(prefix):] or 0))


def read_univariate(path: str | Path) -> np.ndarray:
    header, arr = read_table(path)
    if "value" in header:
        return arr[:, header.index("value")]
    if len(header) == 1:
        return arr[:, 0]
    raise DataParseError(f"{path}: expected a single 'value' column ({DATA_COLUMNS})")


def read_vectors(path: str | Path) -> np.ndarray:
    header, arr = read_table(path)
    xs = columns_like(header, "x")
    if xs:
        return arr[:, xs]
    if "value" in header:
        return arr[:, [header.index("value")]]
    raise DataParseError(f"{path}: expected columns x1..xk ({DATA_COLUMNS})")


def read_regression(path: str | Path) -> RegressionData:
    header, arr = read_table(path)
    xs = columns_like(header, "x")
    ys = [header.index("y")] if "y" in header else columns_like(header, "y")
    if not xs or not ys:
        raise DataParseError(f"{path}: expected columns y,x1..xk ({DATA_COLUMNS})")
    y = arr[:, ys[0]] if len(ys) == 1 and header[ys[0]] == "y" else arr[:, ys]
    return RegressionData(arr[:, xs], y)


def finite_or_none(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v
