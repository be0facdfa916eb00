"""Command-line front end: ``simulate``, ``calibrate``, ``detect`` and ``experiment``.

Exit codes: 0 success, 2 usage or parse error, 3 I/O error, 4 domain error
(for example a sample below the minimum size).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from . import fileio
from .binary import BinaryStatistic, detect
from .calibration import calibrate_formula, mc_calibrate
from .core import DetectionConfig, RegimeSplitError
from .generators import GeneratorSpec, MVGaussianMixture, MulticlassMixture, generate
from .harness import PRESETS, Cell, ExperimentPlan, InvalidPlan, UnknownPreset, preset, run_plan
from .multiclass import detect_multiclass
from .multivariate import VectorStatistic, detect_multivariate_binary, norms
from .regression import detect_switching_regression

log = logging.getLogger("regime_split")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# schema validation


def _schema() -> dict[str, Any]:
    text = resources.files("regime_split").joinpath("schemas/outputs.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_output(doc: dict[str, Any], kind: str) -> None:
    """Check ``doc`` against ``#/$defs/<kind>`` of the published schema."""
    schema = _schema()
    jsonschema.validate(doc, {"$ref": f"#/$defs/{kind}", "$defs": schema["$defs"]})


def _write_json(path: str, doc: dict[str, Any], kind: str) -> None:
    validate_output(doc, kind)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def _seed(v: str) -> int:
    s = int(v)
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return s


def _sample_section(spec: dict[str, dict[str, str]]) -> tuple[int, int]:
    sec = spec.get("sample", {})
    if "n" not in sec:
        raise fileio.SpecParseError("[sample] needs n")
    return fileio._int(sec["n"], "n"), fileio._int(sec.get("seed", "0"), "seed")


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = fileio.read_spec(args.spec)
    if "model" not in spec:
        raise fileio.SpecParseError("spec needs a [model] section")
    model = fileio.build_model(spec["model"])
    n, seed = _sample_section(spec)
    if args.seed is not None:
        seed = args.seed
    try:
        g = generate(GeneratorSpec(model, n, seed))
    except ValueError as exc:
        raise fileio.SpecParseError(str(exc)) from exc
    fileio.write_data_csv(args.out, g.data)
    if args.labels:
        n_classes = len(model.epsilons) + 1 if isinstance(model, (MulticlassMixture, MVGaussianMixture)) else 2
        fileio.write_labels_csv(args.labels, g.labels, n_classes)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie strictly between 0 and 1")
    if args.method == "formula":
        n = args.n
        if n is None:
            raise UsageError("--method formula needs --n")
        res = calibrate_formula(n, args.sigma, args.rho, args.alpha)
    else:
        if args.model is None:
            raise UsageError("--method mc needs --model")
        if args.trials < 100:
            raise UsageError("--trials must be at least 100")
        spec = fileio.read_spec(args.model)
        if "model" not in spec:
            raise fileio.SpecParseError("model spec needs a [model] section")
        model = fileio.build_model(spec["model"])
        n, seed = _sample_section(spec)
        if args.n is not None:
            n = args.n
        if args.seed is not None:
            seed = args.seed
        cfg = fileio.build_config(spec.get("detector"))
        stat = VectorStatistic(cfg) if isinstance(model, MVGaussianMixture) else BinaryStatistic(cfg)
        res = mc_calibrate(GeneratorSpec(model, n, seed), stat, args.alpha, args.trials, seed, args.workers)
    _write_json(args.out, res.to_dict(), "calibration")
    return EXIT_OK


def _parse_threshold(text: str, n: int) -> float:
    kind, _, rest = text.partition(":")
    try:
        if kind == "fixed":
            c = float(rest)
            if not c > 0 or not math.isfinite(c):
                raise UsageError("fixed threshold must be positive and finite")
            return c
        if kind == "formula":
            parts = [float(p) for p in rest.split(",")] if rest else []
            if len(parts) != 3:
                raise UsageError("formula threshold is formula:<sigma>,<rho>,<alpha>")
            return calibrate_formula(n, *parts).C
    except ValueError as exc:
        raise UsageError(f"bad threshold {text!r}: {exc}") from exc
    if kind == "mc":
        doc = json.loads(Path(rest).read_text(encoding="utf-8"))
        try:
            return float(doc["C"])
        except (KeyError, TypeError, ValueError) as exc:
            raise fileio.DataParseError(f"{rest}: not a calibration document") from exc
    raise UsageError(f"bad threshold {text!r}; use fixed:<C>, formula:<s,r,a> or mc:<file>")


def cmd_detect(args: argparse.Namespace) -> int:
    cfg_kw: dict[str, Any] = {"grid": args.grid}
    if args.b_max is not None:
        cfg_kw["b_max"] = args.b_max
    if args.n_min is not None:
        cfg_kw["n_min"] = args.n_min
    mode = args.mode
    if mode == "variance":
        cfg_kw["variant"] = "variance_contamination"
    cfg = DetectionConfig(**cfg_kw)
    if mode in ("binary", "variance"):
        x = fileio.read_univariate(args.data)
        C = _parse_threshold(args.threshold, len(x))
        doc = detect(x, cfg, C).to_dict()
        kind = "detection_report"
        n = len(x)
    elif mode == "multivariate":
        v = fileio.read_vectors(args.data)
        C = _parse_threshold(args.threshold, v.shape[0])
        doc = detect_multivariate_binary(v, cfg, C).to_dict()
        kind = "detection_report"
        n = v.shape[0]
    elif mode == "multiclass":
        if args.b_max is None:
            raise UsageError("multiclass mode needs --b-max (the class separation B)")
        v = fileio.read_vectors(args.data)
        x = v[:, 0] if v.shape[1] == 1 else norms(v)
        C = _parse_threshold(args.threshold, len(x))
        doc = detect_multiclass(x, cfg, C, args.b_max, args.max_classes, args.peel).to_dict()
        kind = "multiclass_report"
        n = len(x)
    else:
        d = fileio.read_regression(args.data)
        n = d.y.shape[1] if d.is_panel else d.y.shape[0]
        C = _parse_threshold(args.threshold, n)
        doc = detect_switching_regression(d, cfg, C).to_dict()
        kind = "regression_report"
    doc["mode"] = mode
    if kind != "multiclass_report":
        doc["N"] = int(n)
    _write_json(args.out, doc, kind)
    return EXIT_OK


def build_plan(path: str) -> ExperimentPlan:
    """Experiment plan from a ``[plan]``/``[model]``/``[detector]``/``[threshold]`` file."""
    spec = fileio.read_spec(path)
    if "plan" not in spec or "model" not in spec:
        raise fileio.SpecParseError("plan file needs [plan] and [model] sections")
    p = dict(spec["plan"])
    model = fileio.build_model(spec["model"])
    threshold = fileio.build_threshold(spec.get("threshold"))
    cfg = fileio.build_config(spec.get("detector"), threshold)
    try:
        sizes = [int(v) for v in fileio._floats(p.pop("sizes"), "sizes")]
    except KeyError as exc:
        raise fileio.SpecParseError("[plan] needs sizes") from exc
    cs = fileio._floats(p.pop("thresholds"), "thresholds") if "thresholds" in p else [None] * len(sizes)
    if len(cs) != len(sizes):
        raise fileio.SpecParseError("thresholds must match sizes")
    scenario = p.pop("scenario", "")
    cells = tuple(Cell(model, n, c, scenario) for n, c in zip(sizes, cs))
    kw: dict[str, Any] = {"cfg": cfg}
    conv = {
        "replications": fileio._int, "seed": fileio._int, "max_classes": fileio._int, "true_k": fileio._int,
        "b": fileio._float, "alphas": fileio._floats, "peel": lambda v, k: v,
    }
    for key, raw in p.items():
        if key in ("name", "task"):
            continue
        if key not in conv:
            raise fileio.SpecParseError(f"unknown plan key {key!r}")
        kw["B" if key == "b" else key] = conv[key](raw, key)
    try:
        return ExperimentPlan(p.get("name", Path(path).stem), p.get("task", "binary"), cells, **kw)  # type: ignore[arg-type]
    except InvalidPlan as exc:
        raise fileio.SpecParseError(str(exc)) from exc


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.replications is not None and args.replications < 1:
        raise UsageError("--replications must be at least 1")
    if args.preset:
        try:
            plan = preset(args.preset, args.replications or 1000, args.seed)
        except UnknownPreset as exc:
            raise UsageError(f"{exc}; choose one of {', '.join(PRESETS)}") from exc
    else:
        plan = build_plan(args.plan)
        if args.replications is not None:
            plan = plan.with_(replications=args.replications)
        if args.seed is not None:
            plan = plan.with_(seed=args.seed)
    table = run_plan(plan, args.workers)
    Path(args.out).write_text(table.to_csv(), encoding="utf-8")
    if args.json:
        _write_json(args.json, table.to_dict(), "experiment_table")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regime-split", description="Detect random switches in retrospective samples.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic sample")
    s.add_argument("--spec", required=True, help="model spec file")
    s.add_argument("--out", required=True, help="data CSV")
    s.add_argument("--labels", help="optional labels CSV")
    s.add_argument("--seed", type=_seed, help="overrides the spec seed")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="compute a decision threshold")
    c.add_argument("--model", help="homogeneous model spec file (Monte Carlo)")
    c.add_argument("--method", choices=("mc", "formula"), default="mc")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--seed", type=_seed)
    c.add_argument("--n", type=int, help="sample size (overrides the spec)")
    c.add_argument("--sigma", type=float, default=1.0, help="formula only")
    c.add_argument("--rho", type=float, default=0.0, help="formula only")
    c.add_argument("--workers", type=int)
    c.add_argument("--out", required=True, help="calibration JSON")
    c.set_defaults(func=cmd_calibrate)

    d = sub.add_parser("detect", help="run a detector on a CSV sample")
    d.add_argument("--data", required=True)
    d.add_argument("--mode", required=True, choices=("binary", "variance", "multiclass", "multivariate", "regression"))
    d.add_argument("--threshold", required=True, help="fixed:<C> | formula:<sigma,rho,alpha> | mc:<calibration.json>")
    d.add_argument("--b-max", type=float, help="scan cap; the class separation B in multiclass mode")
    d.add_argument("--max-classes", type=int, default=10)
    d.add_argument("--grid", choices=("geometric", "breakpoints"), default="breakpoints")
    d.add_argument("--peel", choices=("magnitude", "band"), default="magnitude")
    d.add_argument("--n-min", type=int)
    d.add_argument("--out", required=True, help="report JSON")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("experiment", help="replicate a table preset or a plan file")
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    g.add_argument("--plan", help="plan file")
    e.add_argument("--replications", type=int)
    e.add_argument("--seed", type=_seed)
    e.add_argument("--workers", type=int, help="defaults to $REGIME_SPLIT_THREADS or the CPU count")
    e.add_argument("--out", required=True, help="table CSV")
    e.add_argument("--json", help="optional table JSON")
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"regime-split: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fileio.SpecParseError, fileio.DataParseError, json.JSONDecodeError) as exc:
        print(f"regime-split: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"regime-split: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RegimeSplitError, ValueError) as exc:
        print(f"regime-split: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
