"""Command-line front end: ``plan``, ``pilot``, ``run`` and ``report``.

Exit codes: 0 success, 2 invalid flags or config, 3 degenerate pilot
statistics, 4 model evaluation failure, 5 malformed report file.

Every command is deterministic given its flags and base seed; rerunning
writes byte-identical JSON.  Wall-clock timing is printed to the console
only, never into the deterministic payload.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

from .executor import (
    DegenerateModelError,
    ModelEvaluationError,
    pilot_estimate_parameters,
    run_classical_mc,
    run_mlmc,
)
from .hierarchy import ResolutionHierarchy
from .models import model_from_config
from .planner import LevelPlan, StrategyId, plan_for_strategy
from .stats import SolutionParameters

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_MODEL_FAILURE = 4
EXIT_BAD_REPORT = 5

_STRATEGY_FLAGS = {
    "mc": StrategyId.CLASSICAL_MC,
    "s1": StrategyId.S1,
    "s2": StrategyId.S2,
    "s3": StrategyId.S3,
    "s4": StrategyId.S4,
}


class _UsageError(ValueError):
    """Config/flag problems that map to exit code 2."""


def _sig4(x):
    if x is None:
        return "-"
    return format(x, ".4g")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


@dataclass
class RunConfig:
    """Parsed ``run``/``pilot`` configuration file.

    The plan is either embedded (``plan``), derived from explicit
    ``parameters``, or computed inline from a pilot of ``pilot_samples``
    realizations when neither is present.
    """

    model: dict
    strategy: Optional[str] = None
    plan: Optional[dict] = None
    parameters: Optional[dict] = None
    pilot_samples: int = 256
    base_seed: int = 0
    classical_level: int = 1
    workers: int = 1
    log_samples: bool = False
    sample_log: str = "samples.csv"
    out: str = "report.json"
    hierarchy: dict = field(default_factory=lambda: {"r1": 1.0, "C1": 1.0})

    _KEYS = (
        "model",
        "strategy",
        "plan",
        "parameters",
        "pilot_samples",
        "base_seed",
        "classical_level",
        "workers",
        "log_samples",
        "sample_log",
        "out",
        "hierarchy",
    )

    @classmethod
    def from_json_dict(cls, d):
        if not isinstance(d, dict):
            raise _UsageError("config must be a JSON object")
        unknown = sorted(set(d) - set(cls._KEYS))
        if unknown:
            raise _UsageError(f"unknown config keys: {unknown}")
        if "model" not in d:
            raise _UsageError('config is missing the required "model" entry')
        cfg = cls(model=d["model"])
        for key in cls._KEYS[1:]:
            if key in d and d[key] is not None:
                setattr(cfg, key, d[key])
        cfg.validate()
        return cfg

    def validate(self):
        model_from_config(self.model)  # raises ValueError on bad model config
        if self.strategy is not None and self.strategy not in _STRATEGY_FLAGS:
            raise _UsageError(
                f"strategy must be one of {sorted(_STRATEGY_FLAGS)}, got {self.strategy!r}"
            )
        if self.plan is not None:
            LevelPlan.from_json_dict(self.plan)
        if self.parameters is not None:
            SolutionParameters.from_json_dict(self.parameters)
        if int(self.pilot_samples) != self.pilot_samples or self.pilot_samples < 2:
            raise _UsageError(f"pilot_samples must be an integer >= 2, got {self.pilot_samples}")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise _UsageError(f"base_seed must be a non-negative integer, got {self.base_seed}")
        if int(self.classical_level) != self.classical_level or self.classical_level < 1:
            raise _UsageError(f"classical_level must be an integer >= 1, got {self.classical_level}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise _UsageError(f"workers must be an integer >= 1, got {self.workers}")
        ResolutionHierarchy.from_json_dict(self.hierarchy)

    def to_json_dict(self):
        out = {"model": self.model}
        if self.strategy is not None:
            out["strategy"] = self.strategy
        if self.plan is not None:
            out["plan"] = self.plan
        if self.parameters is not None:
            out["parameters"] = self.parameters
        out.update(
            {
                "pilot_samples": self.pilot_samples,
                "base_seed": self.base_seed,
                "classical_level": self.classical_level,
                "workers": self.workers,
                "log_samples": self.log_samples,
                "sample_log": self.sample_log,
                "out": self.out,
                "hierarchy": dict(self.hierarchy),
            }
        )
        return out


def _load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config {path} is not valid JSON: {exc}")
    return RunConfig.from_json_dict(raw)


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

def cmd_plan(args):
    try:
        params = SolutionParameters(
            delta=args.delta, e=args.err, alpha=args.alpha, sigma=args.sigma
        )
        hierarchy = ResolutionHierarchy(r1=args.r1, C1=args.c1)
        if args.strategy == "all":
            chosen = list(StrategyId)
        else:
            chosen = [_STRATEGY_FLAGS[args.strategy]]
        plans = [
            plan_for_strategy(s, params, max_levels=args.max_levels) for s in chosen
        ]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    header = f"{'strategy':<12} {'L':>2}  {'M':<28} {'bound/e':>7} {'load':>10}"
    print(header)
    print("-" * len(header))
    for plan in plans:
        m_str = " ".join(str(m) for m in plan.M)
        print(
            f"{plan.strategy.value:<12} {plan.L:>2}  {m_str:<28} "
            f"{_sig4(plan.error_bound_multiplier):>7} {_sig4(plan.relative_load):>10}"
        )
    _write_json(
        args.out,
        {
            "hierarchy": hierarchy.to_json_dict(),
            "plans": [p.to_json_dict() for p in plans],
        },
    )
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# pilot
# ---------------------------------------------------------------------------

def cmd_pilot(args):
    try:
        cfg = _load_config(args.config)
        if args.samples is not None:
            cfg.pilot_samples = args.samples
        if args.seed is not None:
            cfg.base_seed = args.seed
        cfg.validate()
        model = model_from_config(cfg.model)
    except (_UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        params = pilot_estimate_parameters(model, cfg.pilot_samples, cfg.base_seed)
    except DegenerateModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ModelEvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    print(
        f"pilot ({cfg.pilot_samples} coupled samples, seed {cfg.base_seed}): "
        f"delta={_sig4(params.delta)} alpha={_sig4(params.alpha)} e={_sig4(params.e)}"
    )
    _write_json(args.out, params.to_json_dict())
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _resolve_plan(cfg, model):
    """Plan precedence: embedded plan > explicit parameters > inline pilot."""
    if cfg.plan is not None:
        plan = LevelPlan.from_json_dict(cfg.plan)
        if cfg.strategy is not None and _STRATEGY_FLAGS[cfg.strategy] is not plan.strategy:
            raise _UsageError(
                f"config strategy {cfg.strategy!r} does not match the embedded "
                f"plan's strategy {plan.strategy.value!r}"
            )
        return plan
    if cfg.strategy is None:
        raise _UsageError('config needs a "strategy" when no plan is embedded')
    if cfg.parameters is not None:
        params = SolutionParameters.from_json_dict(cfg.parameters)
    else:
        params = pilot_estimate_parameters(model, cfg.pilot_samples, cfg.base_seed)
    return plan_for_strategy(
        _STRATEGY_FLAGS[cfg.strategy], params, max_levels=model.max_level
    )


def cmd_run(args):
    try:
        cfg = _load_config(args.config)
        if args.seed is not None:
            cfg.base_seed = args.seed
        if args.strategy is not None:
            cfg.strategy = args.strategy
        if args.out is not None:
            cfg.out = args.out
        if args.workers is not None:
            cfg.workers = args.workers
        if args.log_samples:
            cfg.log_samples = True
        if args.sample_log is not None:
            cfg.sample_log = args.sample_log
            cfg.log_samples = True
        cfg.validate()
        model = model_from_config(cfg.model)
    except (_UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    log_path = cfg.sample_log if cfg.log_samples else None
    try:
        plan = _resolve_plan(cfg, model)
        if plan.L > model.max_level:
            raise _UsageError(
                f"plan has L={plan.L} levels but the model stops at {model.max_level}"
            )
        if plan.strategy is StrategyId.CLASSICAL_MC:
            report = run_classical_mc(
                model,
                cfg.classical_level,
                plan.M[0],
                cfg.base_seed,
                workers=cfg.workers,
                sample_log_path=log_path,
            )
            if plan.inputs is not None:
                report = _with_plan(report, plan)
        else:
            report = run_mlmc(
                model,
                plan,
                cfg.base_seed,
                workers=cfg.workers,
                sample_log_path=log_path,
            )
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ModelEvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    print(
        f"{plan.strategy.value}: estimate={_sig4(report.estimate)} "
        f"std_error={_sig4(report.estimated_std_error)} "
        f"bound={_sig4(report.a_priori_error_bound)} "
        f"load={_sig4(report.realized_load)}"
    )
    print(f"wall time: {report.wall_time:.3f}s")
    _write_json(cfg.out, report.to_json_dict())
    print(f"wrote {cfg.out}")
    if log_path is not None:
        print(f"wrote {log_path}")
    return EXIT_OK


def _with_plan(report, plan):
    """Attach the planner-produced classical plan to an executed report."""
    from dataclasses import replace

    return replace(report, plan=plan)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

_REPORT_KEYS = ("estimate", "estimated_std_error", "a_priori_error_bound", "realized_load")


def _read_report(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: {exc}")
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: report must be a JSON object")
    missing = [k for k in _REPORT_KEYS if k not in raw]
    if missing:
        raise ValueError(f"{path}: missing report fields {missing}")
    out = {}
    for k in _REPORT_KEYS:
        v = raw[k]
        if v is not None and not isinstance(v, (int, float)):
            raise ValueError(f"{path}: field {k!r} must be a number or null")
        out[k] = v
    if not isinstance(raw.get("plan"), dict) or "strategy" not in raw["plan"]:
        raise ValueError(f"{path}: missing or malformed plan")
    out["strategy"] = raw["plan"]["strategy"]
    out["path"] = path
    return out


def cmd_report(args):
    try:
        rows = [_read_report(p) for p in args.reports]
    except ValueError as exc:
        print(f"error: malformed report: {exc}", file=sys.stderr)
        return EXIT_BAD_REPORT

    header = (
        f"{'report':<24} {'strategy':<12} {'estimate':>12} {'std_err':>10} "
        f"{'bound':>10} {'load':>10} {'savings':>8}"
    )
    print(header)
    print("-" * len(header))
    base_load = rows[0]["realized_load"]
    for row in rows:
        if base_load and row["realized_load"] is not None:
            savings = f"{(1.0 - row['realized_load'] / base_load) * 100.0:.1f}%"
        else:
            savings = "-"
        print(
            f"{row['path']:<24} {row['strategy']:<12} {_sig4(row['estimate']):>12} "
            f"{_sig4(row['estimated_std_error']):>10} {_sig4(row['a_priori_error_bound']):>10} "
            f"{_sig4(row['realized_load']):>10} {savings:>8}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="mlmckit",
        description="Plan and execute multilevel Monte Carlo ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="size sampling plans from (delta, e, alpha)")
    p_plan.add_argument("--delta", type=float, required=True, help="QoI spread")
    p_plan.add_argument("--err", type=float, required=True, help="target fine-level error e")
    p_plan.add_argument("--alpha", type=float, required=True, help="per-level decay exponent")
    p_plan.add_argument("--sigma", type=float, default=1.0, help="slack exponent (strategies 3/4)")
    p_plan.add_argument(
        "--strategy",
        choices=["all"] + sorted(_STRATEGY_FLAGS),
        default="all",
    )
    p_plan.add_argument("--max-levels", type=int, default=None, dest="max_levels")
    p_plan.add_argument("--r1", type=float, default=1.0, help="finest mesh spacing")
    p_plan.add_argument("--c1", type=float, default=1.0, help="DOF prefactor")
    p_plan.add_argument("--out", default="plans.json", help="plans JSON path")
    p_plan.set_defaults(func=cmd_plan)

    p_pilot = sub.add_parser("pilot", help="estimate (delta, e, alpha) from coupled pilots")
    p_pilot.add_argument("--config", required=True, help="model config JSON")
    p_pilot.add_argument("--samples", type=int, default=None, help="pilot sample count")
    p_pilot.add_argument("--seed", type=int, default=None, help="base seed")
    p_pilot.add_argument("--out", default="parameters.json", help="parameters JSON path")
    p_pilot.set_defaults(func=cmd_pilot)

    p_run = sub.add_parser("run", help="execute a plan (or pilot+plan inline)")
    p_run.add_argument("--config", required=True, help="run config JSON")
    p_run.add_argument("--seed", type=int, default=None, help="base seed override")
    p_run.add_argument(
        "--strategy", choices=sorted(_STRATEGY_FLAGS), default=None, help="strategy override"
    )
    p_run.add_argument("--out", default=None, help="report JSON path override")
    p_run.add_argument("--workers", type=int, default=None, help="worker count")
    p_run.add_argument(
        "--log-samples", action="store_true", dest="log_samples",
        help="write the per-evaluation CSV log",
    )
    p_run.add_argument("--sample-log", default=None, dest="sample_log", help="CSV log path")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="summarize report files side by side")
    p_rep.add_argument("reports", nargs="+", help="report JSON paths")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
