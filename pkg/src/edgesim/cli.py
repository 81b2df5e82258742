"""Command line entry point.

    edgesim run EXPERIMENT        simulate and write result CSVs
    edgesim sweep EXPERIMENT      rerun across a parameter range
    edgesim fit-lambda TRACE      fit a failure rate to an availability trace
    edgesim validate EXPERIMENT   parse and cross-check an experiment file

EXPERIMENT is a TOML file path or the name of a bundled experiment.
Exit codes: 0 on success, 2 on configuration or input errors.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .baselines import SCHEDULER_NAMES
from .config import (
    ConfigError,
    bundled_data_dir,
    load_experiment,
    load_trace_csv,
    resolve_experiment_path,
)
from .dag import DagError
from .devices import DeviceError, fit_failure_rate, fit_rms_log_error
from .reports import (
    write_instances_csv,
    write_load_csv,
    write_manifest,
    write_summary_csv,
    write_sweep_csv,
)
from .sim import SWEEPABLE, ConfigInvalid, run, sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgesim",
        description="DAG scheduling experiments on simulated edge fleets",
    )
    parser.add_argument("--version", action="version", version=f"edgesim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write result CSVs")
    p_run.add_argument("experiment", help="experiment file or bundled experiment name")
    p_run.add_argument("--seed", type=int, help="override the experiment's seed")
    p_run.add_argument("--out-dir", help="output directory (default from the experiment)")
    p_run.add_argument(
        "--scheduler",
        action="append",
        choices=SCHEDULER_NAMES,
        help="override the experiment's scheduler list; repeatable",
    )
    p_run.add_argument(
        "--no-load-series",
        action="store_true",
        help="skip the per-device load CSVs",
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="rerun an experiment across a parameter range")
    p_sweep.add_argument("experiment")
    p_sweep.add_argument("--param", required=True, choices=SWEEPABLE)
    p_sweep.add_argument(
        "--range",
        dest="value_range",
        required=True,
        help="start:stop:step (stop inclusive) or comma-separated values",
    )
    p_sweep.add_argument("--scheduler", choices=SCHEDULER_NAMES)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out-dir")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.set_defaults(func=cmd_sweep)

    p_fit = sub.add_parser("fit-lambda", help="fit a failure rate to an availability trace")
    p_fit.add_argument("trace", help="CSV with elapsed_s, availability columns")
    p_fit.set_defaults(func=cmd_fit_lambda)

    p_val = sub.add_parser("validate", help="check an experiment file without running it")
    p_val.add_argument("experiment")
    p_val.set_defaults(func=cmd_validate)

    p_data = sub.add_parser("data-dir", help="print the bundled data directory")
    p_data.set_defaults(func=cmd_data_dir)

    return parser


def parse_value_range(text: str) -> list[float]:
    """start:stop:step with stop inclusive, or a comma-separated value list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"non-numeric range component in {text!r}") from None
        if step <= 0:
            raise ConfigError("range step must be > 0")
        if stop < start:
            raise ConfigError("range stop must be >= start")
        n = int((stop - start) / step + 1e-9)
        values = [start + i * step for i in range(n + 1)]
        if abs(values[-1] - stop) < step * 1e-6:
            values[-1] = stop
        return values
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ConfigError(f"non-numeric value in {text!r}") from None


def _prepare(args):
    experiment = load_experiment(resolve_experiment_path(args.experiment))
    base = experiment.base
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    if getattr(args, "no_load_series", False):
        base = replace(base, collect_load_series=False)
    experiment.base = base
    out_dir = args.out_dir or experiment.out_dir or f"results/{experiment.name}"
    return experiment, Path(out_dir)


def cmd_run(args) -> int:
    experiment, out_dir = _prepare(args)
    schedulers = args.scheduler or experiment.schedulers
    out_dir.mkdir(parents=True, exist_ok=True)

    all_metrics = []
    written = []
    for name in schedulers:
        metrics = run(experiment.config_for(name))
        all_metrics.append(metrics)
        write_instances_csv(out_dir / f"instances_{name}.csv", metrics)
        written.append(out_dir / f"instances_{name}.csv")
        if experiment.base.collect_load_series:
            write_load_csv(out_dir / f"load_{name}.csv", metrics)
            written.append(out_dir / f"load_{name}.csv")
    write_summary_csv(out_dir / "summary.csv", all_metrics)
    written.append(out_dir / "summary.csv")
    write_manifest(out_dir / "manifest.json", experiment, schedulers, written)

    base = experiment.base
    print(
        f"{experiment.name}: {base.n_cycles} cycles x "
        f"{base.instances_per_cycle} instances, seed {base.seed}, "
        f"lambda set {base.lambda_set}, {len(base.profiles)} devices"
    )
    print(f"{'scheduler':<12} {'service(s)':>10} {'PF emp':>8} {'PF ana':>8} {'unsched':>8}")
    for m in all_metrics:
        service = f"{m.avg_service_time_s:.3f}" if m.avg_service_time_s is not None else "-"
        ana = f"{m.avg_pf_analytical:.4f}" if m.avg_pf_analytical is not None else "-"
        print(
            f"{m.scheduler:<12} {service:>10} {m.avg_pf_empirical:>8.4f} "
            f"{ana:>8} {m.n_unschedulable:>8}"
        )
    print(f"wrote {out_dir}/summary.csv")
    return 0


def cmd_sweep(args) -> int:
    experiment, out_dir = _prepare(args)
    scheduler = args.scheduler or experiment.schedulers[0]
    values = parse_value_range(args.value_range)
    out_dir.mkdir(parents=True, exist_ok=True)

    points = sweep(experiment.config_for(scheduler), args.param, values, jobs=args.jobs)
    out_path = out_dir / f"sweep_{args.param}_{scheduler}.csv"
    write_sweep_csv(out_path, args.param, points)
    write_manifest(out_dir / "manifest.json", experiment, [scheduler], [out_path])

    print(
        f"{experiment.name}: swept {args.param} over {len(values)} values "
        f"with {scheduler}"
    )
    print(f"wrote {out_path}")
    return 0


def cmd_fit_lambda(args) -> int:
    trace = load_trace_csv(args.trace)
    rate = fit_failure_rate(trace)
    rms = fit_rms_log_error(trace, rate)
    print(f"fitted exponential failure rate from {len(trace)} points")
    print(f"rms log-availability residual: {rms:.6f}")
    print(f"rate_per_s={rate!r}")
    return 0


def cmd_validate(args) -> int:
    experiment = load_experiment(resolve_experiment_path(args.experiment))
    base = experiment.base
    dag_names = ", ".join(dag.name for dag, _ in base.workloads)
    print(
        f"ok: {experiment.name} ({len(base.profiles)} devices, "
        f"{len(base.workloads)} workloads: {dag_names}; "
        f"schedulers: {', '.join(experiment.schedulers)})"
    )
    return 0


def cmd_data_dir(args) -> int:
    print(bundled_data_dir())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigInvalid, DagError, DeviceError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
