"""Result serialization. Byte-identical across reruns of the same seed.

No timestamps, no environment fingerprints, floats via repr (shortest
round-trip form), unix newlines everywhere. Rerunning an experiment with
an unchanged config file must reproduce every output file exactly; tests
hold this as an invariant, so keep anything nondeterministic out.
"""

import csv
import hashlib
import json
from pathlib import Path

from . import __version__
from .sim import RunMetrics, SweepPoint

SUMMARY_COLUMNS = (
    "schema_version",
    "scenario",
    "scheduler",
    "n_instances",
    "n_scheduled",
    "n_unschedulable",
    "avg_service_time_s",
    "avg_pf_empirical",
    "avg_pf_analytical",
    "tasks_started",
    "tasks_completed",
    "tasks_failed",
    "tasks_aborted",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _writer(f):
    return csv.writer(f, lineterminator="\n")


def write_summary_csv(path, metrics_list: list) -> None:
    """One row per (scenario, scheduler) run."""
    with open(path, "w", newline="") as f:
        w = _writer(f)
        w.writerow(SUMMARY_COLUMNS)
        for m in metrics_list:
            w.writerow(
                [
                    1,
                    m.scenario,
                    m.scheduler,
                    m.n_instances,
                    m.n_scheduled,
                    m.n_unschedulable,
                    _fmt(m.avg_service_time_s),
                    _fmt(m.avg_pf_empirical),
                    _fmt(m.avg_pf_analytical),
                    m.tasks_started,
                    m.tasks_completed,
                    m.tasks_failed,
                    m.tasks_aborted,
                ]
            )


def write_instances_csv(path, metrics: RunMetrics) -> None:
    with open(path, "w", newline="") as f:
        w = _writer(f)
        w.writerow(
            [
                "instance_id",
                "cycle",
                "arrival_s",
                "workload",
                "scheduled",
                "latency_s",
                "success",
                "analytical_pf",
            ]
        )
        for r in metrics.per_instance:
            w.writerow(
                [
                    r.instance_id,
                    r.cycle,
                    _fmt(r.arrival_s),
                    r.workload,
                    _fmt(r.scheduled),
                    _fmt(r.latency_s),
                    _fmt(r.success),
                    _fmt(r.analytical_pf),
                ]
            )


def write_load_csv(path, metrics: RunMetrics) -> None:
    """Booked tasks per device, sampled at every event instant."""
    with open(path, "w", newline="") as f:
        w = _writer(f)
        w.writerow(["time_s", "device_id", "running_tasks"])
        for t, did, n in metrics.load_series:
            w.writerow([_fmt(t), did, n])


def write_sweep_csv(path, param: str, points: list) -> None:
    with open(path, "w", newline="") as f:
        w = _writer(f)
        w.writerow(
            [
                "param",
                "value",
                "avg_service_time_s",
                "normalized_service_time",
                "avg_pf_analytical",
                "avg_pf_empirical",
            ]
        )
        for p in points:
            w.writerow(
                [
                    param,
                    _fmt(p.value),
                    _fmt(p.avg_service_time_s),
                    _fmt(p.normalized_service_time),
                    _fmt(p.avg_pf_analytical),
                    _fmt(p.avg_pf_empirical),
                ]
            )


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, experiment, schedulers: list, outputs=()) -> None:
    """Machine-readable record of what produced the sibling CSVs.

    `outputs` lists the result files to fingerprint; a rerun of the same
    experiment must reproduce every hash.
    """
    base = experiment.base
    doc = {
        "outputs": {
            Path(p).name: {
                "sha256": file_sha256(p),
                "bytes": Path(p).stat().st_size,
            }
            for p in outputs
        },
        "package_version": __version__,
        "experiment": experiment.name,
        "config_sha256": (
            file_sha256(experiment.source_path) if experiment.source_path else None
        ),
        "schedulers": list(schedulers),
        "seed": base.seed,
        "n_cycles": base.n_cycles,
        "cycle_length_s": base.cycle_length_s,
        "instances_per_cycle": base.instances_per_cycle,
        "arrival_window_s": base.arrival_window_s,
        "lambda_set": base.lambda_set,
        "fleet_size": len(base.profiles),
        "params": {
            "alpha": base.params.alpha,
            "beta": base.params.beta,
            "gamma": base.params.gamma,
            "bandwidth_mbps": base.params.bandwidth_mbps,
            "latency_norm": base.params.latency_norm,
        },
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
