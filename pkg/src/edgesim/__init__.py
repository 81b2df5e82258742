"""Interference-aware DAG scheduling on heterogeneous edge fleets.

Core pieces: application DAGs staged by dependency depth (dag, workloads),
device capability and reliability models (devices), a greedy latency- and
failure-aware orchestrator with bounded replication (orchestrator), five
comparison policies (baselines), and a cycle-based discrete-event
simulator with deterministic outputs (sim, reports, config, cli).
"""

__version__ = "0.1.0"

from .dag import AppDag, StagedDag, TaskNode, TaskType, stagerize, validate_dag
from .devices import (
    DeviceProfile,
    DeviceState,
    Fleet,
    InterferenceMatrix,
    availability_prob,
    estimate_exec_latency,
    fit_failure_rate,
    interference_latency,
    task_failure_prob,
)
from .orchestrator import (
    IbdashScheduler,
    NoFeasibleDevice,
    OrchestratorParams,
    Placement,
    ScheduleResult,
    schedule_instance,
)
from .baselines import BaselineKind, BaselineScheduler, LatsModel, make_scheduler
from .config import ConfigError, Experiment, load_experiment
from .sim import RunMetrics, SimConfig, run, sweep
from .workloads import WorkloadKind, WorkloadSpec, build_workload, default_task_types

__all__ = [
    "AppDag",
    "BaselineKind",
    "BaselineScheduler",
    "ConfigError",
    "DeviceProfile",
    "DeviceState",
    "Experiment",
    "Fleet",
    "IbdashScheduler",
    "InterferenceMatrix",
    "LatsModel",
    "NoFeasibleDevice",
    "OrchestratorParams",
    "Placement",
    "RunMetrics",
    "ScheduleResult",
    "SimConfig",
    "StagedDag",
    "TaskNode",
    "TaskType",
    "WorkloadKind",
    "WorkloadSpec",
    "availability_prob",
    "build_workload",
    "default_task_types",
    "estimate_exec_latency",
    "fit_failure_rate",
    "interference_latency",
    "load_experiment",
    "make_scheduler",
    "run",
    "schedule_instance",
    "stagerize",
    "sweep",
    "task_failure_prob",
    "validate_dag",
    "__version__",
]
