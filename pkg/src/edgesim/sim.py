"""Cycle-based discrete-event simulation of DAG arrivals on an edge fleet.

Time is carved into fixed-length cycles. Each cycle starts from a clean
fleet (fresh caches, no resident tasks, every device present), then a
burst of application instances arrives inside a short window at the front
of the cycle and is scheduled in arrival order. Devices depart at
exponentially distributed times sampled per cycle; a departure kills every
task copy still resident on the device, and the device rejoins at the next
cycle reset.

Instance outcomes are decided at scheduling time: execution latencies are
frozen at their placement estimates, so an instance fails exactly when
some task has all of its copies on devices that depart before the copy's
predicted finish. Two streams of randomness are kept apart so every
scheduler sees the same world: an environment stream drives arrivals,
workload mix and departures, and a scheduler stream drives any randomized
policy.
"""

import hashlib
import heapq
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

from .baselines import LatsModel, make_scheduler
from .dag import AppDag, stagerize
from .devices import DeviceProfile, Fleet
from .orchestrator import NoFeasibleDevice, OrchestratorParams


class ConfigInvalid(Exception):
    pass


def derive_rng(seed: int, label: str) -> random.Random:
    """Independent named stream from one user-facing seed."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class SimConfig:
    """Everything one simulation run depends on. Picklable for parallel sweeps."""

    seed: int
    profiles: tuple
    workloads: tuple  # pairs of (AppDag, weight)
    scheduler: str = "ibdash"
    params: OrchestratorParams = field(default_factory=OrchestratorParams)
    n_cycles: int = 20
    cycle_length_s: float = 15.0
    instances_per_cycle: int = 1000
    arrival_window_s: float = 1.5
    lambda_set: str = "custom"
    scenario: str = ""
    lats_model: LatsModel | None = None
    cpu_by_type: dict = field(default_factory=dict, hash=False)
    collect_load_series: bool = True


def validate_config(config: SimConfig) -> None:
    if not config.profiles:
        raise ConfigInvalid("fleet is empty")
    ids = [p.device_id for p in config.profiles]
    if len(set(ids)) != len(ids):
        raise ConfigInvalid("duplicate device ids in fleet")
    n_types = {p.interference.n_types for p in config.profiles}
    if len(n_types) != 1:
        raise ConfigInvalid("devices disagree on the task type count")
    if not config.workloads:
        raise ConfigInvalid("no workloads")
    for dag, weight in config.workloads:
        if weight <= 0:
            raise ConfigInvalid(f"workload {dag.name!r} has non-positive weight")
    if config.n_cycles < 1:
        raise ConfigInvalid("n_cycles must be >= 1")
    if config.instances_per_cycle < 1:
        raise ConfigInvalid("instances_per_cycle must be >= 1")
    if config.cycle_length_s <= 0:
        raise ConfigInvalid("cycle_length_s must be > 0")
    if not 0 <= config.arrival_window_s <= config.cycle_length_s:
        raise ConfigInvalid("arrival window must fit inside the cycle")


class EventKind(Enum):
    CYCLE_RESET = "cycle_reset"
    ARRIVAL = "arrival"
    DEPARTURE = "departure"
    COMPLETION = "completion"


@dataclass(frozen=True)
class Event:
    """One point on the simulation timeline.

    seq breaks time ties first-pushed-first-served, which keeps replays
    byte-identical: resets sort before arrivals, arrivals before the
    departures and completions pushed after them at the same instant.
    """

    time: float
    seq: int
    kind: EventKind
    device_id: int | None = None
    instance_id: int | None = None


@dataclass
class InstanceRecord:
    instance_id: int
    cycle: int
    arrival_s: float
    workload: str
    scheduled: bool
    latency_s: float | None
    success: bool
    analytical_pf: float | None


@dataclass
class RunMetrics:
    """Aggregates plus raw per-instance and per-device series for one run."""

    scheduler: str
    scenario: str
    n_instances: int = 0
    n_scheduled: int = 0
    n_unschedulable: int = 0
    avg_service_time_s: float | None = None
    avg_pf_empirical: float = 0.0
    avg_pf_analytical: float | None = None
    tasks_started: int = 0
    tasks_completed: int = 0
    tasks_failed: int = 0
    tasks_aborted: int = 0
    primary_tasks_per_device: dict = field(default_factory=dict)
    per_instance: list = field(default_factory=list)
    load_series: list = field(default_factory=list)  # (time, device_id, booked tasks)


def sample_departures(profiles, rng: random.Random, horizon: float):
    """One exponential departure draw per device; kept only if inside the horizon.

    Devices are visited in id order so the stream is reproducible. A device
    with rate 0 never departs and consumes no randomness.
    """
    out = []
    for p in sorted(profiles, key=lambda p: p.device_id):
        if p.failure_rate <= 0:
            continue
        t = rng.expovariate(p.failure_rate)
        if t < horizon:
            out.append((p.device_id, t))
    return out


def run(config: SimConfig) -> RunMetrics:
    """Simulate every cycle and aggregate outcome metrics."""
    validate_config(config)
    rng_env = derive_rng(config.seed, "env")
    rng_sched = derive_rng(config.seed, "scheduler")
    scheduler = make_scheduler(
        config.scheduler, config.params, rng=rng_sched,
        lats_model=config.lats_model, cpu_by_type=dict(config.cpu_by_type),
    )
    staged = [stagerize(dag) for dag, _ in config.workloads]
    weights = [w for _, w in config.workloads]
    fleet = Fleet.build(config.profiles)
    metrics = RunMetrics(scheduler=config.scheduler, scenario=config.scenario)
    metrics.primary_tasks_per_device = {did: 0 for did in fleet.ordered_ids}

    service_sum = 0.0
    analytical_sum = 0.0
    failed_instances = 0
    next_instance_id = 0

    for cycle in range(config.n_cycles):
        t0 = cycle * config.cycle_length_s
        t_end = t0 + config.cycle_length_s
        fleet.reset()

        arrivals = sorted(
            rng_env.uniform(0.0, config.arrival_window_s)
            for _ in range(config.instances_per_cycle)
        )
        picks = rng_env.choices(
            range(len(config.workloads)), weights=weights, k=len(arrivals)
        )
        departures = sample_departures(config.profiles, rng_env, config.cycle_length_s)
        departs_at = {did: t0 + t for did, t in departures}

        heap: list[tuple[float, int, Event]] = []
        seq = 0

        def push(ev: Event):
            heapq.heappush(heap, (ev.time, ev.seq, ev))

        push(Event(t0, seq, EventKind.CYCLE_RESET))
        for offset, dag_idx in zip(arrivals, picks):
            seq += 1
            push(Event(t0 + offset, seq, EventKind.ARRIVAL, instance_id=dag_idx))
        for did, t in departures:
            seq += 1
            push(Event(t0 + t, seq, EventKind.DEPARTURE, device_id=did))

        while heap:
            _, _, ev = heapq.heappop(heap)
            if ev.kind is EventKind.DEPARTURE:
                fleet.states[ev.device_id].departed_at = ev.time
            elif ev.kind is EventKind.ARRIVAL:
                dag_idx = ev.instance_id
                record = InstanceRecord(
                    instance_id=next_instance_id,
                    cycle=cycle,
                    arrival_s=ev.time,
                    workload=config.workloads[dag_idx][0].name,
                    scheduled=False,
                    latency_s=None,
                    success=False,
                    analytical_pf=None,
                )
                next_instance_id += 1
                try:
                    result = scheduler.schedule_instance(staged[dag_idx], fleet, ev.time)
                except NoFeasibleDevice:
                    metrics.n_unschedulable += 1
                    metrics.tasks_aborted += len(staged[dag_idx].dag.nodes)
                    failed_instances += 1
                else:
                    record.scheduled = True
                    record.latency_s = result.total_latency
                    record.analytical_pf = result.app_failure_prob
                    metrics.n_scheduled += 1
                    service_sum += result.total_latency
                    analytical_sum += result.app_failure_prob
                    record.success = _resolve_outcome(
                        result, staged[dag_idx], ev.time, departs_at, metrics
                    )
                    # completion markers for the load series
                    for placement in result.placements.values():
                        stage_off = _stage_offset(result, staged[dag_idx], placement.node_id)
                        for dev, lat in zip(placement.devices, placement.latencies):
                            finish = ev.time + stage_off + lat
                            if finish <= t_end:
                                seq += 1
                                push(Event(finish, seq, EventKind.COMPLETION, device_id=dev))
                        metrics.primary_tasks_per_device[placement.devices[0]] += 1
                    if not record.success:
                        failed_instances += 1
                metrics.n_instances += 1
                metrics.per_instance.append(record)
            # CYCLE_RESET and COMPLETION only mark sampling points
            if config.collect_load_series:
                for did in fleet.ordered_ids:
                    metrics.load_series.append(
                        (ev.time, did, fleet.states[did].total_running(ev.time))
                    )

    metrics.avg_pf_empirical = failed_instances / metrics.n_instances
    if metrics.n_scheduled:
        metrics.avg_service_time_s = service_sum / metrics.n_scheduled
        metrics.avg_pf_analytical = analytical_sum / metrics.n_scheduled
    return metrics


def _stage_offset(result, staged_dag, node_id: str) -> float:
    return sum(result.stage_latencies[: staged_dag.stage_of[node_id]])


def _resolve_outcome(result, staged_dag, arrival, departs_at, metrics) -> bool:
    """Decide instance success from placements and this cycle's departures.

    A task copy is lost when its device departs strictly before the copy's
    predicted finish. A task fails when every copy is lost; tasks in stages
    after the first failure never run and count as aborted.
    """
    failed_stage = None
    survived: dict[str, bool] = {}
    for node_id, placement in result.placements.items():
        stage_off = _stage_offset(result, staged_dag, node_id)
        ok = False
        for dev, lat in zip(placement.devices, placement.latencies):
            finish = arrival + stage_off + lat
            tau = departs_at.get(dev)
            if tau is None or tau >= finish:
                ok = True
                break
        survived[node_id] = ok
        if not ok:
            stage = staged_dag.stage_of[node_id]
            failed_stage = stage if failed_stage is None else min(failed_stage, stage)

    metrics.tasks_started += len(result.placements)
    for node_id in result.placements:
        stage = staged_dag.stage_of[node_id]
        if failed_stage is not None and stage > failed_stage:
            metrics.tasks_aborted += 1
        elif survived[node_id]:
            metrics.tasks_completed += 1
        else:
            metrics.tasks_failed += 1
    return failed_stage is None


@dataclass
class SweepPoint:
    value: float
    avg_service_time_s: float | None
    normalized_service_time: float | None
    avg_pf_analytical: float | None
    avg_pf_empirical: float


SWEEPABLE = ("alpha", "beta", "gamma")


def _sweep_one(args) -> SweepPoint:
    config, param, index, value = args
    cast = int(value) if param == "gamma" else float(value)
    point_config = replace(
        config,
        seed=config.seed + index,
        params=replace(config.params, **{param: cast}),
    )
    m = run(point_config)
    return SweepPoint(
        value=value,
        avg_service_time_s=m.avg_service_time_s,
        normalized_service_time=None,
        avg_pf_analytical=m.avg_pf_analytical,
        avg_pf_empirical=m.avg_pf_empirical,
    )


def sweep(config: SimConfig, param: str, values, jobs: int = 1):
    """Run one simulation per value of an objective knob.

    Each point reruns the full simulation with the knob replaced and the
    seed offset by the value's index, then service times are normalized
    against the sweep's maximum so the trend is scale-free. Points are
    returned in value order regardless of execution order.
    """
    if param not in SWEEPABLE:
        raise ConfigInvalid(f"cannot sweep {param!r}; choose from {', '.join(SWEEPABLE)}")
    values = list(values)
    if not values:
        raise ConfigInvalid("no sweep values")
    tasks = [(config, param, i, v) for i, v in enumerate(values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_sweep_one, tasks))
    else:
        points = [_sweep_one(t) for t in tasks]
    top = max((p.avg_service_time_s or 0.0) for p in points)
    for p in points:
        if p.avg_service_time_s is not None and top > 0:
            p.normalized_service_time = p.avg_service_time_s / top
    return points
