"""Greedy stage-by-stage placement of application DAGs onto a device fleet.

For each task, every live device gets a candidate latency

    exec estimate (interference-aware) + model upload + input transfer

subject to a post-eviction memory check. Candidates feed a min-priority
queue keyed by latency; the cheapest device becomes the primary. While the
task's failure probability stays above a threshold, further devices are
popped off the queue as replicas, each accepted only if it improves the
weighted objective alpha*latency + (1-alpha)*failure.
"""

import heapq
from dataclasses import dataclass, field

from .dag import StagedDag, TaskNode
from .devices import (
    DeviceProfile,
    DeviceState,
    Fleet,
    cache_model,
    estimate_exec_latency,
    memory_feasible,
    task_failure_prob,
)

MB_PER_GB = 1000.0  # decimal units throughout: Mb, MB, Mbps


class SchedulingError(Exception):
    pass


class NoFeasibleDevice(SchedulingError):
    """Every device is departed or fails the memory check for this task."""

    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"no feasible device for task {node_id!r}")


class UnplacedPredecessor(SchedulingError):
    """Transfer cost requested against a predecessor that has no placement yet."""


@dataclass(frozen=True)
class OrchestratorParams:
    """Knobs of the placement objective.

    alpha weighs latency against failure probability in [0, 1]; beta is the
    per-task failure threshold above which replication kicks in; gamma caps
    replicas per task; bandwidth_mbps is the network rate used for model
    uploads and inter-device transfers. latency_norm divides latency before
    weighting so both objective terms are comparable; None means derive it
    per instance from a latency-only dry pass.
    """

    alpha: float = 0.5
    beta: float = 0.1
    gamma: int = 3
    bandwidth_mbps: float = 200.0
    latency_norm: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.gamma < 0 or int(self.gamma) != self.gamma:
            raise ValueError(f"gamma must be a non-negative integer, got {self.gamma}")
        if self.bandwidth_mbps <= 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth_mbps}")
        if self.latency_norm is not None and self.latency_norm <= 0:
            raise ValueError(f"latency_norm must be > 0, got {self.latency_norm}")


@dataclass
class Placement:
    """Where one task landed.

    devices[0] is the primary (queue minimum); the rest are replicas in
    acceptance order. latencies and device_failure_probs are per device,
    parallel to devices. failure_prob is the product over all devices,
    the probability every copy is lost.
    """

    node_id: str
    devices: list[int]
    latency: float
    failure_prob: float
    latencies: list[float] = field(default_factory=list)
    device_failure_probs: list[float] = field(default_factory=list)


@dataclass
class ScheduleResult:
    """Placement of one application instance."""

    placements: dict[str, Placement]
    stage_latencies: list[float]
    total_latency: float
    app_failure_prob: float
    latency_norm: float | None = None


def model_upload_latency(task_type, state: DeviceState, bandwidth_mbps: float) -> float:
    """Seconds to ship the task's model to the device; 0 if none needed or cached."""
    if not task_type.needs_model or state.has_model(task_type.type_id):
        return 0.0
    return task_type.model_size_mb * 8.0 / bandwidth_mbps


def data_transfer_latency(
    node: TaskNode,
    device_id: int,
    placements: dict[str, Placement],
    by_id: dict[str, TaskNode],
    bandwidth_mbps: float,
) -> float:
    """Seconds to pull inputs from predecessors placed on other devices.

    A predecessor's output is local to every device that ran one of its
    copies; co-located inputs cost nothing. Costs of remote inputs add up.
    """
    total = 0.0
    for pred_id in node.predecessors:
        placed = placements.get(pred_id)
        if placed is None:
            raise UnplacedPredecessor(
                f"task {node.node_id!r} scheduled before predecessor {pred_id!r}"
            )
        if device_id in placed.devices:
            continue
        total += by_id[pred_id].task_type.output_size_mb * 8.0 / bandwidth_mbps
    return total


def candidate_breakdown(
    node: TaskNode,
    profile: DeviceProfile,
    state: DeviceState,
    placements: dict[str, Placement],
    by_id: dict[str, TaskNode],
    bandwidth_mbps: float,
    start: float,
    now: float,
) -> tuple[float, float, float] | None:
    """(exec, upload, transfer) seconds for running `node` here, or None.

    None marks infeasibility: the device has departed or cannot fit the
    task's model even after evicting every unpinned cached model. `start`
    is when the task would begin (arrival plus earlier stage latencies);
    `now` is the scheduling instant, used for cache pinning decisions.
    """
    if state.departed_at is not None:
        return None
    t = node.task_type
    if not memory_feasible(state, t, now):
        return None
    exec_lat = estimate_exec_latency(profile, state, t.type_id, start)
    upload = model_upload_latency(t, state, bandwidth_mbps)
    transfer = data_transfer_latency(node, profile.device_id, placements, by_id, bandwidth_mbps)
    return exec_lat, upload, transfer


def candidate_latency(
    node: TaskNode,
    profile: DeviceProfile,
    state: DeviceState,
    placements: dict[str, Placement],
    by_id: dict[str, TaskNode],
    bandwidth_mbps: float,
    start: float,
    now: float,
) -> float | None:
    """Total candidate latency on one device, or None if infeasible."""
    parts = candidate_breakdown(
        node, profile, state, placements, by_id, bandwidth_mbps, start, now
    )
    if parts is None:
        return None
    return sum(parts)


def weighted_score(latency: float, failure_prob: float, params: OrchestratorParams) -> float:
    """alpha * latency / latency_norm + (1 - alpha) * failure_prob."""
    if latency < 0:
        raise ValueError(f"latency must be >= 0, got {latency}")
    if params.latency_norm is None:
        raise ValueError("weighted_score needs an explicit latency_norm")
    return params.alpha * latency / params.latency_norm + (1.0 - params.alpha) * failure_prob


def combined_failure(probs) -> float:
    """Probability all copies fail: product of per-copy failure probabilities."""
    probs = list(probs)
    if not probs:
        raise ValueError("combined_failure of no copies is undefined")
    out = 1.0
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"failure probability {p} outside [0, 1]")
        out *= p
    return out


def app_failure_prob(placements: dict[str, Placement]) -> float:
    """Probability the application fails: 1 - prod(1 - per-task failure)."""
    if not placements:
        raise ValueError("no placements")
    survive = 1.0
    for p in placements.values():
        survive *= 1.0 - p.failure_prob
    return 1.0 - survive


def commit_task(
    fleet: Fleet, node: TaskNode, device_id: int, start: float, end: float, now: float
) -> None:
    """Book one task copy on a device: make its model resident, reserve the window."""
    state = fleet.states[device_id]
    if node.task_type.needs_model:
        cache_model(state, node.task_type, now)
    state.reserve(node.task_type.type_id, start, end)


def schedule_instance(
    staged: StagedDag, fleet: Fleet, params: OrchestratorParams, now: float = 0.0
) -> ScheduleResult:
    """Place one application instance arriving at `now`; mutates fleet state.

    Raises NoFeasibleDevice if some task has no candidate; reservations made
    for the instance's earlier tasks are rolled back first (cached models
    stay resident, a cache being merely a cache).
    """
    norm = params.latency_norm
    if norm is None and 0.0 < params.alpha < 1.0:
        # Latency-only dry pass on a snapshot; its total becomes the scale
        # that makes the latency term comparable to a probability.
        dry = _schedule_core(
            staged, fleet.clone(), alpha=1.0, beta=params.beta, gamma=0,
            bandwidth_mbps=params.bandwidth_mbps, norm=1.0, now=now,
        )
        norm = dry.total_latency
    result = _schedule_core(
        staged, fleet,
        alpha=params.alpha, beta=params.beta, gamma=int(params.gamma),
        bandwidth_mbps=params.bandwidth_mbps,
        norm=norm if norm is not None else 1.0,
        now=now,
    )
    result.latency_norm = norm
    return result


def _schedule_core(
    staged: StagedDag,
    fleet: Fleet,
    alpha: float,
    beta: float,
    gamma: int,
    bandwidth_mbps: float,
    norm: float,
    now: float,
) -> ScheduleResult:
    by_id = staged.dag.by_id()
    placements: dict[str, Placement] = {}
    stage_latencies: list[float] = []
    committed: list[tuple[int, int, float, float]] = []
    offset = 0.0

    def score(lat: float, fp: float) -> float:
        return alpha * lat / norm + (1.0 - alpha) * fp

    def commit(node: TaskNode, did: int, start: float, end: float) -> None:
        commit_task(fleet, node, did, start, end, now)
        committed.append((did, node.task_type.type_id, start, end))

    for stage in staged.stages:
        stage_max = 0.0
        for node_id in stage:
            node = by_id[node_id]
            start = now + offset
            queue: list[tuple[float, int]] = []
            for did in fleet.ordered_ids:
                lat = candidate_latency(
                    node, fleet.profiles[did], fleet.states[did],
                    placements, by_id, bandwidth_mbps, start, now,
                )
                if lat is not None:
                    queue.append((lat, did))
            if not queue:
                for did, tid, s, e in committed:
                    fleet.states[did].release(tid, s, e)
                raise NoFeasibleDevice(node_id)
            heapq.heapify(queue)

            lat0, d0 = heapq.heappop(queue)
            commit(node, d0, start, start + lat0)
            f0 = task_failure_prob(fleet.profiles[d0], offset + lat0)
            devices, lats, fps = [d0], [lat0], [f0]
            combined = f0
            weight = score(lat0, combined)
            while combined >= beta and len(devices) - 1 < gamma and queue:
                lat_r, dr = heapq.heappop(queue)
                f_r = task_failure_prob(fleet.profiles[dr], offset + lat_r)
                combined_new = combined * f_r
                weight_new = score(lat_r, combined_new)
                if weight_new <= weight:
                    commit(node, dr, start, start + lat_r)
                    devices.append(dr)
                    lats.append(lat_r)
                    fps.append(f_r)
                    combined, weight = combined_new, weight_new
                else:
                    break

            placements[node_id] = Placement(
                node_id=node_id,
                devices=devices,
                latency=lat0,
                failure_prob=combined,
                latencies=lats,
                device_failure_probs=fps,
            )
            stage_max = max(stage_max, lat0)
        stage_latencies.append(stage_max)
        offset += stage_max

    return ScheduleResult(
        placements=placements,
        stage_latencies=stage_latencies,
        total_latency=offset,
        app_failure_prob=app_failure_prob(placements),
    )


class IbdashScheduler:
    """Interference- and failure-aware scheduler: the package's primary policy."""

    name = "ibdash"

    def __init__(self, params: OrchestratorParams):
        self.params = params

    def schedule_instance(self, staged: StagedDag, fleet: Fleet, now: float) -> ScheduleResult:
        return schedule_instance(staged, fleet, self.params, now)
