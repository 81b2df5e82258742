"""Comparison scheduling policies sharing the greedy scheduler's cost model.

Every baseline walks the staged DAG in the same order as the primary
policy, applies the same feasibility filter (device present, post-eviction
memory check), books a single device per task, and never replicates. They
differ only in how they pick among feasible devices:

  random       uniform choice
  round_robin  cyclic over device ids with a cursor that persists across
               instances, skipping infeasible devices
  sqlf         shortest queue length first: fewest tasks resident at the
               task's start instant
  petrel       power of two choices: sample two feasible devices, keep the
               one with the lower candidate latency
  lats         latency prediction model: argmin of exp(slope*u + intercept)
               plus upload and transfer, where u is the device's CPU
               utilization estimate; the model's coefficients come from a
               table and may disagree with reality
"""

import math
import random
from dataclasses import dataclass, field
from enum import Enum

from .dag import StagedDag, TaskNode
from .devices import DeviceProfile, DeviceState, Fleet, task_failure_prob
from .orchestrator import (
    NoFeasibleDevice,
    OrchestratorParams,
    Placement,
    ScheduleResult,
    app_failure_prob,
    candidate_breakdown,
    commit_task,
)


class BaselineKind(Enum):
    RANDOM = "random"
    ROUND_ROBIN = "round_robin"
    SQLF = "sqlf"
    PETREL = "petrel"
    LATS = "lats"


class MissingModelRow(Exception):
    """LaTS has no coefficients for a (device class, task type) pair."""


@dataclass(frozen=True)
class LatsModel:
    """Log-linear latency model: predicted exec = exp(slope*u + intercept).

    rows maps (device class name, task type id) to (slope, intercept).
    u is the utilization estimate sum(count_j * cpu_usage_j) / cores,
    clamped to 1.
    """

    rows: dict = field(hash=False)

    def coefficients(self, class_name: str, type_id: int) -> tuple[float, float]:
        try:
            return self.rows[(class_name, type_id)]
        except KeyError:
            raise MissingModelRow(
                f"no LaTS row for device class {class_name!r}, task type {type_id}"
            ) from None

    def predict_exec(
        self, profile: DeviceProfile, counts, cpu_by_type: dict, type_id: int
    ) -> float:
        slope, intercept = self.coefficients(profile.class_name, type_id)
        busy = sum(k * cpu_by_type.get(j, 0.0) for j, k in enumerate(counts))
        u = min(1.0, busy / profile.cores)
        return math.exp(slope * u + intercept)


class BaselineScheduler:
    """Stage walker with a pluggable device choice rule."""

    def __init__(
        self,
        kind: BaselineKind,
        params: OrchestratorParams,
        rng: random.Random | None = None,
        lats_model: LatsModel | None = None,
        cpu_by_type: dict | None = None,
    ):
        self.kind = kind
        self.params = params
        self.rng = rng if rng is not None else random.Random(0)
        self.lats_model = lats_model
        self.cpu_by_type = cpu_by_type or {}
        self._rr_cursor = 0
        if kind is BaselineKind.LATS and lats_model is None:
            raise ValueError("lats baseline needs a LatsModel")

    @property
    def name(self) -> str:
        return self.kind.value

    def schedule_instance(self, staged: StagedDag, fleet: Fleet, now: float) -> ScheduleResult:
        by_id = staged.dag.by_id()
        placements: dict[str, Placement] = {}
        stage_latencies: list[float] = []
        committed: list[tuple[int, int, float, float]] = []
        offset = 0.0
        for stage in staged.stages:
            stage_max = 0.0
            for node_id in stage:
                node = by_id[node_id]
                start = now + offset
                cands: dict[int, tuple[float, float, float]] = {}
                for did in fleet.ordered_ids:
                    parts = candidate_breakdown(
                        node, fleet.profiles[did], fleet.states[did],
                        placements, by_id, self.params.bandwidth_mbps, start, now,
                    )
                    if parts is not None:
                        cands[did] = parts
                if not cands:
                    for cdid, tid, s, e in committed:
                        fleet.states[cdid].release(tid, s, e)
                    raise NoFeasibleDevice(node_id)
                did = self._choose(node, fleet, cands, start)
                lat = sum(cands[did])
                commit_task(fleet, node, did, start, start + lat, now)
                committed.append((did, node.task_type.type_id, start, start + lat))
                f = task_failure_prob(fleet.profiles[did], offset + lat)
                placements[node_id] = Placement(
                    node_id=node_id, devices=[did], latency=lat, failure_prob=f,
                    latencies=[lat], device_failure_probs=[f],
                )
                stage_max = max(stage_max, lat)
            stage_latencies.append(stage_max)
            offset += stage_max
        return ScheduleResult(
            placements=placements,
            stage_latencies=stage_latencies,
            total_latency=offset,
            app_failure_prob=app_failure_prob(placements),
        )

    def _choose(self, node: TaskNode, fleet: Fleet, cands: dict, start: float) -> int:
        ids = sorted(cands)
        if self.kind is BaselineKind.RANDOM:
            return self.rng.choice(ids)
        if self.kind is BaselineKind.ROUND_ROBIN:
            return self._choose_round_robin(fleet, set(ids))
        if self.kind is BaselineKind.SQLF:
            return min(ids, key=lambda d: (fleet.states[d].total_running(start), d))
        if self.kind is BaselineKind.PETREL:
            pair = self.rng.sample(ids, 2) if len(ids) >= 2 else ids
            return min(pair, key=lambda d: (sum(cands[d]), d))
        if self.kind is BaselineKind.LATS:
            return min(ids, key=lambda d: (self._lats_total(node, fleet, cands[d], d, start), d))
        raise AssertionError(self.kind)

    def _choose_round_robin(self, fleet: Fleet, feasible: set) -> int:
        order = fleet.ordered_ids
        for step in range(len(order)):
            idx = (self._rr_cursor + step) % len(order)
            if order[idx] in feasible:
                self._rr_cursor = (idx + 1) % len(order)
                return order[idx]
        raise AssertionError("feasible set empty despite candidates")

    def _lats_total(
        self, node: TaskNode, fleet: Fleet, parts: tuple, did: int, start: float
    ) -> float:
        _, upload, transfer = parts
        counts = fleet.states[did].running_counts(start)
        predicted = self.lats_model.predict_exec(
            fleet.profiles[did], counts, self.cpu_by_type, node.task_type.type_id
        )
        return predicted + upload + transfer


SCHEDULER_NAMES = ("ibdash",) + tuple(k.value for k in BaselineKind)


def make_scheduler(
    name: str,
    params: OrchestratorParams,
    rng: random.Random | None = None,
    lats_model: LatsModel | None = None,
    cpu_by_type: dict | None = None,
):
    """Build a scheduler by CLI name; all expose schedule_instance(staged, fleet, now)."""
    if name == "ibdash":
        from .orchestrator import IbdashScheduler

        return IbdashScheduler(params)
    try:
        kind = BaselineKind(name)
    except ValueError:
        raise ValueError(
            f"unknown scheduler {name!r}; expected one of {', '.join(SCHEDULER_NAMES)}"
        ) from None
    return BaselineScheduler(kind, params, rng=rng, lats_model=lats_model, cpu_by_type=cpu_by_type)
