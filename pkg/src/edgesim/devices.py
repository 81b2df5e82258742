"""Device capability profiles, runtime state, and reliability math.

Execution latency on a device is load dependent: a task's estimate is its
solo latency plus one additive penalty per co-resident task, read off a
per-device interference matrix. Devices leave the network at exponentially
distributed times; availability over a window t is e^(-lambda*t).
"""

import math
from bisect import bisect_right, insort
from dataclasses import dataclass, field


class DeviceError(Exception):
    """Base class for device-model errors."""


class UnknownTaskType(DeviceError):
    pass


class NegativeTime(DeviceError):
    pass


class NegativeDuration(DeviceError):
    pass


class UnderflowOnRelease(DeviceError):
    """Release of a reservation that was never made."""


class ModelTooLarge(DeviceError):
    """Model footprint exceeds the device's total memory."""


class InsufficientMemory(DeviceError):
    """No sequence of evictions can free enough memory right now."""


class InsufficientData(DeviceError):
    """Too few trace points to fit a failure rate."""


class NonPositiveAvailability(DeviceError):
    """Availability trace contains a value <= 0; its log is undefined."""


@dataclass(frozen=True)
class InterferenceMatrix:
    """Additive interference coefficients for one device.

    For a task of type i running next to counts[j] tasks of type j, the
    estimated latency is

        solo[i] + sum_j counts[j] * m[i][j]

    m[i][j] is the per-co-task latency penalty (seconds), c[i][j] the
    measured intercept of the pairwise fit. Only the diagonal intercept is
    load-bearing: solo[i] defaults to c[i][i]. Off-diagonal intercepts are
    carried for fidelity to profiling output but unused by the estimator.
    """

    m: tuple[tuple[float, ...], ...]
    c: tuple[tuple[float, ...], ...]
    solo: tuple[float, ...]

    def __post_init__(self):
        n = len(self.m)
        if n == 0:
            raise ValueError("interference matrix must cover at least one task type")
        for name, mat in (("m", self.m), ("c", self.c)):
            if len(mat) != n or any(len(row) != n for row in mat):
                raise ValueError(f"{name} must be {n}x{n}")
        if len(self.solo) != n:
            raise ValueError(f"solo must have {n} entries")
        for row in self.m:
            if any(v < 0 for v in row):
                raise ValueError("interference slopes must be >= 0")
        for i in range(n):
            if self.c[i][i] <= 0:
                raise ValueError("diagonal intercepts must be > 0")
        if any(v <= 0 for v in self.solo):
            raise ValueError("solo latencies must be > 0")

    @property
    def n_types(self) -> int:
        return len(self.m)

    @classmethod
    def from_mc(cls, m, c, solo=None) -> "InterferenceMatrix":
        """Build from nested lists; solo defaults to the diagonal of c."""
        mt = tuple(tuple(float(v) for v in row) for row in m)
        ct = tuple(tuple(float(v) for v in row) for row in c)
        if solo is None:
            solo_t = tuple(ct[i][i] for i in range(len(ct)))
        else:
            solo_t = tuple(float(v) for v in solo)
        return cls(m=mt, c=ct, solo=solo_t)


@dataclass(frozen=True)
class DeviceProfile:
    """Static description of one device in the fleet."""

    device_id: int
    class_name: str
    cores: int
    memory_total_gb: float
    failure_rate: float  # departures per second; 0 means the device never leaves
    interference: InterferenceMatrix
    is_ped: bool = False  # personal device as opposed to a dedicated cloudlet

    def __post_init__(self):
        if self.cores <= 0:
            raise ValueError(f"device {self.device_id}: cores must be > 0")
        if self.memory_total_gb <= 0:
            raise ValueError(f"device {self.device_id}: memory must be > 0")
        if self.failure_rate < 0:
            raise ValueError(f"device {self.device_id}: failure rate must be >= 0")


class DeviceState:
    """Mutable per-device runtime state.

    Tracks, per task type, the set of committed execution windows [start, end)
    so the scheduler can ask how many tasks are co-resident at any instant,
    plus an LRU cache of task models (front of the list is most recently
    used) and the free memory left after cached footprints.
    """

    def __init__(self, n_types: int, memory_total_gb: float):
        self.n_types = n_types
        self.memory_total_gb = memory_total_gb
        self.mem_free = memory_total_gb
        self.model_cache: list[int] = []
        self.departed_at: float | None = None
        self._footprint: dict[int, float] = {}
        self._starts: list[list[float]] = [[] for _ in range(n_types)]
        self._ends: list[list[float]] = [[] for _ in range(n_types)]

    def clone(self) -> "DeviceState":
        other = DeviceState(self.n_types, self.memory_total_gb)
        other.mem_free = self.mem_free
        other.model_cache = list(self.model_cache)
        other.departed_at = self.departed_at
        other._footprint = dict(self._footprint)
        other._starts = [list(s) for s in self._starts]
        other._ends = [list(e) for e in self._ends]
        return other

    def _check_type(self, type_id: int) -> None:
        if not 0 <= type_id < self.n_types:
            raise UnknownTaskType(f"task type {type_id} out of range 0..{self.n_types - 1}")

    def reserve(self, type_id: int, start: float, end: float) -> None:
        """Commit an execution window [start, end) for one task."""
        self._check_type(type_id)
        if start < 0:
            raise NegativeTime(f"window start {start} < 0")
        if end < start:
            raise NegativeDuration(f"window [{start}, {end}) has negative length")
        insort(self._starts[type_id], start)
        insort(self._ends[type_id], end)

    def release(self, type_id: int, start: float, end: float) -> None:
        """Remove a previously reserved window."""
        self._check_type(type_id)
        starts, ends = self._starts[type_id], self._ends[type_id]
        i = bisect_right(starts, start) - 1
        if i < 0 or starts[i] != start:
            raise UnderflowOnRelease(f"no reservation starting at {start} for type {type_id}")
        j = bisect_right(ends, end) - 1
        if j < 0 or ends[j] != end:
            raise UnderflowOnRelease(f"no reservation ending at {end} for type {type_id}")
        starts.pop(i)
        ends.pop(j)

    def running_counts(self, at: float) -> list[int]:
        """Number of tasks of each type whose window covers instant `at`."""
        if at < 0:
            raise NegativeTime(f"query time {at} < 0")
        return [
            bisect_right(self._starts[t], at) - bisect_right(self._ends[t], at)
            for t in range(self.n_types)
        ]

    def total_running(self, at: float) -> int:
        return sum(self.running_counts(at))

    def has_reservations(self, type_id: int, after: float) -> bool:
        """True if any window of this type is still active or upcoming at `after`."""
        self._check_type(type_id)
        ends = self._ends[type_id]
        return len(ends) - bisect_right(ends, after) > 0

    def has_model(self, type_id: int) -> bool:
        return type_id in self._footprint

    def cached_footprint(self, type_id: int) -> float:
        return self._footprint.get(type_id, 0.0)


def interference_latency(matrix: InterferenceMatrix, type_id: int, counts) -> float:
    """Estimated latency of one task of `type_id` next to `counts` co-residents.

    solo[type_id] + sum_j counts[j] * m[type_id][j]. The task being estimated
    must not be included in counts.
    """
    if not 0 <= type_id < matrix.n_types:
        raise UnknownTaskType(f"task type {type_id} out of range")
    if len(counts) != matrix.n_types:
        raise ValueError(f"counts must have {matrix.n_types} entries")
    row = matrix.m[type_id]
    return matrix.solo[type_id] + sum(k * mij for k, mij in zip(counts, row))


def estimate_exec_latency(
    profile: DeviceProfile, state: DeviceState, type_id: int, at: float
) -> float:
    """Execution latency estimate for a task starting at time `at` on this device."""
    return interference_latency(profile.interference, type_id, state.running_counts(at))


def availability_prob(profile: DeviceProfile, t: float) -> float:
    """Probability the device is still present after t seconds: e^(-lambda*t)."""
    if t < 0:
        raise NegativeTime(f"horizon {t} < 0")
    return math.exp(-profile.failure_rate * t)


def task_failure_prob(profile: DeviceProfile, duration: float) -> float:
    """Probability the device departs within `duration`: 1 - e^(-lambda*duration)."""
    if duration < 0:
        raise NegativeDuration(f"duration {duration} < 0")
    return 1.0 - math.exp(-profile.failure_rate * duration)


def model_pinned(state: DeviceState, type_id: int, now: float) -> bool:
    """A cached model is pinned while its task type has any window ending after now."""
    return state.has_reservations(type_id, after=now)


def evictable_free_gb(
    state: DeviceState, task_type, now: float, exclude: int | None = None
) -> float:
    """Free memory achievable by evicting every unpinned cached model.

    `exclude` names a type whose footprint should not be counted as
    reclaimable (the type being placed, which must not evict itself).
    """
    free = state.mem_free
    for tid in state.model_cache:
        if tid == exclude:
            continue
        if not model_pinned(state, tid, now):
            free += state.cached_footprint(tid)
    return free


def memory_feasible(state: DeviceState, task_type, now: float) -> bool:
    """Post-eviction memory check for placing one task of `task_type` now."""
    if task_type.needs_model and state.has_model(task_type.type_id):
        return True
    return evictable_free_gb(state, task_type, now, exclude=task_type.type_id) >= task_type.mem_required_gb


def cache_model(state: DeviceState, task_type, now: float) -> list[int]:
    """Ensure the task's model is resident; returns the evicted type ids.

    Already-cached models move to the front (most recently used). Otherwise
    unpinned models are evicted from the least recently used end until the
    footprint fits. Raises ModelTooLarge if the footprint can never fit,
    InsufficientMemory if pinned models block it right now.
    """
    tid = task_type.type_id
    if tid in state._footprint:
        state.model_cache.remove(tid)
        state.model_cache.insert(0, tid)
        return []
    need = task_type.mem_required_gb
    if need > state.memory_total_gb:
        raise ModelTooLarge(
            f"model of task type {task_type.name!r} needs {need} GB, "
            f"device has {state.memory_total_gb} GB total"
        )
    evicted: list[int] = []
    while state.mem_free < need:
        victim = None
        for cand in reversed(state.model_cache):
            if not model_pinned(state, cand, now):
                victim = cand
                break
        if victim is None:
            raise InsufficientMemory(
                f"cannot free {need} GB for task type {task_type.name!r}: "
                f"all cached models are pinned"
            )
        state.model_cache.remove(victim)
        state.mem_free += state._footprint.pop(victim)
        evicted.append(victim)
    state.model_cache.insert(0, tid)
    state._footprint[tid] = need
    state.mem_free -= need
    return evicted


@dataclass
class Fleet:
    """Profiles plus live state for every device, keyed by device id."""

    profiles: dict[int, DeviceProfile]
    states: dict[int, DeviceState] = field(default_factory=dict)

    def __post_init__(self):
        if not self.states:
            self.reset()

    @classmethod
    def build(cls, profiles) -> "Fleet":
        return cls(profiles={p.device_id: p for p in profiles})

    @property
    def ordered_ids(self) -> list[int]:
        return sorted(self.profiles)

    def reset(self) -> None:
        """Fresh state for every device: empty caches, no reservations, present."""
        n_types = next(iter(self.profiles.values())).interference.n_types
        self.states = {
            did: DeviceState(n_types, p.memory_total_gb)
            for did, p in self.profiles.items()
        }

    def alive_ids(self) -> list[int]:
        return [did for did in self.ordered_ids if self.states[did].departed_at is None]

    def clone(self) -> "Fleet":
        return Fleet(
            profiles=self.profiles,
            states={did: s.clone() for did, s in self.states.items()},
        )


def fit_failure_rate(trace) -> float:
    """Least-squares failure rate from an availability trace.

    trace is a sequence of (elapsed_seconds, availability) pairs with
    strictly increasing elapsed times. Fits availability = e^(-lambda*t)
    by minimizing sum((ln a_k + lambda*t_k)^2), which has the closed form

        lambda = -sum(t_k * ln a_k) / sum(t_k^2)

    Negative fits (availability drifting upward through noise) clamp to 0.
    """
    pts = list(trace)
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 trace points, got {len(pts)}")
    prev = None
    for t, a in pts:
        if a <= 0:
            raise NonPositiveAvailability(f"availability {a} at t={t} is not positive")
        if t < 0:
            raise NegativeTime(f"elapsed time {t} < 0")
        if prev is not None and t <= prev:
            raise ValueError(f"elapsed times must be strictly increasing (at t={t})")
        prev = t
    num = -sum(t * math.log(a) for t, a in pts)
    den = sum(t * t for t, _ in pts)
    if den == 0.0:
        raise InsufficientData("all trace points are at t=0")
    return max(num / den, 0.0)


def fit_rms_log_error(trace, rate: float) -> float:
    """RMS residual of ln(availability) against a fitted rate, for reporting."""
    pts = list(trace)
    sq = sum((math.log(a) + rate * t) ** 2 for t, a in pts)
    return math.sqrt(sq / len(pts))
