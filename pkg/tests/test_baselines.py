"""The five comparison policies: selection rules and shared mechanics."""

import math
import random

import pytest

from edgesim.baselines import (
    BaselineKind,
    BaselineScheduler,
    LatsModel,
    MissingModelRow,
    make_scheduler,
)
from edgesim.dag import AppDag, TaskNode, TaskType, stagerize
from edgesim.devices import DeviceProfile, Fleet, InterferenceMatrix
from edgesim.orchestrator import IbdashScheduler, NoFeasibleDevice, OrchestratorParams

PLAIN = TaskType(0, "plain", cpu_usage=0.5)


def uniform_matrix(m=0.0, c=1.0):
    return InterferenceMatrix.from_mc([[m]], [[c]])


def fleet_from_solos(solos, m=0.0, rate=0.0, cores=4, class_names=None):
    profiles = []
    for i, solo in enumerate(solos):
        profiles.append(
            DeviceProfile(
                device_id=i,
                class_name=class_names[i] if class_names else f"class-{i}",
                cores=cores,
                memory_total_gb=16.0,
                failure_rate=rate,
                interference=uniform_matrix(m, solo),
            )
        )
    return Fleet.build(profiles)


def single_task() -> "stagerize":
    return stagerize(AppDag("one", (TaskNode("t", PLAIN),)))


def scheduler(kind, seed=0, lats_model=None, cpu_by_type=None, params=None):
    return BaselineScheduler(
        kind,
        params or OrchestratorParams(),
        rng=random.Random(seed),
        lats_model=lats_model,
        cpu_by_type=cpu_by_type or {0: PLAIN.cpu_usage},
    )


def spaced_choices(sched, fleet, n, spacing=1000.0):
    """Schedule n single-task instances far apart so state never overlaps."""
    staged = single_task()
    picks = []
    for i in range(n):
        result = sched.schedule_instance(staged, fleet, now=i * spacing)
        picks.append(result.placements["t"].devices[0])
    return picks


class TestRoundRobin:
    def test_cycles_through_devices_in_id_order(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        sched = scheduler(BaselineKind.ROUND_ROBIN)
        assert spaced_choices(sched, fleet, 6) == [0, 1, 2, 0, 1, 2]

    def test_skips_departed_device(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        fleet.states[1].departed_at = 0.0
        sched = scheduler(BaselineKind.ROUND_ROBIN)
        assert spaced_choices(sched, fleet, 4) == [0, 2, 0, 2]

    def test_cursor_survives_mid_run_departure(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        sched = scheduler(BaselineKind.ROUND_ROBIN)
        assert spaced_choices(sched, fleet, 2) == [0, 1]
        fleet.states[2].departed_at = 0.0
        assert spaced_choices(sched, fleet, 2) == [0, 1]

    def test_walks_all_stages_of_a_dag(self):
        fleet = fleet_from_solos([1.0, 1.0])
        dag = AppDag(
            "chain",
            (TaskNode("a", PLAIN), TaskNode("b", PLAIN, ("a",)), TaskNode("c", PLAIN, ("b",))),
        )
        sched = scheduler(BaselineKind.ROUND_ROBIN)
        result = sched.schedule_instance(stagerize(dag), fleet, now=0.0)
        assert [result.placements[n].devices[0] for n in ("a", "b", "c")] == [0, 1, 0]


class TestShortestQueue:
    def test_prefers_fewest_resident_tasks(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        fleet.states[0].reserve(0, 0.0, 50.0)
        fleet.states[0].reserve(0, 0.0, 50.0)
        fleet.states[1].reserve(0, 0.0, 50.0)
        sched = scheduler(BaselineKind.SQLF)
        result = sched.schedule_instance(single_task(), fleet, now=0.0)
        assert result.placements["t"].devices == [2]

    def test_tie_breaks_to_lowest_id(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        sched = scheduler(BaselineKind.SQLF)
        result = sched.schedule_instance(single_task(), fleet, now=0.0)
        assert result.placements["t"].devices == [0]

    def test_counts_only_windows_covering_the_start(self):
        fleet = fleet_from_solos([1.0, 1.0])
        fleet.states[0].reserve(0, 0.0, 1.0)  # long gone by now=10
        fleet.states[1].reserve(0, 0.0, 50.0)
        sched = scheduler(BaselineKind.SQLF)
        result = sched.schedule_instance(single_task(), fleet, now=10.0)
        assert result.placements["t"].devices == [0]


class TestRandomPolicy:
    def test_uniform_over_feasible_devices(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        sched = scheduler(BaselineKind.RANDOM, seed=11)
        n = 3000
        picks = spaced_choices(sched, fleet, n)
        sigma = math.sqrt((1 / 3) * (2 / 3) / n)
        for d in range(3):
            share = picks.count(d) / n
            assert abs(share - 1 / 3) < 3 * sigma

    def test_only_feasible_devices_drawn(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        fleet.states[2].departed_at = 0.0
        sched = scheduler(BaselineKind.RANDOM, seed=3)
        assert set(spaced_choices(sched, fleet, 200)) == {0, 1}


class TestPetrel:
    def test_two_choice_frequencies_match_closed_form(self):
        # distinct latencies; device d is chosen iff it lands in the sampled
        # pair and every faster device does not:
        #   P(pick d) = (n - 1 - rank_d) / C(n, 2)
        solos = [1.0, 2.0, 3.0, 4.0]
        n_dev = len(solos)
        pairs = n_dev * (n_dev - 1) / 2
        fleet = fleet_from_solos(solos)
        sched = scheduler(BaselineKind.PETREL, seed=5)
        n = 4000
        picks = spaced_choices(sched, fleet, n)
        for rank in range(n_dev):
            p = (n_dev - 1 - rank) / pairs
            share = picks.count(rank) / n
            bound = 3 * math.sqrt(p * (1 - p) / n) if 0 < p < 1 else 1e-9
            assert abs(share - p) <= bound, (rank, share, p)

    def test_single_feasible_device_is_taken(self):
        fleet = fleet_from_solos([1.0, 2.0])
        fleet.states[1].departed_at = 0.0
        sched = scheduler(BaselineKind.PETREL, seed=6)
        assert spaced_choices(sched, fleet, 10) == [0] * 10


class TestLats:
    def test_follows_model_not_reality(self):
        # identical true profiles; the model claims device 1 is 3x faster
        model = LatsModel(
            rows={
                ("class-0", 0): (0.0, math.log(1.0)),
                ("class-1", 0): (0.0, math.log(1.0 / 3)),
                ("class-2", 0): (0.0, math.log(1.0)),
            }
        )
        fleet = fleet_from_solos([1.0, 1.0, 1.0])
        sched = scheduler(BaselineKind.LATS, lats_model=model)
        assert spaced_choices(sched, fleet, 5) == [1] * 5

    def test_recorded_latency_is_ground_truth(self):
        model = LatsModel(rows={(f"class-{i}", 0): (0.0, math.log(0.01)) for i in range(2)})
        fleet = fleet_from_solos([1.5, 1.5])
        sched = scheduler(BaselineKind.LATS, lats_model=model)
        result = sched.schedule_instance(single_task(), fleet, now=0.0)
        assert result.placements["t"].latency == 1.5  # not the model's 0.01

    def test_utilization_saturates_at_one(self):
        model = LatsModel(rows={("c", 0): (2.0, 0.0)})
        profile = DeviceProfile(
            device_id=0, class_name="c", cores=2, memory_total_gb=8.0,
            failure_rate=0.0, interference=uniform_matrix(),
        )
        # 100 tasks at 0.5 cpu on 2 cores: u clamps to 1
        assert model.predict_exec(profile, [100], {0: 0.5}, 0) == math.exp(2.0)

    def test_missing_row_raises(self):
        model = LatsModel(rows={("other", 0): (1.0, 0.0)})
        with pytest.raises(MissingModelRow):
            model.coefficients("class-0", 0)

    def test_lats_scheduler_requires_model(self):
        with pytest.raises(ValueError):
            BaselineScheduler(BaselineKind.LATS, OrchestratorParams())


class TestSharedMechanics:
    def test_no_feasible_device_raises_and_rolls_back(self):
        heavy = TaskType(0, "heavy", model_size_mb=10.0, mem_required_gb=99.0)
        dag = AppDag("pair", (TaskNode("a", PLAIN), TaskNode("b", heavy, ("a",))))
        fleet = fleet_from_solos([1.0, 1.0])
        sched = scheduler(BaselineKind.ROUND_ROBIN)
        with pytest.raises(NoFeasibleDevice):
            sched.schedule_instance(stagerize(dag), fleet, now=0.0)
        for s in fleet.states.values():
            assert s.running_counts(0.5) == [0]

    def test_baselines_never_replicate(self):
        fleet = fleet_from_solos([1.0, 1.0, 1.0], rate=2.0)
        for kind in BaselineKind:
            if kind is BaselineKind.LATS:
                continue
            sched = scheduler(kind, params=OrchestratorParams(alpha=0.0, beta=0.5, gamma=5))
            result = sched.schedule_instance(single_task(), fleet.clone(), now=0.0)
            assert len(result.placements["t"].devices) == 1

    def test_make_scheduler_builds_every_policy(self):
        model = LatsModel(rows={("x", 0): (1.0, 0.0)})
        params = OrchestratorParams()
        assert isinstance(make_scheduler("ibdash", params), IbdashScheduler)
        for name in ("random", "round_robin", "sqlf", "petrel"):
            assert make_scheduler(name, params).name == name
        assert make_scheduler("lats", params, lats_model=model).name == "lats"
        with pytest.raises(ValueError):
            make_scheduler("mystery", params)
