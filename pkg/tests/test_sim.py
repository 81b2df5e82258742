"""Event-driven runs: outcome statistics, bookkeeping identities, sweeps."""

import math
import random

import pytest

from edgesim.dag import AppDag, TaskNode, TaskType
from edgesim.devices import DeviceProfile, InterferenceMatrix
from edgesim.orchestrator import OrchestratorParams
from edgesim.sim import (
    ConfigInvalid,
    SimConfig,
    derive_rng,
    run,
    sample_departures,
    sweep,
    validate_config,
)
from edgesim.workloads import WorkloadKind, WorkloadSpec, build_workload

PLAIN = TaskType(0, "plain", cpu_usage=0.5)
ONE_TASK = AppDag("solo", (TaskNode("t", PLAIN),))


def device(device_id=0, solo=2.0, rate=0.0, memory=16.0, n_types=1):
    m = [[0.0] * n_types for _ in range(n_types)]
    c = [[solo] * n_types for _ in range(n_types)]
    return DeviceProfile(
        device_id=device_id,
        class_name=f"class-{device_id}",
        cores=4,
        memory_total_gb=memory,
        failure_rate=rate,
        interference=InterferenceMatrix.from_mc(m, c),
    )


def base_config(**overrides):
    defaults = dict(
        seed=71,
        profiles=(device(),),
        workloads=((ONE_TASK, 1.0),),
        scheduler="ibdash",
        n_cycles=2,
        cycle_length_s=15.0,
        instances_per_cycle=1,
        arrival_window_s=0.0,
        collect_load_series=False,
        cpu_by_type={0: 0.5},
    )
    defaults.update(overrides)
    return SimConfig(**defaults)


class TestRngStreams:
    def test_same_name_same_stream(self):
        a, b = derive_rng(9, "env"), derive_rng(9, "env")
        assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]

    def test_labels_are_independent(self):
        a, b = derive_rng(9, "env"), derive_rng(9, "scheduler")
        assert [a.random() for _ in range(5)] != [b.random() for _ in range(5)]


class TestValidation:
    def test_rejects_bad_configs(self):
        good = base_config()
        bad = [
            base_config(profiles=()),
            base_config(profiles=(device(0), device(0))),
            base_config(workloads=()),
            base_config(workloads=((ONE_TASK, 0.0),)),
            base_config(n_cycles=0),
            base_config(instances_per_cycle=0),
            base_config(cycle_length_s=0.0),
            base_config(arrival_window_s=20.0),
        ]
        validate_config(good)
        for config in bad:
            with pytest.raises(ConfigInvalid):
                validate_config(config)

    def test_rejects_mismatched_type_counts(self):
        config = base_config(profiles=(device(0), device(1, n_types=2)))
        with pytest.raises(ConfigInvalid):
            validate_config(config)


class TestDepartureSampling:
    def test_zero_rate_devices_consume_no_randomness(self):
        profiles = [device(0, rate=0.0), device(1, rate=2.0)]
        drawn = sample_departures(profiles, random.Random(42), horizon=1e9)
        expected = random.Random(42).expovariate(2.0)
        assert drawn == [(1, expected)]

    def test_visits_devices_in_id_order_regardless_of_input_order(self):
        profiles = [device(3, rate=1.0), device(1, rate=2.0)]
        drawn = sample_departures(profiles, random.Random(7), horizon=1e9)
        ref = random.Random(7)
        assert drawn == [(1, ref.expovariate(2.0)), (3, ref.expovariate(1.0))]

    def test_draws_beyond_horizon_are_dropped(self):
        profiles = [device(0, rate=0.001)]
        drawn = sample_departures(profiles, random.Random(1), horizon=1e-9)
        assert drawn == []


class TestIsolationStatistics:
    def test_single_device_failure_rate_recovers_the_exponential(self):
        # one task of latency 2.0 on one device; the copy is lost exactly
        # when the departure draw lands inside [0, 2), so with
        # rate = -ln(0.7)/2 the loss probability is 0.3 by construction
        rate = -math.log(0.7) / 2.0
        n = 10_000
        config = base_config(
            profiles=(device(rate=rate),),
            n_cycles=n,
            instances_per_cycle=1,
        )
        metrics = run(config)
        assert metrics.n_scheduled == n
        assert metrics.avg_service_time_s == pytest.approx(2.0, rel=1e-12)
        assert metrics.avg_pf_analytical == pytest.approx(0.3, rel=1e-9)
        sigma = math.sqrt(0.3 * 0.7 / n)
        assert abs(metrics.avg_pf_empirical - 0.3) < 3 * sigma


class TestDeterminism:
    def test_identical_configs_produce_identical_runs(self):
        config = base_config(
            profiles=(device(0, rate=0.05), device(1, rate=0.05)),
            n_cycles=4,
            instances_per_cycle=25,
            arrival_window_s=1.5,
            collect_load_series=True,
        )
        a, b = run(config), run(config)
        assert a.per_instance == b.per_instance
        assert a.load_series == b.load_series
        assert (a.avg_service_time_s, a.avg_pf_empirical) == (
            b.avg_service_time_s,
            b.avg_pf_empirical,
        )

    def test_different_seeds_diverge(self):
        config = base_config(n_cycles=3, instances_per_cycle=10, arrival_window_s=1.5)
        a = run(config)
        b = run(SimConfig(**{**config.__dict__, "seed": config.seed + 1}))
        assert [r.arrival_s for r in a.per_instance] != [r.arrival_s for r in b.per_instance]

    def test_scenario_is_scheduler_independent(self):
        # arrivals, workload picks, and departures come from their own
        # stream, so swapping policies replays the same world
        wl = (
            (build_workload(WorkloadSpec(WorkloadKind.VIDEO_ANALYTICS, 2)), 2.0),
            (build_workload(WorkloadSpec(WorkloadKind.MAPREDUCE_SORT, 2)), 1.0),
        )
        cpu = {t.type_id: t.cpu_usage for tt in wl for t in (n.task_type for n in tt[0].nodes)}
        runs = {}
        for name in ("ibdash", "random", "petrel", "sqlf"):
            config = base_config(
                profiles=(
                    device(0, rate=0.03, n_types=12),
                    device(1, rate=0.03, n_types=12),
                    device(2, n_types=12),
                ),
                workloads=wl,
                scheduler=name,
                n_cycles=3,
                instances_per_cycle=15,
                arrival_window_s=1.5,
                cpu_by_type=cpu,
            )
            runs[name] = run(config)
        envs = {
            name: [(r.arrival_s, r.workload) for r in m.per_instance]
            for name, m in runs.items()
        }
        baseline = envs["ibdash"]
        assert all(env == baseline for env in envs.values())


class TestConservation:
    def test_task_counters_partition_every_node(self):
        wl = (
            (build_workload(WorkloadSpec(WorkloadKind.VIDEO_ANALYTICS, 2)), 1.0),
            (build_workload(WorkloadSpec(WorkloadKind.MAPREDUCE_SORT, 1)), 1.0),
        )
        nodes_by_name = {dag.name: len(dag.nodes) for dag, _ in wl}
        cpu = {t.type_id: t.cpu_usage for tt in wl for t in (n.task_type for n in tt[0].nodes)}
        config = base_config(
            profiles=(
                device(0, rate=0.04, memory=4.0, n_types=12),
                device(1, rate=0.04, n_types=12),
            ),
            workloads=wl,
            n_cycles=5,
            instances_per_cycle=40,
            arrival_window_s=1.5,
            cpu_by_type=cpu,
        )
        m = run(config)
        assert m.n_instances == len(m.per_instance) == 200
        assert m.n_scheduled + m.n_unschedulable == m.n_instances

        total_nodes = sum(nodes_by_name[r.workload] for r in m.per_instance)
        scheduled_nodes = sum(
            nodes_by_name[r.workload] for r in m.per_instance if r.scheduled
        )
        assert m.tasks_started == scheduled_nodes
        assert m.tasks_completed + m.tasks_failed + m.tasks_aborted == total_nodes

        failed = sum(1 for r in m.per_instance if not r.success)
        assert m.avg_pf_empirical == failed / m.n_instances
        assert sum(m.primary_tasks_per_device.values()) == scheduled_nodes

    def test_unschedulable_everything(self):
        hungry = TaskType(0, "hungry", mem_required_gb=99.0, cpu_usage=0.5)
        dag = AppDag("pair", (TaskNode("a", hungry), TaskNode("b", hungry, ("a",))))
        config = base_config(
            workloads=((dag, 1.0),), n_cycles=2, instances_per_cycle=5
        )
        m = run(config)
        assert m.n_unschedulable == m.n_instances == 10
        assert m.n_scheduled == 0
        assert m.avg_service_time_s is None
        assert m.avg_pf_analytical is None
        assert m.avg_pf_empirical == 1.0
        assert m.tasks_started == 0
        assert m.tasks_aborted == 2 * 10


class TestLoadSeries:
    def test_exact_series_for_one_task_per_cycle(self):
        config = base_config(n_cycles=2, collect_load_series=True)
        m = run(config)
        # reset samples zero, the arrival books one task, the completion
        # at latency 2.0 samples zero again (windows are half-open)
        assert m.load_series == [
            (0.0, 0, 0),
            (0.0, 0, 1),
            (2.0, 0, 0),
            (15.0, 0, 0),
            (15.0, 0, 1),
            (17.0, 0, 0),
        ]

    def test_disabled_series_stays_empty(self):
        m = run(base_config(collect_load_series=False))
        assert m.load_series == []


class TestSweep:
    def sweep_config(self):
        return base_config(
            profiles=(
                device(0, rate=0.05, n_types=12),
                device(1, rate=0.05, n_types=12),
                device(2, rate=0.05, n_types=12),
            ),
            workloads=((build_workload(WorkloadSpec(WorkloadKind.VIDEO_ANALYTICS, 2)), 1.0),),
            params=OrchestratorParams(beta=0.01),
            n_cycles=3,
            instances_per_cycle=20,
            arrival_window_s=1.5,
            cpu_by_type={t.type_id: t.cpu_usage for t in (
                n.task_type for n in build_workload(
                    WorkloadSpec(WorkloadKind.VIDEO_ANALYTICS, 2)).nodes)},
        )

    def test_points_match_standalone_runs(self):
        from dataclasses import replace

        config = self.sweep_config()
        points = sweep(config, "gamma", [0.0, 2.0])
        for i, (value, point) in enumerate(zip([0, 2], points)):
            solo = run(
                replace(
                    config,
                    seed=config.seed + i,
                    params=replace(config.params, gamma=value),
                )
            )
            assert point.avg_service_time_s == solo.avg_service_time_s
            assert point.avg_pf_analytical == solo.avg_pf_analytical

    def test_normalization_tops_out_at_one(self):
        points = sweep(self.sweep_config(), "gamma", [0, 1, 2])
        tops = [p.normalized_service_time for p in points]
        assert max(tops) == 1.0
        for p in points:
            assert p.normalized_service_time == p.avg_service_time_s / max(
                q.avg_service_time_s for q in points
            )

    def test_parallel_equals_serial(self):
        config = self.sweep_config()
        serial = sweep(config, "gamma", [0, 1], jobs=1)
        parallel = sweep(config, "gamma", [0, 1], jobs=2)
        assert serial == parallel

    def test_replication_pays_off_under_heavy_churn(self):
        # with departures this frequent a second copy slashes the loss
        # odds; a sweep that failed to replicate would stay flat instead
        points = sweep(self.sweep_config(), "gamma", [0, 1, 2, 3])
        pf = [p.avg_pf_analytical for p in points]
        assert pf[1] < 0.5 * pf[0]
        assert all(later < pf[0] for later in pf[1:])

    def test_rejects_unknown_parameter(self):
        with pytest.raises(ConfigInvalid):
            sweep(self.sweep_config(), "bandwidth_mbps", [1, 2])
        with pytest.raises(ConfigInvalid):
            sweep(self.sweep_config(), "alpha", [])
