#!/usr/bin/env python3
"""Regenerate the bundled data tree under src/edgesim/data.

Synthesizes an eight-class device catalog with interference matrices shaped
by each class's cores and clock (fewer cores and slower clocks mean larger
solo latencies and steeper per-co-task penalties), three named failure-rate
scenarios, a latency-model coefficient table whose intercepts track the
catalog's solo latencies, the four default DAG definition files, and a
noisy synthetic availability trace. Deterministic: rerunning reproduces
every file byte for byte.
"""

import csv
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from edgesim.workloads import (  # noqa: E402
    WorkloadKind,
    WorkloadSpec,
    build_workload,
    default_task_types,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "edgesim" / "data"

# name, cores, memory GB, clock GHz, personal device
CLASSES = [
    ("macbook-pro-2017", 2, 8.0, 3.1, True),
    ("t2-xlarge", 4, 16.0, 2.3, False),
    ("t2-2xlarge", 8, 32.0, 2.3, False),
    ("t3-xlarge", 4, 16.0, 2.5, False),
    ("t3a-xlarge", 4, 16.0, 2.2, False),
    ("c5-2xlarge", 8, 16.0, 3.4, False),
    ("c5-4xlarge", 16, 32.0, 3.4, False),
    ("t3-2xlarge", 8, 32.0, 2.5, False),
]

LAMBDA_SETS = {
    # mixed reliability: a couple of flaky classes among stable ones
    "mix": [1.5e-6, 1.1e-4, 1.5e-4, 2.4e-5, 9e-6, 3.2e-6, 3.1e-5, 1e-7],
    # uniformly stable cloudlet-grade devices
    "ced": [1.5e-5, 1.1e-5, 1.5e-5, 1.1e-5, 1.8e-5, 1.2e-5, 1.0e-5, 2.0e-5],
    # volatile personal-device fleet
    "ped": [1.5e-4, 1.1e-4, 1.5e-4, 2.4e-4, 9e-4, 3.2e-5, 1.0e-4, 9.0e-4],
}

# reference solo seconds per task type on a 2.5 GHz, 2-core baseline
BASE_WORK = [0.5, 0.8, 1.2, 0.9, 1.5, 0.5, 0.7, 0.8, 1.0, 1.4, 1.1, 0.6]

SEED = 20250614


def fmt(v: float) -> str:
    return f"{v:.6g}"


def synth_class(rng: random.Random, cores: int, ghz: float):
    n = len(BASE_WORK)
    speed = ghz / 2.5
    parallel = 1.0 + 0.04 * cores
    solo = [
        w / speed / parallel * rng.uniform(0.95, 1.05) for w in BASE_WORK
    ]
    m = [
        [
            0.25 * math.sqrt(BASE_WORK[i] * BASE_WORK[j]) / speed / cores
            * rng.uniform(0.9, 1.1)
            for j in range(n)
        ]
        for i in range(n)
    ]
    c = [
        [
            solo[i] if i == j else solo[i] * rng.uniform(0.98, 1.06)
            for j in range(n)
        ]
        for i in range(n)
    ]
    return solo, m, c


def write_fleet(rng: random.Random) -> dict:
    lines = [
        "# Bundled device catalog: eight heterogeneous classes with additive",
        "# interference coefficients and three named failure-rate scenarios.",
        "# Generated by scripts/make_bundled_data.py; edit there, not here.",
        "schema = 1",
        f"n_types = {len(BASE_WORK)}",
        "",
    ]
    solos = {}
    for name, cores, mem, ghz, is_ped in CLASSES:
        solo, m, c = synth_class(rng, cores, ghz)
        solos[name] = solo
        lines.append("[[class]]")
        lines.append(f'name = "{name}"')
        lines.append(f"cores = {cores}")
        lines.append(f"memory_gb = {fmt(mem)}")
        if is_ped:
            lines.append("is_ped = true")
        lines.append("m = [")
        for row in m:
            lines.append("  [" + ", ".join(fmt(v) for v in row) + "],")
        lines.append("]")
        lines.append("c = [")
        for row in c:
            lines.append("  [" + ", ".join(fmt(v) for v in row) + "],")
        lines.append("]")
        lines.append("")
    for set_name, rates in LAMBDA_SETS.items():
        lines.append(f"[lambda_sets.{set_name}]")
        for (name, *_), rate in zip(CLASSES, rates):
            lines.append(f'"{name}" = {rate!r}')
        lines.append("")
    (DATA / "fleet_default.toml").write_text("\n".join(lines))
    return solos


def write_lats(rng: random.Random, solos: dict) -> None:
    rows = []
    for name, *_ in CLASSES:
        for tid in range(len(BASE_WORK)):
            slope = 2.2 * rng.uniform(0.85, 1.15)
            intercept = math.log(solos[name][tid])
            rows.append((name, tid, slope, intercept))
    with open(DATA / "lats_default.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["device_class", "task_type", "slope", "intercept"])
        for name, tid, slope, intercept in rows:
            w.writerow([name, tid, f"{slope:.6g}", f"{intercept:.6g}"])


def write_dags() -> None:
    types = default_task_types()
    for kind in WorkloadKind:
        dag = build_workload(WorkloadSpec(kind, 4), types)
        used = sorted({n.task_type.type_id for n in dag.nodes})
        lines = [
            "# Generated by scripts/make_bundled_data.py",
            "schema = 1",
            f'name = "{dag.name}"',
            "",
        ]
        for tid in used:
            t = types[tid]
            lines.append("[[task_type]]")
            lines.append(f"id = {t.type_id}")
            lines.append(f'name = "{t.name}"')
            lines.append(f"model_size_mb = {fmt(t.model_size_mb)}")
            lines.append(f"mem_required_gb = {fmt(t.mem_required_gb)}")
            lines.append(f"output_size_mb = {fmt(t.output_size_mb)}")
            lines.append(f"cpu_usage = {fmt(t.cpu_usage)}")
            lines.append("")
        for n in dag.nodes:
            preds = ", ".join(f'"{p}"' for p in n.predecessors)
            lines.append("[[node]]")
            lines.append(f'id = "{n.node_id}"')
            lines.append(f"type = {n.task_type.type_id}")
            lines.append(f"predecessors = [{preds}]")
            lines.append("")
        out = DATA / "dags" / f"{kind.value}_k4.toml"
        out.write_text("\n".join(lines))


def write_trace(rng: random.Random) -> None:
    rate = 2.0e-4
    with open(DATA / "traces" / "availability_synthetic.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["elapsed_s", "availability"])
        for t in range(60, 7201, 60):
            noise = math.exp(rng.gauss(0.0, 0.01))
            w.writerow([t, f"{math.exp(-rate * t) * noise:.6f}"])


def main() -> None:
    rng = random.Random(SEED)
    (DATA / "dags").mkdir(parents=True, exist_ok=True)
    (DATA / "traces").mkdir(parents=True, exist_ok=True)
    (DATA / "experiments").mkdir(parents=True, exist_ok=True)
    solos = write_fleet(rng)
    write_lats(rng, solos)
    write_dags()
    write_trace(rng)
    print(f"wrote bundled data under {DATA}")


if __name__ == "__main__":
    main()
