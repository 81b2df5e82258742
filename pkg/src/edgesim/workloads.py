"""Benchmark application generators.

Four parameterized DAG families modeled on common edge pipelines: video
analytics (split, parallel frame extraction, classification), boosted-tree
training (read, parallel train, combine, test), map/reduce sort, and a
dense matrix pipeline. Fanout controls the width of the parallel stage.
"""

from dataclasses import dataclass
from enum import Enum

from .dag import AppDag, TaskNode, TaskType

# Global task type registry. Type ids index the per-device interference
# matrices, so every DAG and profile in one run must agree on this table.
VA_SPLIT, VA_EXTRACT, VA_CLASSIFY = 0, 1, 2
LGBM_READ, LGBM_TRAIN, LGBM_COMBINE, LGBM_TEST = 3, 4, 5, 6
MR_MAP, MR_REDUCE = 7, 8
MX_INVERT, MX_MATMUL, MX_VECMUL = 9, 10, 11


def default_task_types() -> dict[int, TaskType]:
    """The bundled twelve-type registry shared by generators and profiles."""
    types = [
        TaskType(VA_SPLIT, "va-split", 0.0, 0.3, 8.0, 0.4),
        TaskType(VA_EXTRACT, "va-extract", 0.0, 0.5, 2.0, 0.6),
        TaskType(VA_CLASSIFY, "va-classify", 60.0, 1.2, 0.5, 0.7),
        TaskType(LGBM_READ, "lgbm-read", 0.0, 0.4, 5.0, 0.3),
        TaskType(LGBM_TRAIN, "lgbm-train", 0.0, 0.8, 3.0, 0.8),
        TaskType(LGBM_COMBINE, "lgbm-combine", 0.0, 0.4, 4.0, 0.4),
        TaskType(LGBM_TEST, "lgbm-test", 0.0, 0.4, 0.5, 0.5),
        TaskType(MR_MAP, "mr-map", 0.0, 0.5, 6.0, 0.6),
        TaskType(MR_REDUCE, "mr-reduce", 0.0, 0.5, 1.0, 0.6),
        TaskType(MX_INVERT, "mx-invert", 0.0, 0.6, 10.0, 0.7),
        TaskType(MX_MATMUL, "mx-matmul", 0.0, 0.6, 10.0, 0.7),
        TaskType(MX_VECMUL, "mx-vecmul", 0.0, 0.4, 2.0, 0.5),
    ]
    return {t.type_id: t for t in types}


N_TASK_TYPES = len(default_task_types())


def cpu_usage_by_type(types: dict[int, TaskType] | None = None) -> dict[int, float]:
    types = types if types is not None else default_task_types()
    return {tid: t.cpu_usage for tid, t in types.items()}


class WorkloadKind(Enum):
    VIDEO_ANALYTICS = "video_analytics"
    LIGHTGBM = "lightgbm"
    MAPREDUCE_SORT = "mapreduce_sort"
    MATRIX_COMPUTE = "matrix_compute"


@dataclass(frozen=True)
class WorkloadSpec:
    kind: WorkloadKind
    fanout: int = 4

    def __post_init__(self):
        if self.fanout < 1:
            raise ValueError(f"fanout must be >= 1, got {self.fanout}")


def build_workload(
    spec: WorkloadSpec, types: dict[int, TaskType] | None = None
) -> AppDag:
    """Generate the DAG for one workload family at the requested fanout."""
    types = types if types is not None else default_task_types()
    k = spec.fanout
    builders = {
        WorkloadKind.VIDEO_ANALYTICS: _video_analytics,
        WorkloadKind.LIGHTGBM: _lightgbm,
        WorkloadKind.MAPREDUCE_SORT: _mapreduce_sort,
        WorkloadKind.MATRIX_COMPUTE: _matrix_compute,
    }
    return builders[spec.kind](k, types)


def _video_analytics(k: int, types) -> AppDag:
    # split -> k parallel extracts -> one classification joining them
    nodes = [TaskNode("split", types[VA_SPLIT])]
    extracts = tuple(f"extract-{i}" for i in range(k))
    nodes += [TaskNode(e, types[VA_EXTRACT], ("split",)) for e in extracts]
    nodes.append(TaskNode("classify", types[VA_CLASSIFY], extracts))
    return AppDag(f"video-analytics-k{k}", tuple(nodes))


def _lightgbm(k: int, types) -> AppDag:
    # read -> k parallel trainers -> combine -> test
    nodes = [TaskNode("read", types[LGBM_READ])]
    trains = tuple(f"train-{i}" for i in range(k))
    nodes += [TaskNode(t, types[LGBM_TRAIN], ("read",)) for t in trains]
    nodes.append(TaskNode("combine", types[LGBM_COMBINE], trains))
    nodes.append(TaskNode("test", types[LGBM_TEST], ("combine",)))
    return AppDag(f"lightgbm-k{k}", tuple(nodes))


def _mapreduce_sort(k: int, types) -> AppDag:
    # k mappers feeding k reducers, full bipartite shuffle
    maps = tuple(f"map-{i}" for i in range(k))
    nodes = [TaskNode(m, types[MR_MAP]) for m in maps]
    nodes += [TaskNode(f"reduce-{i}", types[MR_REDUCE], maps) for i in range(k)]
    return AppDag(f"mapreduce-sort-k{k}", tuple(nodes))


def _matrix_compute(k: int, types) -> AppDag:
    # invert -> k parallel multiplies -> vector product
    nodes = [TaskNode("invert", types[MX_INVERT])]
    muls = tuple(f"matmul-{i}" for i in range(k))
    nodes += [TaskNode(m, types[MX_MATMUL], ("invert",)) for m in muls]
    nodes.append(TaskNode("vecmul", types[MX_VECMUL], muls))
    return AppDag(f"matrix-compute-k{k}", tuple(nodes))
