"""Application DAGs of typed tasks and their grouping into execution stages.

An application is a DAG whose nodes are tasks of some registered type and
whose edges carry data dependencies. Scheduling works stage by stage: a
stage holds every task at the same depth, where depth is the longest path
(in edges) from any source node. Tasks in one stage have no dependencies
among themselves and may run concurrently.
"""

from dataclasses import dataclass, field


class DagError(Exception):
    """Base class for DAG construction and validation errors."""


class EmptyDag(DagError):
    pass


class DuplicateNode(DagError):
    pass


class DanglingReference(DagError):
    """A node lists a predecessor id that does not exist in the DAG."""


class CycleDetected(DagError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("dependency cycle: " + " -> ".join(cycle))


@dataclass(frozen=True)
class TaskType:
    """A class of task with fixed resource demands.

    model_size_mb is the bytes shipped to a device that does not hold the
    task's model yet; zero means the task needs no model. mem_required_gb
    is the resident footprint the model occupies once cached. output_size_mb
    is what each downstream consumer must pull if it runs elsewhere.
    cpu_usage is the share of one core the task keeps busy, used only by
    load-model baselines.
    """

    type_id: int
    name: str
    model_size_mb: float = 0.0
    mem_required_gb: float = 0.0
    output_size_mb: float = 0.0
    cpu_usage: float = 0.5

    def __post_init__(self):
        if self.type_id < 0:
            raise ValueError(f"type_id must be >= 0, got {self.type_id}")
        if self.model_size_mb < 0 or self.mem_required_gb < 0:
            raise ValueError(f"negative resource demand on task type {self.name!r}")
        if self.output_size_mb < 0:
            raise ValueError(f"negative output size on task type {self.name!r}")
        if not 0.0 <= self.cpu_usage <= 1.0:
            raise ValueError(f"cpu_usage must be in [0, 1], got {self.cpu_usage}")

    @property
    def needs_model(self) -> bool:
        return self.model_size_mb > 0.0


@dataclass(frozen=True)
class TaskNode:
    """One task instance inside an application DAG."""

    node_id: str
    task_type: TaskType
    predecessors: tuple[str, ...] = ()


@dataclass(frozen=True)
class AppDag:
    """An application: named DAG of task nodes.

    Construction does not validate; call validate_dag (or stagerize, which
    validates first) before scheduling.
    """

    name: str
    nodes: tuple[TaskNode, ...]

    def node(self, node_id: str) -> TaskNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def by_id(self) -> dict[str, TaskNode]:
        return {n.node_id: n for n in self.nodes}


@dataclass(frozen=True)
class StagedDag:
    """A validated DAG plus its stage decomposition.

    stages[i] lists node ids at depth i, in the DAG's declaration order.
    stage_of maps node id to stage index.
    """

    dag: AppDag
    stages: tuple[tuple[str, ...], ...]
    stage_of: dict = field(hash=False)

    @property
    def n_stages(self) -> int:
        return len(self.stages)


def validate_dag(dag: AppDag) -> None:
    """Check structural soundness; raises a DagError subclass on the first problem.

    Checks, in order: non-empty, unique node ids, all predecessor references
    resolve, no dependency cycles.
    """
    if not dag.nodes:
        raise EmptyDag(f"DAG {dag.name!r} has no nodes")
    seen: set[str] = set()
    for n in dag.nodes:
        if n.node_id in seen:
            raise DuplicateNode(f"duplicate node id {n.node_id!r} in DAG {dag.name!r}")
        seen.add(n.node_id)
    for n in dag.nodes:
        for p in n.predecessors:
            if p not in seen:
                raise DanglingReference(
                    f"node {n.node_id!r} references unknown predecessor {p!r}"
                )
    _check_acyclic(dag)


def _check_acyclic(dag: AppDag) -> None:
    # Kahn elimination; whatever survives is part of (or downstream of) a cycle.
    nodes = dag.by_id()
    indeg = {nid: len(set(n.predecessors)) for nid, n in nodes.items()}
    succs: dict[str, list[str]] = {nid: [] for nid in nodes}
    for n in dag.nodes:
        for p in set(n.predecessors):
            succs[p].append(n.node_id)
    queue = [nid for nid in nodes if indeg[nid] == 0]
    removed = 0
    while queue:
        nid = queue.pop()
        removed += 1
        for s in succs[nid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.append(s)
    if removed < len(nodes):
        remaining = {nid for nid in nodes if indeg[nid] > 0}
        raise CycleDetected(_find_cycle(nodes, remaining))


def _find_cycle(nodes: dict[str, TaskNode], remaining: set[str]) -> list[str]:
    # Walk predecessor links inside the surviving set until an id repeats.
    start = sorted(remaining)[0]
    path = [start]
    seen_at = {start: 0}
    cur = start
    while True:
        cur = next(p for p in nodes[cur].predecessors if p in remaining)
        if cur in seen_at:
            return path[seen_at[cur]:] + [cur]
        seen_at[cur] = len(path)
        path.append(cur)


def stagerize(dag: AppDag) -> StagedDag:
    """Validate and split a DAG into depth stages.

    depth(n) = 0 for sources, else 1 + max(depth(p) for p in predecessors).
    Every node lands in exactly one stage and always after all of its
    predecessors.
    """
    validate_dag(dag)
    order = _topo_order(dag)
    nodes = dag.by_id()
    depth: dict[str, int] = {}
    for nid in order:
        preds = nodes[nid].predecessors
        depth[nid] = 1 + max(depth[p] for p in preds) if preds else 0
    n_stages = max(depth.values()) + 1
    stages: list[list[str]] = [[] for _ in range(n_stages)]
    for n in dag.nodes:  # declaration order within a stage
        stages[depth[n.node_id]].append(n.node_id)
    return StagedDag(
        dag=dag,
        stages=tuple(tuple(s) for s in stages),
        stage_of=dict(depth),
    )


def _topo_order(dag: AppDag) -> list[str]:
    nodes = dag.by_id()
    indeg = {nid: len(set(n.predecessors)) for nid, n in nodes.items()}
    succs: dict[str, list[str]] = {nid: [] for nid in nodes}
    for n in dag.nodes:
        for p in set(n.predecessors):
            succs[p].append(n.node_id)
    queue = [nid for nid in nodes if indeg[nid] == 0]
    out: list[str] = []
    while queue:
        nid = queue.pop()
        out.append(nid)
        for s in succs[nid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.append(s)
    return out
