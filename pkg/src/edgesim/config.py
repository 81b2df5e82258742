"""Input file formats: fleet profiles, DAG definitions, experiments, models.

All structured inputs are TOML; tabular inputs (latency-model coefficients,
availability traces) are CSV. Paths referenced inside a file resolve
relative to that file's directory, which lets the bundled data tree and
user-written trees work the same way.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .baselines import SCHEDULER_NAMES, LatsModel
from .dag import AppDag, TaskNode, TaskType, validate_dag
from .devices import DeviceProfile, InterferenceMatrix
from .orchestrator import OrchestratorParams
from .sim import SimConfig
from .workloads import (
    WorkloadKind,
    WorkloadSpec,
    build_workload,
    default_task_types,
)

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Malformed or inconsistent input file."""


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None


def _check_schema(doc: dict, path: Path) -> None:
    version = doc.get("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema version {version}")


@dataclass(frozen=True)
class DeviceClass:
    """One catalog entry: capabilities shared by all devices of the class."""

    name: str
    cores: int
    memory_gb: float
    interference: InterferenceMatrix
    is_ped: bool = False


@dataclass
class FleetCatalog:
    """Parsed fleet profile file: device classes plus named failure-rate sets."""

    classes: dict  # name -> DeviceClass, in declaration order
    lambda_sets: dict  # set name -> {class name -> rate per second}
    n_types: int

    def rates_for(self, lambda_set: str) -> dict:
        try:
            return self.lambda_sets[lambda_set]
        except KeyError:
            known = ", ".join(sorted(self.lambda_sets)) or "none"
            raise ConfigError(
                f"unknown lambda set {lambda_set!r}; file defines: {known}"
            ) from None


def load_fleet_catalog(path) -> FleetCatalog:
    path = Path(path)
    doc = _load_toml(path)
    _check_schema(doc, path)
    try:
        n_types = int(doc["n_types"])
        raw_classes = doc["class"]
    except KeyError as e:
        raise ConfigError(f"{path}: missing required key {e}") from None
    classes: dict[str, DeviceClass] = {}
    for entry in raw_classes:
        try:
            name = entry["name"]
            matrix = InterferenceMatrix.from_mc(
                entry["m"], entry["c"], entry.get("solo")
            )
            cls = DeviceClass(
                name=name,
                cores=int(entry["cores"]),
                memory_gb=float(entry["memory_gb"]),
                interference=matrix,
                is_ped=bool(entry.get("is_ped", False)),
            )
        except KeyError as e:
            raise ConfigError(f"{path}: device class missing key {e}") from None
        except ValueError as e:
            raise ConfigError(f"{path}: class {entry.get('name')!r}: {e}") from None
        if cls.interference.n_types != n_types:
            raise ConfigError(
                f"{path}: class {name!r} matrices are "
                f"{cls.interference.n_types}x{cls.interference.n_types}, "
                f"file declares n_types = {n_types}"
            )
        if name in classes:
            raise ConfigError(f"{path}: duplicate device class {name!r}")
        classes[name] = cls
    lambda_sets = {
        set_name: {cls: float(rate) for cls, rate in rates.items()}
        for set_name, rates in doc.get("lambda_sets", {}).items()
    }
    for set_name, rates in lambda_sets.items():
        for cls, rate in rates.items():
            if cls not in classes:
                raise ConfigError(
                    f"{path}: lambda set {set_name!r} names unknown class {cls!r}"
                )
            if rate < 0:
                raise ConfigError(f"{path}: negative rate in lambda set {set_name!r}")
    return FleetCatalog(classes=classes, lambda_sets=lambda_sets, n_types=n_types)


def load_lambda_file(path) -> dict:
    """Standalone failure-rate scenario: {class name -> rate per second}."""
    path = Path(path)
    doc = _load_toml(path)
    _check_schema(doc, path)
    rates = doc.get("rates")
    if not isinstance(rates, dict) or not rates:
        raise ConfigError(f"{path}: expected a non-empty [rates] table")
    return {cls: float(rate) for cls, rate in rates.items()}


def load_dag_file(path) -> tuple[AppDag, dict]:
    """Parse a DAG definition; returns the DAG and its task type table."""
    path = Path(path)
    doc = _load_toml(path)
    _check_schema(doc, path)
    name = doc.get("name", path.stem)
    types: dict[int, TaskType] = {}
    for entry in doc.get("task_type", []):
        try:
            t = TaskType(
                type_id=int(entry["id"]),
                name=entry["name"],
                model_size_mb=float(entry.get("model_size_mb", 0.0)),
                mem_required_gb=float(entry.get("mem_required_gb", 0.0)),
                output_size_mb=float(entry.get("output_size_mb", 0.0)),
                cpu_usage=float(entry.get("cpu_usage", 0.5)),
            )
        except KeyError as e:
            raise ConfigError(f"{path}: task type missing key {e}") from None
        except ValueError as e:
            raise ConfigError(f"{path}: {e}") from None
        if t.type_id in types:
            raise ConfigError(f"{path}: duplicate task type id {t.type_id}")
        types[t.type_id] = t
    nodes = []
    for entry in doc.get("node", []):
        try:
            tid = int(entry["type"])
            node_id = str(entry["id"])
        except KeyError as e:
            raise ConfigError(f"{path}: node missing key {e}") from None
        if tid not in types:
            raise ConfigError(f"{path}: node {node_id!r} uses undeclared task type {tid}")
        nodes.append(
            TaskNode(
                node_id=node_id,
                task_type=types[tid],
                predecessors=tuple(str(p) for p in entry.get("predecessors", [])),
            )
        )
    dag = AppDag(name=name, nodes=tuple(nodes))
    try:
        validate_dag(dag)
    except Exception as e:
        raise ConfigError(f"{path}: {e}") from None
    return dag, types


def load_lats_csv(path) -> LatsModel:
    """Latency-model coefficient table: device_class, task_type, slope, intercept."""
    path = Path(path)
    rows: dict[tuple[str, int], tuple[float, float]] = {}
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            required = {"device_class", "task_type", "slope", "intercept"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ConfigError(
                    f"{path}: header must contain {', '.join(sorted(required))}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    key = (row["device_class"], int(row["task_type"]))
                    rows[key] = (float(row["slope"]), float(row["intercept"]))
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"{path}:{lineno}: {e}") from None
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    if not rows:
        raise ConfigError(f"{path}: no coefficient rows")
    return LatsModel(rows=rows)


def load_trace_csv(path) -> list:
    """Availability trace: elapsed_s, availability rows."""
    path = Path(path)
    out = []
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or not {"elapsed_s", "availability"} <= set(
                reader.fieldnames
            ):
                raise ConfigError(f"{path}: header must contain elapsed_s, availability")
            for lineno, row in enumerate(reader, start=2):
                try:
                    out.append((float(row["elapsed_s"]), float(row["availability"])))
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"{path}:{lineno}: {e}") from None
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    return out


@dataclass
class Experiment:
    """A parsed experiment: one scenario, one or more schedulers to compare."""

    name: str
    schedulers: list
    base: SimConfig
    out_dir: str | None = None
    source_path: Path | None = None

    def config_for(self, scheduler: str) -> SimConfig:
        from dataclasses import replace

        return replace(self.base, scheduler=scheduler)


def _merge_types(registry: dict, new_types: dict, origin: str) -> None:
    for tid, t in new_types.items():
        if tid in registry and registry[tid] != t:
            raise ConfigError(
                f"{origin}: task type {tid} conflicts with an earlier definition "
                f"({registry[tid].name!r} vs {t.name!r})"
            )
        registry.setdefault(tid, t)


def load_experiment(path) -> Experiment:
    path = Path(path)
    doc = _load_toml(path)
    _check_schema(doc, path)
    base_dir = path.parent

    name = doc.get("name", path.stem)
    schedulers = doc.get("schedulers", ["ibdash"])
    if schedulers == "all":
        schedulers = list(SCHEDULER_NAMES)
    if not isinstance(schedulers, list) or not schedulers:
        raise ConfigError(f"{path}: schedulers must be a non-empty list or 'all'")
    for s in schedulers:
        if s not in SCHEDULER_NAMES:
            raise ConfigError(
                f"{path}: unknown scheduler {s!r}; expected one of "
                + ", ".join(SCHEDULER_NAMES)
            )

    profile_ref = doc.get("profile")
    if not profile_ref:
        raise ConfigError(f"{path}: missing 'profile' (fleet profile file)")
    catalog = load_fleet_catalog(base_dir / profile_ref)

    fleet_table = doc.get("fleet")
    if not isinstance(fleet_table, dict) or not fleet_table:
        raise ConfigError(f"{path}: missing [fleet] table of class counts")
    for cls, count in fleet_table.items():
        if cls not in catalog.classes:
            raise ConfigError(f"{path}: fleet names unknown device class {cls!r}")
        if not isinstance(count, int) or count < 0:
            raise ConfigError(f"{path}: fleet count for {cls!r} must be an integer >= 0")

    if "lambda_file" in doc:
        rates = load_lambda_file(base_dir / doc["lambda_file"])
        lambda_label = Path(doc["lambda_file"]).stem
    elif "custom_lambda" in doc:
        rates = {cls: float(r) for cls, r in doc["custom_lambda"].items()}
        lambda_label = "custom"
    else:
        lambda_label = doc.get("lambda_set", "mix")
        rates = catalog.rates_for(lambda_label)
    for cls, count in fleet_table.items():
        if count > 0 and cls not in rates:
            raise ConfigError(
                f"{path}: no failure rate for device class {cls!r} "
                f"in lambda set {lambda_label!r}"
            )

    profiles = []
    device_id = 0
    for cls_name, cls in catalog.classes.items():  # catalog order fixes device ids
        for _ in range(fleet_table.get(cls_name, 0)):
            profiles.append(
                DeviceProfile(
                    device_id=device_id,
                    class_name=cls_name,
                    cores=cls.cores,
                    memory_total_gb=cls.memory_gb,
                    failure_rate=rates[cls_name],
                    interference=cls.interference,
                    is_ped=cls.is_ped,
                )
            )
            device_id += 1
    if not profiles:
        raise ConfigError(f"{path}: fleet is empty")

    params_doc = doc.get("params", {})
    try:
        params = OrchestratorParams(
            alpha=float(params_doc.get("alpha", 0.5)),
            beta=float(params_doc.get("beta", 0.1)),
            gamma=int(params_doc.get("gamma", 3)),
            bandwidth_mbps=float(params_doc.get("bandwidth_mbps", 200.0)),
            latency_norm=(
                float(params_doc["latency_norm"])
                if "latency_norm" in params_doc
                else None
            ),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: [params]: {e}") from None

    registry: dict[int, TaskType] = {}
    workloads = []
    for entry in doc.get("workload", []):
        weight = float(entry.get("weight", 1.0))
        if "path" in entry:
            dag, types = load_dag_file(base_dir / entry["path"])
            _merge_types(registry, types, str(base_dir / entry["path"]))
        elif "kind" in entry:
            try:
                kind = WorkloadKind(entry["kind"])
            except ValueError:
                raise ConfigError(
                    f"{path}: unknown workload kind {entry['kind']!r}"
                ) from None
            defaults = default_task_types()
            _merge_types(registry, defaults, f"{path} (builtin types)")
            dag = build_workload(
                WorkloadSpec(kind=kind, fanout=int(entry.get("fanout", 4))), defaults
            )
        else:
            raise ConfigError(f"{path}: workload entry needs 'kind' or 'path'")
        workloads.append((dag, weight))
    if not workloads:
        raise ConfigError(f"{path}: no [[workload]] entries")
    for tid in registry:
        if tid >= catalog.n_types:
            raise ConfigError(
                f"{path}: task type id {tid} out of range for profile "
                f"with n_types = {catalog.n_types}"
            )

    lats_model = None
    if "lats_model" in doc:
        lats_model = load_lats_csv(base_dir / doc["lats_model"])
    elif "lats" in schedulers:
        raise ConfigError(f"{path}: scheduler 'lats' requires a lats_model file")

    base = SimConfig(
        seed=int(doc.get("seed", 0)),
        profiles=tuple(profiles),
        workloads=tuple(workloads),
        scheduler=schedulers[0],
        params=params,
        n_cycles=int(doc.get("n_cycles", 20)),
        cycle_length_s=float(doc.get("cycle_length_s", 15.0)),
        instances_per_cycle=int(doc.get("instances_per_cycle", 1000)),
        arrival_window_s=float(doc.get("arrival_window_s", 1.5)),
        lambda_set=lambda_label,
        scenario=name,
        lats_model=lats_model,
        cpu_by_type={tid: t.cpu_usage for tid, t in registry.items()},
        collect_load_series=bool(doc.get("collect_load_series", True)),
    )
    return Experiment(
        name=name,
        schedulers=list(schedulers),
        base=base,
        out_dir=doc.get("out_dir"),
        source_path=path,
    )


def bundled_data_dir() -> Path:
    """Directory holding the packaged profiles, DAGs and experiment files."""
    return Path(__file__).resolve().parent / "data"


def resolve_experiment_path(ref: str) -> Path:
    """Accept a filesystem path or the name of a bundled experiment."""
    p = Path(ref)
    if p.exists():
        return p
    bundled = bundled_data_dir() / "experiments"
    for candidate in (bundled / ref, bundled / f"{ref}.toml"):
        if candidate.exists():
            return candidate
    raise ConfigError(
        f"experiment {ref!r} not found; not a file, and no bundled experiment "
        f"matches (looked in {bundled})"
    )
