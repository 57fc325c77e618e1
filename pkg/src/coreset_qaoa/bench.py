"""
Benchmark harness: 2-means via summaries, brute-force QAOA bounds and QAOA runs.

For each method and summary size m the harness builds ``repeats`` summaries,
clusters each with weighted Lloyd and scores the centers on the full data.
For the sizes in ``order_m`` the best coreset (lowest full-data cost) is also
solved exactly under each Taylor order, which bounds what QAOA on m qubits
could achieve. Every unit of work gets its own seed from
derive_seed(master, method, m, repeat).
"""

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from statistics import fmean
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import __version__
from .circuit import compile_direct, compile_swap_network, gate_counts
from .clustering import evaluate_on_full, lloyd_2means, weighted_cost
from .coreset import DEFAULT_VARIANT, VARIANTS, WeightedPointSet, build_coreset, uniform_sample
from .dataio import DataSet, PathLike, SyntheticSpec, generate_synthetic, load_csv, write_json
from .errors import InvalidArgumentError, OutputError, SchemaError
from .hamiltonian import build_order0, build_order1, format_order, parse_order, polynomial_energy_table
from .qaoa import DEFAULT_RESTARTS, DEFAULT_SHOTS, modal_partition, optimize, prepare, sample
from .seeding import derive_seed
from .solver import brute_force_table, qaoa_bound

logger = logging.getLogger(__name__)

WORKERS_ENV = "CORESET_QAOA_WORKERS"

FULL_KMEANS = "full_kmeans"
UNIFORM = "uniform"
CORESET = "coreset"
QAOA_BOUND = "qaoa_bound"
QAOA = "qaoa"
PIPELINE_METHODS = (FULL_KMEANS, UNIFORM, CORESET)

REPORT_BEST = "best"
REPORT_MEAN = "mean_min_max"

DEFAULT_M_LIST = (5, 10, 15, 20)
DEFAULT_ORDERS = (0, 1, 2, math.inf)
DEFAULT_ORDER_M = (5, 10)
DEFAULT_REPEATS = 10
DEFAULT_LLOYD_TRIALS = 10


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if workers < 1:
        raise InvalidArgumentError(f"{WORKERS_ENV} must be at least 1, got {workers}")
    return workers


@dataclass(frozen=True)
class DataSource:
    """Either a CSV file or a synthetic spec (the default synthetic set when neither is given)."""

    csv: Optional[str] = None
    has_header: bool = False
    synthetic: Optional[SyntheticSpec] = None

    def __post_init__(self):
        if self.csv is not None and self.synthetic is not None:
            raise InvalidArgumentError("give either a CSV path or a synthetic spec, not both")

    def load(self) -> DataSet:
        if self.csv is not None:
            return load_csv(self.csv, has_header=self.has_header)
        return generate_synthetic(self.synthetic or SyntheticSpec())

    def to_dict(self) -> Dict[str, Any]:
        if self.csv is not None:
            return {"csv": self.csv, "has_header": self.has_header}
        return {"synthetic": (self.synthetic or SyntheticSpec()).to_dict()}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "DataSource":
        if not isinstance(raw, dict):
            raise SchemaError("data must be an object")
        unknown = set(raw) - {"csv", "has_header", "synthetic"}
        if unknown:
            raise SchemaError(f"unknown data fields: {sorted(unknown)}")
        synthetic = raw.get("synthetic")
        return cls(
            csv=raw.get("csv"),
            has_header=bool(raw.get("has_header", False)),
            synthetic=SyntheticSpec.from_dict(synthetic) if synthetic is not None else None,
        )


def _parse_list(raw: Dict[str, Any], key: str, default: Tuple, convert) -> Tuple:
    if key not in raw:
        return default
    value = raw[key]
    if not isinstance(value, list):
        raise SchemaError(f"field {key!r} must be a list")
    try:
        return tuple(convert(item) for item in value)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"field {key!r}: {exc}") from exc


def _check_fields(cls, raw: Dict[str, Any]) -> None:
    if not isinstance(raw, dict):
        raise SchemaError("configuration must be a JSON object")
    unknown = set(raw) - {f.name for f in fields(cls)}
    if unknown:
        raise SchemaError(f"unknown configuration fields: {sorted(unknown)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    The benchmark grid.

    Attributes:
        data: Where the points come from
        m_list: Summary sizes
        methods: Subset of PIPELINE_METHODS
        orders: Taylor orders solved exactly for the sizes in ``order_m``
        order_m: Sizes that get brute-force bounds
        repeats: Summaries drawn per (method, m)
        report: ``best`` (lowest cost over repeats) or ``mean_min_max``
        seed: Master seed
        coreset_variant: Sensitivity variant for the coreset arm
        lloyd_trials: Best-of trials for every Lloyd run
    """

    data: DataSource = field(default_factory=DataSource)
    m_list: Tuple[int, ...] = DEFAULT_M_LIST
    methods: Tuple[str, ...] = PIPELINE_METHODS
    orders: Tuple[Any, ...] = DEFAULT_ORDERS
    order_m: Tuple[int, ...] = DEFAULT_ORDER_M
    repeats: int = DEFAULT_REPEATS
    report: str = REPORT_BEST
    seed: int = 0
    coreset_variant: str = DEFAULT_VARIANT
    lloyd_trials: int = DEFAULT_LLOYD_TRIALS

    def __post_init__(self):
        if not self.m_list:
            raise InvalidArgumentError("m_list must not be empty")
        if any(m < 2 for m in self.m_list):
            raise InvalidArgumentError(f"summary sizes must be at least 2, got {self.m_list}")
        unknown = set(self.methods) - set(PIPELINE_METHODS)
        if unknown:
            raise InvalidArgumentError(f"unknown methods {sorted(unknown)}; expected {PIPELINE_METHODS}")
        if self.repeats < 1:
            raise InvalidArgumentError(f"repeats must be at least 1, got {self.repeats}")
        if self.report not in (REPORT_BEST, REPORT_MEAN):
            raise InvalidArgumentError(f"report must be {REPORT_BEST!r} or {REPORT_MEAN!r}")
        if self.coreset_variant not in VARIANTS:
            raise InvalidArgumentError(f"unknown coreset variant {self.coreset_variant!r}")
        if self.lloyd_trials < 1 or self.seed < 0:
            raise InvalidArgumentError("lloyd_trials must be positive and seed non-negative")
        object.__setattr__(self, "orders", tuple(parse_order(o) for o in self.orders))
        object.__setattr__(self, "m_list", tuple(int(m) for m in self.m_list))
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def bound_sizes(self) -> Tuple[int, ...]:
        if not self.orders:
            return ()
        return tuple(m for m in self.m_list if m in self.order_m)

    def expected_records(self) -> int:
        return len(self.methods) * len(self.m_list) + len(self.orders) * len(self.bound_sizes)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        _check_fields(cls, raw)
        try:
            return cls(
                data=DataSource.from_dict(raw.get("data", {})),
                m_list=_parse_list(raw, "m_list", DEFAULT_M_LIST, int),
                methods=_parse_list(raw, "methods", PIPELINE_METHODS, str),
                orders=_parse_list(raw, "orders", DEFAULT_ORDERS, parse_order),
                order_m=_parse_list(raw, "order_m", DEFAULT_ORDER_M, int),
                repeats=int(raw.get("repeats", DEFAULT_REPEATS)),
                report=str(raw.get("report", REPORT_BEST)),
                seed=int(raw.get("seed", 0)),
                coreset_variant=str(raw.get("coreset_variant", DEFAULT_VARIANT)),
                lloyd_trials=int(raw.get("lloyd_trials", DEFAULT_LLOYD_TRIALS)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgumentError):
                raise
            raise SchemaError(f"invalid experiment configuration: {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        return {
            "data": self.data.to_dict(),
            "m_list": list(self.m_list),
            "methods": list(self.methods),
            "orders": [format_order(o) for o in self.orders],
            "order_m": list(self.order_m),
            "repeats": self.repeats,
            "report": self.report,
            "seed": self.seed,
            "coreset_variant": self.coreset_variant,
            "lloyd_trials": self.lloyd_trials,
        }


@dataclass(frozen=True)
class QaoaExperimentConfig:
    """A single QAOA run on the best of ``repeats`` m-point coresets."""

    data: DataSource = field(default_factory=DataSource)
    m: int = 5
    order: Any = 0
    p: int = 1
    restarts: int = DEFAULT_RESTARTS
    shots: int = DEFAULT_SHOTS
    repeats: int = DEFAULT_REPEATS
    seed: int = 0
    coreset_variant: str = DEFAULT_VARIANT
    lloyd_trials: int = DEFAULT_LLOYD_TRIALS

    def __post_init__(self):
        order = parse_order(self.order)
        if order not in (0, 1):
            raise InvalidArgumentError(f"QAOA circuits need a quadratic objective (order 0 or 1), got {self.order}")
        object.__setattr__(self, "order", order)
        if not 2 <= self.m <= 24:
            raise InvalidArgumentError(f"QAOA experiments need 2 <= m <= 24, got {self.m}")
        if self.p < 1 or self.restarts < 1 or self.shots < 1 or self.repeats < 1:
            raise InvalidArgumentError("p, restarts, shots and repeats must be at least 1")
        if self.coreset_variant not in VARIANTS:
            raise InvalidArgumentError(f"unknown coreset variant {self.coreset_variant!r}")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "QaoaExperimentConfig":
        _check_fields(cls, raw)
        values = dict(raw)
        values["data"] = DataSource.from_dict(raw.get("data", {}))
        try:
            return cls(**values)
        except TypeError as exc:
            raise SchemaError(f"invalid QAOA experiment configuration: {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        document["data"] = self.data.to_dict()
        document["order"] = format_order(self.order)
        return document


@dataclass(frozen=True)
class ResultRecord:
    """
    One row of benchmark output.

    Aggregated rows carry ``repeat=None`` and the spread of ``full_data_cost``
    over repeats in ``cost_min``/``cost_max``.
    """

    method: str
    m: int
    full_data_cost: float
    seed: int
    wall_time: float = 0.0
    order: Optional[Any] = None
    coreset_cost: Optional[float] = None
    energy: Optional[float] = None
    partition: Optional[str] = None
    repeat: Optional[int] = None
    cost_min: Optional[float] = None
    cost_max: Optional[float] = None
    n_repeats: int = 1
    f_value: Optional[float] = None
    modal_in_argmax: Optional[bool] = None
    argmax_mass: Optional[float] = None
    cnot_count: Optional[int] = None
    cnot_direct: Optional[int] = None
    histogram: Optional[Dict[str, int]] = None

    def __post_init__(self):
        if self.full_data_cost < 0 or (self.coreset_cost is not None and self.coreset_cost < 0):
            raise InvalidArgumentError(f"negative cost in {self.method} record")

    def sort_key(self) -> Tuple:
        order = -1.0 if self.order is None else float(self.order)
        repeat = -1 if self.repeat is None else self.repeat
        return (self.method, self.m, order, repeat)

    def without_timing(self) -> "ResultRecord":
        return replace(self, wall_time=0.0)

    def to_row(self) -> Dict[str, Any]:
        row = {name: getattr(self, name) for name in CSV_COLUMNS}
        row["order"] = "" if self.order is None else format_order(self.order)
        return {key: "" if value is None else value for key, value in row.items()}

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        if self.order is not None:
            document["order"] = format_order(self.order)
        return {key: value for key, value in document.items() if value is not None}


CSV_COLUMNS = (
    "method", "m", "order", "repeat", "full_data_cost", "cost_min", "cost_max", "n_repeats",
    "coreset_cost", "energy", "partition", "seed", "wall_time",
    "f_value", "modal_in_argmax", "argmax_mass", "cnot_count", "cnot_direct",
)


@dataclass
class _Unit:
    method: str
    m: int
    repeat: int
    recorded: bool = True
    record: Optional[ResultRecord] = None
    summary: Optional[WeightedPointSet] = None


def _unit_seed(cfg_seed: int, method: str, m: int, repeat: int) -> int:
    if method == FULL_KMEANS:
        return derive_seed(cfg_seed, method, repeat)
    return derive_seed(cfg_seed, method, m, repeat)


def _summarize_once(data: DataSet, method: str, m: int, seed: int, variant: str) -> WeightedPointSet:
    if method == UNIFORM:
        return uniform_sample(data, m, seed)
    return build_coreset(data, m, variant, seed)


def _run_unit(data: DataSet, cfg: ExperimentConfig, unit: _Unit) -> _Unit:
    started = time.perf_counter()
    seed = _unit_seed(cfg.seed, unit.method, unit.m, unit.repeat)
    if unit.method == FULL_KMEANS:
        result = lloyd_2means(data, trials=cfg.lloyd_trials, seed=derive_seed(seed, "lloyd"))
        full_cost = coreset_cost = result.cost
    else:
        unit.summary = _summarize_once(data, unit.method, unit.m, seed, cfg.coreset_variant)
        result = lloyd_2means(unit.summary, trials=cfg.lloyd_trials, seed=derive_seed(seed, "lloyd"))
        full_cost = weighted_cost(data, result.model)
        coreset_cost = result.cost
    unit.record = ResultRecord(
        method=unit.method,
        m=unit.m,
        full_data_cost=full_cost,
        coreset_cost=coreset_cost,
        seed=seed,
        repeat=unit.repeat,
        wall_time=time.perf_counter() - started,
    )
    logger.debug("%s m=%d repeat %d: full cost %.6g", unit.method, unit.m, unit.repeat, full_cost)
    return unit


def _aggregate(records: List[ResultRecord], report: str, m: int) -> ResultRecord:
    costs = [r.full_data_cost for r in records]
    best = min(records, key=lambda r: (r.full_data_cost, r.repeat))
    value = best.full_data_cost if report == REPORT_BEST else fmean(costs)
    return replace(
        best,
        m=m,
        repeat=None,
        full_data_cost=value,
        coreset_cost=best.coreset_cost if report == REPORT_BEST else fmean(
            r.coreset_cost for r in records
        ),
        cost_min=min(costs),
        cost_max=max(costs),
        n_repeats=len(records),
        wall_time=sum(r.wall_time for r in records),
    )


def run_pipeline(cfg: ExperimentConfig, data: Optional[DataSet] = None, workers: Optional[int] = None,
                 on_record: Optional[Callable[[ResultRecord], None]] = None) -> List[ResultRecord]:
    """
    Run the grid and return one aggregated record per (method, m) and per (order, bound size).

    ``on_record`` sees every per-repeat record as soon as it exists, so that a
    caller can keep partial results when a later unit fails.
    """
    data = data if data is not None else cfg.data.load()
    workers = workers or default_workers()
    for m in cfg.m_list:
        if m > data.n:
            raise InvalidArgumentError(f"summary size {m} exceeds the {data.n} data points")

    units: List[_Unit] = []
    if FULL_KMEANS in cfg.methods:
        units.extend(_Unit(FULL_KMEANS, 0, r) for r in range(cfg.repeats))
    for method in (UNIFORM, CORESET):
        for m in cfg.m_list:
            recorded = method in cfg.methods
            if recorded or (method == CORESET and m in cfg.bound_sizes and cfg.orders):
                units.extend(_Unit(method, m, r, recorded) for r in range(cfg.repeats))
    logger.info("running %d units with %d worker(s) on %s (n=%d)", len(units), workers, data.name, data.n)

    def execute(unit: _Unit) -> _Unit:
        done = _run_unit(data, cfg, unit)
        if on_record is not None and done.recorded:
            on_record(done.record)
        return done

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            finished = list(pool.map(execute, units))
    else:
        finished = [execute(unit) for unit in units]

    aggregated: List[ResultRecord] = []
    if FULL_KMEANS in cfg.methods:
        full_runs = [u.record for u in finished if u.method == FULL_KMEANS]
        aggregated.extend(_aggregate(full_runs, cfg.report, m) for m in cfg.m_list)
    for method in (UNIFORM, CORESET):
        if method not in cfg.methods:
            continue
        for m in cfg.m_list:
            runs = [u.record for u in finished if u.method == method and u.m == m]
            aggregated.append(_aggregate(runs, cfg.report, m))

    for m in cfg.bound_sizes:
        candidates = [u for u in finished if u.method == CORESET and u.m == m]
        best = min(candidates, key=lambda u: (u.record.full_data_cost, u.repeat))
        for order in cfg.orders:
            started = time.perf_counter()
            bound = qaoa_bound(data, best.summary, order, workers=workers)
            record = ResultRecord(
                method=QAOA_BOUND,
                m=m,
                order=order,
                full_data_cost=bound.full_cost,
                energy=bound.coreset_energy,
                partition=str(bound.partition),
                seed=best.record.seed,
                repeat=best.repeat,
                wall_time=time.perf_counter() - started,
            )
            if on_record is not None:
                on_record(record)
            aggregated.append(record)

    aggregated.sort(key=ResultRecord.sort_key)
    logger.info("pipeline finished: %d records", len(aggregated))
    return aggregated


def best_coreset(data: DataSet, m: int, repeats: int, seed: int, variant: str = DEFAULT_VARIANT,
                 lloyd_trials: int = DEFAULT_LLOYD_TRIALS) -> Tuple[WeightedPointSet, float]:
    """The coreset among ``repeats`` draws whose Lloyd centers cost least on the full data."""
    best = None
    for repeat in range(repeats):
        unit_seed = derive_seed(seed, CORESET, m, repeat)
        pts = build_coreset(data, m, variant, unit_seed)
        model = lloyd_2means(pts, trials=lloyd_trials, seed=derive_seed(unit_seed, "lloyd")).model
        cost = weighted_cost(data, model)
        if best is None or cost < best[1]:
            best = (pts, cost)
    return best


def run_qaoa_experiment(cfg: QaoaExperimentConfig, data: Optional[DataSet] = None) -> ResultRecord:
    """
    Optimize and sample QAOA on the best m-coreset and score the modal bitstring.

    The record also carries the SWAP-network and direct CNOT counts, the
    probability mass on the brute-force argmax set and whether the modal
    bitstring is one of the maximizers.
    """
    started = time.perf_counter()
    data = data if data is not None else cfg.data.load()
    if cfg.m > data.n:
        raise InvalidArgumentError(f"summary size {cfg.m} exceeds the {data.n} data points")
    pts, _ = best_coreset(data, cfg.m, cfg.repeats, cfg.seed, cfg.coreset_variant, cfg.lloyd_trials)
    h = build_order0(pts) if cfg.order == 0 else build_order1(pts)
    table = polynomial_energy_table(h)
    optimum = brute_force_table(table, symmetric=True)

    result = optimize(table, p=cfg.p, restarts=cfg.restarts, seed=derive_seed(cfg.seed, QAOA, "optimize"))
    state = prepare(table, result.params)
    histogram = sample(state, cfg.shots, derive_seed(cfg.seed, QAOA, "shots"))
    modal = modal_partition(histogram)
    full_cost = evaluate_on_full(data, pts, modal)

    swap_counts = gate_counts(compile_swap_network(h, result.params))
    direct_counts = gate_counts(compile_direct(h, result.params))
    logger.info(
        "QAOA m=%d p=%d: modal %s, full cost %.6g, %d CNOTs",
        cfg.m, cfg.p, modal, full_cost, swap_counts.cnot,
    )
    return ResultRecord(
        method=QAOA,
        m=cfg.m,
        order=cfg.order,
        full_data_cost=full_cost,
        energy=optimum.best_energy,
        partition=str(modal),
        seed=cfg.seed,
        f_value=result.f_value,
        modal_in_argmax=modal.index in optimum.indices,
        argmax_mass=state.mass_on(optimum.indices),
        cnot_count=swap_counts.cnot,
        cnot_direct=direct_counts.cnot,
        histogram=histogram,
        wall_time=time.perf_counter() - started,
    )


def summarize(records: List[ResultRecord]) -> List[Dict[str, Any]]:
    """
    min/mean/max of the full-data cost per (method, m, order).

    Bound rows get ``beats_coreset`` when the bound's cost is below the best
    coreset 2-means cost at the same m.
    """
    groups: Dict[Tuple, List[ResultRecord]] = {}
    for record in sorted(records, key=ResultRecord.sort_key):
        groups.setdefault((record.method, record.m, record.order), []).append(record)
    coreset_best = {
        m: min(r.cost_min if r.cost_min is not None else r.full_data_cost for r in group)
        for (method, m, _), group in groups.items() if method == CORESET
    }
    rows = []
    for (method, m, order), group in groups.items():
        costs = [r.full_data_cost for r in group]
        row = {
            "method": method,
            "m": m,
            "order": "" if order is None else format_order(order),
            "count": len(group),
            "min": min(costs),
            "mean": fmean(costs),
            "max": max(costs),
        }
        if method == QAOA_BOUND and m in coreset_best:
            row["beats_coreset"] = min(costs) < coreset_best[m]
        rows.append(row)
    return rows


def write_records_csv(records: List[ResultRecord], path: PathLike) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for record in sorted(records, key=ResultRecord.sort_key):
                writer.writerow(record.to_row())
    except OSError as exc:
        raise OutputError(f"{path}: cannot write results: {exc.strerror}") from exc


def write_results(out_dir: PathLike, cfg: ExperimentConfig, records: List[ResultRecord],
                  raw: List[ResultRecord], partial: bool = False) -> Path:
    """Write records.csv (per repeat), summary.csv (aggregated) and manifest.json."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"{out_dir}: cannot create output directory: {exc.strerror}") from exc
    write_records_csv(raw, out_dir / "records.csv")
    write_records_csv(records, out_dir / "summary.csv")
    write_json(
        {
            "version": __version__,
            "config": cfg.to_dict(),
            "complete": not partial,
            "expected_records": cfg.expected_records(),
            "records": len(records),
            "raw_records": len(raw),
            "summary": summarize(records),
        },
        out_dir / "manifest.json",
    )
    return out_dir
