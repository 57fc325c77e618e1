"""
Loading, validating and generating point sets.

CSV is the only ingestion format: one point per row, comma separated,
optionally preceded by a single header row. Synthetic data reproduces the
"rare clusters plus one majority cluster" structure at a configurable scale.
"""

import csv
import json
import logging
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .errors import (
    DataFileError,
    EmptyFileError,
    InvalidArgumentError,
    NonFiniteValueError,
    NonNumericCellError,
    OutputError,
    RaggedRowError,
    SchemaError,
)
from .seeding import make_rng

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Desk-scale defaults for the synthetic set.
DEFAULT_N_TOTAL = 4000
DEFAULT_DIM = 16
DEFAULT_N_RARE = 10
DEFAULT_PER_RARE = 5
DEFAULT_CENTER_SCALE = 100.0
DEFAULT_SPREAD = 1.0

# Plain decimal or scientific notation; nan and inf are parsed and then rejected as non-finite.
_NUMERIC_CELL = re.compile(r"[+-]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|nan|inf(?:inity)?)", re.IGNORECASE)

_SPEC_INT_FIELDS = ("n_total", "dim", "n_rare_clusters", "points_per_rare_cluster", "seed")
_SPEC_REAL_FIELDS = ("cluster_spread", "center_scale")


def _frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DataSet:
    """
    n points in R^d, optionally weighted.

    Attributes:
        points: (n, d) array of finite floats
        name: Identifier used in logs and result files
        weights: Optional (n,) array of positive weights (unit weights if None)
        labels: Optional (n,) ground-truth cluster labels (synthetic data only)
    """

    points: np.ndarray
    name: str = "data"
    weights: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        points = _frozen_array(self.points)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise InvalidArgumentError(
                f"a data set needs n >= 1 points of dimension d >= 1, got shape {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("data set coordinates must be finite")
        object.__setattr__(self, "points", points)
        if self.weights is not None:
            weights = _frozen_array(self.weights)
            if weights.shape != (points.shape[0],) or np.any(weights <= 0):
                raise InvalidArgumentError("data set weights must be n positive values")
            object.__setattr__(self, "weights", weights)
        if self.labels is not None:
            object.__setattr__(self, "labels", _frozen_array(self.labels, dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def point_weights(self) -> np.ndarray:
        """Return the weights, with unit weights for an unweighted set."""
        if self.weights is None:
            return np.ones(self.n)
        return self.weights

    def equals(self, other: "DataSet") -> bool:
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic rare-cluster data set."""

    n_total: int = DEFAULT_N_TOTAL
    dim: int = DEFAULT_DIM
    n_rare_clusters: int = DEFAULT_N_RARE
    points_per_rare_cluster: int = DEFAULT_PER_RARE
    cluster_spread: float = DEFAULT_SPREAD
    center_scale: float = DEFAULT_CENTER_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.n_total < 1 or self.dim < 1:
            raise InvalidArgumentError("n_total and dim must be positive")
        if self.n_rare_clusters < 0 or self.points_per_rare_cluster < 0:
            raise InvalidArgumentError("rare cluster counts must be non-negative")
        if self.n_rare_clusters > 0 and self.points_per_rare_cluster == 0:
            raise InvalidArgumentError("rare clusters need at least one point each")
        if self.n_total <= self.n_rare_points:
            raise InvalidArgumentError(
                f"n_total={self.n_total} leaves the majority cluster empty "
                f"({self.n_rare_points} rare points)"
            )
        if not self.cluster_spread > 0:
            raise InvalidArgumentError("cluster_spread must be positive")
        if not self.center_scale >= 0:
            raise InvalidArgumentError("center_scale must be non-negative")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be non-negative")

    @property
    def n_rare_points(self) -> int:
        return self.n_rare_clusters * self.points_per_rare_cluster

    @property
    def n_majority(self) -> int:
        return self.n_total - self.n_rare_points

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "SyntheticSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(f"unknown synthetic spec fields: {sorted(unknown)}")
        for key in _SPEC_INT_FIELDS:
            if key in raw and (isinstance(raw[key], bool) or not isinstance(raw[key], int)):
                raise SchemaError(f"synthetic spec field {key!r} must be an integer, got {raw[key]!r}")
        for key in _SPEC_REAL_FIELDS:
            if key in raw and (isinstance(raw[key], bool) or not isinstance(raw[key], (int, float))):
                raise SchemaError(f"synthetic spec field {key!r} must be a number, got {raw[key]!r}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise SchemaError(f"bad synthetic spec: {exc}") from exc

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def generate_synthetic(spec: SyntheticSpec, name: str = "synthetic") -> DataSet:
    """
    Draw a rare-cluster data set.

    Cluster centers are i.i.d. uniform in [-center_scale, center_scale]^d
    (majority center first), points are center + N(0, spread^2) per
    coordinate. Rows are ordered majority first, then each rare cluster in
    turn; ``labels`` holds 0 for the majority and 1..n_rare for rare clusters.
    """
    rng = make_rng(spec.seed)
    centers = rng.uniform(
        -spec.center_scale, spec.center_scale, size=(spec.n_rare_clusters + 1, spec.dim)
    )
    labels = np.concatenate(
        [
            np.zeros(spec.n_majority, dtype=np.int64),
            np.repeat(
                np.arange(1, spec.n_rare_clusters + 1, dtype=np.int64),
                spec.points_per_rare_cluster,
            ),
        ]
    )
    noise = rng.normal(0.0, spec.cluster_spread, size=(spec.n_total, spec.dim))
    points = centers[labels] + noise
    logger.debug(
        "generated %d points in %d dims (%d rare clusters)",
        spec.n_total, spec.dim, spec.n_rare_clusters,
    )
    return DataSet(points=points, name=name, labels=labels)


def load_csv(path: PathLike, has_header: bool = False, name: Optional[str] = None) -> DataSet:
    """
    Load one point per row from a CSV file.

    Row numbers in errors are 1-based file line numbers. Blank lines are
    skipped. Cells must be plain decimal or scientific numbers without
    surrounding spaces or digit separators.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise DataFileError(f"cannot read file: {exc.strerror}", str(path)) from exc
    except UnicodeDecodeError as exc:
        raise DataFileError(f"not valid UTF-8 at byte {exc.start}: {exc.reason}", str(path)) from exc

    start = 1 if has_header else 0
    values = []
    width = None
    for line_no, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise RaggedRowError(line_no, width, len(row), str(path))
        parsed = []
        for col_no, cell in enumerate(row, start=1):
            if not _NUMERIC_CELL.fullmatch(cell):
                raise NonNumericCellError(line_no, col_no, cell, str(path))
            value = float(cell)
            if not math.isfinite(value):
                raise NonFiniteValueError(line_no, col_no, str(path))
            parsed.append(value)
        values.append(parsed)

    if not values:
        raise EmptyFileError("no data rows", str(path))
    logger.info("loaded %d points of dimension %d from %s", len(values), width, path)
    return DataSet(points=np.array(values), name=name or path.stem)


def write_csv(data: DataSet, path: PathLike) -> None:
    """Write points with 17 significant digits so that load_csv reproduces them exactly."""
    path = Path(path)
    try:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            for point in data.points:
                writer.writerow([f"{value:.17g}" for value in point])
    except OSError as exc:
        raise OutputError(f"{path}: cannot write CSV: {exc.strerror}") from exc


def validate_csv(path: PathLike, has_header: bool = False) -> Dict[str, Any]:
    """Load a CSV and summarize it; raises the same errors as load_csv."""
    data = load_csv(path, has_header=has_header)
    return {
        "name": data.name,
        "n": data.n,
        "dim": data.dim,
        "min": float(data.points.min()),
        "max": float(data.points.max()),
    }


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise DataFileError(f"cannot read file: {exc.strerror}", str(path)) from exc
    except UnicodeDecodeError as exc:
        raise SchemaError(f"not valid UTF-8 at byte {exc.start}: {exc.reason}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", str(path)) from exc


def write_json(document: Any, path: PathLike) -> None:
    path = Path(path)
    try:
        with open(path, "w") as handle:
            json.dump(document, handle, indent=2)
            handle.write("\n")
    except OSError as exc:
        raise OutputError(f"{path}: cannot write JSON: {exc.strerror}") from exc


def require(document: Dict[str, Any], key: str, kind=None) -> Any:
    """Fetch a required JSON field, raising SchemaError when absent or mistyped."""
    if not isinstance(document, dict) or key not in document:
        raise SchemaError(f"missing field {key!r}")
    value = document[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"field {key!r} has the wrong type")
    return value

