"""
Weighted summaries of a data set.

A bicriterion approximation (beta*k = 4 centers from D^2 sampling, best of
10 trials) bounds each point's sensitivity; points are then drawn with
replacement with probability p_i proportional to that bound and carry weight
1/(m p_i), so the weighted cost of any fixed pair of centers is an unbiased
estimate of the full-data cost. Uniform samples without replacement serve as
the baseline.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .dataio import DataSet, require
from .errors import DimensionMismatchError, InvalidArgumentError, SchemaError
from .seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

K = 2
BETA = 2
BICRITERION_CENTERS = BETA * K
BICRITERION_TRIALS = 10

METHOD_UNIFORM = "uniform"
METHOD_BLK17 = "coreset_blk17"
METHOD_BFL16 = "coreset_bfl16"
METHODS = (METHOD_UNIFORM, METHOD_BLK17, METHOD_BFL16)
VARIANTS = ("blk17", "bfl16")
DEFAULT_VARIANT = "bfl16"


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """
    An m-point weighted summary of a DataSet.

    Attributes:
        points: (m, d) array
        weights: (m,) positive weights, all source_n/m for a uniform sample
        source_n: Number of points in the originating data set
        method: One of METHODS
        seed: Seed the summary was drawn with
        indices: Row indices into the source data set, when known
    """

    points: np.ndarray
    weights: np.ndarray
    source_n: int
    method: str
    seed: int = 0
    indices: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if points.ndim != 2 or points.shape[0] < 2:
            raise InvalidArgumentError(
                f"a weighted point set needs m >= 2 points, got shape {points.shape}"
            )
        if weights.shape != (points.shape[0],):
            raise DimensionMismatchError(
                f"{points.shape[0]} points but {weights.shape[0] if weights.ndim else 0} weights"
            )
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("points must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise InvalidArgumentError("weights must be positive and finite")
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown summary method {self.method!r}")
        if self.method == METHOD_UNIFORM:
            expected = self.source_n / points.shape[0]
            if not np.allclose(weights, expected, rtol=1e-9, atol=0.0):
                raise InvalidArgumentError(
                    f"a uniform sample of {points.shape[0]} from {self.source_n} points "
                    f"must weight every point {expected:.6g}"
                )
        if self.indices is not None and len(self.indices) != points.shape[0]:
            raise DimensionMismatchError("indices must have one entry per point")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        if self.indices is not None:
            object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def point_weights(self) -> np.ndarray:
        return self.weights

    def to_dict(self) -> Dict[str, Any]:
        document = {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "source_n": self.source_n,
            "method": self.method,
            "seed": self.seed,
        }
        if self.indices is not None:
            document["indices"] = list(self.indices)
        return document

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "WeightedPointSet":
        try:
            return cls(
                points=np.array(require(document, "points", list), dtype=float),
                weights=np.array(require(document, "weights", list), dtype=float),
                source_n=int(require(document, "source_n", int)),
                method=require(document, "method", str),
                seed=int(document.get("seed", 0)),
                indices=document.get("indices"),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"invalid point set: {exc}") from exc


@dataclass(frozen=True, eq=False)
class Bicriterion:
    """A rough clustering with more than k centers and its cost on the source data."""

    centers: np.ndarray
    cost: float

    @property
    def n_centers(self) -> int:
        return int(self.centers.shape[0])


def _closest_sq_distances(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    distances = cdist(points, centers, metric="sqeuclidean")
    cells = np.argmin(distances, axis=1)
    return distances[np.arange(points.shape[0]), cells], cells


def d2_sample(data: DataSet, n_centers: int, seed: int) -> Bicriterion:
    """
    Pick centers by D^2 sampling (the k-means++ seeding step).

    The first center is uniform over the points; each further center is drawn
    with probability proportional to the squared distance to the nearest
    center chosen so far. When every remaining distance is zero the draw is
    uniform.
    """
    if n_centers < 1 or n_centers > data.n:
        raise InvalidArgumentError(f"n_centers must be in [1, {data.n}], got {n_centers}")
    rng = make_rng(seed)
    points = data.points
    chosen = [int(rng.integers(data.n))]
    closest = cdist(points, points[chosen[0]][None, :], metric="sqeuclidean")[:, 0]
    for _ in range(1, n_centers):
        total = closest.sum()
        if total > 0:
            index = int(rng.choice(data.n, p=closest / total))
        else:
            index = int(rng.integers(data.n))
        chosen.append(index)
        new = cdist(points, points[index][None, :], metric="sqeuclidean")[:, 0]
        closest = np.minimum(closest, new)
    return Bicriterion(centers=points[chosen].copy(), cost=float(closest.sum()))


def best_bicriterion(data: DataSet, trials: int = BICRITERION_TRIALS, seed: int = 0,
                     n_centers: int = BICRITERION_CENTERS) -> Bicriterion:
    """Return the lowest-cost result of ``trials`` independent D^2 samples."""
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    n_centers = min(n_centers, data.n)
    best = None
    for trial in range(trials):
        candidate = d2_sample(data, n_centers, derive_seed(seed, "bicriterion", trial))
        logger.debug("bicriterion trial %d cost %.6g", trial, candidate.cost)
        if best is None or candidate.cost < best.cost:
            best = candidate
    return best


def sensitivity_probabilities(data: DataSet, variant: str, bicriterion: Bicriterion) -> np.ndarray:
    """
    Importance probabilities p_i from a bicriterion-based sensitivity bound.

    With d_i the squared distance of x_i to its nearest bicriterion center,
    B_i that center's cell and c the mean bicriterion cost:

    - ``bfl16`` (Braverman, Feldman, Lang 2016, Algorithm 2):
      s_i = d_i/c + cost(B_i)/(|B_i| c) + n/|B_i|
    - ``blk17`` (Bachem, Lucic, Krause 2017, Algorithm 2), alpha = 16(log2 k + 2):
      s_i = alpha d_i/c + 2 alpha cost(B_i)/(|B_i| c) + 4n/|B_i|

    Both add the mean sensitivity as a floor so that p_i >= 1/(2n). Data with
    zero scatter gets uniform probabilities.
    """
    if variant not in VARIANTS:
        raise InvalidArgumentError(f"unknown coreset variant {variant!r}; expected one of {VARIANTS}")
    n = data.n
    closest, cells = _closest_sq_distances(data.points, bicriterion.centers)
    total_cost = closest.sum()
    if total_cost <= 0:
        logger.debug("zero-scatter data; using uniform sampling probabilities")
        return np.full(n, 1.0 / n)

    mean_cost = total_cost / n
    n_cells = bicriterion.n_centers
    cell_size = np.bincount(cells, minlength=n_cells).astype(float)
    cell_cost = np.bincount(cells, weights=closest, minlength=n_cells)
    own_size = cell_size[cells]
    own_cost = cell_cost[cells]

    if variant == "blk17":
        alpha = 16.0 * (math.log2(K) + 2.0)
        s = (alpha * closest / mean_cost
             + 2.0 * alpha * own_cost / (own_size * mean_cost)
             + 4.0 * n / own_size)
    else:
        s = closest / mean_cost + own_cost / (own_size * mean_cost) + n / own_size

    s = s + s.sum() / n
    p = s / s.sum()
    return p / p.sum()


def build_coreset(data: DataSet, m: int, variant: str = DEFAULT_VARIANT, seed: int = 0) -> WeightedPointSet:
    """Draw an m-point sensitivity-sampling coreset with inverse-probability weights."""
    if m < 2 or m > data.n:
        raise InvalidArgumentError(f"coreset size m must be in [2, {data.n}], got {m}")
    if variant not in VARIANTS:
        raise InvalidArgumentError(f"unknown coreset variant {variant!r}; expected one of {VARIANTS}")
    bicriterion = best_bicriterion(data, BICRITERION_TRIALS, derive_seed(seed, "bicriterion"))
    p = sensitivity_probabilities(data, variant, bicriterion)
    rng = make_rng(derive_seed(seed, "sample"))
    indices = rng.choice(data.n, size=m, replace=True, p=p)
    weights = 1.0 / (m * p[indices])
    logger.info(
        "built %s coreset: m=%d from n=%d, total weight %.6g",
        variant, m, data.n, weights.sum(),
    )
    return WeightedPointSet(
        points=data.points[indices],
        weights=weights,
        source_n=data.n,
        method=f"coreset_{variant}",
        seed=seed,
        indices=tuple(int(i) for i in indices),
    )


def uniform_sample(data: DataSet, m: int, seed: int = 0) -> WeightedPointSet:
    """Draw m points uniformly without replacement, each weighted n/m."""
    if m < 2 or m > data.n:
        raise InvalidArgumentError(f"sample size m must be in [2, {data.n}], got {m}")
    rng = make_rng(seed)
    indices = np.sort(rng.choice(data.n, size=m, replace=False))
    return WeightedPointSet(
        points=data.points[indices],
        weights=np.full(m, data.n / m),
        source_n=data.n,
        method=METHOD_UNIFORM,
        seed=seed,
        indices=tuple(int(i) for i in indices),
    )


def inclusion_probabilities(p: np.ndarray, m: int) -> np.ndarray:
    """Probability that each point appears at least once in m draws with replacement."""
    return -np.expm1(m * np.log1p(-np.clip(p, 0.0, 1.0 - 1e-16)))
