"""
Weighted 2-means.

Conventions used throughout the package: a Partition is a bit string over the
m summary points; bit i = 0 puts point i in S_{-1} (spin Z_i = +1) and bit i = 1
puts it in S_{+1} (spin Z_i = -1). The basis index of a partition is
sum_i bit_i * 2^i.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from .coreset import WeightedPointSet
from .dataio import DataSet
from .errors import ComputationError, DimensionMismatchError, InvalidArgumentError
from .seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 10
DEFAULT_MAX_ITERS = 300
DEFAULT_REL_TOL = 1e-4

# Slack for floating-point noise when checking Lloyd monotonicity.
_MONOTONE_SLACK = 1e-9

PointsLike = Union[WeightedPointSet, DataSet]


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """The two centers mu_{-1} and mu_{+1}."""

    mu_minus: np.ndarray
    mu_plus: np.ndarray

    def __post_init__(self):
        mu_minus = np.array(self.mu_minus, dtype=float).reshape(-1)
        mu_plus = np.array(self.mu_plus, dtype=float).reshape(-1)
        if mu_minus.shape != mu_plus.shape:
            raise DimensionMismatchError("both centers must have the same dimension")
        if not (np.all(np.isfinite(mu_minus)) and np.all(np.isfinite(mu_plus))):
            raise InvalidArgumentError("cluster centers must be finite")
        object.__setattr__(self, "mu_minus", mu_minus)
        object.__setattr__(self, "mu_plus", mu_plus)

    @property
    def dim(self) -> int:
        return int(self.mu_minus.shape[0])

    def centers(self) -> np.ndarray:
        return np.vstack([self.mu_minus, self.mu_plus])

    def to_dict(self):
        return {"mu_minus": self.mu_minus.tolist(), "mu_plus": self.mu_plus.tolist()}


@dataclass(frozen=True)
class Partition:
    """An assignment of m summary points to S_{-1} (bit 0) and S_{+1} (bit 1)."""

    bits: str

    def __post_init__(self):
        if not self.bits or set(self.bits) - {"0", "1"}:
            raise InvalidArgumentError(f"a partition is a non-empty 0/1 string, got {self.bits!r}")

    @classmethod
    def from_index(cls, index: int, m: int) -> "Partition":
        if index < 0 or index >= 1 << m:
            raise InvalidArgumentError(f"index {index} out of range for m={m}")
        return cls("".join("1" if (index >> i) & 1 else "0" for i in range(m)))

    @classmethod
    def from_mask(cls, plus: np.ndarray) -> "Partition":
        return cls("".join("1" if b else "0" for b in plus))

    @property
    def m(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        return sum(1 << i for i, b in enumerate(self.bits) if b == "1")

    def plus_mask(self) -> np.ndarray:
        """Boolean mask of the points in S_{+1}."""
        return np.array([b == "1" for b in self.bits], dtype=bool)

    def spins(self) -> np.ndarray:
        """Z_i = +1 for bit 0, -1 for bit 1."""
        return 1.0 - 2.0 * self.plus_mask()

    def complement(self) -> "Partition":
        return Partition("".join("1" if b == "0" else "0" for b in self.bits))

    def __str__(self) -> str:
        return self.bits


def all_partitions(m: int) -> List[Partition]:
    return [Partition.from_index(index, m) for index in range(1 << m)]


def _check_dims(pts: PointsLike, model: ClusterModel) -> None:
    if pts.dim != model.dim:
        raise DimensionMismatchError(
            f"points have dimension {pts.dim} but centers have dimension {model.dim}"
        )


def _sq_distances(points: np.ndarray, model: ClusterModel) -> np.ndarray:
    return cdist(points, model.centers(), metric="sqeuclidean")


def weighted_cost(pts: PointsLike, model: ClusterModel) -> float:
    """Sum of w_i times the squared distance from x_i to its closer center."""
    _check_dims(pts, model)
    distances = _sq_distances(pts.points, model)
    return float(np.dot(pts.point_weights(), distances.min(axis=1)))


def centroids_of(pts: WeightedPointSet, part: Partition) -> ClusterModel:
    """
    Weighted means of each side of the partition.

    If one side is empty both centers are the weighted mean of the other side.
    """
    if part.m != pts.m:
        raise DimensionMismatchError(f"partition has {part.m} bits for {pts.m} points")
    weights = pts.point_weights()
    plus = part.plus_mask()
    minus = ~plus
    if not plus.any() or not minus.any():
        center = np.average(pts.points, axis=0, weights=weights)
        return ClusterModel(center, center)
    mu_minus = np.average(pts.points[minus], axis=0, weights=weights[minus])
    mu_plus = np.average(pts.points[plus], axis=0, weights=weights[plus])
    return ClusterModel(mu_minus, mu_plus)


def partition_cost(pts: WeightedPointSet, part: Partition) -> float:
    """Weighted squared distance of each point to the centroid of its own side."""
    model = centroids_of(pts, part)
    plus = part.plus_mask()
    own = np.where(plus[:, None], model.mu_plus, model.mu_minus)
    deltas = pts.points - own
    return float(np.dot(pts.point_weights(), np.einsum("ij,ij->i", deltas, deltas)))


def evaluate_on_full(data: DataSet, pts: WeightedPointSet, part: Partition) -> float:
    """Cost on the unit-weight full data set of the centers recovered from a summary partition."""
    if data.dim != pts.dim:
        raise DimensionMismatchError(
            f"data has dimension {data.dim} but the summary has dimension {pts.dim}"
        )
    model = centroids_of(pts, part)
    distances = _sq_distances(data.points, model)
    return float(distances.min(axis=1).sum())


def kmeans_pp_seed(points: np.ndarray, weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Weighted k-means++ seeding for two centers.

    The first center is drawn with probability proportional to w_i, the
    second proportional to w_i * d^2(x_i, first center).
    """
    n = points.shape[0]
    first = int(rng.choice(n, p=weights / weights.sum()))
    mass = weights * cdist(points, points[first][None, :], metric="sqeuclidean")[:, 0]
    total = mass.sum()
    if total > 0:
        second = int(rng.choice(n, p=mass / total))
    else:
        second = int(rng.choice(n, p=weights / weights.sum()))
    return points[[first, second]].copy()


@dataclass
class LloydResult:
    """Outcome of best-of-trials weighted Lloyd iteration."""

    model: ClusterModel
    cost: float
    iterations: int
    seed: int
    history: List[float] = field(default_factory=list)

    def to_dict(self):
        return {
            "centers": self.model.to_dict(),
            "cost": self.cost,
            "iterations": self.iterations,
            "seed": self.seed,
        }


def _assign(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    distances = cdist(points, centers, metric="sqeuclidean")
    # ties go to S_{-1}
    plus = distances[:, 1] < distances[:, 0]
    return plus, np.where(plus, distances[:, 1], distances[:, 0])


def _lloyd_run(points: np.ndarray, weights: np.ndarray, max_iters: int, rel_tol: float,
               rng: np.random.Generator) -> Tuple[np.ndarray, float, int, List[float]]:
    centers = kmeans_pp_seed(points, weights, rng)
    history: List[float] = []
    iteration = 0
    while True:
        plus, closest = _assign(points, centers)
        cost = float(np.dot(weights, closest))
        if history and cost > history[-1] * (1 + _MONOTONE_SLACK) + _MONOTONE_SLACK:
            raise ComputationError(
                f"Lloyd cost increased from {history[-1]:.17g} to {cost:.17g}"
            )
        history.append(cost)
        if len(history) > 1 and abs(history[-2] - cost) <= rel_tol * history[-2]:
            break
        if iteration >= max_iters:
            break
        iteration += 1

        new_centers = centers.copy()
        for side, mask in ((0, ~plus), (1, plus)):
            if mask.any():
                new_centers[side] = np.average(points[mask], axis=0, weights=weights[mask])
        for side, mask in ((0, ~plus), (1, plus)):
            if not mask.any():
                survivor = new_centers[1 - side]
                spread = weights * cdist(points, survivor[None, :], metric="sqeuclidean")[:, 0]
                new_centers[side] = points[int(np.argmax(spread))]
                logger.debug("empty cluster reseeded at iteration %d", iteration)
        centers = new_centers
    return centers, history[-1], iteration, history


def lloyd_2means(pts: PointsLike, trials: int = DEFAULT_TRIALS, max_iters: int = DEFAULT_MAX_ITERS,
                 rel_tol: float = DEFAULT_REL_TOL, seed: int = 0) -> LloydResult:
    """
    Best-of-trials weighted 2-means.

    Each run seeds with weighted k-means++ and then alternates assignment and
    weighted-mean updates until ``max_iters`` updates were made or the cost
    changes by at most ``rel_tol`` relative to the previous cost.
    """
    if pts is None or pts.points.shape[0] == 0:
        raise InvalidArgumentError("lloyd_2means needs at least one point")
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    points = pts.points
    weights = np.asarray(pts.point_weights(), dtype=float)

    best = None
    for trial in range(trials):
        rng = make_rng(derive_seed(seed, "lloyd", trial))
        centers, cost, iterations, history = _lloyd_run(points, weights, max_iters, rel_tol, rng)
        logger.debug("lloyd trial %d: cost %.6g after %d iterations", trial, cost, iterations)
        if best is None or cost < best[1]:
            best = (centers, cost, iterations, history)

    centers, _, iterations, history = best
    model = ClusterModel(centers[0], centers[1])
    cost = weighted_cost(pts, model)
    logger.info("2-means on %d points: cost %.6g", points.shape[0], cost)
    return LloydResult(model=model, cost=cost, iterations=iterations, seed=seed, history=history)
