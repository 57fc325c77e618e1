"""Shared fixtures for unit and integration tests."""

from pathlib import Path

import numpy as np
import pytest

from coreset_qaoa.coreset import WeightedPointSet
from coreset_qaoa.dataio import DataSet, SyntheticSpec, generate_synthetic

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def random_point_set(seed: int, m: int, dim: int, centered: bool = True) -> WeightedPointSet:
    """Random weighted points; centered on the weighted mean unless asked otherwise."""
    rng = np.random.default_rng(seed)
    points = rng.normal(0.0, 3.0, size=(m, dim))
    weights = rng.uniform(0.5, 2.0, size=m)
    if centered:
        points = points - np.average(points, axis=0, weights=weights)
    return WeightedPointSet(points=points, weights=weights, source_n=m, method="coreset_bfl16", seed=seed)


def as_data(pts: WeightedPointSet) -> DataSet:
    return DataSet(points=pts.points, name="summary")


@pytest.fixture
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture
def two_blobs_csv() -> Path:
    return FIXTURES / "two_blobs.csv"


@pytest.fixture
def imbalanced_csv() -> Path:
    """Three-dimensional fixture with a header row and two small clusters."""
    return FIXTURES / "imbalanced_3d.csv"


@pytest.fixture
def separated_pairs() -> WeightedPointSet:
    """Two tight pairs far apart, unit weights, centered on the origin."""
    return WeightedPointSet(
        points=[[-10.0, 0.0], [-9.0, 0.0], [9.0, 0.0], [10.0, 0.0]],
        weights=[1.0, 1.0, 1.0, 1.0],
        source_n=4,
        method="uniform",
    )


@pytest.fixture
def antipodal() -> WeightedPointSet:
    return WeightedPointSet(
        points=[[1.0, 0.0], [-1.0, 0.0]], weights=[1.0, 1.0], source_n=2, method="uniform"
    )


@pytest.fixture(scope="session")
def desk_synthetic() -> DataSet:
    """The default desk-scale rare-cluster data set."""
    return generate_synthetic(SyntheticSpec())


@pytest.fixture(scope="session")
def small_synthetic() -> DataSet:
    """200 points: 180 in the majority cluster, 4 rare clusters of 5."""
    return generate_synthetic(
        SyntheticSpec(n_total=200, dim=4, n_rare_clusters=4, points_per_rare_cluster=5, seed=3)
    )
