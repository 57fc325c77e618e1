"""2-means clustering on coresets, with brute-force and QAOA-style optimization."""

__version__ = "0.1.0"

from .clustering import ClusterModel, Partition, evaluate_on_full, lloyd_2means, weighted_cost
from .coreset import WeightedPointSet, build_coreset, uniform_sample
from .dataio import DataSet, SyntheticSpec, generate_synthetic, load_csv
from .errors import CoresetQaoaError
from .hamiltonian import IsingPolynomial, build_order0, build_order1, eval_polynomial, taylor_energy
from .solver import brute_force_max, qaoa_bound

__all__ = [
    "ClusterModel",
    "CoresetQaoaError",
    "DataSet",
    "IsingPolynomial",
    "Partition",
    "SyntheticSpec",
    "WeightedPointSet",
    "brute_force_max",
    "build_coreset",
    "build_order0",
    "build_order1",
    "eval_polynomial",
    "evaluate_on_full",
    "generate_synthetic",
    "lloyd_2means",
    "load_csv",
    "qaoa_bound",
    "taylor_energy",
    "uniform_sample",
    "weighted_cost",
]
