"""
Exhaustive search over all 2^m partitions.

The brute-force maximizer of a Taylor objective is the best any QAOA run on
the same m qubits could return, so it doubles as the bound reported by the
benchmark and as the oracle for the other modules.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .clustering import Partition, evaluate_on_full
from .coreset import WeightedPointSet
from .dataio import DataSet
from .errors import DimensionMismatchError, InvalidArgumentError
from .hamiltonian import TaylorOrder, format_order, parse_order, taylor_energy, taylor_energy_table

logger = logging.getLogger(__name__)

MAX_QUBITS = 28
# Largest m whose energy table is materialized (8 * 2^m bytes).
MAX_TABLE_QUBITS = 20
TIE_RTOL = 1e-9

_CHUNK = 1 << 14

EnergyFunction = Callable[[Partition], float]


def tie_tolerance(best: float) -> float:
    return TIE_RTOL * max(1.0, abs(best))


@dataclass(frozen=True)
class BruteForceResult:
    """Best energy and every partition attaining it (ascending index)."""

    best_energy: float
    maximizers: Tuple[Partition, ...]

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(part.index for part in self.maximizers)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best_energy": self.best_energy,
            "maximizers": [str(part) for part in self.maximizers],
        }


def _check_m(m: int) -> None:
    if m < 1:
        raise InvalidArgumentError(f"m must be at least 1, got {m}")
    if m > MAX_QUBITS:
        raise InvalidArgumentError(f"brute force is limited to m <= {MAX_QUBITS}, got {m}")


def _mirror(indices: List[int], m: int) -> List[int]:
    full = (1 << m) - 1
    return sorted(set(indices) | {index ^ full for index in indices})


def _scan_range(energy: EnergyFunction, m: int, start: int, stop: int) -> Tuple[float, List[int]]:
    values = np.fromiter(
        (energy(Partition.from_index(index, m)) for index in range(start, stop)),
        dtype=float, count=stop - start,
    )
    best = float(values.max())
    # twice the tie tolerance so that no chunk drops a global maximizer
    keep = np.flatnonzero(values >= best - 2.0 * tie_tolerance(best))
    return best, [start + int(i) for i in keep]


def brute_force_max(energy: EnergyFunction, m: int, symmetric: bool = False,
                    workers: int = 1) -> BruteForceResult:
    """
    Evaluate ``energy`` on every partition and return all maximizers.

    With ``symmetric`` the caller promises energy(p) == energy(complement(p));
    only partitions with the last bit 0 are evaluated and their complements
    are added back. Index ranges are scanned in parallel by ``workers``
    threads; the result does not depend on the thread count.
    """
    _check_m(m)
    space = 1 << (m - 1) if symmetric and m > 1 else 1 << m
    ranges = [(start, min(start + _CHUNK, space)) for start in range(0, space, _CHUNK)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda r: _scan_range(energy, m, *r), ranges))
    else:
        chunks = [_scan_range(energy, m, *r) for r in ranges]

    best = max(chunk_best for chunk_best, _ in chunks)
    tol = tie_tolerance(best)
    winners = [
        index for _, candidates in chunks for index in candidates
        if energy(Partition.from_index(index, m)) >= best - tol
    ]
    if symmetric and m > 1:
        winners = _mirror(winners, m)
    logger.debug("brute force over m=%d: best %.9g with %d maximizers", m, best, len(winners))
    return BruteForceResult(
        best_energy=best, maximizers=tuple(Partition.from_index(i, m) for i in sorted(winners))
    )


def brute_force_table(table: np.ndarray, symmetric: bool = False) -> BruteForceResult:
    """brute_force_max over a materialized energy table of length 2^m."""
    table = np.asarray(table, dtype=float)
    m = int(table.shape[0]).bit_length() - 1
    if table.ndim != 1 or table.shape[0] != 1 << m:
        raise DimensionMismatchError(f"energy table length {table.shape} is not a power of two")
    _check_m(m)
    view = table[: 1 << (m - 1)] if symmetric and m > 1 else table
    best = float(view.max())
    winners = [int(i) for i in np.flatnonzero(view >= best - tie_tolerance(best))]
    if symmetric and m > 1:
        winners = _mirror(winners, m)
    return BruteForceResult(
        best_energy=best, maximizers=tuple(Partition.from_index(i, m) for i in winners)
    )


@dataclass(frozen=True)
class BoundResult:
    """
    The brute-force optimum of a Taylor objective on a summary set.

    Attributes:
        partition: The maximizer with the lowest full-data cost
        coreset_energy: Objective value of ``partition``
        full_cost: Full-data cost of the centers ``partition`` induces
        order: Taylor order of the objective
        n_maximizers: Size of the tied maximizer set
        tie_broken: True when several maximizers had different full costs
    """

    partition: Partition
    coreset_energy: float
    full_cost: float
    order: TaylorOrder
    n_maximizers: int
    tie_broken: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "partition": str(self.partition),
            "coreset_energy": self.coreset_energy,
            "full_cost": self.full_cost,
            "order": format_order(self.order),
            "n_maximizers": self.n_maximizers,
            "tie_broken": self.tie_broken,
        }


def solve_order(pts: WeightedPointSet, order: TaylorOrder, workers: int = 1) -> BruteForceResult:
    """All maximizers of taylor_energy(pts, order, .)."""
    order = parse_order(order)
    _check_m(pts.m)
    if pts.m <= MAX_TABLE_QUBITS:
        return brute_force_table(taylor_energy_table(pts, order), symmetric=True)
    return brute_force_max(lambda part: taylor_energy(pts, order, part), pts.m,
                           symmetric=True, workers=workers)


def qaoa_bound(data: DataSet, pts: WeightedPointSet, order: TaylorOrder,
               workers: int = 1, solved: Optional[BruteForceResult] = None) -> BoundResult:
    """
    Best partition of the summary under the order-j objective, scored on the full data.

    Among tied maximizers the one with the lowest full-data cost is returned;
    remaining ties go to the lowest partition index.
    """
    order = parse_order(order)
    result = solved if solved is not None else solve_order(pts, order, workers)
    scored = [(evaluate_on_full(data, pts, part), part.index, part) for part in result.maximizers]
    scored.sort(key=lambda item: (item[0], item[1]))
    full_cost, _, part = scored[0]
    tie_broken = scored[-1][0] - full_cost > tie_tolerance(full_cost)
    logger.info(
        "order %s bound on m=%d: partition %s, full cost %.6g (%d maximizers)",
        format_order(order), pts.m, part, full_cost, len(scored),
    )
    return BoundResult(
        partition=part,
        coreset_energy=result.best_energy,
        full_cost=full_cost,
        order=order,
        n_maximizers=len(scored),
        tie_broken=tie_broken,
    )
