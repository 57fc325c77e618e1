"""
Diagonal objectives for weighted 2-means on a summary set.

Maximizing the weighted inter-cluster distance W_{+1} W_{-1} |mu_{+1} - mu_{-1}|^2
over partitions is the same as minimizing the weighted 2-means cost. Writing
it in terms of G_ij = w_i w_j x_i.x_j:

    r_minus * |sum_{S-} w x|^2 + r_plus * |sum_{S+} w x|^2 - 2 sum_{i in S-, j in S+} G_ij

with r_minus = W_{+1}/W_{-1} = 1/x - 1 at x = W_{-1}/W (and r_plus likewise at
x = W_{+1}/W). A Taylor order j replaces 1/x by its order-j expansion around
x = 1/2, T_j(x) = sum_{t<=j} (-1)^t 2^(t+1) (x - 1/2)^t. Order 0 assumes equal
cluster weights, order 1 is still quadratic in the spins, order inf is exact.

Spins follow the package convention: bit 0 <-> Z = +1 <-> S_{-1}.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from .clustering import Partition, centroids_of, partition_cost
from .coreset import WeightedPointSet
from .dataio import require
from .errors import DimensionMismatchError, InvalidArgumentError, SchemaError

logger = logging.getLogger(__name__)

TaylorOrder = Union[int, float]
INFINITE_ORDER = math.inf

# Dimension from which dot products switch to numpy's pairwise summation.
PAIRWISE_MIN_DIM = 1024

# Qubits enumerated densely inside each Gray-code step.
GRAY_BLOCK_BITS = 10

Support = Tuple[int, ...]


def parse_order(value: Any) -> TaylorOrder:
    """Accept 0, 1, 2, ..., or inf (``"inf"``, ``"∞"``, ``math.inf``)."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "∞"):
            return INFINITE_ORDER
        try:
            value = int(text)
        except ValueError:
            raise InvalidArgumentError(f"invalid Taylor order {value!r}") from None
    if isinstance(value, float) and math.isinf(value) and value > 0:
        return INFINITE_ORDER
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= 0:
        return int(value)
    if isinstance(value, float) and value.is_integer() and value >= 0:
        return int(value)
    raise InvalidArgumentError(f"invalid Taylor order {value!r}")


def format_order(order: TaylorOrder) -> str:
    return "inf" if order == INFINITE_ORDER else str(int(order))


@dataclass(frozen=True)
class IsingPolynomial:
    """
    A diagonal Hamiltonian: offset + sum_k coeff_k * prod_{i in support_k} Z_i.

    Supports are sorted tuples of distinct qubit indices below m, unique
    across terms; zero coefficients are never stored.
    """

    m: int
    terms: Tuple[Tuple[float, Support], ...] = ()
    offset: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise InvalidArgumentError(f"a polynomial needs m >= 1 qubits, got {self.m}")
        seen = set()
        for coeff, support in self.terms:
            if coeff == 0:
                raise InvalidArgumentError("zero coefficients are not stored")
            if tuple(sorted(set(support))) != tuple(support) or not support:
                raise InvalidArgumentError(f"support {support} must be sorted, distinct and non-empty")
            if support[-1] >= self.m or support[0] < 0:
                raise InvalidArgumentError(f"support {support} out of range for m={self.m}")
            if support in seen:
                raise InvalidArgumentError(f"duplicate support {support}")
            seen.add(support)

    @classmethod
    def from_terms(cls, m: int, terms: Iterable[Tuple[float, Sequence[int]]],
                   offset: float = 0.0) -> "IsingPolynomial":
        """
        Canonicalize arbitrary products of spins.

        Repeated indices cancel (Z_i Z_i = 1), empty products fold into the
        offset and equal supports are merged.
        """
        merged: Dict[Support, float] = defaultdict(float)
        for coeff, indices in terms:
            parity = defaultdict(int)
            for index in indices:
                parity[int(index)] ^= 1
            support = tuple(sorted(i for i, odd in parity.items() if odd))
            if support:
                merged[support] += float(coeff)
            else:
                offset += float(coeff)
        canonical = tuple(
            (coeff, support) for support, coeff in sorted(merged.items(), key=lambda kv: (len(kv[0]), kv[0]))
            if coeff != 0
        )
        return cls(m=m, terms=canonical, offset=float(offset))

    @property
    def degree(self) -> int:
        return max((len(support) for _, support in self.terms), default=0)

    def is_quadratic(self) -> bool:
        return self.degree <= 2

    def linear_terms(self) -> Dict[int, float]:
        return {support[0]: coeff for coeff, support in self.terms if len(support) == 1}

    def quadratic_terms(self) -> Dict[Tuple[int, int], float]:
        return {support: coeff for coeff, support in self.terms if len(support) == 2}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "offset": self.offset,
            "terms": [{"coeff": coeff, "support": list(support)} for coeff, support in self.terms],
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "IsingPolynomial":
        try:
            m = int(require(document, "m", int))
            terms = [
                (float(require(term, "coeff", (int, float))), [int(i) for i in require(term, "support", list)])
                for term in require(document, "terms", list)
            ]
            return cls.from_terms(m, terms, float(document.get("offset", 0.0)))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"invalid polynomial: {exc}") from exc


@dataclass(frozen=True)
class ClusterWeights:
    """W_{-1}, W_{+1} and their sum W for one partition."""

    w_minus: float
    w_plus: float

    @property
    def total(self) -> float:
        return self.w_minus + self.w_plus


class ScatterParts(NamedTuple):
    scatter: float
    t1: float
    t3: float


def cluster_weights(pts: WeightedPointSet, part: Partition) -> ClusterWeights:
    _check_partition(pts, part)
    plus = part.plus_mask()
    return ClusterWeights(
        w_minus=float(pts.weights[~plus].sum()), w_plus=float(pts.weights[plus].sum())
    )


def _check_partition(pts: WeightedPointSet, part: Partition) -> None:
    if part.m != pts.m:
        raise DimensionMismatchError(f"partition has {part.m} bits for {pts.m} points")


def _gram(vectors: np.ndarray) -> np.ndarray:
    if vectors.shape[1] >= PAIRWISE_MIN_DIM:
        return np.sum(vectors[:, None, :] * vectors[None, :, :], axis=-1)
    return vectors @ vectors.T


def weighted_gram(pts: WeightedPointSet, centered: bool = False) -> np.ndarray:
    """G_ij = w_i w_j x_i.x_j, optionally after moving the weighted centroid to the origin."""
    points = pts.points
    if centered:
        points = points - np.average(points, axis=0, weights=pts.weights)
    return _gram(pts.weights[:, None] * points)


def taylor_inverse(x, order: TaylorOrder):
    """T_j(x), the order-j Taylor polynomial of 1/x around x = 1/2 (order inf is 1/x)."""
    order = parse_order(order)
    x = np.asarray(x, dtype=float)
    if order == INFINITE_ORDER:
        return 1.0 / x
    u = x - 0.5
    result = np.zeros_like(x)
    for t in range(int(order), -1, -1):
        result = result * u + (-1) ** t * 2.0 ** (t + 1)
    return result


def build_order0(pts: WeightedPointSet) -> IsingPolynomial:
    """H = sum_{i<j} w_i w_j x_i.x_j Z_i Z_j (equal cluster weights)."""
    if pts.m < 2:
        raise InvalidArgumentError("build_order0 needs m >= 2")
    gram = weighted_gram(pts)
    terms = [(gram[i, j], (i, j)) for i in range(pts.m) for j in range(i + 1, pts.m)]
    return IsingPolynomial.from_terms(pts.m, terms)


def build_order1(pts: WeightedPointSet) -> IsingPolynomial:
    """
    First-order expansion in canonical form.

    Expands
        sum_i (1 - (2 Z_i / W) sum_l w_l Z_l) G_ii
      + 2 sum_{i<j} (Z_i Z_j - ((Z_i + Z_j) / W) sum_l w_l Z_l) G_ij
    folding Z_l^2 = 1 into the offset and linear terms.
    """
    m = pts.m
    if m < 2:
        raise InvalidArgumentError("build_order1 needs m >= 2")
    gram = weighted_gram(pts)
    w = pts.weights
    scale = 2.0 / pts.total_weight
    terms: List[Tuple[float, Tuple[int, ...]]] = []
    for i in range(m):
        terms.append((gram[i, i], ()))
        for l in range(m):
            terms.append((-scale * gram[i, i] * w[l], (i, l)))
    for i in range(m):
        for j in range(i + 1, m):
            terms.append((2.0 * gram[i, j], (i, j)))
            for l in range(m):
                terms.append((-scale * gram[i, j] * w[l], (i, l)))
                terms.append((-scale * gram[i, j] * w[l], (j, l)))
    poly = IsingPolynomial.from_terms(m, terms)
    logger.debug("order-1 polynomial: %d terms, offset %.6g", len(poly.terms), poly.offset)
    return poly


def _ratio_factors(w_minus, w_plus, order: TaylorOrder):
    total = w_minus + w_plus
    return taylor_inverse(w_minus / total, order) - 1.0, taylor_inverse(w_plus / total, order) - 1.0


def taylor_energy(pts: WeightedPointSet, order: TaylorOrder, part: Partition) -> float:
    """
    The order-j objective for one partition.

    Order inf is W_{+1} W_{-1} |mu_{+1} - mu_{-1}|^2 exactly, and 0 when either
    side is empty.
    """
    order = parse_order(order)
    _check_partition(pts, part)
    weights = cluster_weights(pts, part)
    if order == INFINITE_ORDER:
        if weights.w_minus == 0 or weights.w_plus == 0:
            return 0.0
        model = centroids_of(pts, part)
        diff = model.mu_plus - model.mu_minus
        return float(weights.w_minus * weights.w_plus * np.dot(diff, diff))

    plus = part.plus_mask()
    minus = ~plus
    gram = weighted_gram(pts)
    a2 = gram[np.ix_(minus, minus)].sum()
    b2 = gram[np.ix_(plus, plus)].sum()
    cross = gram[np.ix_(minus, plus)].sum()
    r_minus, r_plus = _ratio_factors(weights.w_minus, weights.w_plus, order)
    return float(r_minus * a2 + r_plus * b2 - 2.0 * cross)


def bit_matrix(m: int) -> np.ndarray:
    """(2^m, m) array whose row z holds the bits of index z (bit i in column i)."""
    indices = np.arange(1 << m, dtype=np.int64)
    return ((indices[:, None] >> np.arange(m, dtype=np.int64)) & 1).astype(np.int8)


def spin_matrix(m: int) -> np.ndarray:
    """(2^m, m) array of spins Z = 1 - 2 * bit."""
    return 1.0 - 2.0 * bit_matrix(m)


def taylor_energy_table(pts: WeightedPointSet, order: TaylorOrder) -> np.ndarray:
    """taylor_energy for every partition index at once."""
    order = parse_order(order)
    m = pts.m
    plus = bit_matrix(m).astype(float)
    minus = 1.0 - plus
    # order inf is translation invariant, so center for accuracy
    gram = weighted_gram(pts, centered=order == INFINITE_ORDER)
    minus_gram = minus @ gram
    a2 = np.einsum("zi,zi->z", minus_gram, minus)
    cross = np.einsum("zi,zi->z", minus_gram, plus)
    b2 = np.einsum("zi,zi->z", plus @ gram, plus)
    w_minus = minus @ pts.weights
    w_plus = pts.total_weight - w_minus
    if order == INFINITE_ORDER:
        table = np.zeros(1 << m)
        both = (w_minus > 0) & (w_plus > 0)
        table[both] = (
            w_plus[both] / w_minus[both] * a2[both]
            + w_minus[both] / w_plus[both] * b2[both]
            - 2.0 * cross[both]
        )
        return table
    r_minus, r_plus = _ratio_factors(w_minus, w_plus, order)
    return r_minus * a2 + r_plus * b2 - 2.0 * cross


def eval_polynomial(h: IsingPolynomial, part: Partition) -> float:
    """offset + sum coeff * prod Z_i, with Z_i = +1 for bit 0 and -1 for bit 1."""
    if part.m != h.m:
        raise DimensionMismatchError(f"partition has {part.m} bits for a {h.m}-qubit polynomial")
    spins = part.spins()
    value = h.offset
    for coeff, support in h.terms:
        value += coeff * np.prod(spins[list(support)])
    return float(value)


def polynomial_energy_table(h: IsingPolynomial) -> np.ndarray:
    """
    Energies of every basis index.

    The low qubits are enumerated densely; the remaining qubits are walked in
    Gray-code order so that each step only flips the sign of the terms that
    touch the flipped qubit.
    """
    m = h.m
    low = min(m, GRAY_BLOCK_BITS)
    block = 1 << low
    low_spins = spin_matrix(low)

    values = np.empty((len(h.terms), block))
    touching: Dict[int, List[int]] = defaultdict(list)
    for t, (coeff, support) in enumerate(h.terms):
        row = np.full(block, coeff)
        for index in support:
            if index < low:
                row = row * low_spins[:, index]
            else:
                touching[index].append(t)
        values[t] = row

    table = np.empty(1 << m)
    energies = h.offset + values.sum(axis=0)
    table[:block] = energies
    for step in range(1, 1 << (m - low)):
        flipped = low + (step & -step).bit_length() - 1
        gray = step ^ (step >> 1)
        rows = touching.get(flipped)
        if rows:
            energies = energies - 2.0 * values[rows].sum(axis=0)
            values[rows] *= -1.0
        table[gray * block:(gray + 1) * block] = energies
    return table


def scatter_decomposition(pts: WeightedPointSet, part: Partition) -> ScatterParts:
    """
    Split the weighted scatter into within-cluster cost T1 and between-cluster T3.

    scatter = sum_i w_i |x_i - mu|^2 = T1 + T3 with
    T3 = (W_{-1} W_{+1} / W) |mu_{-1} - mu_{+1}|^2; the cross term vanishes.
    """
    _check_partition(pts, part)
    center = np.average(pts.points, axis=0, weights=pts.weights)
    deltas = pts.points - center
    scatter = float(np.dot(pts.weights, np.einsum("ij,ij->i", deltas, deltas)))
    t1 = partition_cost(pts, part)
    weights = cluster_weights(pts, part)
    if weights.w_minus == 0 or weights.w_plus == 0:
        t3 = 0.0
    else:
        model = centroids_of(pts, part)
        diff = model.mu_minus - model.mu_plus
        t3 = float(weights.w_minus * weights.w_plus / weights.total * np.dot(diff, diff))
    return ScatterParts(scatter=scatter, t1=t1, t3=t3)


def maxcut_edges(pts: WeightedPointSet) -> List[Tuple[int, int, float]]:
    """Edges (i, j, -w_i w_j x_i.x_j) of the complete MAX-CUT graph."""
    gram = weighted_gram(pts)
    return [(i, j, float(-gram[i, j])) for i in range(pts.m) for j in range(i + 1, pts.m)]


def cut_weight(pts: WeightedPointSet, part: Partition) -> float:
    """Total edge weight crossing the cut: sum_{i in S-, j in S+} -w_i w_j x_i.x_j."""
    _check_partition(pts, part)
    plus = part.plus_mask()
    gram = weighted_gram(pts)
    return float(-gram[np.ix_(~plus, plus)].sum())
