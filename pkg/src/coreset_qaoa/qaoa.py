"""
Statevector simulation of depth-p QAOA on a diagonal Hamiltonian.

The problem layer multiplies each amplitude a_z by exp(-i gamma E(z)) using
the energy table directly; the mixer applies exp(-i beta X) to every qubit.
Basis index z carries qubit i in bit i, with bit 0 <-> Z = +1.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .clustering import Partition
from .dataio import require
from .errors import ComputationError, DimensionMismatchError, InvalidArgumentError, SchemaError
from .seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

MAX_QUBITS = 24
NORM_TOL = 1e-10
DEFAULT_DEPTH = 1
DEFAULT_RESTARTS = 20
DEFAULT_SHOTS = 8192
GAMMA_RANGE = math.pi
BETA_RANGE = math.pi / 2
# exp(-i beta X) on every qubit has period pi in beta up to a global phase.
BETA_PERIOD = math.pi


@dataclass(frozen=True)
class QaoaParams:
    """Angles (gamma_j, beta_j) for each of the p layers."""

    gammas: Tuple[float, ...]
    betas: Tuple[float, ...]

    def __post_init__(self):
        gammas = tuple(float(g) for g in self.gammas)
        betas = tuple(float(b) for b in self.betas)
        if len(gammas) != len(betas):
            raise InvalidArgumentError(f"{len(gammas)} gammas but {len(betas)} betas")
        if not gammas:
            raise InvalidArgumentError("QAOA depth p must be at least 1")
        if not all(math.isfinite(a) for a in gammas + betas):
            raise InvalidArgumentError("QAOA angles must be finite")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def zeros(cls, p: int) -> "QaoaParams":
        return cls((0.0,) * p, (0.0,) * p)

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> "QaoaParams":
        """Inverse of as_vector: gammas first, then betas."""
        vector = list(vector)
        half = len(vector) // 2
        if len(vector) != 2 * half:
            raise InvalidArgumentError("a parameter vector has even length 2p")
        return cls(tuple(vector[:half]), tuple(vector[half:]))

    def as_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)

    def reduced(self) -> "QaoaParams":
        """Betas mapped into [0, pi); gammas are left alone."""
        return QaoaParams(self.gammas, tuple(b % BETA_PERIOD for b in self.betas))

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "gammas": list(self.gammas), "betas": list(self.betas)}

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "QaoaParams":
        try:
            params = cls(tuple(require(document, "gammas", list)), tuple(require(document, "betas", list)))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"invalid QAOA parameters: {exc}") from exc
        if "p" in document and document["p"] != params.p:
            raise SchemaError(f"p={document['p']} does not match {params.p} angle pairs")
        return params


@dataclass(frozen=True, eq=False)
class StateVector:
    """2^m complex amplitudes of unit norm."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        m = amplitudes.shape[0].bit_length() - 1
        if amplitudes.shape[0] != 1 << m:
            raise DimensionMismatchError(f"{amplitudes.shape[0]} amplitudes is not a power of two")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ComputationError(f"state norm {norm:.17g} differs from 1")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def m(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @classmethod
    def basis(cls, index: int, m: int) -> "StateVector":
        amplitudes = np.zeros(1 << m, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes)

    @classmethod
    def uniform(cls, m: int) -> "StateVector":
        return cls(np.full(1 << m, 2.0 ** (-m / 2), dtype=complex))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mass_on(self, indices: Iterable[int]) -> float:
        return float(self.probabilities()[list(indices)].sum())


def _table_size(energy_table: np.ndarray) -> int:
    table = np.asarray(energy_table)
    m = table.shape[0].bit_length() - 1
    if table.ndim != 1 or table.shape[0] != 1 << m:
        raise DimensionMismatchError(f"energy table length {table.shape} is not a power of two")
    return m


def apply_mixer(amplitudes: np.ndarray, beta: float, m: int) -> np.ndarray:
    """exp(-i beta X_i) on each qubit i, in place."""
    c, s = math.cos(beta), -1j * math.sin(beta)
    for qubit in range(m):
        view = amplitudes.reshape(1 << (m - 1 - qubit), 2, 1 << qubit)
        zero = view[:, 0, :].copy()
        one = view[:, 1, :]
        view[:, 0, :] = c * zero + s * one
        view[:, 1, :] = s * zero + c * one
    return amplitudes


def prepare(energy_table: np.ndarray, params: QaoaParams) -> StateVector:
    """Evolve |+>^m through the p phase/mixer layers."""
    table = np.asarray(energy_table, dtype=float)
    m = _table_size(table)
    if m > MAX_QUBITS:
        raise InvalidArgumentError(f"statevector simulation is limited to m <= {MAX_QUBITS}, got {m}")
    amplitudes = np.full(1 << m, 2.0 ** (-m / 2), dtype=complex)
    for layer, (gamma, beta) in enumerate(zip(params.gammas, params.betas)):
        amplitudes *= np.exp(-1j * gamma * table)
        apply_mixer(amplitudes, beta, m)
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ComputationError(f"norm drifted to {norm:.17g} after layer {layer}")
    return StateVector(amplitudes)


def expectation(state: StateVector, energy_table: np.ndarray) -> float:
    """F = sum_z |a_z|^2 E(z)."""
    table = np.asarray(energy_table, dtype=float)
    if table.shape != state.amplitudes.shape:
        raise DimensionMismatchError(
            f"state has {state.amplitudes.shape[0]} amplitudes, table has {table.shape[0]} entries"
        )
    return float(np.dot(state.probabilities(), table))


def objective(energy_table: np.ndarray, params: QaoaParams) -> float:
    return expectation(prepare(energy_table, params), energy_table)


@dataclass(frozen=True)
class NelderMeadSettings:
    """Simplex search settings passed to scipy's Nelder-Mead."""

    initial_step: float = 0.1
    max_evaluations: int = 10_000
    xatol: float = 1e-6

    def __post_init__(self):
        if not self.initial_step > 0 or self.max_evaluations < 1 or not self.xatol > 0:
            raise InvalidArgumentError("Nelder-Mead settings must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial_step": self.initial_step,
            "max_evaluations": self.max_evaluations,
            "xatol": self.xatol,
        }


def start_points(p: int, restarts: int, seed: int) -> List[np.ndarray]:
    """
    Initial (gammas, betas) vectors for each restart.

    Even slots walk an unscrambled Halton sequence (origin skipped) over
    gamma in [0, pi), beta in [0, pi/2); odd slots are uniform random draws
    from a per-slot sub-seed. The first k starts never depend on ``restarts``.
    """
    if p < 1 or restarts < 1:
        raise InvalidArgumentError("p and restarts must be at least 1")
    n_grid = (restarts + 1) // 2
    halton = qmc.Halton(d=2 * p, scramble=False).random(n_grid + 1)[1:]
    scale = np.array([GAMMA_RANGE] * p + [BETA_RANGE] * p)
    starts = []
    for slot in range(restarts):
        if slot % 2 == 0:
            starts.append(halton[slot // 2] * scale)
        else:
            rng = make_rng(derive_seed(seed, "restart", slot))
            starts.append(rng.uniform(0.0, 1.0, size=2 * p) * scale)
    return starts


@dataclass
class OptimizeResult:
    """Best parameters over all restarts and per-restart outcomes."""

    params: QaoaParams
    f_value: float
    converged: bool
    evaluations: int
    restart_values: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "F": self.f_value,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "restart_values": self.restart_values,
        }


def _nelder_mead(table: np.ndarray, start: np.ndarray, settings: NelderMeadSettings):
    simplex = np.vstack([start, start + settings.initial_step * np.eye(start.shape[0])])
    return minimize(
        lambda x: -objective(table, QaoaParams.from_vector(x)),
        start,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxfev": settings.max_evaluations,
            "xatol": settings.xatol,
            "fatol": math.inf,
        },
    )


def energy_scale(energy_table: np.ndarray) -> Tuple[float, float]:
    """Mean of a table and its largest deviation from the mean (1 for constant tables)."""
    table = np.asarray(energy_table, dtype=float)
    mean = float(table.mean())
    spread = float(np.max(np.abs(table - mean)))
    return mean, spread if spread > 0 else 1.0


def optimize(energy_table: np.ndarray, p: int = DEFAULT_DEPTH, restarts: int = DEFAULT_RESTARTS,
             seed: int = 0, settings: Optional[NelderMeadSettings] = None,
             workers: int = 1, normalize: bool = True) -> OptimizeResult:
    """
    Maximize F over the 2p angles with multi-start Nelder-Mead.

    With ``normalize`` the search runs on (E - mean) / spread so that the
    gamma range [0, pi) matches the energy scale; the returned gammas and F
    values refer to the raw table again. Restarts run independently (in
    ``workers`` threads) and the best one wins, earliest slot first on ties.
    When that run hit the evaluation limit the result is still returned,
    flagged ``converged=False``.
    """
    settings = settings or NelderMeadSettings()
    raw = np.asarray(energy_table, dtype=float)
    _table_size(raw)
    mean, spread = energy_scale(raw) if normalize else (0.0, 1.0)
    table = (raw - mean) / spread
    starts = start_points(p, restarts, seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda s: _nelder_mead(table, s, settings), starts))
    else:
        runs = [_nelder_mead(table, start, settings) for start in starts]

    values = [float(-run.fun) * spread + mean for run in runs]
    for slot, (run, value) in enumerate(zip(runs, values)):
        logger.debug("restart %d: F=%.9g after %d evaluations", slot, value, run.nfev)
    best = int(np.argmax(values))
    run = runs[best]
    if not run.success:
        logger.warning("Nelder-Mead stopped without converging: %s", run.message)
    found = QaoaParams.from_vector(run.x)
    params = QaoaParams(tuple(g / spread for g in found.gammas), found.betas).reduced()
    logger.info("optimized p=%d QAOA over %d restarts: F=%.9g", p, restarts, values[best])
    return OptimizeResult(
        params=params,
        f_value=values[best],
        converged=bool(run.success),
        evaluations=int(sum(r.nfev for r in runs)),
        restart_values=values,
    )


def sample(state: StateVector, shots: int = DEFAULT_SHOTS, seed: int = 0) -> Dict[str, int]:
    """Multinomial shot counts keyed by partition string, zero counts omitted."""
    if shots < 1:
        raise InvalidArgumentError(f"shots must be at least 1, got {shots}")
    probabilities = state.probabilities()
    counts = make_rng(seed).multinomial(shots, probabilities / probabilities.sum())
    return {
        str(Partition.from_index(int(index), state.m)): int(counts[index])
        for index in np.flatnonzero(counts)
    }


def modal_partition(histogram: Dict[str, int]) -> Partition:
    """Most frequent outcome; ties go to the lowest index."""
    if not histogram:
        raise InvalidArgumentError("empty histogram")
    bits = max(histogram, key=lambda key: (histogram[key], -Partition(key).index))
    return Partition(bits)
