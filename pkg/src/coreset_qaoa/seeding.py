"""
Reproducible random number streams.

All randomness goes through numpy's PCG64 bit generator
(``numpy.random.default_rng``); Gaussian variates come from numpy's ziggurat
``standard_normal``. A master seed is split into independent sub-seeds with
``derive_seed``, which feeds the master seed and a tuple of keys into
``numpy.random.SeedSequence`` (strings are mapped to integers with CRC-32)
and returns the first 64-bit word of the generated state.
"""

import zlib
from typing import Union

import numpy as np

SeedKey = Union[int, str]


def _key_to_int(key: SeedKey) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    value = int(key)
    if value < 0:
        raise ValueError(f"seed keys must be non-negative, got {value}")
    return value


def derive_seed(master: int, *keys: SeedKey) -> int:
    """Return a 64-bit sub-seed for ``keys`` under ``master``."""
    sequence = np.random.SeedSequence(
        entropy=_key_to_int(master), spawn_key=tuple(_key_to_int(k) for k in keys)
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    """Return a PCG64 generator for ``seed``."""
    return np.random.default_rng(_key_to_int(seed))
