"""Per-replication random streams.

Replication ``r`` gets a 64-bit seed hashed from ``(master_seed, r)`` by
``SeedSequence(master_seed, spawn_key=(r,))``; that seed is the key of a
Philox (counter-based) generator.  A replication's draws therefore do not
depend on which worker runs it or in what order.  Uniforms are the
generator's 53-bit doubles; normals are obtained by inverse CDF.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import ndtri

GENERATOR_NAME = "numpy Philox4x64 keyed by SeedSequence(master_seed, spawn_key=(replication,)); inverse-CDF normals"

_HALF_ULP = 2.0**-54


def rep_seed(master_seed: int, rep: int) -> int:
    """64-bit seed for replication ``rep``."""
    if master_seed < 0 or rep < 0:
        raise ValueError("seeds and replication indices must be non-negative")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(rep),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    """Philox generator whose key is the 64-bit ``seed``; counter starts at zero."""
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def open_uniform(gen: np.random.Generator, size) -> NDArray[np.float64]:
    """Uniform(0, 1) excluding both endpoints (``k/2^53 + 2^-54``)."""
    return gen.random(size) + _HALF_ULP


def uniform(gen: np.random.Generator, low: float, high: float, size) -> NDArray[np.float64]:
    return low + (high - low) * gen.random(size)


def std_normal(gen: np.random.Generator, size) -> NDArray[np.float64]:
    return ndtri(open_uniform(gen, size))
