"""Counter-based random streams and the deterministic parallel-map contract.

Trajectory ``t`` of stream ``s`` under master seed ``seed`` always draws from
``Philox(SeedSequence(seed, spawn_key=(s, t)))``. Work is cut into blocks of
a fixed size that does not depend on the thread count, and block results are
concatenated in index order, so outputs are bit-identical for any
``threads``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

SEED_ENV = "LYAPLAB_SEED"
BLOCK = 1024

# stream tags
TOP = 0
BOTTOM = 1
FINITE_TIME = 2
STATIONARY = 3
STATIONARY_INV = 4
MARKOV_TOP = 5
MARKOV_BOTTOM = 6
PRESSURE = 7
CONCENTRATION = 8
DISORDER = 9
IDS = 10
PARTIAL_BASE = 100


def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else $LYAPLAB_SEED, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def generator(seed: int, index: int, stream: int = TOP) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def default_threads() -> int:
    return os.cpu_count() or 1


def block_map(fn, n_items: int, threads: int = 1, block: int = BLOCK) -> list:
    """Apply ``fn(lo, hi)`` to fixed-size index blocks; results in block order."""
    bounds = [(lo, min(lo + block, n_items)) for lo in range(0, n_items, block)]
    if threads <= 1 or len(bounds) <= 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
