"""Keyed RNG streams for reproducible, resumable randomness.

Every stochastic consumer derives its generator from (root seed, purpose,
*indices) through numpy's SeedSequence spawn keys.  Streams are therefore
independent of execution order: re-deriving the stream for (epoch, step)
after resuming from a checkpoint replays exactly the draws the
uninterrupted run would have made.
"""

from __future__ import annotations

import numpy as np

# Purpose tags (stable; values are part of the reproducibility contract).
INIT = 1
DROPOUT = 2
ZETA = 3
SAMPLER = 4
SHUFFLE = 5
GENERATE = 6
AIS = 7
EVAL = 8


def stream(root_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
