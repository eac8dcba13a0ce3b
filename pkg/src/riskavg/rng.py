"""Seeded, scheduling-invariant random substreams.

Every stream is a Philox (counter-based) generator keyed by the tuple
``(seed, stream, *indices)``, so a chunk or a grid row always sees the same
numbers no matter which worker evaluates it or in what order.
"""
from __future__ import annotations

import numpy as np

# Fixed stream identifiers; changing them changes every published number.
STREAM_MC = 1
STREAM_PRIOR = 2
STREAM_MIXTURE = 3
STREAM_BOOTSTRAP = 4
STREAM_TILTED = 5
STREAM_MISC = 9

MAX_SEED = 2**64 - 1


def substream(seed: int, stream: int, *indices: int) -> np.random.Generator:
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    key = [int(seed) & 0xFFFFFFFF, int(seed) >> 32, int(stream), *map(int, indices)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
