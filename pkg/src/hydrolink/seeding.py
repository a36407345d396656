"""Counter-style random stream derivation.

Every random draw is keyed by ``(seed, stream, *counters)`` so results do not
depend on the order in which channels or trials are generated.
"""

from __future__ import annotations

import numpy as np

NOISE_STREAM = 1
BITS_STREAM = 2


def derive_rng(seed: int, stream: int, *counters: int) -> np.random.Generator:
    if seed < 0 or any(c < 0 for c in counters):
        raise ValueError("seed and counters must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), *map(int, counters)))
    return np.random.Generator(np.random.Philox(ss))
