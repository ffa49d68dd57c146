"""Counter-keyed random substreams.

Every draw in a drop comes from a generator keyed on
``(seed, drop, purpose[, link])`` so results do not depend on evaluation
order or on how drops are split across workers.
"""
from __future__ import annotations

import numpy as np

DEPLOY = 0
LARGE_SCALE = 1
LINK = 2

_MASK64 = (1 << 64) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
