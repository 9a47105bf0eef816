"""Counter-based random streams keyed by (seed, tag, ...)."""

import zlib

import numpy as np


def _word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def stream(seed: int, *key) -> np.random.Generator:
    """Independent Philox generator for ``key``; same inputs give the same stream."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**63 - 1), spawn_key=tuple(_word(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
