"""Counter-based SplitMix64 streams.

Draw ``c`` of the stream with key ``key`` is ``mix(key + (c + 1) * GOLDEN)``,
so any draw can be computed without touching the others. Replication ``r``
of a run seeded with ``master`` uses key ``split_seed(master, r)``. The
compiled kernels implement the same arithmetic bit for bit.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def split_seed(master: int, index):
    """Per-replication stream key(s) derived by hashing ``(master, index)``."""
    base = mix64(np.array([master & _MASK], dtype=np.uint64))[0]
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base + (idx + np.uint64(1)) * GOLDEN)


def uniforms(key, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` of stream ``key`` as doubles in [0, 1)."""
    ctr = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = mix64(np.uint64(key) + ctr * GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * _TWO_M53
