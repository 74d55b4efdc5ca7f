"""Counter-based random streams.

Every stream is a Philox generator.  Its 128-bit key is hashed from a 64-bit
seed and a tag; the remaining key components (replicate index, lattice
coordinate, ...) are packed into the upper 192 bits of the counter, so each
stream owns a disjoint block of ``2^64`` Philox outputs.  Streams are
therefore reproducible and independent of evaluation order, which is what
lets replicates run on any number of threads and single cells be resampled in
isolation.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

SEED_MASK = (1 << 64) - 1
_OFFSET = 1 << 31

# tags keep the key spaces of different consumers disjoint
TAG_CONFIG = 1
TAG_CELL = 2
TAG_GHOST = 3
TAG_REPLICATE = 4
TAG_RESAMPLE = 5
TAG_INSERT = 6
TAG_MARKS = 7


def _word(v: int) -> int:
    v = int(v) + _OFFSET
    if v < 0:
        raise ValueError("key component out of range")
    return v


@lru_cache(maxsize=4096)
def _philox_key(seed: int, tag: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed & SEED_MASK, spawn_key=(_word(tag),))
    return ss.generate_state(2, dtype=np.uint64)


def _counter(key) -> list[int] | None:
    words = [_word(k) for k in key]
    if len(words) > 6 or any(w >> 32 for w in words):
        return None
    words += [0] * (6 - len(words))
    return [0] + [words[2 * i] | (words[2 * i + 1] << 32) for i in range(3)]


def stream(seed: int, tag: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, tag, *key)``.

    Up to six further key components fit in the counter as 32-bit words
    (negative lattice coordinates are offset by ``2^31``); longer keys are
    hashed into the Philox key instead.
    """
    counter = _counter(key)
    if counter is None:
        ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(_word(tag), *(_word(k) for k in key)))
        return np.random.Generator(np.random.Philox(ss))
    # an explicit uint64 array: a list of large ints would pass through float64
    bg = np.random.Philox(counter=np.array(counter, dtype=np.uint64), key=_philox_key(int(seed) & SEED_MASK, int(tag)))
    return np.random.Generator(bg)


class StreamFamily:
    """Streams ``(seed, tag, *key)`` for many keys from one reusable generator.

    :meth:`at` rewinds the shared generator to the start of the stream for
    ``key``; the result equals ``stream(seed, tag, *key)`` and is valid until
    the next call.  Not thread-safe: use one family per thread.
    """

    def __init__(self, seed: int, tag: int):
        self.seed, self.tag = int(seed), int(tag)
        self._bg = np.random.Philox(key=_philox_key(self.seed & SEED_MASK, self.tag))
        self._gen = np.random.Generator(self._bg)
        self._state = self._bg.state

    def at(self, *key: int) -> np.random.Generator:
        counter = _counter(key)
        if counter is None:
            return stream(self.seed, self.tag, *key)
        st = self._state
        st["state"]["counter"][:] = counter
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self._gen


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed of ``seed`` for ``key``."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(_word(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def replicate_seeds(seed: int, n: int, start: int = 0) -> list[int]:
    return [derive_seed(seed, TAG_REPLICATE, i) for i in range(start, start + n)]
