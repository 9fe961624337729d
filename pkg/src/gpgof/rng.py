"""Deterministic random substreams.

Every stochastic unit of work (a Monte Carlo replicate, a bootstrap resample)
gets its own generator derived from the master seed and an integer key path.
Because a stream depends only on its key, results do not depend on the order
or the process in which the units are executed.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stable_key(text: str) -> int:
    """Map a string to a 32-bit integer that is stable across interpreters."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
