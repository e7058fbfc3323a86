"""Deterministic seed derivation.

Every random stream is a Philox4x64 counter-based generator keyed by a
128-bit seed hashed from the master seed and a tuple of labels, so adding a
new consumer never shifts the draws of an existing one. Philox output is
stable across NumPy releases (NEP 19 keeps bit generators frozen).
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "make_rng"]


def derive_seed(master_seed: int, *labels) -> int:
    """128-bit integer seed for the stream named by ``labels``."""
    h = hashlib.blake2b(digest_size=16, person=b"stratanet-seed")
    h.update(repr((int(master_seed),) + tuple(str(x) for x in labels)).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
