"""Deterministic seed derivation.

All randomness uses numpy's PCG64 bit generator. Sub-streams are keyed by
hashing ``(seed, purpose, *parts)`` with BLAKE2b, so adding a new consumer
never shifts the stream of an existing one.
"""

import hashlib

import numpy as np


def derive_seed(seed, *parts):
    """Return a 64-bit integer seed derived from ``seed`` and ``parts``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(seed, *parts):
    """PCG64 generator for the sub-stream ``(seed, *parts)``.

    With no ``parts`` the seed is used as-is; passing an existing
    ``np.random.Generator`` returns it unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if parts:
        seed = derive_seed(seed, *parts)
    return np.random.Generator(np.random.PCG64(seed))
