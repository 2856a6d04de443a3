"""Stable seed derivation for reproducible Monte Carlo streams.

Every random draw in the library is keyed by ``(master_seed, purpose, *indices)``
so that results never depend on execution order or worker count.
"""
import hashlib
import struct

import numpy as np

PURPOSE_TAGS = (
    "inputs",
    "features",
    "labels-noise",
    "test-inputs",
    "poly-noise",
    "signals",
    "optimizer",
)


def derive_seed(master_seed: int, purpose: str, *indices: int) -> int:
    """Return a stable 64-bit child seed.

    The hash is BLAKE2b over the packed master seed, the purpose tag and any
    number of integer indices (run index, grid index, family index, ...).
    """
    if purpose not in PURPOSE_TAGS:
        raise ValueError(f"unknown purpose tag {purpose!r}; expected one of {PURPOSE_TAGS}")
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(master_seed) & 0xFFFFFFFFFFFFFFFF))
    h.update(purpose.encode("ascii"))
    for idx in indices:
        h.update(struct.pack("<q", int(idx)))
    return int.from_bytes(h.digest(), "little")


def rng_for(master_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, purpose, *indices))
