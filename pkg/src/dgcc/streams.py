"""Named deterministic random streams.

Every source of randomness in a run is a separate generator derived from
the run seed plus a string/int key path, so that consumers cannot perturb
each other's draw sequences and runs replay bit-identically.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_part(part: int | str) -> int:
    if isinstance(part, int):
        if part < 0:
            raise ValueError(f"stream key parts must be non-negative, got {part}")
        return part
    digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, *key: int | str) -> np.random.Generator:
    """Derive an independent generator from (seed, key path)."""
    entropy = [seed & 0xFFFFFFFFFFFFFFFF] + [_key_part(p) for p in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(base: int, *key: int | str) -> int:
    """Collapse (base, key path) into a single 63-bit seed.

    Used where a plain integer seed must be recorded (e.g. experiment cells).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(base & 0xFFFFFFFFFFFFFFFF).encode())
    for part in key:
        h.update(b"/")
        h.update(str(_key_part(part)).encode())
    return int.from_bytes(h.digest(), "big") & 0x7FFFFFFFFFFFFFFF
