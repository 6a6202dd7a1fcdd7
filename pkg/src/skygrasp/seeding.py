"""Deterministic seed derivation for nested random streams."""
from __future__ import annotations

import zlib

import numpy as np


def _as_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"seed parts must be ints or strings, got {type(part)!r}")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of ints/strings; same inputs, same seed."""
    entropy = [_as_entropy(p) for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
