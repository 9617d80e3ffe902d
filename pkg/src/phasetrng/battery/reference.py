"""Seeded ideal bit source used to calibrate the battery."""

from __future__ import annotations

import numpy as np

from ..ingest import BitStream


def ideal_bits(n_bits: int, seed: int = 0) -> BitStream:
    """``n_bits`` from numpy's PCG64 generator, packed MSB-first."""
    if n_bits < 0:
        raise ValueError("n_bits must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    packed = rng.integers(0, 256, size=-(-n_bits // 8), dtype=np.uint8)
    return BitStream(packed, n_bits)
