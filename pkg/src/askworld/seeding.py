"""Deterministic RNG derivation.

Every random draw in the simulator comes from a generator derived here, so a
(seed, purpose) pair always yields the same stream regardless of call order
or parallel schedule.
"""

from __future__ import annotations

import hashlib

import numpy as np

# purpose tags for derived streams
PROFILE = 1
SCHEDULE = 2
POPULATE = 3
EPISODE = 4
POLICY = 5
CONDITION = 6


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for stream (seed, *keys); identical inputs, identical stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(k) & 0xFFFFFFFF for k in keys]]))


def string_key(text: str) -> int:
    """Stable 32-bit key for a string (process-independent, unlike hash())."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def column_rng(seed: int, column_index: int) -> np.random.Generator:
    """Counter-based generator for one occupancy column.

    Keyed by (seed, column) so per-column streams are independent of
    evaluation order, making parallel generation schedule-independent.
    """
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(column_index) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
