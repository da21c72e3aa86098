"""Counter-based seed derivation for reproducible, schedule-independent runs.

Every random stream in a sweep is addressed by (master seed, point identity,
network index, stream id). Deriving from the point identity (Q, S, side) rather
than a positional index keeps per-point results stable when other points are
added to or removed from the sweep.
"""
from __future__ import annotations

import numpy as np

# Stream ids within one network realization.
STREAM_NETWORK = 0  # UE drop + LoS draws
STREAM_MU_PASS = 1  # channel + pilot noise for the normalization pass
STREAM_DS_PASS = 2  # channel + pilot noise for the DS/INT pass


def point_key(q: int, s: int, side_m: float) -> tuple[int, int, int]:
    """Identity of a sweep point as a spawn-key tuple (side quantized to mm)."""
    return (int(q), int(s), int(round(side_m * 1000.0)))


def derive_seq(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in key))


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(derive_seq(master_seed, *key))
