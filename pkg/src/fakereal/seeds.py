"""Deterministic RNG streams, one per purpose.

Every random decision in a run (weight init, dropout masks, batch order,
validation split, cold-start sampling) draws from its own stream derived
from the master seed, so changing one consumer never shifts the others.
"""

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF

_PURPOSES = {
    "init": 1,
    "dropout": 2,
    "shuffle": 3,
    "valsplit": 4,
    "perturb_train": 5,
    "perturb_test": 6,
    "synth": 7,
}


def rng_for(seed: int, purpose: str) -> np.random.Generator:
    """Generator for one named purpose under a master seed."""
    if purpose not in _PURPOSES:
        raise ValueError(f"unknown rng purpose: {purpose!r}")
    seq = np.random.SeedSequence([seed & _U64, _PURPOSES[purpose]])
    return np.random.default_rng(seq)
