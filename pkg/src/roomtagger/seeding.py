"""Named, seeded random generators for every stochastic choice.

All sampling (under-sampling, splitting, batch shuffling) draws from
dedicated numpy PCG64 generators so runs are reproducible and independent
of any global RNG state. The generator name is recorded in run metadata.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "numpy-pcg64"


def check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    return seed


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for `seed`, optionally namespaced by stream ids."""
    entropy = [check_seed(seed), *[int(s) for s in stream]]
    return np.random.default_rng(entropy if stream else entropy[0])


def derive_seed(seed: int, *stream: int) -> int:
    """Stable 32-bit sub-seed for frameworks that take a single integer."""
    sequence = np.random.SeedSequence([check_seed(seed), *[int(s) for s in stream]])
    return int(sequence.generate_state(1)[0])
