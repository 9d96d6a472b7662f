"""Seed substream derivation.

All randomness in the simulator flows through numpy's PCG64 seeded from a
SeedSequence whose entropy is (seed, purpose, *indices). Purposes keep the
independent random uses (network generation, stub matching, failure draws,
message sampling) on disjoint substreams, and index tuples give repeatable
per-sample / per-repetition streams without seed reuse.
"""
from __future__ import annotations

import numpy as np

# Purpose tags. Values are arbitrary but frozen: changing them changes every
# generated network and failure draw.
GENERATION = 1
MATCHING = 2
FAILURE = 3
MESSAGES = 4
REFERENCE = 5


def seed_sequence(seed: int, purpose: int, *indices: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(int(seed), int(purpose)) + tuple(int(i) for i in indices))


def rng_from(seed: int, purpose: int, *indices: int) -> np.random.Generator:
    """A fresh PCG64 generator on the (seed, purpose, *indices) substream."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, purpose, *indices)))


def derive_seed(seed: int, purpose: int, *indices: int) -> int:
    """A 63-bit integer sub-seed, for handing to components that take plain seeds."""
    state = seed_sequence(seed, purpose, *indices).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))
