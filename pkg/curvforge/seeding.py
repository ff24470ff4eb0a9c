"""
Seed handling shared by every randomised operation.

All randomness flows through numpy's PCG64 generator. Streams are derived with
SeedSequence so a child stream depends only on (parent seed, child key), never on
how many numbers another consumer drew.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1

#child stream keys used by grow()
STREAM_ATTRACTORS = 0
STREAM_ROOTS = 1
STREAM_OBSTACLES = 2


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for `seed`, optionally on the child stream named by `key`."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def split_seed(master_seed: int, index: int) -> int:
    """64-bit seed for item `index` of a batch driven by `master_seed`."""
    ss = np.random.SeedSequence(int(master_seed) & SEED_MASK, spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def growth_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """(attractors, roots, obstacles) streams for one tree."""
    return (
        make_rng(seed, STREAM_ATTRACTORS),
        make_rng(seed, STREAM_ROOTS),
        make_rng(seed, STREAM_OBSTACLES),
    )
