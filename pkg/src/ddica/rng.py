"""Seeded randomness for the whole repository.

Every random draw in this package flows through numpy's PCG64 generator
(the default_rng bit generator): a named, seedable, portable 64-bit
stream.  Derived streams (per-trial seeds, per-purpose sub-seeds) use the
SeedSequence spawn convention below so that independent components of a
run never share a stream.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return the repository generator (PCG64) for an integer seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def split_seed(seed: int, index: int) -> int:
    """Derive an independent child seed from (seed, index).

    Deterministic and portable: hashes the pair through SeedSequence and
    returns a 63-bit integer usable as a fresh seed.
    """
    state = np.random.SeedSequence((int(seed), int(index))).generate_state(1, dtype=np.uint64)
    return int(state[0] >> 1)
