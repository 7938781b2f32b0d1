"""Named RNG substreams derived from a single run seed.

Every source of randomness in a run (model init, epoch shuffling, mix draws,
preview sampling, ...) pulls from its own named stream so that changing how
much one consumer draws never perturbs the others.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream"]


def substream(seed: int, name: str) -> np.random.Generator:
    """Return an independent generator for stream `name` of run seed `seed`.

    The (seed, name) pair fully determines the stream: same pair, same draws,
    across processes and platforms.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    tag = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))
