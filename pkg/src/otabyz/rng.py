"""Named, hierarchical random substreams derived from one master seed.

Every random decision in a simulation draws from a generator keyed by a
name and a tuple of integers, e.g. ``substream(seed, "noise", t, g)``.
Streams with different keys are statistically independent, and a stream
does not depend on how many other streams were consumed before it. This is
what keeps honest clients' computations identical when only the attack
configuration changes.
"""
from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream", "stream_key"]


def stream_key(name: str, *indices: int) -> tuple[int, ...]:
    """Spawn key for ``name`` and integer indices (stable across runs)."""
    return (zlib.crc32(name.encode("utf-8")),) + tuple(int(i) for i in indices)


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=stream_key(name, *indices))
    return np.random.Generator(np.random.PCG64(ss))
