"""Deterministic random streams for Monte Carlo runs.

All sampling uses Philox-4x64, a counter-based generator with a 128-bit key.
A stream is addressed by a base seed plus a path of labels/indices; the key
is the 16-byte BLAKE2b digest of the decimal seed and the path elements
joined by NUL bytes.  The same (seed, path) therefore yields bit-identical
draws on every platform, and disjoint paths give independent streams, which
is what lets sweeps and sessions shard work without sharing generator state.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(seed: int, *path) -> np.ndarray:
    """128-bit Philox key for (seed, *path), as two uint64 words."""
    payload = b"\x00".join(str(x).encode() for x in (int(seed), *path))
    digest = hashlib.blake2b(payload, digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64)


def stream(seed: int, *path) -> np.random.Generator:
    """Independent deterministic generator for (seed, *path)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *path)))


def derive(seed: int, *path) -> int:
    """64-bit child seed for handing to components that take plain seeds."""
    return int(stream_key(seed, *path)[0])
