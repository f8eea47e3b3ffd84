"""Deterministic seed derivation.

Every stochastic choice in a run (data sampling, weight init, shuffling,
client selection) draws from a stream keyed by the scenario seed plus a
purpose label and integer indices. Streams are independent of execution
order, so clients trained in parallel see exactly the same randomness as
clients trained serially.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(root: int, label: str, *indices: int) -> int:
    """Derive a 64-bit seed from a root seed, a purpose label and indices.

    Stable across processes and platforms (unlike ``hash()``).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", root & _MASK64))
    h.update(label.encode("utf-8"))
    for idx in indices:
        h.update(struct.pack("<q", idx))
    return int.from_bytes(h.digest(), "little")


def rng_for(root: int, label: str, *indices: int) -> np.random.Generator:
    """Fresh PCG64 generator for the derived stream."""
    return np.random.default_rng(child_seed(root, label, *indices))


_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_M2 = np.uint64(0x94D049BB133111EB)


def epoch_permutation(stream_seed: int, epoch_index: int, n: int) -> np.ndarray:
    """Sample-visit order for one epoch: a pure function of (stream, epoch).

    Ranks splitmix64 keys instead of constructing a numpy Generator, which
    keeps the per-epoch cost flat for the many small local-training calls a
    federated round makes. Stable argsort makes the (vanishingly rare) key
    ties deterministic.
    """
    base = np.uint64(child_seed(stream_seed, "shuffle", epoch_index))
    with np.errstate(over="ignore"):
        z = base + (np.arange(1, n + 1, dtype=np.uint64)) * _SM64_GAMMA
        z ^= z >> np.uint64(30)
        z *= _SM64_M1
        z ^= z >> np.uint64(27)
        z *= _SM64_M2
        z ^= z >> np.uint64(31)
    return np.argsort(z, kind="stable").astype(np.int64)
