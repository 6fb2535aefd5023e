"""Deterministic seed derivation for parallel Monte Carlo streams.

Every replicate draws from a counter-based (Philox) stream keyed by
(base_seed, *keys), so results do not depend on the order in which
replicates are executed.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_words(key):
    if isinstance(key, (int, np.integer)):
        return [int(key) & _MASK64]
    digest = hashlib.sha256(str(key).encode("utf8")).digest()
    return [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]


def seed_sequence(base_seed, *keys):
    entropy = [int(base_seed) & _MASK64]
    for key in keys:
        entropy.extend(_key_words(key))
    return np.random.SeedSequence(entropy)


def substream(base_seed, *keys) -> np.random.Generator:
    """Independent generator for the stream keyed by (base_seed, *keys)."""
    return np.random.Generator(np.random.Philox(key=seed_sequence(base_seed, *keys).generate_state(2, np.uint64)))


def kernel_seed(rng: np.random.Generator) -> np.uint64:
    """64-bit seed for a jitted kernel, drawn from an existing stream."""
    return np.uint64(rng.integers(0, 2**64, dtype=np.uint64))
