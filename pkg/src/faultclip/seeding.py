"""Deterministic seed derivation for counter-based random streams.

Every stochastic component (mask draws, sweep trials, tuning boundaries)
gets its own Philox generator whose 128-bit key is derived by hashing a
tuple of identifying parts.  Streams are therefore independent of thread
schedule and call order: the same parts always name the same stream.
"""

import hashlib

import numpy as np


def derive_key(*parts) -> int:
    """Hash ``parts`` (ints, strings, floats) into a 128-bit Philox key.

    Floats are keyed by their shortest round-trip repr, so 1e-3 and 0.001
    name the same stream while distinct values never collide in practice.
    """
    token = "|".join(f"{type(p).__name__}:{p!r}" for p in parts)
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def stream(*parts) -> np.random.Generator:
    """A fresh counter-based generator for the stream named by ``parts``."""
    return np.random.Generator(np.random.Philox(key=derive_key(*parts)))
