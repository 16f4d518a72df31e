"""Deterministic seed derivation for reproducible, order-independent randomness.

Every random decision in the engine (shuffles, synthetic-judge draws, pair
presentation order, simulation trials) draws from a generator derived by
hashing a base seed together with a structural path such as
``(seed, "shuffle", repeat, round)``. Two workers that compute the same
logical step therefore see the same stream regardless of execution order,
platform, or Python hash randomization.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK_64 = (1 << 64) - 1


def subseed(*parts: object) -> int:
    """Hash a path of parts into a stable 64-bit integer seed.

    Parts are joined by their ``str()`` forms with a separator, so
    ``subseed(1, 23)`` and ``subseed(12, 3)`` differ.
    """
    tag = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _MASK_64


def derive_rng(*parts: object) -> np.random.Generator:
    """Return a fresh PCG64 generator seeded from the hashed path."""
    return np.random.default_rng(subseed(*parts))
