"""Labeled seed derivation.

Every stochastic component (noise, splits, sub-video jitter, masks, model
init, batch shuffling) draws its seed from one top-level seed plus a label
path, so a single config seed pins the whole pipeline.
"""

import hashlib

import numpy as np

_MOD = 2**32


def derive_seed(master: int, *labels) -> int:
    """Hash (master seed, label path) into a 32-bit seed.

    Labels may be strings or ints; the path is joined unambiguously so
    ("a", 12) and ("a1", 2) cannot collide.
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "big") % _MOD


def rng_for(master: int, *labels) -> np.random.Generator:
    """Generator seeded by `derive_seed(master, *labels)`."""
    return np.random.default_rng(derive_seed(master, *labels))
