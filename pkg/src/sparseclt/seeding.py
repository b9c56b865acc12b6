"""Deterministic seed derivation.

Every random draw in the package comes from a ``numpy.random.Generator`` whose
seed is derived from a user seed through :func:`derive_seed`. The mixer is the
SplitMix64 output function (Steele, Lea & Flood 2014), written ``mix`` below,
applied to ``mix(master) ^ index``; its constants are frozen:

    z = (x + 0x9E3779B97F4A7C15)            mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z =  z ^ (z >> 31)

The master is mixed before the XOR: with a bare ``master ^ index``, nearby
masters such as 9 and 10 would hand out the same set of child seeds in a
different order. ``derive_seed(0, 0) == mix(mix(0)) == 0xA706DD2F4D197E6F``.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL1 = 0xBF58476D1CE4E5B9
MIX_MUL2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed for stream ``index`` under ``master_seed``."""
    return splitmix64(splitmix64(int(master_seed) & MASK64) ^ (int(index) & MASK64))


def tag_id(tag: str) -> int:
    """Stable 64-bit id of a purpose tag (independent of PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def stream(seed: int, tag: str) -> np.random.Generator:
    """Generator for the random stream named ``tag`` under ``seed``."""
    return np.random.default_rng(derive_seed(seed, tag_id(tag)))


def child_seed(seed: int, tag: str) -> int:
    return derive_seed(seed, tag_id(tag))
