"""Deterministic seed derivation.

Every stochastic operation in the package takes an explicit seed. Experiments
that need several independent streams (noise injection, reverse-split draw,
parameter init, batch shuffling, ...) derive named child seeds from one master
seed with ``child_seed``; the derivation is a pure function of the master seed
and the path, so whole runs replay bit-for-bit.
"""
from __future__ import annotations

import zlib

import numpy as np

SeedLike = "int | np.random.SeedSequence | np.random.Generator"


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFF


def child_seed(seed, *path) -> np.random.SeedSequence:
    """Derive a child SeedSequence from ``seed`` and a path of ints/strings."""
    if isinstance(seed, np.random.SeedSequence):
        entropy, base_key = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, base_key = int(seed), ()
    key = base_key + tuple(_key_part(p) for p in path)
    return np.random.SeedSequence(entropy=entropy, spawn_key=key)


def child_int(seed, *path) -> int:
    """Derive a child seed as a plain integer (for configs that store seeds)."""
    return int(child_seed(seed, *path).generate_state(2, np.uint64)[0])


def make_rng(seed, *path) -> np.random.Generator:
    """Build a Generator from a seed, SeedSequence, or existing Generator.

    A Generator passes through unchanged (and must not be combined with a
    path); anything else is routed through ``child_seed`` when a path is given.
    """
    if isinstance(seed, np.random.Generator):
        if path:
            raise ValueError("cannot derive a child stream from a Generator")
        return seed
    if path:
        return np.random.default_rng(child_seed(seed, *path))
    return np.random.default_rng(seed)
