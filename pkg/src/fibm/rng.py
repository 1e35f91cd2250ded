"""Seed derivation: every random draw comes from one integer seed split into tagged substreams."""
from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, tag: str, *ids: int) -> np.random.Generator:
    """Independent generator for ``(seed, tag, *ids)``, stable across runs and platforms."""
    seed = int(seed)
    words = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF, zlib.crc32(tag.encode())]
    words.extend(int(i) for i in ids)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
