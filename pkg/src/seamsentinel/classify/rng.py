"""Named random streams derived from one master seed.

Every consumer asks for ``derive_rng(seed, component, *indices)``; the stream
depends only on those values, never on call order, so serial and parallel
runs draw identical numbers.
"""

from __future__ import annotations

import zlib

import numpy as np


def _component_key(component: str) -> int:
    return zlib.crc32(component.encode("utf-8"))


def derive_rng(seed: int, component: str, *indices: int) -> np.random.Generator:
    key = (_component_key(component),) + tuple(int(i) for i in indices)
    seq = np.random.SeedSequence(entropy=int(seed) & (2 ** 63 - 1), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
