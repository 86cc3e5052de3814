"""Named random streams derived from one master seed.

Every consumer asks for ``stream(seed, role, *indices)``; the stream depends
only on those values, so adding workers or reordering tasks never changes
the numbers a task sees.
"""

import zlib

import numpy as np


def _word(x) -> int:
    if isinstance(x, str):
        return zlib.crc32(x.encode("utf-8"))
    return int(x) & 0xFFFFFFFF


def seed_sequence(seed: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(_word(p) for p in path)])


def stream(seed: int, *path) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def derived_seed(seed: int, *path) -> int:
    return int(seed_sequence(seed, *path).generate_state(1, np.uint32)[0])
