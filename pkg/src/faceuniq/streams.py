"""Counter-based random streams.

Every random draw in the package comes from a Philox generator whose key is a
64-bit seed and whose counter's top word is a stream index. Streams are
therefore addressable: iteration ``k`` of a run can be generated on any thread,
in any order, and yields the same numbers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# spawn-key tags so that subject, pair and synthetic streams never collide
SUBJECT = 0
PAIR = 1
SYNTH = 2


def derive_seed(seed: int, *path: int) -> int:
    """Hash ``seed`` and an integer path into a new 64-bit seed."""
    ss = np.random.SeedSequence(seed & MASK64, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator number ``index`` under key ``seed``."""
    counter = np.array([0, 0, 0, index & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed & MASK64, counter=counter))


def subject_seed(seed: int, ordinal: int) -> int:
    return derive_seed(seed, SUBJECT, ordinal)


def pair_seed(seed: int, p_ordinal: int, q_ordinal: int) -> int:
    return derive_seed(seed, PAIR, p_ordinal, q_ordinal)
