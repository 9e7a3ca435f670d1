"""Counter-based random streams keyed by (master seed, trial index, module tag).

Every stream is a Philox generator seeded by a 64-bit integer derived from the
key with ``numpy.random.SeedSequence``. The derived integer is what gets
written to per-trial CSV rows, so any trial can be replayed on its own with
``stream_from_seed``.
"""

import zlib

import numpy as np

ALGORITHM = "numpy.random.Philox via SeedSequence([master_seed, trial, crc32(tag)])"
U64 = (1 << 64) - 1


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def trial_seed(master_seed: int, trial: int, tag: str) -> int:
    ss = np.random.SeedSequence([int(master_seed) & U64, int(trial), _tag_key(tag)])
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def stream_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & U64))


def stream(master_seed: int, trial: int = 0, tag: str = "") -> np.random.Generator:
    return stream_from_seed(trial_seed(master_seed, trial, tag))
