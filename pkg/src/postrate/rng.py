"""Counter-based random streams keyed by (seed, purpose, replicate)."""

import zlib

import numpy as np


def _tag_key(tag):
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed, tag="", index=0):
    """Return an independent Philox generator for ``(seed, tag, index)``.

    Identical keys give bit-identical streams on every platform; distinct
    tags or indices give statistically independent streams.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, _tag_key(tag), int(index)])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed, tag, index=0):
    """Derive an integer seed for a sub-computation."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, _tag_key(tag), int(index)])
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])
