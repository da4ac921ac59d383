"""Deterministic substreams.

Every consumer of randomness gets its own Philox stream whose 128-bit key is
``(seed, H(tag, *index))``.  Philox is counter based, so a stream depends only
on its key and never on how many draws other streams have made; this is what
makes bootstrap and harness results independent of the worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _digest(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, str):
            h.update(b"s")
            h.update(p.encode("utf-8"))
        else:
            h.update(b"i")
            h.update(int(p).to_bytes(16, "little", signed=True))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def stream_key(seed: int, tag: str, *index: int) -> tuple[int, int]:
    return int(seed) & _MASK64, _digest(tag, *index)


def substream(seed: int, tag: str, *index: int) -> np.random.Generator:
    """Fresh generator for the substream ``(seed, tag, *index)``."""
    return np.random.Generator(np.random.Philox(key=np.array(stream_key(seed, tag, *index), dtype=np.uint64)))


def derive_seed(seed: int, tag: str, *index: int) -> int:
    """A 64-bit child seed, e.g. the bootstrap seed of harness replicate ``r``."""
    return _digest(int(seed) & _MASK64, tag, *index)


class Substreams:
    """Cheap repeated access to substreams of one master seed.

    Re-keys a single Philox instance instead of constructing a new one per call,
    which matters when a bootstrap asks for 500 streams.  The returned generator
    is only valid until the next call; instances must not be shared between
    threads.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._bitgen = np.random.Philox(key=np.array([self.seed, 0], dtype=np.uint64))
        self._gen = np.random.Generator(self._bitgen)

    def __call__(self, tag: str, *index: int) -> np.random.Generator:
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.zeros(4, dtype=np.uint64),
                "key": np.array([self.seed, _digest(tag, *index)], dtype=np.uint64),
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen
