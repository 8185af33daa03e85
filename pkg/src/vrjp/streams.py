"""Reproducible random-number streams.

Every stochastic routine in the package takes a numpy Generator. Streams are
derived from a master seed plus a key path (replica index, purpose tag, ...)
through SeedSequence feeding a Philox counter-based bit generator, so

* the same (seed, key path) always yields the same stream, on any platform;
* distinct key paths yield statistically independent streams;
* environment sampling and chain sampling never share a stream.

String keys are allowed and hashed with crc32, which is stable across runs
and platforms (unlike the builtin hash).
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

__all__ = ["stream", "purpose_key"]

KeyPart = Union[int, str]


def purpose_key(name: str) -> int:
    """Stable 32-bit integer key for a purpose tag."""
    return zlib.crc32(name.encode("utf-8"))


def _as_int(part: KeyPart) -> int:
    if isinstance(part, str):
        return purpose_key(part)
    return int(part)


def stream(seed: int, *keys: KeyPart) -> np.random.Generator:
    """Return a Generator keyed by (seed, *keys).

    Parameters
    ----------
    seed : master seed of the run.
    keys : any mix of ints and strings; strings are crc32-hashed.
    """
    entropy = (int(seed),) + tuple(_as_int(k) for k in keys)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
