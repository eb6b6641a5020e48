"""Seeded counter-based random streams.

All randomness in the package flows through :func:`stream`, which maps a
64-bit seed plus a textual label to an independent Philox-4x64-10 stream
(numpy's counter-based generator).  The derivation is documented so a
reimplementation in any language can reproduce the streams:

* ``key[0] = seed`` (as uint64),
* ``key[1] = FNV-1a 64-bit hash of the UTF-8 label``,
* generator = Philox 4x64 with 10 rounds, counter starting at 0.

Substreams for pipeline stages use labels of the form
``"<subcommand>/<index>"``.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "philox4x64-10"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(label: str) -> int:
    """FNV-1a 64-bit hash of a UTF-8 string (stable across platforms)."""
    h = _FNV_OFFSET
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def stream(seed: int, label: str = "") -> np.random.Generator:
    """Independent Philox stream derived from ``(seed, label)``."""
    key = np.array([np.uint64(seed & _MASK64), np.uint64(fnv1a64(label))])
    return np.random.Generator(np.random.Philox(key=key))
