# src/bits.py

from __future__ import annotations

from typing import Iterable, Union

import numpy as np


BitsLike = Union[np.ndarray, Iterable[int], str]


def as_bits(value: BitsLike) -> np.ndarray:
    """Coerce a bit array, a sequence of 0/1 or a '0101' string to uint8 bits."""
    if isinstance(value, str):
        arr = np.frombuffer(value.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(value if isinstance(value, np.ndarray) else list(value), dtype=np.uint8)
    if arr.ndim != 1 or np.any(arr > 1):
        raise ValueError("expected a one-dimensional array of bits")
    return arr


def to_int(bits: np.ndarray) -> int:
    """Big-endian integer value of a bit array (first bit most significant)."""
    n = int(bits.shape[0])
    if n == 0:
        return 0
    packed = np.packbits(bits)
    return int.from_bytes(packed.tobytes(), "big") >> (len(packed) * 8 - n)


def from_int(value: int, n_bits: int) -> np.ndarray:
    """The low ``n_bits`` of ``value`` as a big-endian bit array."""
    if n_bits <= 0:
        return np.zeros(0, dtype=np.uint8)
    value &= (1 << n_bits) - 1
    n_bytes = (n_bits + 7) // 8
    raw = np.frombuffer((value << (n_bytes * 8 - n_bits)).to_bytes(n_bytes, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[:n_bits].copy()


def to_string(bits: np.ndarray) -> str:
    return (bits.astype(np.uint8) + ord("0")).tobytes().decode("ascii")
