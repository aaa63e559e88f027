# src/netsim/sampler.py

from __future__ import annotations

import hashlib
from typing import Any, Tuple, Union

import numpy as np

from src.errors import DomainError


ALGORITHM_ID: str = "philox4x64-sha256-path"

_SEED_LIMIT: int = 2**64


class SeededSampler:
    """
    Counter-based deterministic randomness for a simulation run.

    The root stream is Philox keyed by the 64-bit seed. ``for_path`` derives
    an isolated child stream from a SHA-256 of the seed and a path, so a
    subsystem's draws never shift another's.
    """

    def __init__(self, seed: int, path: Tuple[Any, ...] = ()) -> None:
        if not (0 <= int(seed) < _SEED_LIMIT):
            raise DomainError(f"seed={seed!r} must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.path = tuple(path)
        self.counter = 0
        self._generator = np.random.Generator(np.random.Philox(key=self._key()))

    def _key(self) -> int:
        if not self.path:
            return self.seed
        label = "/".join(str(part) for part in self.path)
        digest = hashlib.sha256(f"{self.seed:016x}/{label}".encode("utf-8")).digest()
        return int.from_bytes(digest[:16], "big")

    def for_path(self, *parts: Any) -> "SeededSampler":
        """Child sampler for ``path + parts``; independent of this stream's position."""
        return SeededSampler(self.seed, self.path + tuple(parts))

    # ---------- Draws ----------

    def bits(self, n: int) -> np.ndarray:
        """n uniform bits as uint8."""
        self.counter += n
        return self._generator.integers(0, 2, size=n, dtype=np.uint8)

    def bernoulli(self, prob: Union[float, np.ndarray], n: int) -> np.ndarray:
        """n independent flags; ``prob`` is one probability or one per flag."""
        probs = np.asarray(prob, dtype=float)
        if np.any((probs < 0.0) | (probs > 1.0)):
            raise DomainError(f"probability outside [0, 1]: {prob!r}")
        self.counter += n
        return (self._generator.random(n) < probs).astype(np.uint8)

    def coin(self) -> int:
        return int(self.bits(1)[0])

    def integer(self, n_bits: int) -> int:
        """Uniform integer in [0, 2^n_bits) built from fresh bits."""
        if n_bits <= 0:
            return 0
        packed = np.packbits(self.bits(n_bits))
        return int.from_bytes(packed.tobytes(), "big") >> (len(packed) * 8 - n_bits)

    def subset(self, population: int, k: int) -> np.ndarray:
        """Sorted k distinct indices drawn uniformly from range(population)."""
        if not (0 <= k <= population):
            raise DomainError(f"cannot draw {k} of {population}")
        self.counter += k
        chosen = self._generator.choice(population, size=k, replace=False)
        return np.sort(chosen.astype(np.int64))
