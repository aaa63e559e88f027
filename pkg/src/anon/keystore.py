# src/anon/keystore.py

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from src.errors import KeyDepleted
from src.rates.models import Pair, all_pairs, pair_key


logger = logging.getLogger(__name__)

K_PRE: Pair = (-1, -1)


@dataclass
class KeyPool:
    """A one-time-pad bit sequence read strictly front to back."""

    bits: np.ndarray
    consumed: int = 0

    @property
    def size(self) -> int:
        return int(self.bits.shape[0])

    @property
    def available(self) -> int:
        return self.size - self.consumed

    def take(self, label: Pair, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"cannot take {n} bits")
        if n > self.available:
            raise KeyDepleted(label, n, self.available)
        pad = self.bits[self.consumed : self.consumed + n]
        self.consumed += n
        return pad


class KeyStore:
    """
    Pairwise one-time-pad pools plus the optional pre-shared conference key.

    Both members of a pair read the same pool, so a pad taken for a message
    from q to t is the pad t decrypts with.
    """

    def __init__(
        self,
        n_parties: int,
        pools: Mapping[Pair, np.ndarray],
        k_pre: Optional[np.ndarray] = None,
    ) -> None:
        self.n_parties = n_parties
        self._pools: Dict[Pair, KeyPool] = {}
        for pair in all_pairs(n_parties):
            bits = pools.get(pair)
            bits = np.zeros(0, dtype=np.uint8) if bits is None else np.asarray(bits, dtype=np.uint8)
            self._pools[pair] = KeyPool(bits)
        self._k_pre: Optional[KeyPool] = None if k_pre is None else KeyPool(np.asarray(k_pre, dtype=np.uint8))

    @classmethod
    def empty(cls, n_parties: int) -> "KeyStore":
        return cls(n_parties, {})

    @classmethod
    def uniform(cls, n_parties: int, bits_per_pair: int, sampler) -> "KeyStore":
        """Pools of fresh random bits, for standalone primitive runs."""
        pools = {
            pair: sampler.for_path("pool", *pair).bits(bits_per_pair)
            for pair in all_pairs(n_parties)
        }
        return cls(n_parties, pools)

    # ---------- Pairwise pools ----------

    def pool(self, a: int, b: int) -> KeyPool:
        return self._pools[pair_key(a, b)]

    def consume(self, a: int, b: int, n: int) -> np.ndarray:
        """Read n pad bits shared by a and b."""
        pair = pair_key(a, b)
        return self._pools[pair].take(pair, n)

    def debit(self, a: int, b: int, n: int) -> None:
        """Discard n bits as padding so the pool matches a cost formula."""
        self.consume(a, b, n)

    def available(self, a: int, b: int) -> int:
        return self.pool(a, b).available

    def consumed(self, a: int, b: int) -> int:
        return self.pool(a, b).consumed

    def size(self, a: int, b: int) -> int:
        return self.pool(a, b).size

    def consumed_by_pair(self) -> Dict[Pair, int]:
        return {pair: pool.consumed for pair, pool in self._pools.items()}

    def available_by_pair(self) -> Dict[Pair, int]:
        return {pair: pool.available for pair, pool in self._pools.items()}

    def total_consumed(self) -> int:
        return sum(pool.consumed for pool in self._pools.values())

    def min_available(self) -> int:
        return min(pool.available for pool in self._pools.values())

    # ---------- Pre-shared conference key ----------

    def provision_pre(self, bits: np.ndarray) -> None:
        """Install the pre-shared conference key k_Pre."""
        self._k_pre = KeyPool(np.asarray(bits, dtype=np.uint8))

    @property
    def has_k_pre(self) -> bool:
        return self._k_pre is not None

    def consume_pre(self, n: int) -> np.ndarray:
        if self._k_pre is None:
            raise KeyDepleted(K_PRE, n, 0)
        return self._k_pre.take(K_PRE, n)

    @property
    def k_pre_consumed(self) -> int:
        return 0 if self._k_pre is None else self._k_pre.consumed

    @property
    def k_pre_available(self) -> int:
        return 0 if self._k_pre is None else self._k_pre.available
