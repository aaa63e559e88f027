# src/protocol/postprocessing.py

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.bits import from_int, to_int
from src.errors import ContractViolation, DomainError
from src.rates.entropy import error_entropy
from src.rates.finite import GammaFn, corrected_gamma


logger = logging.getLogger(__name__)

GF64_REDUCTION: int = 0x1B  # x^64 = x^4 + x^3 + x + 1
_MASK64: int = (1 << 64) - 1


# ---------- GF(2^64) tags ----------


def _multiplier_tables(key: int) -> List[List[int]]:
    """Eight byte-indexed tables whose XOR gives x * key in GF(2^64)."""
    powers = [key & _MASK64]
    for _ in range(63):
        prev = powers[-1]
        nxt = (prev << 1) & _MASK64
        if prev >> 63:
            nxt ^= GF64_REDUCTION
        powers.append(nxt)
    tables = []
    for byte in range(8):
        table = [0] * 256
        for value in range(1, 256):
            low = value & -value
            table[value] = table[value ^ low] ^ powers[8 * byte + low.bit_length() - 1]
        tables.append(table)
    return tables


def _gf64_multiply(x: int, tables: List[List[int]]) -> int:
    t0, t1, t2, t3, t4, t5, t6, t7 = tables
    return (
        t0[x & 0xFF]
        ^ t1[(x >> 8) & 0xFF]
        ^ t2[(x >> 16) & 0xFF]
        ^ t3[(x >> 24) & 0xFF]
        ^ t4[(x >> 32) & 0xFF]
        ^ t5[(x >> 40) & 0xFF]
        ^ t6[(x >> 48) & 0xFF]
        ^ t7[(x >> 56) & 0xFF]
    )


def default_tag_key(lanes: int) -> List[int]:
    digest = hashlib.sha256(b"conclave/gf64-tag").digest()
    words = []
    counter = 0
    while len(words) < lanes:
        block = hashlib.sha256(digest + counter.to_bytes(4, "big")).digest()
        words.extend(int.from_bytes(block[i : i + 8], "big") for i in range(0, 32, 8))
        counter += 1
    return words[:lanes]


def gf64_tag(bits: np.ndarray, key: Optional[Sequence[int]], out_len: int) -> np.ndarray:
    """
    Polynomial hash of ``bits`` over GF(2^64).

    The input is split into 64-bit blocks (zero padded) followed by a block
    holding the bit length, and evaluated by Horner's rule at each key word.
    One 64-bit lane per key word; the lanes are concatenated and cut to
    ``out_len`` bits.
    """
    if out_len < 0:
        raise DomainError(f"out_len={out_len} must be non-negative")
    lanes = -(-out_len // 64)
    if key is None:
        key = default_tag_key(lanes)
    if len(key) < lanes:
        raise ContractViolation(f"{lanes} key words needed, {len(key)} given")

    bits = np.asarray(bits, dtype=np.uint8)
    n = int(bits.shape[0])
    padded = np.zeros(-(-n // 64) * 64, dtype=np.uint8)
    padded[:n] = bits
    blocks = np.packbits(padded).view(">u8").tolist() + [n]

    out = []
    for lane in range(lanes):
        tables = _multiplier_tables(int(key[lane]))
        acc = 0
        for block in blocks:
            acc = _gf64_multiply(acc ^ block, tables)
        out.append(from_int(acc, 64))
    if not out:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(out)[:out_len]


# ---------- Parameter estimation ----------


def estimation_passes(
    observed: float,
    threshold: float,
    n_key: int,
    n_test: int,
    eps: float,
    gamma_fn: Optional[GammaFn] = None,
) -> bool:
    """
    Whether an observed phase error clears the threshold:
    observed + gamma(observed) <= threshold + gamma(threshold), observed < 1/2.
    """
    if observed >= 0.5:
        return False
    left = observed + corrected_gamma(observed, n_key, n_test, eps, gamma_fn)
    right = threshold + corrected_gamma(threshold, n_key, n_test, eps, gamma_fn)
    return left <= right


# ---------- Error correction ----------


def tag_length(N: int, eps_ec: float) -> int:
    """Verification hash length, ceil(log2(2(N-1)/eps_EC))."""
    return math.ceil(math.log2(2.0 * (N - 1) / eps_ec))


def syndrome_length(n_bits: int, q_z: float) -> int:
    return math.ceil(n_bits * float(error_entropy(q_z)))


def ec_leakage(n_bits: int, q_z: float, eps_ec: float, N: int) -> float:
    """n h(Q_Z) + log2(2(N-1)/eps_EC)."""
    return n_bits * float(error_entropy(q_z)) + math.log2(2.0 * (N - 1) / eps_ec)


def syndrome_bits(key: np.ndarray, n_bits: int) -> np.ndarray:
    """Deterministic stand-in for the sender's syndrome: a SHA-256 expansion of the key."""
    seed = hashlib.sha256(np.packbits(key).tobytes()).digest()
    out = bytearray()
    counter = 0
    while len(out) * 8 < n_bits:
        out += hashlib.sha256(seed + counter.to_bytes(8, "big")).digest()
        counter += 1
    return np.unpackbits(np.frombuffer(bytes(out), dtype=np.uint8))[:n_bits].copy()


@dataclass(frozen=True)
class ReconciliationResult:
    corrected: np.ndarray
    leakage_bits: float
    verified: bool
    error_rate: float


def error_correct(
    sender_key: np.ndarray,
    holder_key: np.ndarray,
    q_z_threshold: float,
    eps_ec: float,
    N: int,
    tag_key: Optional[Sequence[int]] = None,
) -> ReconciliationResult:
    """
    Functional one-way reconciliation towards the sender's key.

    Any error pattern whose empirical rate is within ``q_z_threshold`` is
    corrected; above it the holder keeps its key, as a code of that capacity
    would fail. Success is judged by comparing GF(2^64) tags of the
    reconciled and the sender's key.
    """
    sender_key = np.asarray(sender_key, dtype=np.uint8)
    holder_key = np.asarray(holder_key, dtype=np.uint8)
    if sender_key.shape != holder_key.shape:
        raise ContractViolation(
            f"key lengths differ: {sender_key.shape[0]} vs {holder_key.shape[0]}"
        )
    if not (0.0 < eps_ec < 1.0):
        raise DomainError(f"eps_ec={eps_ec!r} outside (0, 1)")
    n = int(sender_key.shape[0])
    errors = int(np.count_nonzero(sender_key != holder_key))
    error_rate = errors / n if n else 0.0

    corrected = sender_key.copy() if error_rate <= q_z_threshold else holder_key.copy()
    width = tag_length(N, eps_ec)
    verified = bool(
        np.array_equal(
            gf64_tag(corrected, tag_key, width), gf64_tag(sender_key, tag_key, width)
        )
    )
    logger.debug("ec: %d/%d errors, verified=%s", errors, n, verified)
    return ReconciliationResult(
        corrected=corrected,
        leakage_bits=ec_leakage(n, q_z_threshold, eps_ec, N),
        verified=verified,
        error_rate=error_rate,
    )


# ---------- Privacy amplification ----------


def pa_seed_bits(key_len: int, out_len: int) -> int:
    """Seed length of the multiply-add-shift family, 2(w + m - 1) bits."""
    if key_len <= 0 or out_len <= 0:
        return 0
    return 2 * (key_len + out_len - 1)


def privacy_amplify(key: np.ndarray, out_len: int, hash_seed: np.ndarray) -> np.ndarray:
    """
    Compress ``key`` (w bits) to ``out_len`` (m bits) with
    h_{a,b}(x) = ((a x + b) mod 2^(w+m-1)) >> (w-1),
    a and b read from the first 2(w+m-1) seed bits.
    """
    key = np.asarray(key, dtype=np.uint8)
    w = int(key.shape[0])
    if out_len < 0 or out_len > w:
        raise ContractViolation(f"cannot amplify {w} bits to {out_len}")
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    width = w + out_len - 1
    hash_seed = np.asarray(hash_seed, dtype=np.uint8)
    if hash_seed.shape[0] < 2 * width:
        raise ContractViolation(
            f"hash seed of {hash_seed.shape[0]} bits, {2 * width} needed"
        )
    a = to_int(hash_seed[:width])
    b = to_int(hash_seed[width : 2 * width])
    x = to_int(key)
    digest = ((a * x + b) & ((1 << width) - 1)) >> (w - 1)
    return from_int(digest, out_len)
