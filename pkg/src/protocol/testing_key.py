# src/protocol/testing_key.py

from __future__ import annotations

import math
from typing import List, Sequence

import numpy as np
from scipy.special import gammaln

from src.allocation.costs import schedule_blocks
from src.bits import from_int, to_int
from src.errors import ContractViolation, DomainError
from src.netsim.sampler import SeededSampler


# ---------- Enumerative code of one k-subset ----------


def encode_test_schedule(indices: Sequence[int], L: int) -> int:
    """
    Rank of a k-subset of range(L): sum of C(c_i, i + 1) over the sorted
    indices c_0 < c_1 < ... < c_{k-1}. Ranks fill [0, C(L, k)).
    """
    chosen = sorted(int(c) for c in indices)
    if len(set(chosen)) != len(chosen):
        raise ContractViolation("test schedule indices must be distinct")
    if chosen and (chosen[0] < 0 or chosen[-1] >= L):
        raise ContractViolation(f"test schedule indices outside 0..{L - 1}")
    return sum(math.comb(c, i + 1) for i, c in enumerate(chosen))


def _log_comb(n: float, j: int) -> float:
    return float(gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0))


def _largest_index(code: int, j: int, upper: int) -> int:
    """Largest c < upper with C(c, j) <= code."""
    if code <= 0:
        return j - 1
    target = math.log(code)
    lo, hi = j - 1, upper - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _log_comb(mid, j) <= target:
            lo = mid
        else:
            hi = mid
    c = hi
    while c >= j and math.comb(c, j) > code:
        c -= 1
    while c + 1 < upper and math.comb(c + 1, j) <= code:
        c += 1
    return c


def decode_test_schedule(code: int, L: int, k: int) -> np.ndarray:
    """Inverse of encode_test_schedule for a k-subset of range(L)."""
    if not (0 <= k <= L):
        raise DomainError(f"cannot decode {k} of {L}")
    if code < 0 or (k > 0 and code >= math.comb(L, k)):
        raise ContractViolation(f"code outside the {k}-of-{L} rank range")
    chosen: List[int] = []
    upper = L
    for j in range(k, 0, -1):
        c = _largest_index(code, j, upper)
        chosen.append(c)
        code -= math.comb(c, j)
        upper = c
    return np.array(sorted(chosen), dtype=np.int64)


# ---------- Stratified schedule ----------


def draw_test_schedule(L: int, k: int, sampler: SeededSampler) -> np.ndarray:
    """Sorted test-round indices, drawn uniformly inside every schedule block."""
    lengths, counts = schedule_blocks(L, k)
    out = []
    start = 0
    for length, count in zip(lengths.tolist(), counts.tolist()):
        out.append(start + sampler.subset(length, count))
        start += length
    if not out:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(out)


def pack_test_schedule(indices: np.ndarray, L: int, k: int, width: int) -> np.ndarray:
    """
    The testing key k_T: block ranks combined mixed-radix, first block least
    significant, written as ``width`` bits.
    """
    indices = np.asarray(indices, dtype=np.int64)
    lengths, counts = schedule_blocks(L, k)
    code = 0
    radix = 1
    start = 0
    for length, count in zip(lengths.tolist(), counts.tolist()):
        inside = indices[(indices >= start) & (indices < start + length)] - start
        if inside.shape[0] != count:
            raise ContractViolation(
                f"block at {start} holds {inside.shape[0]} test rounds, expected {count}"
            )
        code += encode_test_schedule(inside.tolist(), length) * radix
        radix *= math.comb(length, count)
        start += length
    if code >> width:
        raise ContractViolation(f"schedule code does not fit in {width} bits")
    return from_int(code, width)


def unpack_test_schedule(bits: np.ndarray, L: int, k: int) -> np.ndarray:
    code = to_int(np.asarray(bits, dtype=np.uint8))
    lengths, counts = schedule_blocks(L, k)
    out = []
    start = 0
    for length, count in zip(lengths.tolist(), counts.tolist()):
        code, rank = divmod(code, math.comb(length, count))
        out.append(start + decode_test_schedule(rank, length, count))
        start += length
    if code:
        raise ContractViolation("testing key carries bits beyond the schedule code")
    if not out:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(out)


def schedule_mask(indices: np.ndarray, L: int) -> np.ndarray:
    mask = np.zeros(L, dtype=bool)
    mask[np.asarray(indices, dtype=np.int64)] = True
    return mask
