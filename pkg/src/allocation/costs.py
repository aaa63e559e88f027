# src/allocation/costs.py

from __future__ import annotations

import math
from typing import Dict, Tuple

import numpy as np
from scipy.special import gammaln

from src.errors import DomainError
from src.rates.entropy import LN2, error_entropy, log2
from src.rates.models import EpsilonBudget, n_pairs


SCHEDULE_BLOCK: int = 1 << 14


def f_dt_length(N: int, eps_enc: float) -> float:
    """
    Length of the encoded role string used by identity designation,
    N - 1 + log2 N + 2[log2(N - 1 + log2 N) + log2(1/eps_enc)].
    """
    if N < 2:
        raise DomainError(f"N={N} must be at least 2")
    if not (0.0 < eps_enc <= 1.0):
        raise DomainError(f"eps_enc={eps_enc!r} outside (0, 1]")
    head = N - 1 + float(log2(N))
    return head + 2.0 * (float(log2(head)) + float(log2(1.0 / eps_enc)))


def id_bits(N: int, budget: EpsilonBudget) -> float:
    return N * N * (N - 1) * (3 * budget.r_v + f_dt_length(N, budget.eps_enc))


def subprotocol_bit_costs(
    N: int, L: float, p: float, budget: EpsilonBudget
) -> Tuple[float, float, float]:
    """
    Pairwise key bits consumed network-wide by the anonymous subprotocols.

    Returns
    -------
    Tuple[float, float, float]
        (ID, TKB, PE) where ID = N^2(N-1)(3 r_V + |F|), TKB = L h(p) N(N-1)
        and PE = L p N(N-1). Values are real; rounding happens at debit time.
    """
    if L < 0:
        raise DomainError(f"L={L!r} must be non-negative")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p={p!r} outside [0, 1]")
    ordered = N * (N - 1)
    tkb = L * error_entropy(p) * ordered
    pe = L * p * ordered
    return id_bits(N, budget), tkb, pe


def fully_multipartite_bit_costs(
    N: int, L: float, p: float, budget: EpsilonBudget, q_z: float
) -> Dict[str, float]:
    """
    Pairwise key demand of a fully-AQCKA_M run, by subprotocol.

    The testing key and the r_V-bit abort string reach each keyholder through
    slot-addressed anonymous transmission (N-1 slots, N(N-1) bits per slot
    bit); the EC syndrome and the abort signal travel over Parity.
    """
    id_cost, tkb, pe = subprotocol_bit_costs(N, L, p, budget)
    ordered = N * (N - 1)
    syndrome = L * (1.0 - p) * error_entropy(q_z) + float(
        log2(2.0 * (N - 1) / budget.eps_ec)
    )
    costs = {
        "id": id_cost,
        "tkd": (N - 1) * ordered * (L * error_entropy(p) + budget.r_v),
        "tkb": tkb,
        "pe": pe,
        "ec": syndrome * ordered,
        "abort": budget.r_v * ordered,
    }
    costs["total"] = math.fsum(costs.values())
    return costs


# ---------- Integer debit schedule ----------


def test_round_count(L: int, p: float) -> int:
    """Number of test rounds the sender schedules among L multipartite rounds."""
    if L <= 0:
        return 0
    return min(L, max(1, math.ceil(L * p)))


def schedule_blocks(L: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Block lengths and per-block test counts of a stratified schedule.

    Rounds are cut into SCHEDULE_BLOCK-sized blocks (the last one shorter)
    and block b receives floor(k * end_b / L) - floor(k * start_b / L) of
    the k test rounds.
    """
    if L <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    ends = np.minimum(np.arange(1, -(-L // SCHEDULE_BLOCK) + 1, dtype=np.int64) * SCHEDULE_BLOCK, L)
    starts = np.concatenate([[0], ends[:-1]]).astype(np.int64)
    counts = (k * ends) // L - (k * starts) // L
    return ends - starts, counts


def schedule_code_bits(L: int, k: int) -> int:
    """
    Bits that index every stratified k-subset of L rounds.

    Never more than ceil(log2 C(L, k)); evaluated with log-gamma and rounded
    up with a margin covering floating-point error.
    """
    if k <= 0 or k >= L:
        return 0
    lengths, counts = schedule_blocks(L, k)
    log_count = gammaln(lengths + 1.0) - gammaln(counts + 1.0) - gammaln(lengths - counts + 1.0)
    total = float(np.sum(log_count)) / LN2
    return max(0, math.ceil(total + 1e-6 * (1 + lengths.shape[0])))


def testing_key_bits(L: int, p: float) -> int:
    """
    Length of the broadcast testing key: the accounted ceil(L h(p)) bits,
    or the schedule-code length if the rounded count needs more.
    """
    if L <= 0:
        return 0
    accounted = math.ceil(L * error_entropy(p))
    return max(accounted, schedule_code_bits(L, test_round_count(L, p)))


def id_bits_per_pair(N: int, budget: EpsilonBudget) -> int:
    return math.ceil(id_bits(N, budget) / n_pairs(N))


def pair_debit_schedule(N: int, L: int, p: float, budget: EpsilonBudget) -> Dict[str, int]:
    """
    Whole bits an AQCKA_M run debits from every pairwise pool.

    Each Parity round costs every unordered pair two bits (one per direction).
    """
    schedule = {
        "id": id_bits_per_pair(N, budget),
        "tkb": 2 * testing_key_bits(L, p),
        "pe": 2 * test_round_count(L, p),
    }
    schedule["total"] = sum(schedule.values())
    return schedule
