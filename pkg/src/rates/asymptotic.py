# src/rates/asymptotic.py

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from src.errors import DomainError
from src.rates.entropy import binary_entropy
from src.rates.models import NoiseModel, all_pairs, n_pairs


def _check_rate(name: str, value: float) -> None:
    if not (0.0 <= value <= 0.5):
        raise DomainError(f"{name}={value!r} outside [0, 0.5]")


def _clamp_unit(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def akr_multipartite(q_x: float, q_z: float) -> float:
    """r_M = 1 - h(Q_X) - h(Q_Z), clamped to [0, 1]."""
    _check_rate("q_x", q_x)
    _check_rate("q_z", q_z)
    return _clamp_unit(1.0 - binary_entropy(q_x) - binary_entropy(q_z))


def pairwise_sigma(q_xb: float, q_zb: float) -> float:
    """Private-bit rate of one BBM92 link, sigma = 1 - h(Q_Xb) - h(Q_Zb)."""
    _check_rate("q_xb", q_xb)
    _check_rate("q_zb", q_zb)
    return _clamp_unit(1.0 - binary_entropy(q_xb) - binary_entropy(q_zb))


def akr_bipartite(noise: NoiseModel) -> float:
    """
    Asymptotic AQCKA_B rate.

    r_B = 1 / ([N(N-1)/C(N,2)] * sum over pairs of 1/sigma). A pair that cannot
    sustain key (sigma <= 0) drives the rate to zero.
    """
    n = noise.n_parties
    reciprocal = 0.0
    for q, t in all_pairs(n):
        sigma = pairwise_sigma(*noise.pairwise[(q, t)])
        if sigma <= 0.0:
            return 0.0
        reciprocal += 1.0 / sigma
    weight = n * (n - 1) / n_pairs(n)
    return 1.0 / (weight * reciprocal)


def akr_fully_multipartite(q_x: float, q_z: float, noise: NoiseModel) -> float:
    """
    Fully-AQCKA_M rate r_M / (1 + h(Q_Z)/r_B).

    The syndrome travels over Parity, so every h(Q_Z) bit is paid for in
    pairwise key; with Q_Z = 0 the rate equals r_M.
    """
    r_m = akr_multipartite(q_x, q_z)
    penalty = binary_entropy(q_z)
    if penalty == 0.0:
        return r_m
    r_b = akr_bipartite(noise)
    if r_b <= 0.0:
        return 0.0
    return r_m / (1.0 + penalty / r_b)


def akr_fully_bipartite(noise: NoiseModel) -> float:
    """Fully-AQCKA_B rate r_B / (N - 1)."""
    return akr_bipartite(noise) / (noise.n_parties - 1)


# ---------- Derived curves ----------


def fully_advantage_curve(
    n_parties: int, q_x: float, q_z_values: Sequence[float]
) -> List[Tuple[float, float]]:
    """
    Ratio r_fully-M / r_fully-B across a Q_Z sweep under symmetric equal noise
    (every Bell pair sees the GHZ error rates). Tends to N(N-1)^2 as Q_Z -> 0.

    Returns
    -------
    List[Tuple[float, float]]
        (q_z, ratio) in input order; ratio is 0.0 where r_fully-B vanishes.
    """
    curve: List[Tuple[float, float]] = []
    for q_z in q_z_values:
        noise = NoiseModel.symmetric(n_parties, q_x, q_z)
        fully_b = akr_fully_bipartite(noise)
        fully_m = akr_fully_multipartite(q_x, q_z, noise)
        ratio = fully_m / fully_b if fully_b > 0.0 else 0.0
        curve.append((q_z, ratio))
    return curve


def akr_by_keyholder_count(noise: NoiseModel, sender: int = 0) -> Dict[int, float]:
    """
    r_M for every keyholder count M = 2..N.

    The keyholder set grows from the sender by adding the party with the lowest
    GHZ Z error towards it (ties by index); Q_Z is the largest error among the
    sender-keyholder pairs.
    """
    n = noise.n_parties
    if not (0 <= sender < n):
        raise DomainError(f"sender {sender} outside 0..{n - 1}")
    others = sorted(
        (party for party in range(n) if party != sender),
        key=lambda party: (noise.ghz_z(sender, party), party),
    )
    rates: Dict[int, float] = {}
    for m in range(2, n + 1):
        chosen = others[: m - 1]
        q_z = max(noise.ghz_z(sender, party) for party in chosen)
        rates[m] = akr_multipartite(noise.q_x, q_z)
    return rates


def multipartite_advantage(noise: NoiseModel) -> float:
    """r_M / r_B for the configured noise, or math.inf when r_B vanishes."""
    r_b = akr_bipartite(noise)
    r_m = akr_multipartite(noise.q_x, noise.q_z)
    if r_b <= 0.0:
        return math.inf if r_m > 0.0 else 0.0
    return r_m / r_b
