# src/netsim/pairwise.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.allocation.costs import test_round_count
from src.anon.keystore import KeyStore
from src.netsim.rounds import sample_bell_rounds
from src.netsim.sampler import SeededSampler
from src.netsim.topology import StarNetwork
from src.protocol.postprocessing import (
    error_correct,
    estimation_passes,
    pa_seed_bits,
    privacy_amplify,
)
from src.rates.finite import GammaFn, bipartite_finite_key_length
from src.rates.models import EpsilonBudget, NoiseModel, Pair


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairLinkReport:
    pair: Pair
    rounds: int
    test_rounds: int
    qx_obs: float
    qz_obs: float
    key_bits: int
    status: str


def _link_key(
    pair: Pair,
    rounds: int,
    p_b: float,
    noise: NoiseModel,
    channel: NoiseModel,
    budget: EpsilonBudget,
    sampler: SeededSampler,
    gamma_fn: Optional[GammaFn],
):
    empty = np.zeros(0, dtype=np.uint8)
    if rounds <= 0:
        return empty, PairLinkReport(pair, 0, 0, 0.0, 0.0, 0, "no_rounds")

    q_xb, q_zb = noise.pair_rates(*pair)
    target = bipartite_finite_key_length(rounds, p_b, q_xb, q_zb, budget, gamma_fn)
    k_test = test_round_count(rounds, p_b)
    n_key = rounds - k_test
    out_len = min(max(0, math.floor(target)), n_key)
    if out_len <= 0:
        return empty, PairLinkReport(pair, rounds, k_test, 0.0, 0.0, 0, "no_key")

    is_x = np.zeros(rounds, dtype=bool)
    is_x[sampler.subset(rounds, k_test)] = True
    first, second = sample_bell_rounds(pair, channel, is_x, sampler)

    qx_obs = float(np.mean(first[is_x] != second[is_x])) if k_test else 0.0
    key_a, key_b = first[~is_x], second[~is_x]
    qz_obs = float(np.mean(key_a != key_b)) if n_key else 0.0

    if not estimation_passes(qx_obs, q_xb, n_key, k_test, budget.eps_x_b, gamma_fn):
        return empty, PairLinkReport(pair, rounds, k_test, qx_obs, qz_obs, 0, "aborted_pe")

    tag_key = [sampler.integer(64) for _ in range(2)]
    reconciled = error_correct(key_a, key_b, q_zb, budget.eps_ec_b, 2, tag_key=tag_key)
    if not reconciled.verified:
        return empty, PairLinkReport(pair, rounds, k_test, qx_obs, qz_obs, 0, "aborted_ec")

    seed = sampler.bits(pa_seed_bits(n_key, out_len))
    final_a = privacy_amplify(key_a, out_len, seed)
    final_b = privacy_amplify(reconciled.corrected, out_len, seed)
    if not np.array_equal(final_a, final_b):
        return empty, PairLinkReport(pair, rounds, k_test, qx_obs, qz_obs, 0, "aborted_ec")
    return final_a, PairLinkReport(pair, rounds, k_test, qx_obs, qz_obs, out_len, "success")


def generate_pairwise_keys(
    l_bi: int,
    p_b: float,
    noise: NoiseModel,
    budget: EpsilonBudget,
    sampler: SeededSampler,
    gamma_fn: Optional[GammaFn] = None,
    channel: Optional[NoiseModel] = None,
    reports: Optional[Dict[Pair, PairLinkReport]] = None,
) -> KeyStore:
    """
    Run BBM92 on every link and collect the secret keys in a KeyStore.

    ``l_bi`` rounds are shared out evenly (remainder to the first pairs). Each
    link tests a ``p_b`` share of its rounds in the X basis, estimates the
    phase error, reconciles its Z-basis key and hashes it down to
    floor(l_B) bits. A link that aborts, or whose l_B is not positive, leaves
    an empty pool. ``noise`` holds the thresholds, ``channel`` (default
    ``noise``) the rates actually sampled. When ``reports`` is given it is
    filled with one PairLinkReport per pair.
    """
    channel = channel or noise
    network = StarNetwork(noise)
    pools = {}
    for pair, rounds in network.distribute_rounds(l_bi).items():
        key, report = _link_key(
            pair,
            rounds,
            p_b,
            noise,
            channel,
            budget,
            sampler.for_path("pair", *pair),
            gamma_fn,
        )
        pools[pair] = key
        if reports is not None:
            reports[pair] = report
        logger.debug(
            "link %d-%d: %s, %d rounds, %d key bits",
            pair[0],
            pair[1],
            report.status,
            rounds,
            report.key_bits,
        )
    return KeyStore(noise.n_parties, pools)
