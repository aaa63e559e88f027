# src/protocol/multipartite.py

from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Mapping, Set, Tuple

import numpy as np

from src.allocation.costs import test_round_count, testing_key_bits
from src.allocation.optimizer import budget_for_target, optimize_fkr
from src.anon.designation import identity_designation
from src.anon.primitives import anonymous_broadcast, anonymous_transmission, parity_rounds
from src.anon.transcript import BROADCAST, Primitive
from src.errors import ContractViolation
from src.netsim.pairwise import generate_pairwise_keys
from src.netsim.rounds import RoundBatch, sample_ghz_rounds
from src.protocol.config import FULLY_THETA, KPreMode, ProtocolConfig, Variant
from src.protocol.events import RunEventType
from src.protocol.executor import ConferenceKeyResult, ProtocolRun
from src.protocol.postprocessing import (
    error_correct,
    estimation_passes,
    gf64_tag,
    pa_seed_bits,
    privacy_amplify,
    syndrome_bits,
    syndrome_length,
    tag_length,
)
from src.protocol.state_machine import RunState, RunStatus
from src.protocol.testing_key import (
    draw_test_schedule,
    pack_test_schedule,
    schedule_mask,
    unpack_test_schedule,
)
from src.rates.finite import (
    finite_key_length,
    fully_multipartite_key_length,
    optimize_common_test_fraction,
)
from src.rates.models import EpsilonBudget, n_pairs


logger = logging.getLogger(__name__)


# ---------- Shared steps ----------


def _public_round(
    run: ProtocolRun, payloads: Mapping[int, np.ndarray], n_bits: int, label: str
) -> Dict[int, np.ndarray]:
    """Every party broadcasts n_bits in the clear; parties without a payload send noise."""
    said = {}
    for party in range(run.config.n_parties):
        bits = payloads.get(party)
        if bits is None:
            bits = run.stream("public", label, party).bits(n_bits)
        said[party] = np.asarray(bits, dtype=np.uint8)
        run.transcript.append(Primitive.PUBLIC, party, said[party])
    return said


def _publish_randomness(run: ProtocolRun, label: str, n_bits: int) -> np.ndarray:
    """Public coins, e.g. hash seeds, announced on the broadcast channel."""
    bits = run.stream("beacon", label).bits(n_bits)
    run.transcript.append(Primitive.PUBLIC, BROADCAST, bits)
    return bits


def _tag_key(run: ProtocolRun, width: int) -> List[int]:
    lanes = -(-width // 64)
    words = _publish_randomness(run, "ec-tag", 64 * lanes).reshape(lanes, 64)
    return [int.from_bytes(np.packbits(word).tobytes(), "big") for word in words]


def _measure(run: ProtocolRun, schedule: np.ndarray, L: int) -> RoundBatch:
    config = run.config
    batch = sample_ghz_rounds(
        schedule_mask(schedule, L), config.roles, config.sampled_channel, run.stream("rounds")
    )
    run.advance(
        RunState.MEASURED,
        RunEventType.MEASUREMENT,
        {"rounds": L, "test_rounds": int(schedule.shape[0])},
    )
    return batch


def _broadcast_testing_key(
    run: ProtocolRun, k_t: np.ndarray, schedule: np.ndarray, L: int, k: int
) -> None:
    """TKB: the testing key over Parity, so every party learns the test rounds."""
    public = anonymous_broadcast(
        run.config.roles.sender, k_t, run.store, run.stream("tkb"), run.transcript
    )
    if not np.array_equal(unpack_test_schedule(public, L, k), schedule):
        raise ContractViolation("broadcast testing key does not decode to the schedule")
    run.note(RunEventType.TESTING_KEY, {"broadcast_bits": int(k_t.shape[0])})


def _estimate(
    run: ProtocolRun, batch: RoundBatch, budget: EpsilonBudget, n_key: int
) -> bool:
    """
    PE: one parity round per test round. Non-senders feed their X outcome,
    the sender a private coin it strips off again together with its own
    outcome, leaving the parity of the whole round.
    """
    config = run.config
    sender = config.roles.sender
    test_bits = batch.test_bits()
    k = int(test_bits.shape[0])
    coins = run.stream("sender", "coins").bits(k)

    inputs = np.ascontiguousarray(test_bits.T)
    inputs[sender] = coins
    parity = parity_rounds(inputs, run.store, run.stream("pe"), run.transcript)
    odd = parity ^ coins ^ test_bits[:, sender]

    run.qx_obs = float(np.mean(odd)) if k else 0.0
    passed = estimation_passes(
        run.qx_obs, config.noise.q_x, n_key, k, budget.eps_x, config.gamma_fn
    )
    run.advance(
        RunState.ESTIMATED,
        RunEventType.ESTIMATION,
        {"qx_obs": run.qx_obs, "test_rounds": k, "passed": passed},
    )
    return passed


def _reconcile(
    run: ProtocolRun,
    batch: RoundBatch,
    budget: EpsilonBudget,
    tag_key: List[int],
) -> Tuple[Dict[int, np.ndarray], Set[int]]:
    config = run.config
    sender = config.roles.sender
    sender_key = batch.key_bits(sender)
    corrected = {sender: sender_key}
    failed = set()
    for party in sorted(config.roles.receivers):
        result = error_correct(
            sender_key,
            batch.key_bits(party),
            config.ec_threshold,
            budget.eps_ec,
            config.n_parties,
            tag_key=tag_key,
        )
        corrected[party] = result.corrected
        if not result.verified:
            failed.add(party)
    return corrected, failed


def _amplify(
    run: ProtocolRun, corrected: Mapping[int, np.ndarray], out_len: int, n_key: int
) -> Dict[int, np.ndarray]:
    seed = _publish_randomness(run, "pa-seed", pa_seed_bits(n_key, out_len))
    keys = {
        party: privacy_amplify(corrected[party], out_len, seed)
        for party in sorted(run.config.roles.keyholders)
    }
    run.note(RunEventType.AMPLIFICATION, {"length": out_len, "seed_bits": int(seed.shape[0])})
    return keys


def _empty_keys(keyholders: Iterable[int]) -> Dict[int, np.ndarray]:
    return {party: np.zeros(0, dtype=np.uint8) for party in sorted(keyholders)}


# ---------- AQCKA_M ----------


def _announce_with_k_pre(run: ProtocolRun, flagged: Set[int]) -> bool:
    """
    One public bit per party; keyholders encrypt theirs with their k_Pre slot,
    so only keyholders read the flags. Costs N bits of k_Pre.
    """
    config = run.config
    pad = run.store.consume_pre(config.n_parties)
    payloads = {
        party: np.array([int(party in flagged) ^ int(pad[party])], dtype=np.uint8)
        for party in config.roles.keyholders
    }
    said = _public_round(run, payloads, 1, "abort")
    return any(int(said[party][0]) ^ int(pad[party]) for party in config.roles.keyholders)


def _aqcka_m(run: ProtocolRun) -> ConferenceKeyResult:
    config = run.config
    N = config.n_parties
    roles = config.roles
    sender = roles.sender
    noise = config.noise

    # 0. resources
    alloc = optimize_fkr(
        config.l_tot, noise, config.eps_tot_target, N, config.gamma_fn, integral=True
    )
    if not alloc.is_feasible:
        logger.info("aqcka_m l_tot=%d: no positive key length", config.l_tot)
        return run.complete(_empty_keys(roles.keyholders), 0, None)

    budget = alloc.budget
    L, p = alloc.l_multi, alloc.p
    run.l_multi, run.l_bi, run.p = L, alloc.l_bi, p
    k = test_round_count(L, p)
    n_key = L - k
    T = testing_key_bits(L, p)
    syn_len = syndrome_length(n_key, config.ec_threshold)
    tag_len = tag_length(N, budget.eps_ec)

    run.store = generate_pairwise_keys(
        alloc.l_bi,
        alloc.p_b,
        noise,
        budget,
        run.stream("links"),
        config.gamma_fn,
        config.sampled_channel,
    )
    if config.k_pre_mode is KPreMode.SUPPLIED:
        run.store.provision_pre(config.k_pre)
    else:
        run.store.provision_pre(run.stream("k_pre").bits(T + syn_len + tag_len + N))
    run.advance(
        RunState.RESOURCES_READY,
        RunEventType.RESOURCES_READY,
        {
            "l_multi": L,
            "l_bi": alloc.l_bi,
            "p": p,
            "p_b": alloc.p_b,
            "min_pool": run.store.min_available(),
            "k_pre_bits": run.store.k_pre_available,
        },
    )

    # 1. identity designation
    delivered = identity_designation(
        roles, run.store, budget, run.stream("designation"), run.transcript,
        reveal_identities=True, candidates=config.candidates,
    )
    run.advance(
        RunState.DESIGNATED,
        RunEventType.DESIGNATION,
        {"keyholders_notified": sum(role.is_keyholder for role in delivered.values())},
    )

    # 2. testing-key distribution under k_Pre
    schedule = draw_test_schedule(L, k, run.stream("sender", "schedule"))
    k_t = pack_test_schedule(schedule, L, k, T)
    pad = run.store.consume_pre(T)
    said = _public_round(run, {sender: k_t ^ pad}, T, "tkd")
    if not np.array_equal(unpack_test_schedule(said[sender] ^ pad, L, k), schedule):
        raise ContractViolation("keyholders decoded a different test schedule")
    run.note(RunEventType.TESTING_KEY, {"encrypted_bits": T})

    # 3. measurement
    batch = _measure(run, schedule, L)

    # 4. testing-key broadcast
    _broadcast_testing_key(run, k_t, schedule, L, k)

    # 5. parameter estimation
    if not _estimate(run, batch, budget, n_key):
        _announce_with_k_pre(run, {sender})
        return run.abort(
            RunStatus.ABORTED_PE, f"observed phase error {run.qx_obs:.6g} above threshold"
        )

    # 6. error correction, encrypted under k_Pre
    tag_key = _tag_key(run, tag_len)
    sender_key = batch.key_bits(sender)
    message = np.concatenate(
        [syndrome_bits(sender_key, syn_len), gf64_tag(sender_key, tag_key, tag_len)]
    )
    pad = run.store.consume_pre(syn_len + tag_len)
    _public_round(run, {sender: message ^ pad}, syn_len + tag_len, "ec")
    corrected, failed = _reconcile(run, batch, budget, tag_key)
    aborted = _announce_with_k_pre(run, failed)
    run.advance(
        RunState.RECONCILED,
        RunEventType.RECONCILIATION,
        {"syndrome_bits": syn_len, "tag_bits": tag_len, "failed": sorted(failed)},
    )
    if aborted:
        return run.abort(RunStatus.ABORTED_EC, f"verification failed at {sorted(failed)}")

    # 7. privacy amplification to the net length
    report = finite_key_length(L, p, noise, budget, N, gamma_fn=config.gamma_fn, rounds=config.l_tot)
    out_len = min(report.secure_bits, n_key)
    keys = _amplify(run, corrected, out_len, n_key)
    return run.complete(keys, out_len, report)


def run_aqcka_m(config: ProtocolConfig) -> ConferenceKeyResult:
    """AQCKA_M end to end: pairwise keys and k_Pre, ID, TKD, GHZ rounds, TKB, PE, EC, PA."""
    if config.variant is not Variant.AQCKA_M:
        raise ContractViolation(f"run_aqcka_m got variant {config.variant.value}")
    return ProtocolRun(config).execute(_aqcka_m)


# ---------- Fully-AQCKA_M ----------


def _fully_aqcka_m(run: ProtocolRun) -> ConferenceKeyResult:
    config = run.config
    N = config.n_parties
    roles = config.roles
    sender = roles.sender
    noise = config.noise

    budget = budget_for_target(config.eps_tot_target, N, FULLY_THETA)
    L, p = int(config.l_multi), float(config.p)
    l_bi = config.l_tot - L
    run.l_multi, run.l_bi, run.p = L, l_bi, p
    k = test_round_count(L, p)
    n_key = L - k
    T = testing_key_bits(L, p)
    r_v = budget.r_v

    _, p_b = optimize_common_test_fraction(
        l_bi // n_pairs(N), noise, budget, config.gamma_fn, refine=False
    )
    run.store = generate_pairwise_keys(
        l_bi, p_b, noise, budget, run.stream("links"), config.gamma_fn, config.sampled_channel
    )
    run.advance(
        RunState.RESOURCES_READY,
        RunEventType.RESOURCES_READY,
        {"l_multi": L, "l_bi": l_bi, "p": p, "p_b": p_b, "min_pool": run.store.min_available()},
    )

    delivered = identity_designation(
        roles, run.store, budget, run.stream("designation"), run.transcript,
        reveal_identities=False, candidates=config.candidates,
    )
    run.advance(
        RunState.DESIGNATED,
        RunEventType.DESIGNATION,
        {"keyholders_notified": sum(role.is_keyholder for role in delivered.values())},
    )

    # testing key and abort string, one anonymous slot per other party
    sender_stream = run.stream("sender", "schedule")
    schedule = draw_test_schedule(L, k, sender_stream)
    k_t = pack_test_schedule(schedule, L, k, T)
    r_l = sender_stream.bits(r_v)
    abort_strings = {sender: r_l}
    for slot in range(N):
        if slot == sender:
            continue
        if roles.is_keyholder(slot):
            payload = np.concatenate([k_t, r_l])
        else:
            payload = sender_stream.bits(T + r_v)
        got = anonymous_transmission(
            sender, slot, payload, run.store, run.stream("tkd", slot), run.transcript
        )
        if roles.is_keyholder(slot):
            if not np.array_equal(unpack_test_schedule(got[:T], L, k), schedule):
                raise ContractViolation(f"keyholder {slot} decoded a different test schedule")
            abort_strings[slot] = got[T:]
    run.note(RunEventType.TESTING_KEY, {"slots": N - 1, "slot_bits": T + r_v})

    batch = _measure(run, schedule, L)
    _broadcast_testing_key(run, k_t, schedule, L, k)
    passed = _estimate(run, batch, budget, n_key)

    # EC syndrome and tag over Parity
    syn_len = syndrome_length(n_key, config.ec_threshold)
    tag_len = tag_length(N, budget.eps_ec)
    tag_key = _tag_key(run, tag_len)
    sender_key = batch.key_bits(sender)
    message = np.concatenate(
        [syndrome_bits(sender_key, syn_len), gf64_tag(sender_key, tag_key, tag_len)]
    )
    anonymous_broadcast(sender, message, run.store, run.stream("ec"), run.transcript)
    corrected, failed = _reconcile(run, batch, budget, tag_key)

    # abort signal readable only against r_l
    abort_stream = run.stream("abort")
    signal = np.zeros((N, r_v), dtype=np.uint8)
    signal[sender] = r_l if passed else abort_stream.bits(r_v)
    for party in sorted(failed):
        signal[party] = abort_stream.bits(r_v)
    heard = parity_rounds(signal, run.store, run.stream("abort-parity"), run.transcript)
    aborting = sorted(
        party for party in roles.keyholders if not np.array_equal(heard, abort_strings[party])
    )
    run.advance(
        RunState.RECONCILED,
        RunEventType.RECONCILIATION,
        {"syndrome_bits": syn_len, "tag_bits": tag_len, "failed": sorted(failed)},
    )
    if not passed:
        return run.abort(
            RunStatus.ABORTED_PE, f"observed phase error {run.qx_obs:.6g} above threshold"
        )
    if aborting:
        return run.abort(RunStatus.ABORTED_EC, f"verification failed at {sorted(failed)}")

    report = fully_multipartite_key_length(
        L, p, noise, budget, N, gamma_fn=config.gamma_fn, rounds=config.l_tot
    )
    out_len = min(report.secure_bits, n_key)
    keys = _amplify(run, corrected, out_len, n_key)
    return run.complete(keys, out_len, report)


def run_fully_aqcka_m(config: ProtocolConfig) -> ConferenceKeyResult:
    """Fully-AQCKA_M: no k_Pre; TKD, EC and the abort signal all travel anonymously."""
    if config.variant is not Variant.FULLY_AQCKA_M:
        raise ContractViolation(f"run_fully_aqcka_m got variant {config.variant.value}")
    return ProtocolRun(config).execute(_fully_aqcka_m)
