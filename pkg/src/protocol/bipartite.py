# src/protocol/bipartite.py

from __future__ import annotations

import logging
from typing import Dict

from src.allocation.optimizer import budget_for_target, optimize_bipartite_fkr
from src.anon.designation import DeliveredRole, identity_designation
from src.anon.primitives import anonymous_transmission, private_send, veto
from src.errors import ContractViolation
from src.netsim.pairwise import generate_pairwise_keys
from src.protocol.config import FULLY_THETA, ProtocolConfig, Variant
from src.protocol.events import RunEventType
from src.protocol.executor import ConferenceKeyResult, ProtocolRun
from src.protocol.state_machine import RunState, RunStatus
from src.rates.finite import fully_bipartite_conference_key_length, optimize_common_test_fraction
from src.rates.models import EpsilonBudget, n_pairs


logger = logging.getLogger(__name__)


def _links_and_designation(
    run: ProtocolRun, budget: EpsilonBudget, p_b: float, reveal_identities: bool
) -> Dict[int, DeliveredRole]:
    config = run.config
    run.l_multi, run.l_bi, run.p = 0, config.l_tot, 0.0
    run.store = generate_pairwise_keys(
        config.l_tot,
        p_b,
        config.noise,
        budget,
        run.stream("links"),
        config.gamma_fn,
        config.sampled_channel,
    )
    run.advance(
        RunState.RESOURCES_READY,
        RunEventType.RESOURCES_READY,
        {"l_bi": config.l_tot, "p_b": p_b, "min_pool": run.store.min_available()},
    )
    delivered = identity_designation(
        config.roles, run.store, budget, run.stream("designation"), run.transcript,
        reveal_identities=reveal_identities, candidates=config.candidates,
    )
    run.advance(
        RunState.DESIGNATED,
        RunEventType.DESIGNATION,
        {"keyholders_notified": sum(role.is_keyholder for role in delivered.values())},
    )
    return delivered


# ---------- AQCKA_B ----------


def _aqcka_b(run: ProtocolRun) -> ConferenceKeyResult:
    config = run.config
    N = config.n_parties
    roles = config.roles
    alloc = optimize_bipartite_fkr(
        config.l_tot, config.noise, config.eps_tot_target, N, config.gamma_fn
    )
    _links_and_designation(run, alloc.budget, alloc.p_b, reveal_identities=True)

    # every party talks to every other party: 2 ell' bits per pair
    length = max(0, run.store.min_available() // 2)
    k_conf = run.stream("sender", "k_conf").bits(length)
    received = {}
    for speaker in range(N):
        chatter = run.stream("chatter", speaker)
        for listener in range(N):
            if listener == speaker:
                continue
            if speaker == roles.sender and roles.is_keyholder(listener):
                payload = k_conf
            else:
                payload = chatter.bits(length)
            got = private_send(speaker, listener, payload, run.store, run.transcript)
            if speaker == roles.sender:
                received[listener] = got

    keys = {roles.sender: k_conf}
    keys.update({party: received[party] for party in sorted(roles.receivers)})
    return run.complete(keys, length, alloc.report)


def run_aqcka_b(config: ProtocolConfig) -> ConferenceKeyResult:
    """AQCKA_B: pairwise keys from every round, ID, then k_Conf over the private channels."""
    if config.variant is not Variant.AQCKA_B:
        raise ContractViolation(f"run_aqcka_b got variant {config.variant.value}")
    return ProtocolRun(config).execute(_aqcka_b)


# ---------- Fully-AQCKA_B ----------


def _fully_aqcka_b(run: ProtocolRun) -> ConferenceKeyResult:
    config = run.config
    N = config.n_parties
    roles = config.roles
    budget = budget_for_target(config.eps_tot_target, N, FULLY_THETA)
    _, p_b = optimize_common_test_fraction(
        config.l_tot / n_pairs(N), config.noise, budget, config.gamma_fn
    )
    delivered = _links_and_designation(run, budget, p_b, reveal_identities=False)

    # N-1 anonymous slots of ell' bits each, then an r_V-round veto
    spare = run.store.min_available() - 2 * budget.r_v
    length = max(0, spare // (2 * (N - 1)))
    sender_stream = run.stream("sender", "k_conf")
    k_conf = sender_stream.bits(length)
    keys = {roles.sender: k_conf}
    for slot in range(N):
        if slot == roles.sender:
            continue
        payload = k_conf if roles.is_keyholder(slot) else sender_stream.bits(length)
        got = anonymous_transmission(
            roles.sender, slot, payload, run.store, run.stream("slot", slot), run.transcript
        )
        if roles.is_keyholder(slot):
            keys[slot] = got

    # parties whose role string failed its checksum veto
    complaints = [int(not delivered[party].verified) for party in range(N)]
    if veto(complaints, budget.r_v, run.store, run.stream("abort"), run.transcript):
        return run.abort(RunStatus.ABORTED_EC, "a party vetoed after a failed role check")

    report = fully_bipartite_conference_key_length(
        config.l_tot, p_b, config.noise, budget, N, config.gamma_fn
    )
    return run.complete(dict(sorted(keys.items())), length, report)


def run_fully_aqcka_b(config: ProtocolConfig) -> ConferenceKeyResult:
    """Fully-AQCKA_B: k_Conf reaches each keyholder through its own anonymous slot."""
    if config.variant is not Variant.FULLY_AQCKA_B:
        raise ContractViolation(f"run_fully_aqcka_b got variant {config.variant.value}")
    return ProtocolRun(config).execute(_fully_aqcka_b)
