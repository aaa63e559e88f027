# tests/test_anon.py

from __future__ import annotations

import itertools
from collections import Counter

import numpy as np
import pytest

from src.allocation.costs import id_bits_per_pair
from src.allocation.optimizer import budget_for_target
from src.anon.audit import ZERO_DIGEST, TranscriptChain, record_digest
from src.anon.designation import (
    decode_role,
    encode_role,
    identity_designation,
    role_string_width,
)
from src.anon.keystore import KeyStore
from src.anon.primitives import (
    anonymous_broadcast,
    anonymous_transmission,
    parity_round,
    parity_rounds,
    parity_transcript,
    private_send,
    veto,
)
from src.anon.transcript import Primitive, PublicTranscript, export_transcript
from src.errors import CollisionDetected, ContractViolation, DomainError, KeyDepleted
from src.netsim.roles import RoleAssignment
from src.netsim.sampler import SeededSampler


def _store(n: int, bits: int = 4096, seed: int = 0) -> KeyStore:
    return KeyStore.uniform(n, bits, SeededSampler(seed))


# ---------- Key store ----------


def test_pool_is_read_front_to_back() -> None:
    store = KeyStore(2, {(0, 1): np.array([1, 0, 1, 1], dtype=np.uint8)})
    assert store.consume(1, 0, 2).tolist() == [1, 0]
    assert store.consume(0, 1, 2).tolist() == [1, 1]
    assert store.available(0, 1) == 0


def test_over_read_raises_key_depleted() -> None:
    store = KeyStore(3, {(0, 1): np.zeros(3, dtype=np.uint8)})
    with pytest.raises(KeyDepleted) as info:
        store.consume(0, 1, 4)
    assert info.value.pair == (0, 1)
    assert info.value.requested == 4 and info.value.available == 3
    with pytest.raises(KeyDepleted):
        store.consume_pre(1)


def test_k_pre_pool_accounting() -> None:
    store = KeyStore.empty(3)
    store.provision_pre(np.ones(10, dtype=np.uint8))
    store.consume_pre(4)
    assert store.k_pre_consumed == 4
    assert store.k_pre_available == 6


# ---------- Private channel ----------


def test_private_send_round_trip_and_transcript() -> None:
    store = _store(3)
    transcript = PublicTranscript()
    message = np.array([1, 1, 0, 1], dtype=np.uint8)
    assert np.array_equal(private_send(0, 2, message, store, transcript), message)
    record = transcript.records[0]
    assert record.primitive is Primitive.PRIVATE
    assert (record.speaker, record.recipient, record.n_bits) == (0, 2, 4)
    assert store.consumed(0, 2) == 4
    with pytest.raises(DomainError):
        private_send(1, 1, message, store)


# ---------- Parity ----------


@pytest.mark.parametrize("n", [3, 4])
def test_parity_round_matches_xor_exhaustively(n: int) -> None:
    store = _store(n, bits=2 * 2**n)
    sampler = SeededSampler(1)
    for inputs in itertools.product((0, 1), repeat=n):
        assert parity_round(inputs, store, sampler) == sum(inputs) % 2


def test_parity_rounds_cost_two_bits_per_pair_per_round() -> None:
    store = _store(4)
    transcript = PublicTranscript()
    inputs = SeededSampler(2).bits(4 * 10).reshape(4, 10)
    out = parity_rounds(inputs, store, SeededSampler(3), transcript)
    assert np.array_equal(out, np.bitwise_xor.reduce(inputs, axis=0))
    assert all(consumed == 20 for consumed in store.consumed_by_pair().values())
    assert len(transcript) == 4 * 3 + 4


def test_parity_checks_pools_before_consuming() -> None:
    store = KeyStore(3, {(0, 1): np.zeros(8), (0, 2): np.zeros(8), (1, 2): np.zeros(2)})
    with pytest.raises(KeyDepleted):
        parity_rounds(np.zeros((3, 2), dtype=np.uint8), store, SeededSampler(0))
    assert store.total_consumed() == 0


def test_parity_transcript_rejects_inconsistent_shares() -> None:
    inputs = np.array([[1], [0], [0]], dtype=np.uint8)
    shares = np.zeros((3, 3, 1), dtype=np.uint8)
    with pytest.raises(ContractViolation):
        parity_transcript(inputs, shares, np.zeros_like(shares))


def _public_view_distribution(sender: int) -> Counter:
    """Every public view of a 1-bit anonymous broadcast at N=3 over all shares and pads."""
    n = 3
    inputs = np.zeros((n, 1), dtype=np.uint8)
    inputs[sender, 0] = 1
    views: Counter = Counter()
    free = [(i, j) for i in range(n) for j in range(n) if i != j]
    pad_pairs = [(0, 1), (0, 2), (1, 2)]
    for share_bits in itertools.product((0, 1), repeat=len(free)):
        shares = np.zeros((n, n, 1), dtype=np.uint8)
        for (i, j), bit in zip(free, share_bits):
            shares[i, j, 0] = bit
        for i in range(n):
            shares[i, i, 0] = (np.bitwise_xor.reduce(shares[i, :, 0]) ^ shares[i, i, 0]) ^ inputs[i, 0]
        for pad_bits in itertools.product((0, 1), repeat=2 * len(pad_pairs)):
            pads = np.zeros((n, n, 1), dtype=np.uint8)
            for index, (q, t) in enumerate(pad_pairs):
                pads[q, t, 0] = pad_bits[2 * index]
                pads[t, q, 0] = pad_bits[2 * index + 1]
            views[parity_transcript(inputs, shares, pads).public_view()] += 1
    return views


def test_parity_public_view_does_not_depend_on_sender() -> None:
    reference = _public_view_distribution(0)
    for sender in (1, 2):
        assert _public_view_distribution(sender) == reference


# ---------- Veto, broadcast, transmission ----------


def test_veto_detects_lone_vetoer() -> None:
    trials = 10_000
    store = _store(3, bits=2 * 30 * trials, seed=4)
    sampler = SeededSampler(5)
    detected = sum(veto([0, 1, 0], 30, store, sampler) for _ in range(trials))
    assert detected == trials


def test_veto_silent_without_vetoers() -> None:
    store = _store(4)
    assert veto([0, 0, 0, 0], 30, store, SeededSampler(1)) is False
    with pytest.raises(DomainError):
        veto([0, 0, 0, 0], 0, store, SeededSampler(1))


def test_anonymous_broadcast_publishes_payload() -> None:
    store = _store(4)
    payload = SeededSampler(8).bits(40)
    assert np.array_equal(anonymous_broadcast(2, payload, store, SeededSampler(9)), payload)


def test_anonymous_transmission_reaches_only_recipient() -> None:
    store = _store(4)
    transcript = PublicTranscript()
    payload = SeededSampler(8).bits(64)
    got = anonymous_transmission(1, 3, payload, store, SeededSampler(9), transcript)
    assert np.array_equal(got, payload)
    announced = np.bitwise_xor.reduce(
        np.stack([r.bits() for r in transcript if r.recipient is None]), axis=0
    )
    assert not np.array_equal(announced, payload)


# ---------- Identity designation ----------


def test_role_string_round_trip() -> None:
    budget = budget_for_target(1e-8, 4, 0.75)
    roles = RoleAssignment.of(4, 2, {2, 0, 3})
    width = role_string_width(4, budget)
    decoded = decode_role(0, 4, encode_role(0, roles, width, reveal_identities=True))
    assert decoded.verified and decoded.is_keyholder
    assert decoded.sender == 2
    assert decoded.keyholders == frozenset({0, 2, 3})
    hidden = decode_role(1, 4, encode_role(1, roles, width, reveal_identities=True))
    assert not hidden.is_keyholder and hidden.sender is None


def test_designation_delivers_roles_and_pays_exact_budget() -> None:
    budget = budget_for_target(1e-8, 4, 0.75)
    roles = RoleAssignment.of(4, 1, {1, 2})
    store = _store(4, bits=id_bits_per_pair(4, budget))
    transcript = PublicTranscript(chain=TranscriptChain())
    delivered = identity_designation(roles, store, budget, SeededSampler(3), transcript)
    assert delivered[2].keyholders == frozenset({1, 2}) and delivered[2].sender == 1
    assert not delivered[0].is_keyholder and delivered[0].keyholders is None
    assert all(role.verified for role in delivered.values())
    assert store.min_available() == 0
    assert transcript.chain.verify_integrity()


def test_fully_designation_reveals_only_own_role() -> None:
    budget = budget_for_target(1e-8, 3, 0.75)
    roles = RoleAssignment.of(3, 0, {0, 2})
    store = _store(3, bits=id_bits_per_pair(3, budget))
    delivered = identity_designation(
        roles, store, budget, SeededSampler(3), reveal_identities=False
    )
    assert delivered[2].is_keyholder
    assert delivered[2].sender is None and delivered[2].keyholders is None


def test_designation_detects_colliding_candidates() -> None:
    budget = budget_for_target(1e-8, 3, 0.75)
    roles = RoleAssignment.everyone(3)
    store = _store(3, bits=id_bits_per_pair(3, budget))
    with pytest.raises(CollisionDetected):
        identity_designation(roles, store, budget, SeededSampler(3), candidates=[0, 2])
    with pytest.raises(ContractViolation):
        identity_designation(roles, _store(3), budget, SeededSampler(3), candidates=[])


# ---------- Transcript ----------


def test_transcript_chain_flags_a_relinked_entry() -> None:
    chain = TranscriptChain()
    chain.log_record({"seq": 0, "payload_hex": "a0"})
    chain.log_record({"seq": 1, "payload_hex": "80"})
    assert chain.chain[0]["previous_hash"] == ZERO_DIGEST
    assert chain.chain[2]["hash"] == record_digest(chain.chain[1]["hash"], {"seq": 1, "payload_hex": "80"})
    chain.chain[2]["previous_hash"] = chain.chain[0]["hash"]
    assert chain.first_broken_link() == 2


def test_transcript_chain_detects_tampering(tmp_path) -> None:
    transcript = PublicTranscript(chain=TranscriptChain())
    transcript.append(Primitive.PUBLIC, -1, np.array([1, 0, 1], dtype=np.uint8))
    transcript.append(Primitive.PRIVATE, 0, np.array([1], dtype=np.uint8), recipient=1)
    chain = transcript.chain
    assert len(chain) == 3 and chain.verify_integrity()
    assert TranscriptChain().tip() == TranscriptChain().tip()
    assert chain.first_broken_link() is None
    chain.chain[1]["record"]["payload_hex"] = "ff"
    assert not chain.verify_integrity()
    assert chain.first_broken_link() == 1

    path = tmp_path / "transcript.csv"
    export_transcript(transcript, path)
    assert path.read_text().splitlines() == [
        "seq,primitive,speaker,payload_hex",
        "0,public,-1,a0",
        "1,private,0,80",
    ]
