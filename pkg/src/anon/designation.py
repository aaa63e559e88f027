# src/anon/designation.py

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional

import numpy as np

from src.allocation.costs import f_dt_length, id_bits_per_pair
from src.anon.keystore import KeyStore
from src.anon.primitives import anonymous_transmission, parity_rounds, veto
from src.anon.transcript import Primitive, PublicTranscript
from src.bits import from_int, to_int
from src.errors import CollisionDetected, ContractViolation
from src.netsim.roles import RoleAssignment
from src.netsim.sampler import SeededSampler
from src.rates.models import EpsilonBudget, all_pairs


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeliveredRole:
    """
    What one party learned from identity designation.

    ``sender`` and ``keyholders`` are only set for keyholders of the
    non-fully variants; everyone else learns its own role and nothing more.
    """

    party: int
    is_keyholder: bool
    sender: Optional[int] = None
    keyholders: Optional[FrozenSet[int]] = None
    verified: bool = True


def role_string_width(n_parties: int, budget: EpsilonBudget) -> int:
    """Bits per role notification, the encoded-role length rounded up."""
    return math.ceil(f_dt_length(n_parties, budget.eps_enc))


def _index_bits(n_parties: int) -> int:
    return max(1, (n_parties - 1).bit_length())


def _checksum(recipient: int, header: np.ndarray, n_bits: int) -> np.ndarray:
    out = np.zeros(0, dtype=np.uint8)
    block = 0
    while out.shape[0] < n_bits:
        digest = hashlib.sha256(
            f"{recipient}/{block}/".encode("ascii") + np.packbits(header).tobytes()
        ).digest()
        out = np.concatenate([out, np.unpackbits(np.frombuffer(digest, dtype=np.uint8))])
        block += 1
    return out[:n_bits]


def encode_role(
    recipient: int, roles: RoleAssignment, width: int, reveal_identities: bool
) -> np.ndarray:
    """
    Role string for one recipient.

    Layout: keyholder flag, sender index, membership of the other N-1 parties
    in ascending order, then a checksum bound to the recipient filling the
    remaining bits. Identity fields stay zero unless revealed.
    """
    n = roles.n_parties
    is_keyholder = roles.is_keyholder(recipient)
    others = [party for party in range(n) if party != recipient]
    header = np.zeros(1 + _index_bits(n) + len(others), dtype=np.uint8)
    header[0] = int(is_keyholder)
    if reveal_identities and is_keyholder:
        header[1 : 1 + _index_bits(n)] = from_int(roles.sender, _index_bits(n))
        header[1 + _index_bits(n) :] = [int(roles.is_keyholder(p)) for p in others]
    if header.shape[0] > width:
        raise ContractViolation(f"role header of {header.shape[0]} bits exceeds width {width}")
    return np.concatenate([header, _checksum(recipient, header, width - header.shape[0])])


def decode_role(recipient: int, n_parties: int, bits: np.ndarray) -> DeliveredRole:
    index_bits = _index_bits(n_parties)
    header_len = 1 + index_bits + (n_parties - 1)
    header = bits[:header_len]
    verified = bool(
        np.array_equal(bits[header_len:], _checksum(recipient, header, bits.shape[0] - header_len))
    )
    is_keyholder = bool(header[0])
    membership = header[1 + index_bits :]
    if not is_keyholder or not membership.any():
        return DeliveredRole(party=recipient, is_keyholder=is_keyholder, verified=verified)
    others = [party for party in range(n_parties) if party != recipient]
    keyholders = frozenset([recipient] + [p for p, bit in zip(others, membership) if bit])
    return DeliveredRole(
        party=recipient,
        is_keyholder=True,
        sender=to_int(header[1 : 1 + index_bits]),
        keyholders=keyholders,
        verified=verified,
    )


# ---------- Designation ----------


def identity_designation(
    roles: RoleAssignment,
    store: KeyStore,
    budget: EpsilonBudget,
    sampler: SeededSampler,
    transcript: Optional[PublicTranscript] = None,
    reveal_identities: bool = True,
    candidates: Optional[Iterable[int]] = None,
) -> Dict[int, DeliveredRole]:
    """
    Anonymously settle the sender and tell every party its role.

    Runs three r_V-round phases (a veto announcing that someone wants to send,
    a round of random tags that only a lone candidate sees echoed back, a
    veto by any candidate whose tag came back altered) and then one
    anonymous transmission of the encoded role string to each party. Every
    pool is then padded up to the per-pair identity-designation cost.

    Raises
    ------
    CollisionDetected
        When more than one candidate tried to send, or when no candidate was
        heard.
    """
    n = roles.n_parties
    r_v = budget.r_v
    wanting = sorted({roles.sender} if candidates is None else set(candidates))
    if not wanting:
        raise ContractViolation("identity designation needs at least one sender candidate")
    before = store.consumed_by_pair()
    flags = [int(party in wanting) for party in range(n)]

    if not veto(flags, r_v, store, sampler, transcript):
        raise CollisionDetected("no sender candidate was heard")

    tags = np.zeros((n, r_v), dtype=np.uint8)
    for party in wanting:
        tags[party] = sampler.bits(r_v)
    echoed = parity_rounds(tags, store, sampler, transcript, Primitive.DESIGNATION)
    clashed = [int(not np.array_equal(echoed, tags[party])) if party in wanting else 0 for party in range(n)]

    if veto(clashed, r_v, store, sampler, transcript):
        logger.info("identity designation: collision among %d candidates", len(wanting))
        raise CollisionDetected(f"{len(wanting)} parties tried to become the sender")

    width = role_string_width(n, budget)
    delivered: Dict[int, DeliveredRole] = {}
    for recipient in range(n):
        payload = encode_role(recipient, roles, width, reveal_identities)
        received = anonymous_transmission(roles.sender, recipient, payload, store, sampler, transcript)
        delivered[recipient] = decode_role(recipient, n, received)

    target = id_bits_per_pair(n, budget)
    for pair in all_pairs(n):
        used = store.consumed(*pair) - before[pair]
        if used > target:
            raise ContractViolation(f"designation used {used} bits on {pair}, budget {target}")
        store.debit(*pair, target - used)

    logger.debug("identity designation: %d bits per pair", target)
    return delivered
