# src/anon/primitives.py

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.anon.keystore import KeyStore
from src.anon.transcript import Primitive, PublicTranscript
from src.errors import ContractViolation, DomainError, KeyDepleted
from src.netsim.sampler import SeededSampler
from src.rates.models import all_pairs


logger = logging.getLogger(__name__)


# ---------- Private channel ----------


def private_send(
    sender: int,
    recipient: int,
    bits: np.ndarray,
    store: KeyStore,
    transcript: Optional[PublicTranscript] = None,
) -> np.ndarray:
    """
    One-time-pad ``bits`` from sender to recipient with their pairwise key.

    The ciphertext is what the wire sees and is appended to the transcript;
    the return value is what the recipient decrypts.
    """
    if sender == recipient:
        raise DomainError(f"party {sender} cannot send to itself")
    bits = np.asarray(bits, dtype=np.uint8)
    pad = store.consume(sender, recipient, int(bits.shape[0]))
    ciphertext = bits ^ pad
    if transcript is not None:
        transcript.append(Primitive.PRIVATE, sender, ciphertext, recipient=recipient)
    return ciphertext ^ pad


# ---------- Parity ----------


@dataclass(frozen=True)
class ParityTranscript:
    """
    Everything a batch of parity rounds puts on the wire.

    ``ciphertexts[i, j]`` is the padded share party i sent to j (the diagonal
    is never sent and stays zero); ``announcements[j]`` is the XOR of the
    shares j holds; ``output`` is the XOR of all announcements.
    """

    ciphertexts: np.ndarray
    announcements: np.ndarray
    output: np.ndarray

    def public_view(self) -> bytes:
        n = self.ciphertexts.shape[0]
        off_diagonal = ~np.eye(n, dtype=bool)
        return (
            np.packbits(self.ciphertexts[off_diagonal]).tobytes()
            + b"|"
            + np.packbits(self.announcements).tobytes()
        )


def parity_transcript(
    inputs: np.ndarray,
    shares: np.ndarray,
    pads: np.ndarray,
) -> ParityTranscript:
    """
    Parity over explicit randomness.

    Parameters
    ----------
    inputs : np.ndarray
        (N, m) input bits, one row per party.
    shares : np.ndarray
        (N, N, m) shares; row i must XOR to ``inputs[i]``.
    pads : np.ndarray
        (N, N, m) one-time pads, ``pads[i, j]`` encrypting the share i sends j.
    """
    inputs = np.asarray(inputs, dtype=np.uint8)
    shares = np.asarray(shares, dtype=np.uint8)
    pads = np.asarray(pads, dtype=np.uint8)
    n = inputs.shape[0]
    if shares.shape[:2] != (n, n) or pads.shape != shares.shape:
        raise ContractViolation(
            f"shares {shares.shape} and pads {pads.shape} do not fit {n} parties"
        )
    if not np.array_equal(np.bitwise_xor.reduce(shares, axis=1), inputs):
        raise ContractViolation("share rows do not XOR to the inputs")

    ciphertexts = shares ^ pads
    idx = np.arange(n)
    ciphertexts[idx, idx] = 0
    announcements = np.bitwise_xor.reduce(shares, axis=0)
    output = np.bitwise_xor.reduce(announcements, axis=0)
    return ParityTranscript(ciphertexts=ciphertexts, announcements=announcements, output=output)


def _split_shares(inputs: np.ndarray, sampler: SeededSampler) -> np.ndarray:
    n, m = inputs.shape
    shares = sampler.bits(n * n * m).reshape(n, n, m)
    idx = np.arange(n)
    row_xor = np.bitwise_xor.reduce(shares, axis=1)
    shares[idx, idx] ^= row_xor ^ inputs
    return shares


def _draw_pads(store: KeyStore, m: int) -> np.ndarray:
    n = store.n_parties
    pairs = all_pairs(n)
    for q, t in pairs:
        if store.available(q, t) < 2 * m:
            raise KeyDepleted((q, t), 2 * m, store.available(q, t))
    pads = np.zeros((n, n, m), dtype=np.uint8)
    for q, t in pairs:
        pads[q, t] = store.consume(q, t, m)
        pads[t, q] = store.consume(q, t, m)
    return pads


def parity_rounds(
    inputs: np.ndarray,
    store: KeyStore,
    sampler: SeededSampler,
    transcript: Optional[PublicTranscript] = None,
    primitive: Primitive = Primitive.PARITY,
) -> np.ndarray:
    """
    Run m parity rounds at once; ``inputs`` is (N, m).

    Every unordered pair spends 2m pad bits, N(N-1) bits per round in total.
    The transcript receives one record per ordered pair and one announcement
    per party, each carrying all m rounds.
    """
    inputs = np.asarray(inputs, dtype=np.uint8)
    if inputs.ndim != 2 or inputs.shape[0] != store.n_parties:
        raise ContractViolation(
            f"inputs of shape {inputs.shape} do not match {store.n_parties} parties"
        )
    m = int(inputs.shape[1])
    pads = _draw_pads(store, m)
    view = parity_transcript(inputs, _split_shares(inputs, sampler), pads)

    if transcript is not None:
        n = store.n_parties
        for i in range(n):
            for j in range(n):
                if i != j:
                    transcript.append(primitive, i, view.ciphertexts[i, j], recipient=j)
        for j in range(n):
            transcript.append(primitive, j, view.announcements[j])

    logger.debug("parity: %d rounds over %d parties", m, store.n_parties)
    return view.output


def parity_round(
    inputs: Sequence[int],
    store: KeyStore,
    sampler: SeededSampler,
    transcript: Optional[PublicTranscript] = None,
) -> int:
    column = np.asarray(inputs, dtype=np.uint8).reshape(-1, 1)
    return int(parity_rounds(column, store, sampler, transcript)[0])


# ---------- Built on Parity ----------


def veto(
    inputs: Sequence[int],
    r_v: int,
    store: KeyStore,
    sampler: SeededSampler,
    transcript: Optional[PublicTranscript] = None,
) -> bool:
    """
    True if any party vetoed.

    A vetoing party feeds a fresh uniform bit into each of the r_v rounds,
    everyone else feeds 0; a single vetoer is missed with probability 2^-r_v.
    """
    if r_v < 1:
        raise DomainError(f"r_v={r_v} must be at least 1")
    flags = np.asarray(inputs, dtype=bool)
    if flags.shape != (store.n_parties,):
        raise ContractViolation(f"expected {store.n_parties} veto flags, got {flags.shape}")
    matrix = np.zeros((store.n_parties, r_v), dtype=np.uint8)
    for party in np.flatnonzero(flags):
        matrix[party] = sampler.bits(r_v)
    return bool(np.any(parity_rounds(matrix, store, sampler, transcript, Primitive.VETO)))


def anonymous_broadcast(
    sender: int,
    payload: np.ndarray,
    store: KeyStore,
    sampler: SeededSampler,
    transcript: Optional[PublicTranscript] = None,
) -> np.ndarray:
    """Publish ``payload`` one parity round per bit, the sender's identity hidden."""
    payload = np.asarray(payload, dtype=np.uint8)
    matrix = np.zeros((store.n_parties, payload.shape[0]), dtype=np.uint8)
    matrix[sender] = payload
    return parity_rounds(matrix, store, sampler, transcript, Primitive.BROADCAST)


def anonymous_transmission(
    sender: int,
    recipient: int,
    payload: np.ndarray,
    store: KeyStore,
    sampler: SeededSampler,
    transcript: Optional[PublicTranscript] = None,
) -> np.ndarray:
    """
    Deliver ``payload`` to ``recipient`` without revealing the sender.

    The recipient masks the slot with a private uniform string u, so the
    public output payload XOR u says nothing; the recipient strips u. The
    sender may address itself, in which case it supplies both.
    """
    payload = np.asarray(payload, dtype=np.uint8)
    mask = sampler.bits(int(payload.shape[0]))
    matrix = np.zeros((store.n_parties, payload.shape[0]), dtype=np.uint8)
    matrix[sender] ^= payload
    matrix[recipient] ^= mask
    public = parity_rounds(matrix, store, sampler, transcript, Primitive.TRANSMISSION)
    return public ^ mask
