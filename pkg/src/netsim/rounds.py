# src/netsim/rounds.py

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from src.errors import DomainError
from src.netsim.roles import RoleAssignment
from src.netsim.sampler import SeededSampler
from src.rates.models import NoiseModel, Pair, pair_key


class RoundType(Enum):
    KEY_GENERATION = "key_generation"
    TEST = "test"
    BELL = "bell"


class Basis(Enum):
    X = "X"
    Z = "Z"


@dataclass(frozen=True)
class RoundOutcome:
    """
    One measured round.

    For GHZ rounds ``outcomes`` and ``basis`` hold one entry per party; for
    Bell rounds they hold the two entries of the pair, in pair order.
    """

    round_index: int
    round_type: RoundType
    outcomes: Tuple[int, ...]
    basis: Tuple[Basis, ...]

    @property
    def basis_string(self) -> str:
        return "".join(b.value for b in self.basis)

    @property
    def outcome_bits(self) -> str:
        return "".join(str(bit) for bit in self.outcomes)


def key_round_bases(roles: RoleAssignment) -> Tuple[Basis, ...]:
    """Keyholders measure Z, non-keyholders X."""
    return tuple(
        Basis.Z if roles.is_keyholder(party) else Basis.X for party in range(roles.n_parties)
    )


def _check_matching(roles: RoleAssignment, noise: NoiseModel) -> None:
    if roles.n_parties != noise.n_parties:
        raise DomainError(
            f"roles for {roles.n_parties} parties do not match noise for {noise.n_parties}"
        )


# ---------- Batched GHZ rounds ----------


@dataclass(frozen=True)
class RoundBatch:
    """
    Consecutive GHZ rounds as arrays.

    ``is_test[i]`` marks test rounds; ``bits[i, j]`` is party j's outcome in
    round i, in the basis the round type prescribes.
    """

    is_test: np.ndarray
    bits: np.ndarray
    key_bases: Tuple[Basis, ...]
    start_index: int = 0

    def __len__(self) -> int:
        return int(self.is_test.shape[0])

    def outcome(self, i: int) -> RoundOutcome:
        n = self.bits.shape[1]
        if self.is_test[i]:
            return RoundOutcome(
                self.start_index + i, RoundType.TEST, tuple(int(b) for b in self.bits[i]), (Basis.X,) * n
            )
        return RoundOutcome(
            self.start_index + i,
            RoundType.KEY_GENERATION,
            tuple(int(b) for b in self.bits[i]),
            self.key_bases,
        )

    def key_bits(self, party: int) -> np.ndarray:
        return self.bits[~self.is_test, party]

    def test_bits(self) -> np.ndarray:
        return self.bits[self.is_test]


def sample_ghz_rounds(
    is_test: np.ndarray,
    roles: RoleAssignment,
    noise: NoiseModel,
    sampler: SeededSampler,
    start_index: int = 0,
) -> RoundBatch:
    """
    Sample a schedule of GHZ rounds.

    Key rounds: the sender's Z bit is uniform, each other keyholder's bit is the
    sender's flipped with that pair's Z error, non-keyholders' X bits are
    uniform. Test rounds: N uniform-looking X bits whose parity is odd with
    probability q_x.
    """
    _check_matching(roles, noise)
    is_test = np.asarray(is_test, dtype=bool)
    L = int(is_test.shape[0])
    n = roles.n_parties

    bits = sampler.bits(L * n).reshape(L, n)

    # key rounds: correlate the keyholders with the sender
    sender_bits = bits[:, roles.sender]
    for party in sorted(roles.receivers):
        flips = sampler.bernoulli(noise.ghz_z(roles.sender, party), L)
        bits[:, party] = np.where(is_test, bits[:, party], sender_bits ^ flips)

    # test rounds: fix the last party's bit to set the global parity
    parity_flip = sampler.bernoulli(noise.q_x, L)
    head_parity = np.bitwise_xor.reduce(bits[:, : n - 1], axis=1)
    bits[:, n - 1] = np.where(is_test, head_parity ^ parity_flip, bits[:, n - 1])

    return RoundBatch(
        is_test=is_test, bits=bits, key_bases=key_round_bases(roles), start_index=start_index
    )


def sample_ghz_round(
    round_type: RoundType,
    roles: RoleAssignment,
    noise: NoiseModel,
    sampler: SeededSampler,
    round_index: int = 0,
) -> RoundOutcome:
    if round_type is RoundType.BELL:
        raise DomainError("Bell rounds are sampled with sample_bell_round")
    schedule = np.array([round_type is RoundType.TEST])
    return sample_ghz_rounds(schedule, roles, noise, sampler, start_index=round_index).outcome(0)


# ---------- Bell rounds ----------


def sample_bell_rounds(
    pair: Pair,
    noise: NoiseModel,
    is_x: np.ndarray,
    sampler: SeededSampler,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Both parties' bits for a schedule of Bell rounds (True = X basis).

    The first party's bit is uniform; the second's differs with the pair's
    X or Z error rate depending on the basis.
    """
    q_xb, q_zb = noise.pair_rates(*pair)
    is_x = np.asarray(is_x, dtype=bool)
    size = int(is_x.shape[0])
    first = sampler.bits(size)
    flip_prob = np.where(is_x, q_xb, q_zb)
    flips = sampler.bernoulli(flip_prob, size)
    return first, first ^ flips


def sample_bell_round(
    pair: Pair,
    noise: NoiseModel,
    basis: Basis,
    sampler: SeededSampler,
    round_index: int = 0,
) -> RoundOutcome:
    pair = pair_key(*pair)
    first, second = sample_bell_rounds(pair, noise, np.array([basis is Basis.X]), sampler)
    return RoundOutcome(
        round_index, RoundType.BELL, (int(first[0]), int(second[0])), (basis, basis)
    )


# ---------- Round dump ----------


def write_round_dump(batch: RoundBatch, path: Union[str, Path]) -> None:
    """One line per round: round_index,type,basis_string,outcome_bits."""
    test_bases = "X" * batch.bits.shape[1]
    key_bases = "".join(b.value for b in batch.key_bases)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["round_index", "type", "basis_string", "outcome_bits"])
        for i in range(len(batch)):
            test = bool(batch.is_test[i])
            writer.writerow(
                [
                    batch.start_index + i,
                    RoundType.TEST.value if test else RoundType.KEY_GENERATION.value,
                    test_bases if test else key_bases,
                    "".join(str(int(b)) for b in batch.bits[i]),
                ]
            )
