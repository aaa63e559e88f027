# src/witness/tallies.py

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from src.errors import ConfigError, DomainError
from src.netsim.roles import RoleAssignment
from src.netsim.rounds import sample_ghz_rounds
from src.netsim.sampler import SeededSampler
from src.rates.models import NoiseModel


logger = logging.getLogger(__name__)


TALLY_HEADER = ("basis", "outcome_bits", "count")


@dataclass(frozen=True)
class BasisTallies:
    """
    Outcome counts of joint all-X and all-Z measurements on an N-qubit state.

    Keys are N-character bit strings such as ``"0110"``.
    """

    n_qubits: int
    x_counts: Mapping[str, int] = field(default_factory=dict)
    z_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise DomainError(f"n_qubits={self.n_qubits} must be at least 2")
        for basis, counts in (("X", self.x_counts), ("Z", self.z_counts)):
            for outcome, count in counts.items():
                if len(outcome) != self.n_qubits or set(outcome) - {"0", "1"}:
                    raise DomainError(
                        f"{basis} outcome {outcome!r} is not a {self.n_qubits}-bit string"
                    )
                if count < 0:
                    raise DomainError(f"{basis} count for {outcome} is negative")
            if sum(counts.values()) == 0:
                raise DomainError(f"no {basis}-basis outcomes")

    @property
    def x_total(self) -> int:
        return int(sum(self.x_counts.values()))

    @property
    def z_total(self) -> int:
        return int(sum(self.z_counts.values()))


def load_tallies(path: Union[str, Path]) -> BasisTallies:
    """
    Read a ``basis,outcome_bits,count`` file.

    Repeated (basis, outcome) rows add up. Every problem is reported as a
    ConfigError carrying the 1-based line number.
    """
    counts: Dict[str, Dict[str, int]] = {"X": {}, "Z": {}}
    width = None
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ConfigError("tally file is empty", line=1)
        if tuple(cell.strip() for cell in header) != TALLY_HEADER:
            raise ConfigError(f"expected header {','.join(TALLY_HEADER)}", line=1)

        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ConfigError(f"expected 3 columns, got {len(row)}", line=line)
            basis, outcome, raw_count = (cell.strip() for cell in row)
            basis = basis.upper()
            if basis not in counts:
                raise ConfigError(f"unknown basis {basis!r}", line=line, field="basis")
            if not outcome or set(outcome) - {"0", "1"}:
                raise ConfigError(f"{outcome!r} is not a bit string", line=line, field="outcome_bits")
            if width is None:
                width = len(outcome)
            elif len(outcome) != width:
                raise ConfigError(
                    f"{len(outcome)}-bit outcome after {width}-bit ones", line=line, field="outcome_bits"
                )
            try:
                count = int(raw_count)
            except ValueError as exc:
                raise ConfigError(f"{raw_count!r} is not an integer", line=line, field="count") from exc
            if count < 0:
                raise ConfigError("count must be non-negative", line=line, field="count")
            counts[basis][outcome] = counts[basis].get(outcome, 0) + count

    if width is None:
        raise ConfigError("tally file has no records", line=2)
    try:
        return BasisTallies(n_qubits=width, x_counts=counts["X"], z_counts=counts["Z"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _count_rows(bits: np.ndarray) -> Dict[str, int]:
    rows, freq = np.unique(bits, axis=0, return_counts=True)
    return {"".join(str(int(b)) for b in row): int(n) for row, n in zip(rows, freq)}


def simulate_tallies(
    n_qubits: int,
    q_x: float,
    q_z: float,
    rounds: int,
    sampler: SeededSampler,
) -> BasisTallies:
    """
    Tallies of ``rounds`` all-X and ``rounds`` all-Z measurements of a noisy GHZ state.

    Uses the GHZ round sampler with every party as keyholder: X outcomes have
    odd parity with probability q_x, Z outcomes flip each qubit against the
    first with probability q_z.
    """
    if rounds < 1:
        raise DomainError(f"rounds={rounds} must be positive")
    noise = NoiseModel.symmetric(n_qubits, q_x, q_z)
    roles = RoleAssignment.everyone(n_qubits, sender=0)
    x_batch = sample_ghz_rounds(np.ones(rounds, dtype=bool), roles, noise, sampler.for_path("x"))
    z_batch = sample_ghz_rounds(np.zeros(rounds, dtype=bool), roles, noise, sampler.for_path("z"))
    logger.debug("simulated %d rounds per basis on %d qubits", rounds, n_qubits)
    return BasisTallies(
        n_qubits=n_qubits,
        x_counts=_count_rows(x_batch.bits),
        z_counts=_count_rows(z_batch.bits),
    )
