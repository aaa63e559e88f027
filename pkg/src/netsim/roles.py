# src/netsim/roles.py

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable

from src.errors import DomainError


@dataclass(frozen=True)
class RoleAssignment:
    """Sender, keyholders (sender included) and everyone else."""

    n_parties: int
    sender: int
    keyholders: FrozenSet[int]

    def __post_init__(self) -> None:
        parties = set(range(self.n_parties))
        if self.sender not in parties:
            raise DomainError(f"sender {self.sender} outside 0..{self.n_parties - 1}")
        if not set(self.keyholders) <= parties:
            raise DomainError(f"keyholders {sorted(self.keyholders)} outside 0..{self.n_parties - 1}")
        if self.sender not in self.keyholders:
            raise DomainError(f"sender {self.sender} must be a keyholder")
        if len(self.keyholders) < 2:
            raise DomainError("at least two keyholders are required")

    @classmethod
    def of(cls, n_parties: int, sender: int, keyholders: Iterable[int]) -> "RoleAssignment":
        return cls(n_parties=n_parties, sender=sender, keyholders=frozenset(keyholders))

    @classmethod
    def everyone(cls, n_parties: int, sender: int = 0) -> "RoleAssignment":
        return cls.of(n_parties, sender, range(n_parties))

    @property
    def non_keyholders(self) -> FrozenSet[int]:
        return frozenset(range(self.n_parties)) - self.keyholders

    @property
    def receivers(self) -> FrozenSet[int]:
        """Keyholders other than the sender."""
        return self.keyholders - {self.sender}

    def is_keyholder(self, party: int) -> bool:
        return party in self.keyholders
