# src/errors.py

from __future__ import annotations

from typing import Optional, Tuple


class ConclaveError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(ConclaveError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractViolation(ConclaveError, ValueError):
    """A caller broke a documented precondition."""


class KeyDepleted(ConclaveError):
    """
    A one-time-pad pool would be read past its end.

    Attributes
    ----------
    pair : Tuple[int, int]
        Unordered pair (q, t) with q < t, or (-1, -1) for the conference pool.
    requested : int
        Bits the caller asked for.
    available : int
        Unconsumed bits left in the pool.
    """

    def __init__(self, pair: Tuple[int, int], requested: int, available: int) -> None:
        self.pair = pair
        self.requested = requested
        self.available = available
        label = "k_pre" if pair == (-1, -1) else f"{pair[0]}-{pair[1]}"
        super().__init__(
            f"pool {label} depleted: requested {requested} bits, {available} available"
        )


class CollisionDetected(ConclaveError):
    """Two or more parties tried to become the sender in the same run."""


class ConfigError(ConclaveError, ValueError):
    """Invalid configuration or tally input, optionally pinned to a line and field."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ) -> None:
        self.line = line
        self.field = field
        self.message = message
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field '{field}'")
        parts.append(message)
        super().__init__(": ".join(parts))
