# src/protocol/events.py

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Iterable, List
from uuid import uuid4


class RunEventType(Enum):
    RUN_START = "RUN_START"
    RESOURCES_READY = "RESOURCES_READY"
    DESIGNATION = "DESIGNATION"
    TESTING_KEY = "TESTING_KEY"
    MEASUREMENT = "MEASUREMENT"
    ESTIMATION = "ESTIMATION"
    RECONCILIATION = "RECONCILIATION"
    AMPLIFICATION = "AMPLIFICATION"
    RUN_COMPLETE = "RUN_COMPLETE"
    RUN_ABORTED = "RUN_ABORTED"

    @property
    def is_terminal(self) -> bool:
        return self in (RunEventType.RUN_COMPLETE, RunEventType.RUN_ABORTED)


@dataclass
class RunEvent:
    """
    One step of a protocol run.

    ``seq`` orders events within a run; ``event_id`` and ``timestamp`` are for
    log correlation only and never reach result files.
    """

    event_id: str
    timestamp: str
    seq: int
    event_type: RunEventType
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def create(cls, seq: int, event_type: RunEventType, details: Dict[str, Any]) -> "RunEvent":
        return cls(
            event_id=str(uuid4()),
            timestamp=datetime.now(timezone.utc).isoformat(),
            seq=seq,
            event_type=event_type,
            details=dict(details or {}),
        )

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunEvent":
        """Rebuild an event from a logged JSON line."""
        return cls(
            event_id=raw["event_id"],
            timestamp=raw["timestamp"],
            seq=int(raw["seq"]),
            event_type=RunEventType[raw["event_type"]],
            details=dict(raw.get("details", {})),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "event_id": self.event_id,
            "timestamp": self.timestamp,
            "seq": self.seq,
            "event_type": self.event_type.name,
            "details": self.details,
        }


def event_types(events: Iterable[RunEvent]) -> List[RunEventType]:
    return [event.event_type for event in sorted(events, key=lambda e: e.seq)]
