# src/protocol/state_machine.py

from __future__ import annotations

from enum import Enum
from typing import Dict, FrozenSet


class RunState(Enum):
    """
    Lifecycle of a protocol run.

    - CREATED (100)
    - RESOURCES_READY (200)  pairwise keys (and k_Pre) in place
    - DESIGNATED (300)
    - MEASURED (400)
    - ESTIMATED (500)
    - RECONCILED (600)
    - COMPLETE (700)
    - ABORTED (900)

    The bipartite variants jump from DESIGNATED straight to COMPLETE; an
    AQCKA_M run whose allocation yields no key completes from CREATED.
    """

    CREATED = 100
    RESOURCES_READY = 200
    DESIGNATED = 300
    MEASURED = 400
    ESTIMATED = 500
    RECONCILED = 600
    COMPLETE = 700
    ABORTED = 900


class RunStatus(Enum):
    SUCCESS = "success"
    ABORTED_PE = "aborted_pe"
    ABORTED_EC = "aborted_ec"
    ABORTED_DEPLETED = "aborted_depleted"
    ABORTED_COLLISION = "aborted_collision"


TRANSITIONS: Dict[RunState, FrozenSet[RunState]] = {
    RunState.CREATED: frozenset({RunState.RESOURCES_READY, RunState.COMPLETE}),
    RunState.RESOURCES_READY: frozenset({RunState.DESIGNATED}),
    RunState.DESIGNATED: frozenset({RunState.MEASURED, RunState.COMPLETE}),
    RunState.MEASURED: frozenset({RunState.ESTIMATED}),
    RunState.ESTIMATED: frozenset({RunState.RECONCILED}),
    RunState.RECONCILED: frozenset({RunState.COMPLETE}),
    RunState.COMPLETE: frozenset(),
    RunState.ABORTED: frozenset(),
}


def can_transition(current: RunState, target: RunState) -> bool:
    if target is RunState.ABORTED:
        return current not in (RunState.COMPLETE, RunState.ABORTED)
    return target in TRANSITIONS[current]
