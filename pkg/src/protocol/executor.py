# src/protocol/executor.py

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from src.anon.audit import TranscriptChain
from src.anon.keystore import KeyStore
from src.anon.transcript import PublicTranscript
from src.errors import CollisionDetected, ContractViolation, KeyDepleted
from src.netsim.sampler import ALGORITHM_ID, SeededSampler
from src.protocol.config import ProtocolConfig, Variant
from src.protocol.events import RunEvent, RunEventType
from src.protocol.state_machine import RunState, RunStatus, can_transition
from src.rates.models import KeyRateReport, Pair


logger = logging.getLogger(__name__)


@dataclass
class ConferenceKeyResult:
    """
    Outcome of one protocol run.

    ``key_bits`` maps every keyholder to its final key on success and is
    empty on any abort. ``residual`` is what each pairwise pool still holds
    once the run is over.
    """

    variant: Variant
    status: RunStatus
    key_bits: Dict[int, np.ndarray]
    length: int
    report: Optional[KeyRateReport]
    transcript: PublicTranscript
    seed: int
    l_tot: int
    n_parties: int
    l_multi: int = 0
    l_bi: int = 0
    p: float = 0.0
    qx_obs: float = float("nan")
    residual: Dict[Pair, int] = field(default_factory=dict)
    consumed: Dict[Pair, int] = field(default_factory=dict)
    k_pre_consumed: int = 0
    events: List[RunEvent] = field(default_factory=list)
    reason: str = ""

    @property
    def succeeded(self) -> bool:
        return self.status is RunStatus.SUCCESS

    @property
    def rate(self) -> float:
        return self.length / self.l_tot if self.l_tot else 0.0

    @property
    def transcript_tip(self) -> str:
        chain = self.transcript.chain
        return chain.tip() if chain is not None else ""


class ProtocolRun:
    """
    Executes one protocol variant for a ProtocolConfig.

    Lifecycle:
    - Starts at CREATED
    - Provisions pairwise keys (and k_Pre) -> RESOURCES_READY
    - Identity designation -> DESIGNATED
    - Multipartite variants: measurement, estimation and reconciliation
    - Ends at COMPLETE or ABORTED

    All side effects are emitted as structured RunEvent objects; the public
    messages go to a hash-chained PublicTranscript.
    """

    def __init__(self, config: ProtocolConfig) -> None:
        self.config = config
        self.state: RunState = RunState.CREATED
        self.event_log: List[RunEvent] = []
        self.transcript = PublicTranscript(chain=TranscriptChain())
        self.sampler = SeededSampler(config.seed)
        self.store: Optional[KeyStore] = None
        self.l_multi = 0
        self.l_bi = config.l_tot
        self.p = 0.0
        self.qx_obs = float("nan")

    # ---------- Event helper ----------

    def _emit_event(self, event_type: RunEventType, details: dict) -> None:
        if self.event_log and self.event_log[-1].event_type.is_terminal:
            raise ContractViolation(f"{event_type.name} after the run finished")
        event = RunEvent.create(seq=len(self.event_log), event_type=event_type, details=details)
        self.event_log.append(event)
        logger.info(json.dumps(event.to_dict(), ensure_ascii=False))

    # ---------- State handling ----------

    def advance(self, target: RunState, event_type: RunEventType, details: dict) -> None:
        if not can_transition(self.state, target):
            raise ContractViolation(f"run cannot move from {self.state.name} to {target.name}")
        self.state = target
        self._emit_event(event_type, {"state": target.name, "code": target.value, **details})

    def _finish(self, target: RunState, status: RunStatus, details: dict) -> None:
        self.advance(
            target,
            RunEventType.RUN_COMPLETE if target is RunState.COMPLETE else RunEventType.RUN_ABORTED,
            {"status": status.value, **details},
        )

    def note(self, event_type: RunEventType, details: dict) -> None:
        """Record a step that does not change the run state."""
        self._emit_event(event_type, {"state": self.state.name, **details})

    def stream(self, *path) -> SeededSampler:
        return self.sampler.for_path(*path)

    def _result(
        self,
        status: RunStatus,
        key_bits: Dict[int, np.ndarray],
        length: int,
        report: Optional[KeyRateReport],
        reason: str = "",
    ) -> ConferenceKeyResult:
        store = self.store
        return ConferenceKeyResult(
            variant=self.config.variant,
            status=status,
            key_bits=key_bits,
            length=length,
            report=report,
            transcript=self.transcript,
            seed=self.config.seed,
            l_tot=self.config.l_tot,
            n_parties=self.config.n_parties,
            l_multi=self.l_multi,
            l_bi=self.l_bi,
            p=self.p,
            qx_obs=self.qx_obs,
            residual=store.available_by_pair() if store is not None else {},
            consumed=store.consumed_by_pair() if store is not None else {},
            k_pre_consumed=store.k_pre_consumed if store is not None else 0,
            events=self.event_log,
            reason=reason,
        )

    def abort(self, status: RunStatus, reason: str) -> ConferenceKeyResult:
        self._finish(RunState.ABORTED, status, {"reason": reason})
        return self._result(status, {}, 0, None, reason)

    def complete(
        self, key_bits: Dict[int, np.ndarray], length: int, report: Optional[KeyRateReport]
    ) -> ConferenceKeyResult:
        keys = list(key_bits.values())
        if any(not np.array_equal(keys[0], other) for other in keys[1:]):
            raise ContractViolation("keyholder keys differ on a successful run")
        self._finish(
            RunState.COMPLETE,
            RunStatus.SUCCESS,
            {
                "length": length,
                "rate": length / self.config.l_tot,
                "transcript_tip": self.transcript.chain.tip(),
            },
        )
        return self._result(RunStatus.SUCCESS, key_bits, length, report)

    # ---------- Public API ----------

    def execute(self, body: Callable[["ProtocolRun"], ConferenceKeyResult]) -> ConferenceKeyResult:
        """
        Run ``body`` and map depletion and sender collisions to abort statuses.
        """
        config = self.config
        self._emit_event(
            RunEventType.RUN_START,
            {
                "variant": config.variant.value,
                "n_parties": config.n_parties,
                "l_tot": config.l_tot,
                "seed": config.seed,
                "rng": ALGORITHM_ID,
            },
        )
        try:
            return body(self)
        except KeyDepleted as exc:
            return self.abort(RunStatus.ABORTED_DEPLETED, str(exc))
        except CollisionDetected as exc:
            return self.abort(RunStatus.ABORTED_COLLISION, str(exc))
