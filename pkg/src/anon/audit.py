# src/anon/audit.py

from __future__ import annotations

import hashlib
import json
from typing import Any, Dict, List, Optional


ZERO_DIGEST: str = "0" * 64
CHAIN_DOMAIN: bytes = b"conclave/public-transcript/v1"


def record_digest(previous_hash: str, record: Dict[str, Any]) -> str:
    """SHA-256 of the chain domain tag, the previous link and the record's canonical JSON."""
    digest = hashlib.sha256(CHAIN_DOMAIN)
    digest.update(bytes.fromhex(previous_hash))
    digest.update(json.dumps(record, sort_keys=True, separators=(",", ":")).encode("utf-8"))
    return digest.hexdigest()


class TranscriptChain:
    """
    Hash links over the public records of one run.

    Entry i holds the record, its link ``hash`` and ``previous_hash`` (the
    link of entry i-1, ZERO_DIGEST for the opening entry). The opening
    record is fixed, so two runs that publish the same records end on the
    same tip.
    """

    OPENING: Dict[str, Any] = {"seq": -1, "primitive": "OPEN"}

    def __init__(self) -> None:
        self.chain: List[Dict[str, Any]] = []
        self._link(dict(self.OPENING))

    def _link(self, record: Dict[str, Any]) -> str:
        previous = self.chain[-1]["hash"] if self.chain else ZERO_DIGEST
        link = record_digest(previous, record)
        self.chain.append({"record": record, "hash": link, "previous_hash": previous})
        return link

    def log_record(self, record: Dict[str, Any]) -> str:
        """Append ``record`` and return the new tip."""
        return self._link(record)

    def first_broken_link(self) -> Optional[int]:
        """Index of the first entry whose link does not recompute, or None."""
        previous = ZERO_DIGEST
        for index, entry in enumerate(self.chain):
            if entry["previous_hash"] != previous:
                return index
            if record_digest(previous, entry["record"]) != entry["hash"]:
                return index
            previous = entry["hash"]
        return None

    def verify_integrity(self) -> bool:
        return self.first_broken_link() is None

    def tip(self) -> str:
        return self.chain[-1]["hash"]

    def __len__(self) -> int:
        return len(self.chain)
