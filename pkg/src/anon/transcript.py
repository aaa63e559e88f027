# src/anon/transcript.py

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, List, Optional, Union

import numpy as np

from src.anon.audit import TranscriptChain


BROADCAST: int = -1


class Primitive(Enum):
    PRIVATE = "private"
    PARITY = "parity"
    VETO = "veto"
    BROADCAST = "broadcast"
    TRANSMISSION = "transmission"
    DESIGNATION = "designation"
    PUBLIC = "public"


@dataclass(frozen=True)
class TranscriptRecord:
    """
    One public message.

    ``speaker`` is the party that put the message on the wire; ``recipient``
    is set for private (one-time-padded) messages and ``None`` for public
    announcements. ``payload`` holds the bits packed big-endian.
    """

    seq: int
    primitive: Primitive
    speaker: int
    recipient: Optional[int]
    payload: bytes
    n_bits: int

    @property
    def payload_hex(self) -> str:
        return self.payload.hex()

    def bits(self) -> np.ndarray:
        raw = np.frombuffer(self.payload, dtype=np.uint8)
        return np.unpackbits(raw)[: self.n_bits]

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "primitive": self.primitive.value,
            "speaker": self.speaker,
            "recipient": self.recipient,
            "payload_hex": self.payload_hex,
            "n_bits": self.n_bits,
        }


@dataclass
class PublicTranscript:
    """Append-only log of everything said in public or over the private channels."""

    records: List[TranscriptRecord] = field(default_factory=list)
    chain: Optional[TranscriptChain] = None

    def append(
        self,
        primitive: Primitive,
        speaker: int,
        bits: np.ndarray,
        recipient: Optional[int] = None,
    ) -> TranscriptRecord:
        bits = np.asarray(bits, dtype=np.uint8)
        record = TranscriptRecord(
            seq=len(self.records),
            primitive=primitive,
            speaker=speaker,
            recipient=recipient,
            payload=np.packbits(bits).tobytes(),
            n_bits=int(bits.shape[0]),
        )
        self.records.append(record)
        if self.chain is not None:
            self.chain.log_record(record.to_dict())
        return record

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TranscriptRecord]:
        return iter(self.records)

    def by_primitive(self, primitive: Primitive) -> List[TranscriptRecord]:
        return [r for r in self.records if r.primitive is primitive]

    def ciphertexts(self) -> List[TranscriptRecord]:
        """Records sent over a private channel."""
        return [r for r in self.records if r.recipient is not None]


def export_transcript(transcript: PublicTranscript, path: Union[str, Path]) -> None:
    """Write ``seq,primitive,speaker,payload_hex``; broadcasts use speaker -1."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["seq", "primitive", "speaker", "payload_hex"])
        for record in transcript:
            writer.writerow(
                [record.seq, record.primitive.value, record.speaker, record.payload_hex]
            )
