"""Corpus scanning: parse every piece in a directory, filter, and split.

``scan_corpus`` walks a directory for ``.xml``/``.musicxml``/``.json`` files,
parses each into a LeadSheet, records every rejection with its reason, and
produces a deterministic train/validation split of the accepted ids. Files
that cannot be read or parsed at all are recorded under the reason
``"unreadable"`` and scanning continues.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .encode import PITCH_MAX, PITCH_MIN, transpose_to_c
from .leadsheet import LeadSheet, SchemaError, loads_leadsheet
from .musicxml import REJECT_WEAK_BEAT, MusicXmlParseError, Rejection, parse_musicxml

REJECT_UNREADABLE = "unreadable"

MANIFEST_SCHEMA = 1


@dataclass
class CorpusManifest:
    """Everything recorded about one corpus scan."""

    scanned: int
    accepted_ids: list[str]
    rejections: dict[str, dict[str, str]]  # id -> {"reason": ..., "detail": ...}
    pitch_in_range_fraction: float
    split_seed: int
    train_ids: list[str]
    validation_ids: list[str]

    def __post_init__(self) -> None:
        if len(self.accepted_ids) + len(self.rejections) != self.scanned:
            raise ValueError("accepted + rejected must equal scanned")
        if sorted(self.train_ids + self.validation_ids) != sorted(self.accepted_ids):
            raise ValueError("split must partition the accepted ids")

    @property
    def accepted(self) -> int:
        return len(self.accepted_ids)

    @property
    def rejected(self) -> int:
        return len(self.rejections)

    @property
    def accepted_before_weak_beat_filter(self) -> int:
        """Accepted count had pickup pieces been kept (reported for context)."""
        weak = sum(
            1 for r in self.rejections.values() if r["reason"] == REJECT_WEAK_BEAT
        )
        return self.accepted + weak

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "scanned": self.scanned,
            "accepted": self.accepted,
            "accepted_before_weak_beat_filter": self.accepted_before_weak_beat_filter,
            "accepted_ids": list(self.accepted_ids),
            "rejections": dict(sorted(self.rejections.items())),
            "pitch_in_range_fraction": self.pitch_in_range_fraction,
            "split_seed": self.split_seed,
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CorpusManifest":
        return cls(
            scanned=obj["scanned"],
            accepted_ids=list(obj["accepted_ids"]),
            rejections={k: dict(v) for k, v in obj["rejections"].items()},
            pitch_in_range_fraction=obj["pitch_in_range_fraction"],
            split_seed=obj["split_seed"],
            train_ids=list(obj["train_ids"]),
            validation_ids=list(obj["validation_ids"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


@dataclass
class CorpusScan:
    manifest: CorpusManifest
    sheets: dict[str, LeadSheet] = field(default_factory=dict)


def split_ids(ids: list[str], seed: int) -> tuple[list[str], list[str]]:
    """Deterministic 90/10 split. At least one validation piece when n >= 2."""
    ordered = sorted(ids)
    rng = random.Random(seed)
    rng.shuffle(ordered)
    n_validation = max(1, len(ordered) // 10) if len(ordered) >= 2 else 0
    validation = sorted(ordered[:n_validation])
    train = sorted(ordered[n_validation:])
    return train, validation


def pitch_in_range_fraction(sheets: list[LeadSheet]) -> float:
    """Fraction of notes inside C2..B4 after transposition to C."""
    total = 0
    in_range = 0
    for sheet in sheets:
        for note in transpose_to_c(sheet).notes:
            total += 1
            if PITCH_MIN <= note.midi_pitch <= PITCH_MAX:
                in_range += 1
    return in_range / total if total else 0.0


def scan_corpus(directory: str | Path, split_seed: int = 0) -> CorpusScan:
    """Parse every corpus file under ``directory`` (sorted, recursive)."""
    directory = Path(directory)
    paths = sorted(
        p
        for p in directory.rglob("*")
        if p.is_file() and p.suffix.lower() in (".xml", ".musicxml", ".json")
    )
    sheets: dict[str, LeadSheet] = {}
    rejections: dict[str, dict[str, str]] = {}
    for path in paths:
        piece_id = path.relative_to(directory).with_suffix("").as_posix()
        try:
            data = path.read_bytes()
            if path.suffix.lower() == ".json":
                sheet = loads_leadsheet(data)
                if sheet.time_signature != (4, 4):
                    sheet = Rejection("time-signature", f"{sheet.time_signature}")
                elif sheet.pickup:
                    sheet = Rejection(REJECT_WEAK_BEAT, "cached sheet marked pickup")
            else:
                sheet = parse_musicxml(data, piece_id)
        except (OSError, MusicXmlParseError, SchemaError) as exc:
            rejections[piece_id] = {"reason": REJECT_UNREADABLE, "detail": str(exc)}
            continue
        if isinstance(sheet, Rejection):
            rejections[piece_id] = {"reason": sheet.reason, "detail": sheet.detail}
        else:
            if sheet.id != piece_id:
                sheet = LeadSheet(
                    id=piece_id,
                    key_fifths=sheet.key_fifths,
                    time_signature=sheet.time_signature,
                    pickup=sheet.pickup,
                    n_bars=sheet.n_bars,
                    notes=sheet.notes,
                    chords=sheet.chords,
                )
            sheets[piece_id] = sheet

    train, validation = split_ids(sorted(sheets), split_seed)
    manifest = CorpusManifest(
        scanned=len(sheets) + len(rejections),
        accepted_ids=sorted(sheets),
        rejections=rejections,
        pitch_in_range_fraction=pitch_in_range_fraction(list(sheets.values())),
        split_seed=split_seed,
        train_ids=train,
        validation_ids=validation,
    )
    return CorpusScan(manifest=manifest, sheets=sheets)
