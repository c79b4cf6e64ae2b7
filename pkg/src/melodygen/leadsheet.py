"""Lead-sheet domain types and their JSON cache format.

A lead sheet is a monophonic melody line plus optional chord symbols. Note
onsets and durations are exact rationals in quarter-note units, so nothing is
lost between parsing and grid quantization. Chord onsets are already on the
16th-note grid (integer step indices) because chords are only ever consumed at
grid resolution.

The JSON cache format (schema version 1):

    {
      "schema": 1,
      "id": "some-piece",
      "key_fifths": -3,
      "time_signature": [4, 4],
      "pickup": false,
      "n_bars": 8,
      "notes": [
        {"pitch": 60, "onset": [0, 1], "duration": [3, 2],
         "tie_start": false, "tie_stop": false},
        ...
      ],
      "chords": [{"onset_step": 0, "root": 7, "chroma": [2, 7, 11]}, ...]
    }

Fractions are encoded as [numerator, denominator] pairs. Serialization uses
sorted keys and compact separators so that equal sheets produce identical
bytes run to run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Iterable, Sequence

SCHEMA_VERSION = 1

# Chord-tone intervals in semitones above the root for the chord kinds the
# parser recognizes. Unknown kinds fall back to a major triad.
CHORD_KIND_INTERVALS: dict[str, tuple[int, ...]] = {
    "major": (0, 4, 7),
    "minor": (0, 3, 7),
    "augmented": (0, 4, 8),
    "diminished": (0, 3, 6),
    "dominant": (0, 4, 7, 10),
    "dominant-seventh": (0, 4, 7, 10),
    "major-seventh": (0, 4, 7, 11),
    "minor-seventh": (0, 3, 7, 10),
    "suspended-second": (0, 2, 7),
    "suspended-fourth": (0, 5, 7),
}


class SchemaError(ValueError):
    """A JSON lead sheet violated the cache schema."""


@dataclass(frozen=True)
class RawNote:
    """One melody note. Onset and duration are in quarter notes."""

    midi_pitch: int
    onset: Fraction
    duration: Fraction
    tie_start: bool = False
    tie_stop: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.midi_pitch <= 127:
            raise ValueError(f"midi_pitch {self.midi_pitch} outside 0..127")
        if self.onset < 0:
            raise ValueError(f"negative onset {self.onset}")
        if self.duration <= 0:
            raise ValueError(f"non-positive duration {self.duration}")

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration


@dataclass(frozen=True)
class ChordSymbol:
    """A chord at a grid step: root pitch class plus sounding pitch classes."""

    onset_step: int
    root_pitch_class: int
    chroma: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.onset_step < 0:
            raise ValueError(f"negative chord onset_step {self.onset_step}")
        if not 0 <= self.root_pitch_class <= 11:
            raise ValueError(f"root pitch class {self.root_pitch_class} outside 0..11")
        if tuple(sorted(set(self.chroma))) != self.chroma:
            raise ValueError("chroma must be sorted and unique")
        if any(not 0 <= pc <= 11 for pc in self.chroma):
            raise ValueError("chroma entries must be pitch classes 0..11")
        if self.root_pitch_class not in self.chroma:
            raise ValueError("chord root must be contained in its chroma")

    def chroma_vector(self) -> tuple[int, ...]:
        """12-dim indicator vector of sounding pitch classes."""
        return tuple(1 if pc in self.chroma else 0 for pc in range(12))


def chord_from_kind(onset_step: int, root_pitch_class: int, kind: str) -> ChordSymbol:
    """Build a ChordSymbol from a chord-kind name, defaulting to a major triad."""
    intervals = CHORD_KIND_INTERVALS.get(kind, CHORD_KIND_INTERVALS["major"])
    chroma = tuple(sorted({(root_pitch_class + iv) % 12 for iv in intervals}))
    return ChordSymbol(onset_step, root_pitch_class, chroma)


@dataclass(frozen=True)
class LeadSheet:
    """A parsed piece: melody notes, chords, and notated key/time metadata.

    Notes are kept sorted by onset (ties broken by pitch). They are monophonic
    after parser normalization, but the type itself allows overlap because
    intermediate transforms (e.g. sustain extension) legitimately produce it.
    """

    id: str
    key_fifths: int
    time_signature: tuple[int, int]
    pickup: bool
    n_bars: int
    notes: tuple[RawNote, ...]
    chords: tuple[ChordSymbol, ...] = ()

    def __post_init__(self) -> None:
        if not -7 <= self.key_fifths <= 7:
            raise ValueError(f"key_fifths {self.key_fifths} outside -7..7")
        if self.n_bars < 0:
            raise ValueError("n_bars must be >= 0")
        num, den = self.time_signature
        if num <= 0 or den <= 0:
            raise ValueError(f"invalid time signature {self.time_signature}")
        for a, b in zip(self.notes, self.notes[1:]):
            if (b.onset, b.midi_pitch) < (a.onset, a.midi_pitch):
                raise ValueError("notes must be sorted by (onset, pitch)")
        for a, b in zip(self.chords, self.chords[1:]):
            if b.onset_step <= a.onset_step:
                raise ValueError("chords must be strictly sorted by onset_step")

    def with_notes(self, notes: Iterable[RawNote]) -> "LeadSheet":
        return replace(self, notes=tuple(notes))


def _fraction_to_json(value: Fraction) -> list[int]:
    return [value.numerator, value.denominator]


def _require(obj: dict, key: str, kind: type | tuple[type, ...]) -> Any:
    if key not in obj:
        raise SchemaError(f"missing field '{key}'")
    value = obj[key]
    if not isinstance(value, kind):
        raise SchemaError(f"field '{key}' has wrong type {type(value).__name__}")
    return value


def _fraction_from_json(value: Any, field: str) -> Fraction:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(part, int) for part in value)
    ):
        raise SchemaError(f"field '{field}' must be a [numerator, denominator] pair")
    if value[1] <= 0:
        raise SchemaError(f"field '{field}' has non-positive denominator")
    return Fraction(value[0], value[1])


def leadsheet_to_dict(sheet: LeadSheet) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "id": sheet.id,
        "key_fifths": sheet.key_fifths,
        "time_signature": list(sheet.time_signature),
        "pickup": sheet.pickup,
        "n_bars": sheet.n_bars,
        "notes": [
            {
                "pitch": note.midi_pitch,
                "onset": _fraction_to_json(note.onset),
                "duration": _fraction_to_json(note.duration),
                "tie_start": note.tie_start,
                "tie_stop": note.tie_stop,
            }
            for note in sheet.notes
        ],
        "chords": [
            {
                "onset_step": chord.onset_step,
                "root": chord.root_pitch_class,
                "chroma": list(chord.chroma),
            }
            for chord in sheet.chords
        ],
    }


def leadsheet_from_dict(obj: dict) -> LeadSheet:
    if not isinstance(obj, dict):
        raise SchemaError("lead sheet document must be a JSON object")
    schema = _require(obj, "schema", int)
    if schema != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {schema}")
    ts = _require(obj, "time_signature", list)
    if len(ts) != 2 or not all(isinstance(part, int) for part in ts):
        raise SchemaError("field 'time_signature' must be a pair of integers")
    notes = []
    for i, entry in enumerate(_require(obj, "notes", list)):
        if not isinstance(entry, dict):
            raise SchemaError(f"field 'notes[{i}]' must be an object")
        try:
            notes.append(
                RawNote(
                    midi_pitch=_require(entry, "pitch", int),
                    onset=_fraction_from_json(entry.get("onset"), f"notes[{i}].onset"),
                    duration=_fraction_from_json(
                        entry.get("duration"), f"notes[{i}].duration"
                    ),
                    tie_start=bool(entry.get("tie_start", False)),
                    tie_stop=bool(entry.get("tie_stop", False)),
                )
            )
        except ValueError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"invalid note at notes[{i}]: {exc}") from exc
    chords = []
    for i, entry in enumerate(obj.get("chords", [])):
        if not isinstance(entry, dict):
            raise SchemaError(f"field 'chords[{i}]' must be an object")
        chroma = _require(entry, "chroma", list)
        if not all(isinstance(pc, int) for pc in chroma):
            raise SchemaError(f"field 'chords[{i}].chroma' must be integers")
        try:
            chords.append(
                ChordSymbol(
                    onset_step=_require(entry, "onset_step", int),
                    root_pitch_class=_require(entry, "root", int),
                    chroma=tuple(chroma),
                )
            )
        except ValueError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"invalid chord at chords[{i}]: {exc}") from exc
    try:
        return LeadSheet(
            id=_require(obj, "id", str),
            key_fifths=_require(obj, "key_fifths", int),
            time_signature=(ts[0], ts[1]),
            pickup=_require(obj, "pickup", bool),
            n_bars=_require(obj, "n_bars", int),
            notes=tuple(notes),
            chords=tuple(chords),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"invalid lead sheet: {exc}") from exc


def dumps_leadsheet(sheet: LeadSheet) -> str:
    """Serialize deterministically (sorted keys, compact separators)."""
    return json.dumps(leadsheet_to_dict(sheet), sort_keys=True, separators=(",", ":"))


def loads_leadsheet(data: str | bytes) -> LeadSheet:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return leadsheet_from_dict(obj)
