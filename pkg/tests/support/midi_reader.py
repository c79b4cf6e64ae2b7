"""A small, independent standard-MIDI-file reader for verifying writer
output. Parses headers, variable-length deltas, channel messages (with
running status), and meta events, then pairs note-ons with note-offs."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field


@dataclass
class ParsedNote:
    pitch: int
    start_tick: int
    end_tick: int
    velocity: int


@dataclass
class ParsedMidi:
    format: int
    n_tracks: int
    division: int
    events: list = field(default_factory=list)  # (tick, kind, payload)
    notes: list = field(default_factory=list)  # ParsedNote
    tempo_us: int | None = None
    texts: list = field(default_factory=list)


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    while True:
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos


def read_midi(data: bytes) -> ParsedMidi:
    if data[:4] != b"MThd":
        raise ValueError("not a MIDI file: missing MThd")
    header_len, fmt, n_tracks, division = struct.unpack(">IHHH", data[4:14])
    if header_len != 6:
        raise ValueError(f"unexpected header length {header_len}")
    parsed = ParsedMidi(format=fmt, n_tracks=n_tracks, division=division)

    pos = 8 + header_len
    pending: dict[int, list[tuple[int, int]]] = {}  # pitch -> [(tick, vel)] FIFO
    for _ in range(n_tracks):
        if data[pos : pos + 4] != b"MTrk":
            raise ValueError("missing MTrk chunk")
        (track_len,) = struct.unpack(">I", data[pos + 4 : pos + 8])
        pos += 8
        end = pos + track_len
        tick = 0
        running_status: int | None = None
        while pos < end:
            delta, pos = _read_vlq(data, pos)
            tick += delta
            status = data[pos]
            if status & 0x80:
                pos += 1
                if status < 0xF0:
                    running_status = status
            else:
                if running_status is None:
                    raise ValueError("data byte with no running status")
                status = running_status
            if status == 0xFF:
                meta_type = data[pos]
                length, pos = _read_vlq(data, pos + 1)
                payload = data[pos : pos + length]
                pos += length
                if meta_type == 0x51:
                    parsed.tempo_us = int.from_bytes(payload, "big")
                    parsed.events.append((tick, "tempo", parsed.tempo_us))
                elif meta_type == 0x01:
                    text = payload.decode("utf-8")
                    parsed.texts.append(text)
                    parsed.events.append((tick, "text", text))
                elif meta_type == 0x2F:
                    parsed.events.append((tick, "end", None))
                else:
                    parsed.events.append((tick, f"meta{meta_type:02x}", payload))
            elif status in (0xF0, 0xF7):
                length, pos = _read_vlq(data, pos)
                pos += length
            else:
                kind = status & 0xF0
                if kind in (0xC0, 0xD0):
                    pos += 1
                    continue
                byte1, byte2 = data[pos], data[pos + 1]
                pos += 2
                if kind == 0x90 and byte2 > 0:
                    parsed.events.append((tick, "on", (byte1, byte2)))
                    pending.setdefault(byte1, []).append((tick, byte2))
                elif kind == 0x80 or (kind == 0x90 and byte2 == 0):
                    parsed.events.append((tick, "off", (byte1,)))
                    if not pending.get(byte1):
                        raise ValueError(f"note-off for silent pitch {byte1}")
                    start, velocity = pending[byte1].pop(0)
                    parsed.notes.append(ParsedNote(byte1, start, tick, velocity))
    leftover = [p for p, starts in pending.items() if starts]
    if leftover:
        raise ValueError(f"unterminated notes at pitches {sorted(leftover)}")
    parsed.notes.sort(key=lambda n: (n.start_tick, n.pitch))
    return parsed
