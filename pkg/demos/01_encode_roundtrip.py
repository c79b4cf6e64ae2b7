"""
From a lead sheet to a 38-symbol grid and back
==============================================

A melody in 4/4 is flattened onto a 16th-note grid where every step holds
exactly one of 38 symbols: 36 note-on pitches (C2..B4), one explicit
note-off, and one "nothing changes" symbol. This script builds a small
lead sheet by hand, normalizes it (transpose to C, fold stray octaves),
encodes it, draws the grid, and decodes it back to prove the trip is
lossless.
"""

from fractions import Fraction

from melodygen.encode import (
    NO_EVENT,
    NOTE_OFF,
    PITCH_MIN,
    grid_decode,
    grid_encode,
    normalize_sheet,
    transposition_shift,
)
from melodygen.leadsheet import LeadSheet, RawNote, chord_from_kind

NOTE_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


def pitch_name(midi):
    return f"{NOTE_NAMES[midi % 12]}{midi // 12 - 1}"


# ---------------------------------------------------------------------------
# A two-bar phrase in G major (one sharp). Onsets and durations are in
# quarter notes; Fractions keep them exact.
# ---------------------------------------------------------------------------
sheet = LeadSheet(
    id="demo-phrase",
    key_fifths=1,  # G major
    time_signature=(4, 4),
    pickup=False,
    n_bars=2,
    notes=(
        RawNote(midi_pitch=67, onset=Fraction(0), duration=Fraction(1)),      # G4
        RawNote(midi_pitch=69, onset=Fraction(1), duration=Fraction(1, 2)),   # A4
        RawNote(midi_pitch=71, onset=Fraction(3, 2), duration=Fraction(1, 2)),# B4
        RawNote(midi_pitch=74, onset=Fraction(2), duration=Fraction(3, 2)),   # D5
        RawNote(midi_pitch=71, onset=Fraction(4), duration=Fraction(1)),      # bar 2
        RawNote(midi_pitch=69, onset=Fraction(5), duration=Fraction(1)),
        RawNote(midi_pitch=67, onset=Fraction(6), duration=Fraction(2)),
    ),
    chords=(chord_from_kind(0, 7, "major"), chord_from_kind(16, 2, "dominant")),
)

print("source key: G major, shift to C =", transposition_shift(sheet.key_fifths))

# ---------------------------------------------------------------------------
# Normalize: transpose to C major and fold anything outside C2..B4 back in.
# The shift is +5 (up a fourth reaches C just as well as down a fifth), and
# the D5 that would land on G5 is folded one octave down to G4.
# ---------------------------------------------------------------------------
normalized = normalize_sheet(sheet)
print("pitches before:", [pitch_name(n.midi_pitch) for n in sheet.notes])
print("pitches after: ", [pitch_name(n.midi_pitch) for n in normalized.notes])

# ---------------------------------------------------------------------------
# Encode. The grid is 16 steps per bar. An explicit note-off appears only
# where a note ends into silence; notes that run straight into the next
# onset need none, because a new note-on cuts the old note anyway. Here
# the dotted-quarter G4 is the only note followed by a rest, so the lone
# 'x' lands on step 14 of bar 1.
# ---------------------------------------------------------------------------
grid = grid_encode(normalized)
symbols = []
for event in grid.events:
    if event == NO_EVENT:
        symbols.append(".")
    elif event == NOTE_OFF:
        symbols.append("x")
    else:
        symbols.append(pitch_name(PITCH_MIN + event))
print("\nevent sequence (one cell per 16th, '.' = hold/silence, 'x' = release):")
for bar in range(grid.n_bars):
    cells = symbols[bar * 16 : (bar + 1) * 16]
    print(f"  bar {bar + 1}: " + " ".join(f"{cell:>3}" for cell in cells))

# ---------------------------------------------------------------------------
# Draw the grid as a piano roll: '#' marks an onset, '=' a held step.
# ---------------------------------------------------------------------------
notes = grid_decode(grid)
pitches = sorted({pitch for pitch, _, _ in notes}, reverse=True)
print("\npiano roll:")
for pitch in pitches:
    row = [" "] * len(grid)
    for note_pitch, onset, duration in notes:
        if note_pitch == pitch:
            row[onset] = "#"
            for step in range(onset + 1, onset + duration):
                row[step] = "="
    print(f"  {pitch_name(pitch):>3} |{''.join(row)}|")
print("       " + "".join("^" if s % 16 == 0 else "·" if s % 4 == 0 else " "
                          for s in range(len(grid))))

# ---------------------------------------------------------------------------
# Decode and compare against the normalized source, step for step.
# ---------------------------------------------------------------------------
expected = sorted(
    (note.midi_pitch, int(note.onset * 4), int(note.duration * 4))
    for note in normalized.notes
)
print("\ndecoded == quantized source:", sorted(notes) == expected)
assert sorted(notes) == expected
