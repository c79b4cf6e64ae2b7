"""Deterministic synthetic lead-sheet corpora.

Pieces are built rhythm-first: every beat draws one of a small pool of 4-step
onset patterns (each piece prefers a weighted subset of the pool, so pieces
have recognizably different rhythmic characters), and notes then walk a major
scale. Notes last until the next onset, so the grid binarization of a piece
equals its onset pattern exactly unless rests are injected. An optional rest
probability ends notes one step early, adding explicit note-off events.

Useful properties for tests and demos:

    - all onsets/durations sit exactly on the 16th grid (quantization is the
      identity, encode/decode round-trips are exact);
    - rhythm is predictable from beat profiles when rests are off, giving
      conditioned models a real advantage over unconditioned ones;
    - with >= 8 distinct patterns in the pool, beat clips support the default
      codebook size.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .encode import PITCH_MIN, PITCH_MAX, STEPS_PER_BAR, transposition_shift
from .leadsheet import ChordSymbol, LeadSheet, RawNote, chord_from_kind

# 4-step onset patterns: quarter, eighths, offbeats, syncopations, a hold.
BEAT_PATTERNS: tuple[tuple[int, ...], ...] = (
    (1, 0, 0, 0),
    (1, 0, 1, 0),
    (1, 1, 1, 1),
    (1, 0, 0, 1),
    (1, 1, 0, 0),
    (1, 0, 1, 1),
    (1, 1, 1, 0),
    (0, 0, 0, 0),
)

_MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
# I, IV, V, vi in C major: (root pitch class, kind).
_PROGRESSION = ((0, "major"), (5, "major"), (7, "dominant"), (9, "minor"))


def _scale_walk(rng: np.random.Generator, n: int) -> list[int]:
    """A random walk over C-major scale tones within the grid pitch range."""
    degrees = [
        octave * 12 + pc
        for octave in range(11)
        for pc in _MAJOR_SCALE
        if PITCH_MIN <= octave * 12 + pc <= PITCH_MAX - 12
    ]
    position = int(rng.integers(len(degrees) // 3, 2 * len(degrees) // 3))
    pitches = []
    for _ in range(n):
        step = int(rng.integers(-2, 3))
        if rng.random() < 0.08:
            step = int(rng.integers(-5, 6))
        position = min(max(position + step, 0), len(degrees) - 1)
        pitches.append(degrees[position])
    return pitches


def synthetic_leadsheet(
    piece_id: str,
    rng: np.random.Generator,
    *,
    n_bars: int = 8,
    patterns_per_piece: int = 4,
    rest_probability: float = 0.0,
    key_fifths: int = 0,
    with_chords: bool = True,
) -> LeadSheet:
    """One deterministic piece drawn from the given generator."""
    if n_bars < 1:
        raise ValueError("n_bars must be >= 1")
    n_beats = n_bars * 4
    pool = rng.choice(
        len(BEAT_PATTERNS), size=min(patterns_per_piece, len(BEAT_PATTERNS)), replace=False
    )
    weights = rng.dirichlet(np.ones(len(pool)) * 2.0)
    onsets: list[int] = []
    for beat in range(n_beats):
        pattern = BEAT_PATTERNS[int(pool[rng.choice(len(pool), p=weights)])]
        for offset, hit in enumerate(pattern):
            if hit:
                onsets.append(beat * 4 + offset)
    if not onsets or onsets[0] != 0:
        onsets.insert(0, 0)  # every piece starts with a downbeat note

    total_steps = n_bars * STEPS_PER_BAR
    pitches = _scale_walk(rng, len(onsets))
    shift = transposition_shift(key_fifths)
    notes = []
    for index, onset in enumerate(onsets):
        end = onsets[index + 1] if index + 1 < len(onsets) else total_steps
        duration = end - onset
        if rest_probability > 0.0 and duration > 1 and rng.random() < rest_probability:
            duration -= 1
        # Walk is generated in C; shift opposite the transposition so that
        # normalizing the sheet lands back on the same C-major pitches.
        pitch = pitches[index] - shift
        notes.append(
            RawNote(
                midi_pitch=pitch,
                onset=Fraction(onset, 4),
                duration=Fraction(duration, 4),
            )
        )

    chords: list[ChordSymbol] = []
    if with_chords:
        for bar in range(n_bars):
            root, kind = _PROGRESSION[bar % len(_PROGRESSION)]
            chords.append(
                chord_from_kind(bar * STEPS_PER_BAR, (root - shift) % 12, kind)
            )
    return LeadSheet(
        id=piece_id,
        key_fifths=key_fifths,
        time_signature=(4, 4),
        pickup=False,
        n_bars=n_bars,
        notes=tuple(notes),
        chords=tuple(chords),
    )


def synthetic_corpus(
    n_pieces: int,
    *,
    seed: int = 0,
    n_bars: int = 8,
    patterns_per_piece: int = 4,
    rest_probability: float = 0.0,
    random_keys: bool = False,
    with_chords: bool = True,
) -> list[LeadSheet]:
    """A reproducible list of synthetic lead sheets."""
    rng = np.random.default_rng(seed)
    pieces = []
    for index in range(n_pieces):
        key = int(rng.integers(-3, 4)) if random_keys else 0
        pieces.append(
            synthetic_leadsheet(
                f"synthetic-{index:04d}",
                rng,
                n_bars=n_bars,
                patterns_per_piece=patterns_per_piece,
                rest_probability=rest_probability,
                key_fifths=key,
                with_chords=with_chords,
            )
        )
    return pieces
