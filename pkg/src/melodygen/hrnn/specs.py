"""Layer specifications and input-feature construction for the hierarchy.

Three generator levels share one input recipe. At sequence position p, a
layer predicting symbol y_p sees the concatenation, in this fixed order:

    [ one-hot(y_{p-1})            alphabet_size dims, zeros at p = 0
    | bar-profile condition       bar_k dims, when conditioned on bars
    | beat-profile condition      beat_k dims, when conditioned on beats
    | chord chroma                12 dims, when chord-conditioned
    | lookback                    2*alphabet + 2 + position_bits dims ]

The lookback block holds, per configured distance d: the one-hot of
y_{p-d} (zeros when p < d), then one repeat flag per distance
([y_{p-1} == y_{p-1-d}], zero when out of range), then a binary counter of
the position within the layer's cycle (4 bits of p mod 16 for the note
level, 2 bits of p mod 4 for the beat level, none for bars).

Variants: "3L" is the full bar/beat/note stack; "2L" drops the bar level
(its beat layer is unconditioned); "1L" is the note level alone with no
profile conditions, which reduces it to a plain lookback sequence model.
Chord conditioning adds the chroma block to the beat and note levels (the
note level in every variant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encode import ALPHABET_SIZE, one_hot_matrix
from ..leadsheet import ChordSymbol

VARIANTS = ("1L", "2L", "3L")
LEVELS = ("bar", "beat", "note")

STEPS_PER_BAR = 16
STEPS_PER_BEAT = 4
BEATS_PER_BAR = 4
CHROMA_DIM = 12

FEATURE_LAYOUT_VERSION = 1

# Lookback distances per level, in the level's own sequence positions.
# Bars look back 2 and 4 bars, beats 4 and 8 beats; the note level looks
# back one and two whole bars (16 and 32 steps).
LOOKBACK_DISTANCES = {"bar": (2, 4), "beat": (4, 8), "note": (16, 32)}
POSITION_BITS = {"bar": 0, "beat": 2, "note": 4}


@dataclass(frozen=True)
class LayerSpec:
    """Feature layout contract for one generator level."""

    level: str
    alphabet_size: int
    bar_condition: int  # bar codebook size, or 0 when unconditioned on bars
    beat_condition: int  # beat codebook size, or 0
    chroma: bool
    lookback_distances: tuple[int, int]
    position_bits: int

    def __post_init__(self) -> None:
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be positive")

    @property
    def condition_dim(self) -> int:
        return self.bar_condition + self.beat_condition + (CHROMA_DIM if self.chroma else 0)

    @property
    def lookback_dim(self) -> int:
        return 2 * self.alphabet_size + len(self.lookback_distances) + self.position_bits

    @property
    def input_dim(self) -> int:
        return self.alphabet_size + self.condition_dim + self.lookback_dim

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "alphabet_size": self.alphabet_size,
            "bar_condition": self.bar_condition,
            "beat_condition": self.beat_condition,
            "chroma": self.chroma,
            "lookback_distances": list(self.lookback_distances),
            "position_bits": self.position_bits,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LayerSpec":
        return cls(
            level=obj["level"],
            alphabet_size=obj["alphabet_size"],
            bar_condition=obj["bar_condition"],
            beat_condition=obj["beat_condition"],
            chroma=obj["chroma"],
            lookback_distances=tuple(obj["lookback_distances"]),
            position_bits=obj["position_bits"],
        )


def layer_specs(
    variant: str,
    *,
    chords: bool = False,
    beat_k: int = 8,
    bar_k: int = 16,
) -> dict[str, LayerSpec]:
    """The LayerSpec for every level present in a variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")

    def spec(level, alphabet, bar_cond, beat_cond, with_chroma):
        return LayerSpec(
            level=level,
            alphabet_size=alphabet,
            bar_condition=bar_cond,
            beat_condition=beat_cond,
            chroma=with_chroma,
            lookback_distances=LOOKBACK_DISTANCES[level],
            position_bits=POSITION_BITS[level],
        )

    if variant == "3L":
        return {
            "bar": spec("bar", bar_k, 0, 0, False),
            "beat": spec("beat", beat_k, bar_k, 0, chords),
            "note": spec("note", ALPHABET_SIZE, bar_k, beat_k, chords),
        }
    if variant == "2L":
        return {
            "beat": spec("beat", beat_k, 0, 0, chords),
            "note": spec("note", ALPHABET_SIZE, 0, beat_k, chords),
        }
    return {"note": spec("note", ALPHABET_SIZE, 0, 0, chords)}


def position_counter_bits(position: int, n_bits: int) -> np.ndarray:
    """Little-endian binary counter of position mod 2**n_bits."""
    value = position % (1 << n_bits) if n_bits else 0
    return np.array([(value >> j) & 1 for j in range(n_bits)], dtype=np.float64)


def lookback_features(history: np.ndarray, position: int, spec: LayerSpec) -> np.ndarray:
    """Lookback block at one position, reading only history before it.

    ``history`` must cover at least positions < ``position``; entries at or
    beyond it are never read.
    """
    a = spec.alphabet_size
    out = np.zeros(spec.lookback_dim, dtype=np.float64)
    offset = 0
    for d in spec.lookback_distances:
        if position - d >= 0:
            out[offset + int(history[position - d])] = 1.0
        offset += a
    for j, d in enumerate(spec.lookback_distances):
        back = position - 1 - d
        if back >= 0 and history[position - 1] == history[back]:
            out[offset + j] = 1.0
    offset += len(spec.lookback_distances)
    out[offset : offset + spec.position_bits] = position_counter_bits(
        position, spec.position_bits
    )
    return out


def lookback_feature_matrix(events: np.ndarray, spec: LayerSpec) -> np.ndarray:
    """Lookback blocks for every position of a complete sequence (T, dims)."""
    events = np.asarray(events, dtype=np.int64)
    steps = len(events)
    a = spec.alphabet_size
    out = np.zeros((steps, spec.lookback_dim), dtype=np.float64)
    offset = 0
    for d in spec.lookback_distances:
        if steps > d:
            out[np.arange(d, steps), offset + events[: steps - d]] = 1.0
        offset += a
    for j, d in enumerate(spec.lookback_distances):
        start = d + 1
        if steps > start:
            repeat = events[start - 1 : steps - 1] == events[: steps - start]
            out[start:, offset + j] = repeat.astype(np.float64)
    offset += len(spec.lookback_distances)
    if spec.position_bits:
        positions = np.arange(steps) % (1 << spec.position_bits)
        for j in range(spec.position_bits):
            out[:, offset + j] = (positions >> j) & 1
    return out


def previous_event_matrix(events: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Row p holds one-hot(events[p-1]); row 0 is zeros."""
    events = np.asarray(events, dtype=np.int64)
    out = np.zeros((len(events), alphabet_size), dtype=np.float64)
    if len(events) > 1:
        out[1:] = one_hot_matrix(events[:-1], alphabet_size)
    return out


def fan_out(indices: np.ndarray, repeat: int) -> np.ndarray:
    """Repeat each index ``repeat`` times (profile -> finer positions)."""
    return np.repeat(np.asarray(indices, dtype=np.int64), repeat)


def chord_chroma_by_beat(
    chords: tuple[ChordSymbol, ...] | list[ChordSymbol],
    n_beats: int,
) -> np.ndarray:
    """(n_beats, 12) chroma of the chord sounding at each beat start.

    The active chord at beat q is the latest chord whose onset_step is at or
    before step 4q; beats before the first chord get a zero vector.
    """
    out = np.zeros((n_beats, CHROMA_DIM), dtype=np.float64)
    if not chords:
        return out
    ordered = sorted(chords, key=lambda chord: chord.onset_step)
    onsets = [chord.onset_step for chord in ordered]
    vectors = [chord.chroma_vector() for chord in ordered]
    active = -1
    for beat in range(n_beats):
        step = beat * STEPS_PER_BEAT
        while active + 1 < len(onsets) and onsets[active + 1] <= step:
            active += 1
        if active >= 0:
            out[beat] = vectors[active]
    return out


def build_layer_inputs(
    spec: LayerSpec,
    events: np.ndarray,
    *,
    bar_indices: np.ndarray | None = None,
    beat_indices: np.ndarray | None = None,
    chroma_by_beat: np.ndarray | None = None,
) -> np.ndarray:
    """Assemble the full (T, input_dim) input matrix for one sequence.

    ``events`` is the layer's own symbol sequence (its prediction targets).
    Profile indices are given per bar / per beat and fanned out to the
    layer's positions; chroma is given per beat.
    """
    events = np.asarray(events, dtype=np.int64)
    steps = len(events)
    blocks = [previous_event_matrix(events, spec.alphabet_size)]

    per_bar = {"bar": 1, "beat": BEATS_PER_BAR, "note": STEPS_PER_BAR}[spec.level]
    per_beat = {"bar": 0, "beat": 1, "note": STEPS_PER_BEAT}[spec.level]

    if spec.bar_condition:
        if bar_indices is None:
            raise ValueError(f"{spec.level} layer requires bar profile indices")
        expanded = fan_out(bar_indices, per_bar)
        if len(expanded) != steps:
            raise ValueError(
                f"bar profiles cover {len(expanded)} positions, need {steps}"
            )
        blocks.append(one_hot_matrix(expanded, spec.bar_condition))
    if spec.beat_condition:
        if beat_indices is None:
            raise ValueError(f"{spec.level} layer requires beat profile indices")
        expanded = fan_out(beat_indices, per_beat)
        if len(expanded) != steps:
            raise ValueError(
                f"beat profiles cover {len(expanded)} positions, need {steps}"
            )
        blocks.append(one_hot_matrix(expanded, spec.beat_condition))
    if spec.chroma:
        if chroma_by_beat is None:
            chroma_by_beat = np.zeros((0, CHROMA_DIM))
        if spec.level == "note":
            expanded_chroma = np.repeat(chroma_by_beat, STEPS_PER_BEAT, axis=0)
        else:
            expanded_chroma = np.asarray(chroma_by_beat, dtype=np.float64)
        if len(expanded_chroma) != steps:
            raise ValueError(
                f"chroma covers {len(expanded_chroma)} positions, need {steps}"
            )
        blocks.append(expanded_chroma)

    blocks.append(lookback_feature_matrix(events, spec))
    inputs = np.concatenate(blocks, axis=1)
    assert inputs.shape == (steps, spec.input_dim)
    return inputs
