"""Teacher-forcing datasets for each generator level.

Every piece contributes one training sequence per level: the level's own
symbol sequence as targets, and inputs assembled from the previous symbol,
the conditions coming down the hierarchy (taken from the data during
training), and the lookback block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encode import MelodyGrid
from ..leadsheet import ChordSymbol
from ..profiles import ProfileCodebook, profile_sequences
from .specs import (
    BEATS_PER_BAR,
    LayerSpec,
    build_layer_inputs,
    chord_chroma_by_beat,
    layer_specs,
)


@dataclass
class TrainingSequence:
    """One piece prepared for one level: (T, D) inputs, (T,) targets."""

    inputs: np.ndarray
    targets: np.ndarray
    piece_id: str = ""

    def __post_init__(self) -> None:
        if len(self.inputs) != len(self.targets):
            raise ValueError("inputs and targets must have equal length")
        if len(self.inputs) == 0:
            raise ValueError("empty training sequence")


def piece_level_sequences(
    grid: MelodyGrid,
    specs: dict[str, LayerSpec],
    *,
    beat_codebook: ProfileCodebook | None,
    bar_codebook: ProfileCodebook | None,
    chords: tuple[ChordSymbol, ...] = (),
    piece_id: str = "",
) -> dict[str, TrainingSequence]:
    """Build the per-level training sequences for one melody grid."""
    need_bar = any(s.level == "bar" or s.bar_condition for s in specs.values())
    need_beat = any(s.level == "beat" or s.beat_condition for s in specs.values())
    bar_idx, beat_idx = profile_sequences(
        grid,
        beat_codebook if need_beat else None,
        bar_codebook if need_bar else None,
    )
    need_chroma = any(s.chroma for s in specs.values())
    chroma = (
        chord_chroma_by_beat(chords, grid.n_bars * BEATS_PER_BAR)
        if need_chroma
        else None
    )

    level_events = {}
    if "bar" in specs:
        level_events["bar"] = bar_idx
    if "beat" in specs:
        level_events["beat"] = beat_idx
    level_events["note"] = grid.to_array()

    out: dict[str, TrainingSequence] = {}
    for level, spec in specs.items():
        events = level_events[level]
        inputs = build_layer_inputs(
            spec,
            events,
            bar_indices=bar_idx if spec.bar_condition else None,
            beat_indices=beat_idx if spec.beat_condition else None,
            chroma_by_beat=chroma if spec.chroma else None,
        )
        out[level] = TrainingSequence(inputs, np.asarray(events), piece_id)
    return out


def build_datasets(
    grids: list[MelodyGrid],
    variant: str,
    *,
    beat_codebook: ProfileCodebook | None = None,
    bar_codebook: ProfileCodebook | None = None,
    chord_tracks: list[tuple[ChordSymbol, ...]] | None = None,
    chords: bool = False,
    piece_ids: list[str] | None = None,
) -> dict[str, list[TrainingSequence]]:
    """Datasets per level for a whole corpus slice.

    ``chord_tracks`` aligns with ``grids`` and is only consulted when the
    variant is chord-conditioned.
    """
    specs = layer_specs(
        variant,
        chords=chords,
        beat_k=beat_codebook.k if beat_codebook else 8,
        bar_k=bar_codebook.k if bar_codebook else 16,
    )
    _validate_codebooks(specs, beat_codebook, bar_codebook)
    datasets: dict[str, list[TrainingSequence]] = {level: [] for level in specs}
    for index, grid in enumerate(grids):
        track = chord_tracks[index] if (chords and chord_tracks) else ()
        piece_id = piece_ids[index] if piece_ids else f"piece{index}"
        sequences = piece_level_sequences(
            grid,
            specs,
            beat_codebook=beat_codebook,
            bar_codebook=bar_codebook,
            chords=track,
            piece_id=piece_id,
        )
        for level, sequence in sequences.items():
            datasets[level].append(sequence)
    return datasets


def _validate_codebooks(specs, beat_codebook, bar_codebook) -> None:
    needs_beat = any(s.level == "beat" or s.beat_condition for s in specs.values())
    needs_bar = any(s.level == "bar" or s.bar_condition for s in specs.values())
    if needs_beat and beat_codebook is None:
        raise ValueError("this variant needs a beat codebook")
    if needs_bar and bar_codebook is None:
        raise ValueError("this variant needs a bar codebook")


def pad_batch(
    sequences: list[TrainingSequence],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack variable-length sequences into (T, B, D) with a validity mask.

    Padding is trailing: padded steps carry zero inputs, target 0, mask 0.
    """
    if not sequences:
        raise ValueError("cannot pad an empty batch")
    longest = max(len(s.targets) for s in sequences)
    batch = len(sequences)
    dim = sequences[0].inputs.shape[1]
    inputs = np.zeros((longest, batch, dim))
    targets = np.zeros((longest, batch), dtype=np.int64)
    mask = np.zeros((longest, batch))
    for j, seq in enumerate(sequences):
        n = len(seq.targets)
        inputs[:n, j] = seq.inputs
        targets[:n, j] = seq.targets
        mask[:n, j] = 1.0
    return inputs, targets, mask
