"""The 38-event melody grid: transposition, quantization, round trips."""

import random
from fractions import Fraction

import numpy as np
import pytest

from melodygen.encode import (
    ALPHABET_SIZE,
    NO_EVENT,
    NOTE_OFF,
    N_PITCHES,
    PITCH_MAX,
    PITCH_MIN,
    STEPS_PER_BAR,
    MelodyGrid,
    fold_octaves,
    grid_decode,
    grid_encode,
    normalize_sheet,
    one_hot,
    one_hot_matrix,
    quantize_steps,
    sustain_extend,
    transpose_to_c,
    transposition_shift,
    tonic_pitch_class,
)
from melodygen.leadsheet import LeadSheet, RawNote, chord_from_kind


def sheet_from_steps(step_notes, n_bars, key_fifths=0, chords=()):
    """Build a LeadSheet from (pitch, onset_step, duration_steps) triples."""
    notes = tuple(
        RawNote(pitch, Fraction(on, 4), Fraction(dur, 4))
        for pitch, on, dur in sorted(step_notes, key=lambda n: (n[1], n[0]))
    )
    return LeadSheet(
        id="t",
        key_fifths=key_fifths,
        time_signature=(4, 4),
        pickup=False,
        n_bars=n_bars,
        notes=notes,
        chords=tuple(chords),
    )


class TestConstants:
    def test_alphabet_layout(self):
        assert N_PITCHES == 36
        assert NOTE_OFF == 36
        assert NO_EVENT == 37
        assert ALPHABET_SIZE == 38
        assert PITCH_MAX - PITCH_MIN + 1 == N_PITCHES


class TestMelodyGrid:
    def test_length_must_be_whole_bars(self):
        with pytest.raises(ValueError, match="multiple"):
            MelodyGrid(tuple([NO_EVENT] * 15))
        grid = MelodyGrid(tuple([NO_EVENT] * 32))
        assert grid.n_bars == 2 and len(grid) == 32

    def test_event_range_checked(self):
        with pytest.raises(ValueError, match="alphabet"):
            MelodyGrid(tuple([38] + [NO_EVENT] * 15))

    def test_note_off_requires_sounding_note(self):
        with pytest.raises(ValueError, match="note-off"):
            MelodyGrid(tuple([NOTE_OFF] + [NO_EVENT] * 15))

    def test_note_off_after_hold_is_fine(self):
        events = [0] + [NO_EVENT] * 5 + [NOTE_OFF] + [NO_EVENT] * 9
        MelodyGrid(tuple(events))

    def test_double_note_off_rejected(self):
        events = [0, NOTE_OFF, NOTE_OFF] + [NO_EVENT] * 13
        with pytest.raises(ValueError):
            MelodyGrid(tuple(events))

    def test_to_array(self):
        grid = MelodyGrid(tuple([5] + [NO_EVENT] * 15))
        arr = grid.to_array()
        assert arr.dtype == np.int64 and arr[0] == 5


class TestTransposition:
    # Key signature (count of sharps, negative for flats) -> semitone shift
    # moving the major tonic to C by the smallest motion; ties fall downward.
    EXPECTED_SHIFTS = {
        -7: 1, -6: -6, -5: -1, -4: 4, -3: -3, -2: 2, -1: -5,
        0: 0, 1: 5, 2: -2, 3: 3, 4: -4, 5: 1, 6: -6, 7: -1,
    }

    def test_tonic_pitch_classes(self):
        assert tonic_pitch_class(0) == 0  # C
        assert tonic_pitch_class(1) == 7  # G
        assert tonic_pitch_class(-1) == 5  # F
        assert tonic_pitch_class(2) == 2  # D
        assert tonic_pitch_class(-3) == 3  # E flat

    def test_shift_table(self):
        for fifths, expected in self.EXPECTED_SHIFTS.items():
            assert transposition_shift(fifths) == expected, fifths

    def test_shift_lands_tonic_on_c_minimally(self):
        for fifths in range(-7, 8):
            shift = transposition_shift(fifths)
            assert (tonic_pitch_class(fifths) + shift) % 12 == 0
            assert -6 <= shift <= 5

    def test_transpose_g_major_up(self):
        sheet = sheet_from_steps([(67, 0, 4), (74, 4, 4)], 1, key_fifths=1)
        out = transpose_to_c(sheet)
        assert out.key_fifths == 0
        assert [n.midi_pitch for n in out.notes] == [72, 79]

    def test_transpose_f_major_down(self):
        sheet = sheet_from_steps([(65, 0, 4)], 1, key_fifths=-1)
        assert transpose_to_c(sheet).notes[0].midi_pitch == 60

    def test_c_major_untouched(self):
        sheet = sheet_from_steps([(60, 0, 4)], 1, key_fifths=0)
        assert transpose_to_c(sheet) is sheet

    def test_chords_shift_with_melody(self):
        chord = chord_from_kind(0, 7, "major")  # G: {7, 11, 2}
        sheet = sheet_from_steps([(67, 0, 4)], 1, key_fifths=1, chords=(chord,))
        moved = transpose_to_c(sheet).chords[0]
        assert moved.root_pitch_class == 0
        assert moved.chroma == (0, 4, 7)

    def test_chroma_vector_rotates(self):
        chord = chord_from_kind(0, 9, "minor-seventh")
        sheet = sheet_from_steps([(60, 0, 4)], 1, key_fifths=3, chords=(chord,))
        shift = transposition_shift(3)
        before = chord.chroma_vector()
        after = transpose_to_c(sheet).chords[0].chroma_vector()
        assert all(
            after[(pc + shift) % 12] == before[pc] for pc in range(12)
        )

    def test_onsets_and_durations_unchanged(self):
        sheet = sheet_from_steps([(67, 3, 5)], 1, key_fifths=1)
        out = transpose_to_c(sheet)
        assert out.notes[0].onset == Fraction(3, 4)
        assert out.notes[0].duration == Fraction(5, 4)


class TestFoldOctaves:
    @pytest.mark.parametrize(
        "pitch,expected",
        [(36, 36), (71, 71), (35, 47), (72, 60), (0, 36), (127, 67), (53, 53)],
    )
    def test_folding(self, pitch, expected):
        folded = fold_octaves(pitch)
        assert folded == expected
        assert PITCH_MIN <= folded <= PITCH_MAX
        assert folded % 12 == pitch % 12

    def test_out_of_midi_range(self):
        with pytest.raises(ValueError):
            fold_octaves(128)
        with pytest.raises(ValueError):
            fold_octaves(-1)


class TestNormalizeSheet:
    def test_transposes_then_folds(self):
        # D5 in G major: up 5 to G5 (79), then folded down to G4 (67).
        sheet = sheet_from_steps([(74, 0, 4)], 1, key_fifths=1)
        assert normalize_sheet(sheet).notes[0].midi_pitch == 67


class TestQuantize:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (Fraction(0), 0),
            (Fraction(1, 2), 0),  # exact halves resolve to the earlier step
            (Fraction(3, 2), 1),
            (Fraction(5, 2), 2),
            (Fraction(1, 3), 0),
            (Fraction(2, 3), 1),
            (Fraction(7, 10), 1),
            (Fraction(3, 10), 0),
            (7, 7),
        ],
    )
    def test_values(self, value, expected):
        assert quantize_steps(value) == expected

    def test_monotone(self):
        values = [Fraction(n, 12) for n in range(0, 60)]
        quantized = [quantize_steps(v) for v in values]
        assert quantized == sorted(quantized)


class TestGridEncode:
    def test_simple_bar(self):
        sheet = sheet_from_steps([(60, 0, 4), (62, 4, 2), (64, 8, 8)], 1)
        grid = grid_encode(sheet)
        expected = [NO_EVENT] * 16
        expected[0] = 60 - PITCH_MIN
        expected[4] = 62 - PITCH_MIN
        expected[6] = NOTE_OFF
        expected[8] = 64 - PITCH_MIN
        assert list(grid.events) == expected

    def test_adjacent_notes_need_no_note_off(self):
        sheet = sheet_from_steps([(60, 0, 4), (62, 4, 12)], 1)
        events = grid_encode(sheet).events
        assert events[4] == 62 - PITCH_MIN
        assert NOTE_OFF not in events

    def test_trailing_note_runs_to_grid_end(self):
        sheet = sheet_from_steps([(60, 0, 16)], 1)
        assert NOTE_OFF not in grid_encode(sheet).events

    def test_note_off_never_overwrites_next_onset(self):
        sheet = sheet_from_steps([(60, 0, 8), (62, 8, 8)], 1)
        events = grid_encode(sheet).events
        assert events[8] == 62 - PITCH_MIN

    def test_requires_common_time(self):
        sheet = LeadSheet("t", 0, (3, 4), False, 1, ())
        with pytest.raises(ValueError, match="4/4"):
            grid_encode(sheet)

    def test_quantization_ties_round_earlier(self):
        # Onset 1/8 quarter = step 0.5 -> step 0; end 9/8 quarter = 4.5 -> 4.
        sheet = LeadSheet(
            "t", 0, (4, 4), False, 1,
            (RawNote(60, Fraction(1, 8), Fraction(1)),),
        )
        events = grid_encode(sheet).events
        assert events[0] == 60 - PITCH_MIN
        assert events[4] == NOTE_OFF

    def test_zero_length_note_dropped(self):
        # Onset 0.4 steps and end 0.44 steps both quantize to step 0.
        sheet = LeadSheet(
            "t", 0, (4, 4), False, 1,
            (RawNote(60, Fraction(1, 10), Fraction(1, 100)),),
        )
        assert set(grid_encode(sheet).events) == {NO_EVENT}

    def test_same_onset_keeps_longest_then_highest(self):
        sheet = sheet_from_steps([(60, 0, 8), (64, 0, 4)], 1)
        events = grid_encode(sheet).events
        assert events[0] == 60 - PITCH_MIN  # longer wins over higher
        sheet = sheet_from_steps([(60, 0, 4), (64, 0, 4)], 1)
        assert grid_encode(sheet).events[0] == 64 - PITCH_MIN  # tie: higher

    def test_overlap_raises(self):
        sheet = sheet_from_steps([(60, 0, 8), (62, 4, 4)], 1)
        with pytest.raises(ValueError, match="not monophonic"):
            grid_encode(sheet)

    def test_note_past_final_bar_raises(self):
        sheet = sheet_from_steps([(60, 12, 8)], 1)
        with pytest.raises(ValueError, match="final bar"):
            grid_encode(sheet)

    def test_out_of_range_pitches_folded(self):
        sheet = sheet_from_steps([(24, 0, 4), (84, 8, 4)], 1)
        events = grid_encode(sheet).events
        assert events[0] == 36 - PITCH_MIN
        assert events[8] == 60 - PITCH_MIN


class TestGridDecode:
    def test_decode_matches_hand_expectation(self):
        events = [NO_EVENT] * 16
        events[0] = 60 - PITCH_MIN
        events[4] = 62 - PITCH_MIN
        events[6] = NOTE_OFF
        events[8] = 64 - PITCH_MIN
        notes = grid_decode(MelodyGrid(tuple(events)))
        assert notes == [(60, 0, 4), (62, 4, 2), (64, 8, 8)]

    def test_decode_raw_sequence_checks_note_off(self):
        with pytest.raises(ValueError):
            grid_decode([NOTE_OFF] * 16)

    def test_empty_grid(self):
        assert grid_decode(MelodyGrid(tuple([NO_EVENT] * 16))) == []

    def test_round_trip_random_melodies(self):
        rng = random.Random(1234)
        for trial in range(60):
            n_bars = rng.randint(1, 4)
            total = n_bars * STEPS_PER_BAR
            notes, step = [], 0
            while step < total:
                if rng.random() < 0.3:
                    step += rng.randint(1, 3)  # rest
                    continue
                duration = rng.randint(1, min(8, total - step))
                notes.append((rng.randint(PITCH_MIN, PITCH_MAX), step, duration))
                step += duration + (rng.randint(1, 2) if rng.random() < 0.4 else 0)
            sheet = sheet_from_steps(notes, n_bars)
            decoded = grid_decode(grid_encode(sheet))
            assert decoded == sorted(notes, key=lambda n: n[1]), f"trial {trial}"


class TestOneHot:
    def test_one_hot_vector(self):
        vec = one_hot(NOTE_OFF)
        assert vec.shape == (ALPHABET_SIZE,)
        assert vec[NOTE_OFF] == 1.0 and vec.sum() == 1.0

    def test_one_hot_range(self):
        with pytest.raises(ValueError):
            one_hot(ALPHABET_SIZE)

    def test_one_hot_matrix(self):
        mat = one_hot_matrix([0, 37, 5], ALPHABET_SIZE)
        assert mat.shape == (3, ALPHABET_SIZE)
        assert mat.sum() == 3.0
        assert mat[1, 37] == 1.0

    def test_one_hot_matrix_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            one_hot_matrix([0, 38], ALPHABET_SIZE)

    def test_one_hot_matrix_empty(self):
        assert one_hot_matrix([], 10).shape == (0, 10)


class TestSustainExtend:
    def test_extends_to_bar_end(self):
        assert sustain_extend([(60, 0, 4)]) == [(60, 0, 16)]

    def test_note_at_bar_end_unchanged(self):
        assert sustain_extend([(60, 0, 16)]) == [(60, 0, 16)]
        assert sustain_extend([(60, 12, 4)]) == [(60, 12, 4)]

    def test_note_crossing_barline_extends_to_second_bar(self):
        assert sustain_extend([(60, 14, 4)]) == [(60, 14, 18)]

    def test_never_shortens(self):
        rng = random.Random(7)
        for _ in range(100):
            on = rng.randint(0, 63)
            dur = rng.randint(1, 32)
            [(pitch, out_on, out_dur)] = sustain_extend([(70, on, dur)])
            assert out_on == on and out_dur >= dur
            assert (out_on + out_dur) % STEPS_PER_BAR == 0
