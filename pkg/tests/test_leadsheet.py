"""Lead-sheet types and the JSON cache format."""

from fractions import Fraction

import pytest

from melodygen.leadsheet import (
    CHORD_KIND_INTERVALS,
    ChordSymbol,
    LeadSheet,
    RawNote,
    SchemaError,
    chord_from_kind,
    dumps_leadsheet,
    leadsheet_from_dict,
    leadsheet_to_dict,
    loads_leadsheet,
)


def make_sheet(notes=(), chords=(), **overrides) -> LeadSheet:
    fields = dict(
        id="t",
        key_fifths=0,
        time_signature=(4, 4),
        pickup=False,
        n_bars=2,
        notes=tuple(notes),
        chords=tuple(chords),
    )
    fields.update(overrides)
    return LeadSheet(**fields)


class TestRawNote:
    def test_fields_and_end(self):
        note = RawNote(60, Fraction(1, 2), Fraction(3, 2))
        assert note.end == Fraction(2)
        assert not note.tie_start and not note.tie_stop

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(midi_pitch=128, onset=Fraction(0), duration=Fraction(1)),
            dict(midi_pitch=-1, onset=Fraction(0), duration=Fraction(1)),
            dict(midi_pitch=60, onset=Fraction(-1, 4), duration=Fraction(1)),
            dict(midi_pitch=60, onset=Fraction(0), duration=Fraction(0)),
            dict(midi_pitch=60, onset=Fraction(0), duration=Fraction(-1)),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            RawNote(**kwargs)


class TestChordSymbol:
    def test_chroma_vector(self):
        chord = ChordSymbol(0, 7, (2, 7, 11))
        vec = chord.chroma_vector()
        assert len(vec) == 12
        assert [i for i, bit in enumerate(vec) if bit] == [2, 7, 11]

    def test_rejects_unsorted_or_duplicate_chroma(self):
        with pytest.raises(ValueError):
            ChordSymbol(0, 7, (7, 2, 11))
        with pytest.raises(ValueError):
            ChordSymbol(0, 7, (2, 7, 7, 11))

    def test_rejects_root_outside_chroma(self):
        with pytest.raises(ValueError):
            ChordSymbol(0, 5, (0, 4, 7))

    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError):
            ChordSymbol(-1, 0, (0,))
        with pytest.raises(ValueError):
            ChordSymbol(0, 12, (0, 12))

    def test_chord_from_kind_major_and_minor(self):
        major = chord_from_kind(0, 0, "major")
        assert major.chroma == (0, 4, 7)
        minor = chord_from_kind(4, 9, "minor")
        assert minor.chroma == (0, 4, 9)  # A C E

    def test_chord_from_kind_wraps_pitch_classes(self):
        dominant = chord_from_kind(0, 7, "dominant")  # G B D F
        assert dominant.chroma == (2, 5, 7, 11)

    def test_unknown_kind_falls_back_to_major(self):
        fancy = chord_from_kind(0, 2, "neapolitan-sixth-with-extras")
        assert fancy.chroma == chord_from_kind(0, 2, "major").chroma

    def test_all_known_kinds_build(self):
        for kind in CHORD_KIND_INTERVALS:
            chord = chord_from_kind(0, 3, kind)
            assert 3 in chord.chroma


class TestLeadSheet:
    def test_notes_must_be_sorted(self):
        a = RawNote(60, Fraction(1), Fraction(1))
        b = RawNote(62, Fraction(0), Fraction(1))
        with pytest.raises(ValueError, match="sorted"):
            make_sheet(notes=(a, b))

    def test_equal_onsets_sorted_by_pitch(self):
        a = RawNote(60, Fraction(0), Fraction(1))
        b = RawNote(64, Fraction(0), Fraction(1))
        make_sheet(notes=(a, b))  # allowed: same onset, ascending pitch
        with pytest.raises(ValueError):
            make_sheet(notes=(b, a))

    def test_chords_strictly_sorted(self):
        c1 = chord_from_kind(0, 0, "major")
        c2 = chord_from_kind(0, 7, "major")
        with pytest.raises(ValueError):
            make_sheet(chords=(c1, c2))

    def test_key_fifths_range(self):
        with pytest.raises(ValueError):
            make_sheet(key_fifths=8)
        make_sheet(key_fifths=-7)
        make_sheet(key_fifths=7)

    def test_time_signature_validated(self):
        with pytest.raises(ValueError):
            make_sheet(time_signature=(0, 4))

    def test_with_notes(self):
        sheet = make_sheet()
        note = RawNote(50, Fraction(0), Fraction(2))
        assert sheet.with_notes([note]).notes == (note,)
        assert sheet.notes == ()


class TestJson:
    def example(self) -> LeadSheet:
        return make_sheet(
            notes=(
                RawNote(62, Fraction(0), Fraction(1, 3)),
                RawNote(60, Fraction(1, 2), Fraction(3, 2), tie_start=True),
                RawNote(60, Fraction(2), Fraction(1), tie_stop=True),
            ),
            chords=(chord_from_kind(0, 0, "major"), chord_from_kind(8, 7, "dominant")),
            key_fifths=-3,
            pickup=False,
            n_bars=2,
        )

    def test_round_trip_preserves_everything(self):
        sheet = self.example()
        assert leadsheet_from_dict(leadsheet_to_dict(sheet)) == sheet
        assert loads_leadsheet(dumps_leadsheet(sheet)) == sheet

    def test_serialization_is_deterministic(self):
        sheet = self.example()
        assert dumps_leadsheet(sheet) == dumps_leadsheet(self.example())

    def test_fractions_survive_exactly(self):
        sheet = loads_leadsheet(dumps_leadsheet(self.example()))
        assert sheet.notes[0].duration == Fraction(1, 3)
        assert sheet.notes[1].onset == Fraction(1, 2)

    def test_tie_flags_survive(self):
        sheet = loads_leadsheet(dumps_leadsheet(self.example()))
        assert sheet.notes[1].tie_start and not sheet.notes[1].tie_stop
        assert sheet.notes[2].tie_stop

    def test_missing_field_is_named(self):
        obj = leadsheet_to_dict(self.example())
        del obj["key_fifths"]
        with pytest.raises(SchemaError, match="key_fifths"):
            leadsheet_from_dict(obj)

    def test_wrong_type_is_named(self):
        obj = leadsheet_to_dict(self.example())
        obj["n_bars"] = "eight"
        with pytest.raises(SchemaError, match="n_bars"):
            leadsheet_from_dict(obj)

    def test_bad_fraction_is_located(self):
        obj = leadsheet_to_dict(self.example())
        obj["notes"][1]["onset"] = [1, 0]
        with pytest.raises(SchemaError, match=r"notes\[1\].onset"):
            leadsheet_from_dict(obj)

    def test_unsupported_schema_version(self):
        obj = leadsheet_to_dict(self.example())
        obj["schema"] = 99
        with pytest.raises(SchemaError, match="schema version"):
            leadsheet_from_dict(obj)

    def test_invalid_note_is_located(self):
        obj = leadsheet_to_dict(self.example())
        obj["notes"][0]["pitch"] = 300
        with pytest.raises(SchemaError, match=r"notes\[0\]"):
            leadsheet_from_dict(obj)

    def test_not_json(self):
        with pytest.raises(SchemaError, match="JSON"):
            loads_leadsheet("{not json")

    def test_top_level_must_be_object(self):
        with pytest.raises(SchemaError):
            leadsheet_from_dict([1, 2, 3])
