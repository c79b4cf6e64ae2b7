"""melodygen: symbolic melody modeling on a 16th-note event grid.

The package covers the full pipeline:

    leadsheet / musicxml / corpus   parse and cache monophonic 4/4 lead sheets
    encode                          38-event grid encoding and decoding
    profiles                        rhythm profiles via seeded K-Means
    neural                          from-scratch LSTM with exact BPTT and Adam
    hrnn                            the bar/beat/note generator hierarchy
    midifile                        standard MIDI export
    synthetic                       reproducible synthetic corpora
    cli                             command-line pipeline driver
"""

from . import (
    container,
    corpus,
    encode,
    hrnn,
    leadsheet,
    midifile,
    musicxml,
    profiles,
    synthetic,
)

__version__ = "0.1.0"

__all__ = [
    "container",
    "corpus",
    "encode",
    "hrnn",
    "leadsheet",
    "midifile",
    "musicxml",
    "profiles",
    "synthetic",
    "__version__",
]
