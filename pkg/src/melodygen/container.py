"""Deterministic binary container for named float64 arrays plus JSON metadata.

Layout:

    bytes 0..7     magic  b"MGENCKPT"
    bytes 8..11    format version, uint32 little-endian
    bytes 12..19   header length in bytes, uint64 little-endian
    header         UTF-8 JSON, sorted keys:
                   {"meta": {...}, "arrays": [{"name", "shape", "offset",
                    "nbytes"}, ...]}
    payload        the arrays' raw bytes, little-endian float64, C order,
                   concatenated in header order

Identical inputs produce identical bytes (no timestamps, no compression),
which is what makes same-seed reruns byte-comparable.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MGENCKPT"
FORMAT_VERSION = 1


class ContainerError(ValueError):
    """The file is not a valid array container."""


def pack_arrays(arrays: dict[str, np.ndarray], meta: dict | None = None) -> bytes:
    """Serialize named arrays (converted to float64) and JSON metadata."""
    index = []
    payload = bytearray()
    for name in sorted(arrays):
        # np.ascontiguousarray would promote 0-d arrays to 1-d; asarray keeps them.
        arr = np.asarray(arrays[name], dtype="<f8", order="C")
        raw = arr.tobytes()
        index.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": len(raw),
            }
        )
        payload += raw
    header = json.dumps(
        {"meta": meta or {}, "arrays": index}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    return (
        MAGIC
        + struct.pack("<I", FORMAT_VERSION)
        + struct.pack("<Q", len(header))
        + header
        + bytes(payload)
    )


def unpack_arrays(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    """Inverse of :func:`pack_arrays`."""
    if len(data) < 20 or data[:8] != MAGIC:
        raise ContainerError("not an array container (bad magic)")
    (version,) = struct.unpack_from("<I", data, 8)
    if version != FORMAT_VERSION:
        raise ContainerError(f"unsupported container version {version}")
    (header_len,) = struct.unpack_from("<Q", data, 12)
    header_end = 20 + header_len
    if header_end > len(data):
        raise ContainerError("truncated container header")
    try:
        header = json.loads(data[20:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt container header: {exc}") from exc
    arrays: dict[str, np.ndarray] = {}
    payload = data[header_end:]
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise ContainerError(f"truncated payload for array {entry['name']!r}")
        arr = np.frombuffer(payload[start : start + nbytes], dtype="<f8")
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return arrays, header.get("meta", {})


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    Path(path).write_bytes(pack_arrays(arrays, meta))


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    return unpack_arrays(Path(path).read_bytes())
