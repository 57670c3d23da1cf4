"""Deterministic binary container for named tensors plus JSON metadata.

All checkpoints in this package (word tables, encoder spaces, document
model) are stored in this format. The layout is canonical — metadata keys
sorted, tensors sorted by name, little-endian raw bytes, no timestamps —
so save -> load -> save reproduces the file byte for byte. That property
is load-bearing: artifact fingerprints are hashes of these bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError

MAGIC = b"CDVBIN1\n"

_ALLOWED_DTYPES = {"<f8", "<f4", "<i8", "<i4", "<u8", "<u4", "|u1"}


def _canonical_dtype(arr: np.ndarray) -> str:
    dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
    s = dt.str
    if s == "|i1":
        s = "|u1"
    if s not in _ALLOWED_DTYPES:
        raise ValueError(f"unsupported tensor dtype {arr.dtype}")
    return s


def dump_bytes(meta: dict, tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize metadata and named tensors to canonical bytes."""
    manifest = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        dtype = _canonical_dtype(arr)
        raw = arr.astype(dtype, copy=False).tobytes()
        manifest.append(
            {
                "name": name,
                "dtype": dtype,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"meta": meta, "tensors": manifest},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
    ).encode("ascii")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<Q", len(header))
    out += header
    for raw in blobs:
        out += raw
    return bytes(out)


def load_bytes(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :func:`dump_bytes`."""
    if data[: len(MAGIC)] != MAGIC:
        raise ParseError("bad magic: not a CDVBIN container")
    pos = len(MAGIC)
    (header_len,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    try:
        header = json.loads(data[pos : pos + header_len].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"corrupt container header: {exc}") from exc
    pos += header_len
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        start = pos + entry["offset"]
        raw = data[start : start + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise ParseError(f"truncated tensor data for {entry['name']!r}")
        arr = np.frombuffer(raw, dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["meta"], tensors


def save(path: str | Path, meta: dict, tensors: dict[str, np.ndarray]) -> str:
    """Write a container file and return its fingerprint."""
    data = dump_bytes(meta, tensors)
    Path(path).write_bytes(data)
    return fingerprint_bytes(data)


def load(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    return load_bytes(Path(path).read_bytes())


def fingerprint_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint_file(path: str | Path) -> str:
    return fingerprint_bytes(Path(path).read_bytes())
