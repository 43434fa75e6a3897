"""Versioned binary records for summaries.

Layout (all little-endian)::

    magic  b"SSPM"
    u16    format version
    u8     kind code
    ...    kind-specific header (u64/i64 words), then entry arrays

Entry arrays are written column by column as raw 8-byte words, ordered by the
entry creation stamp, so identical summaries always encode to identical bytes.
"""

import struct

import numpy as np

from .errors import CorruptSummary

MAGIC = b"SSPM"
VERSION = 1

KIND_SS = 1
KIND_USS = 2
KIND_LEGACY = 3
KIND_ISS = 4
KIND_DSS = 5

_PREFIX = struct.Struct("<4sHB")


def pack(kind, header, columns):
    """Encode ``header`` (ints) followed by equal-length int64/uint64 columns."""
    n = len(columns[0]) if columns else 0
    parts = [_PREFIX.pack(MAGIC, VERSION, kind)]
    parts.append(struct.pack(f"<{len(header)}q", *[_signed(h) for h in header]))
    parts.append(struct.pack("<q", n))
    for col in columns:
        arr = np.asarray(col)
        if len(arr) != n:
            raise ValueError("columns differ in length")
        parts.append(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())
    return b"".join(parts)


def unpack(data, kind, n_header, dtypes):
    """Inverse of :func:`pack`. Returns ``(header, columns, end_offset)``."""
    try:
        magic, version, got = _PREFIX.unpack_from(data, 0)
    except struct.error as exc:
        raise CorruptSummary("truncated record") from exc
    if magic != MAGIC:
        raise CorruptSummary("bad magic")
    if version != VERSION:
        raise CorruptSummary(f"unsupported version {version}")
    if got != kind:
        raise CorruptSummary(f"expected kind {kind}, found {got}")
    off = _PREFIX.size
    try:
        header = list(struct.unpack_from(f"<{n_header}q", data, off))
        off += 8 * n_header
        (n,) = struct.unpack_from("<q", data, off)
        off += 8
    except struct.error as exc:
        raise CorruptSummary("truncated header") from exc
    columns = []
    for dt in dtypes:
        end = off + 8 * n
        if n < 0 or end > len(data):
            raise CorruptSummary("truncated entries")
        columns.append(np.frombuffer(data[off:end], dtype=np.dtype(dt).newbyteorder("<")).astype(dt))
        off = end
    return header, columns, off


def peek_kind(data):
    try:
        magic, version, kind = _PREFIX.unpack_from(data, 0)
    except struct.error as exc:
        raise CorruptSummary("truncated record") from exc
    if magic != MAGIC:
        raise CorruptSummary("bad magic")
    return kind


def _signed(v):
    v = int(v)
    return v - (1 << 64) if v >= (1 << 63) else v


def unsigned(v):
    return int(v) & ((1 << 64) - 1)
