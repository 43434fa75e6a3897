"""Stream events, the bounded-deletion contract and the exact oracle.

A stream is any sequence of :class:`StreamOp`. Generators in
:mod:`sspm.workloads` return :class:`OpStream`, which stores the same data as
two numpy arrays so the sketches can consume it in bulk.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import AlphaViolated, BadAlpha, NegativeFrequency

MAX_ITEM = (1 << 64) - 1


class Op(enum.IntEnum):
    INSERT = 0
    DELETE = 1


class StreamOp(NamedTuple):
    item: int
    op: Op

    @property
    def is_delete(self) -> bool:
        return self.op is Op.DELETE


def ins(item: int) -> StreamOp:
    return StreamOp(item, Op.INSERT)


def dele(item: int) -> StreamOp:
    return StreamOp(item, Op.DELETE)


@dataclass(frozen=True)
class StreamStats:
    n_ops: int
    inserts: int
    deletes: int
    f1: int

    @property
    def alpha_effective(self) -> float:
        """``I / (I - D)``; ``inf`` when every insertion has been deleted."""
        if self.f1 == 0:
            return math.inf
        return self.inserts / self.f1


@dataclass(frozen=True, eq=False)
class OpStream(Sequence[StreamOp]):
    """Array-backed stream: ``items`` (uint64) and ``deletes`` (bool)."""

    items: np.ndarray
    deletes: np.ndarray
    header: dict = field(default_factory=dict)

    def __post_init__(self):
        items = np.ascontiguousarray(self.items, dtype=np.uint64)
        deletes = np.ascontiguousarray(self.deletes, dtype=bool)
        if items.shape != deletes.shape or items.ndim != 1:
            raise ValueError("items and deletes must be 1-d arrays of equal length")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "deletes", deletes)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return OpStream(self.items[index], self.deletes[index], dict(self.header))
        return StreamOp(int(self.items[index]), Op(int(self.deletes[index])))

    def __iter__(self) -> Iterator[StreamOp]:
        for x, d in zip(self.items.tolist(), self.deletes.tolist()):
            yield StreamOp(x, Op.DELETE if d else Op.INSERT)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpStream):
            return NotImplemented
        return np.array_equal(self.items, other.items) and np.array_equal(
            self.deletes, other.deletes
        )

    __hash__ = None

    @classmethod
    def from_ops(cls, ops: Iterable[StreamOp], header: dict | None = None) -> "OpStream":
        ops = list(ops)
        items = np.fromiter((op[0] for op in ops), dtype=np.uint64, count=len(ops))
        deletes = np.fromiter((op[1] == Op.DELETE for op in ops), dtype=bool, count=len(ops))
        return cls(items, deletes, dict(header or {}))


def as_arrays(stream: Sequence[StreamOp]) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(items, deletes)`` arrays for any stream."""
    if isinstance(stream, OpStream):
        return stream.items, stream.deletes
    s = OpStream.from_ops(stream)
    return s.items, s.deletes


def _check_alpha(alpha) -> None:
    if not alpha >= 1:
        raise BadAlpha(f"alpha must be >= 1, got {alpha}")


def _net_counts(items: np.ndarray, deletes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised oracle: distinct items and their net counts.

    Sorts the ops by item (stably, so each item's ops keep stream order) and
    takes running sums per item; a negative running sum is a delete of an item
    that is not live at that point.
    """
    if len(items) == 0:
        return np.zeros(0, np.uint64), np.zeros(0, np.int64)
    order = np.argsort(items, kind="stable")
    s_items = items[order]
    steps = np.where(deletes[order], -1, 1).astype(np.int64)
    running = np.cumsum(steps)
    starts = np.flatnonzero(np.r_[True, s_items[1:] != s_items[:-1]])
    base = np.r_[0, running[starts[1:] - 1]]
    lengths = np.diff(np.r_[starts, len(s_items)])
    per_item = running - np.repeat(base, lengths)
    bad = np.flatnonzero(per_item < 0)
    if len(bad):
        positions = order[bad]
        pos = int(positions.min())
        raise NegativeFrequency(int(items[pos]), pos)
    ends = np.r_[starts[1:], len(s_items)] - 1
    return s_items[starts], per_item[ends]


def validate_stream(stream: Sequence[StreamOp], alpha=math.inf) -> StreamStats:
    """Check nonnegativity at every prefix and ``D <= (1 - 1/alpha) I`` at the end.

    ``alpha=math.inf`` checks nonnegativity only.
    """
    _check_alpha(alpha)
    if isinstance(stream, OpStream):
        _net_counts(stream.items, stream.deletes)
        deletes = int(stream.deletes.sum())
        inserts = len(stream) - deletes
    else:
        live: dict[int, int] = {}
        inserts = deletes = 0
        for pos, (item, op) in enumerate(stream):
            if op == Op.DELETE:
                c = live.get(item, 0)
                if c <= 0:
                    raise NegativeFrequency(item, pos)
                live[item] = c - 1
                deletes += 1
            else:
                live[item] = live.get(item, 0) + 1
                inserts += 1
    if not math.isinf(alpha):
        # exact rational comparison: D <= I - I/alpha
        a = Fraction(alpha)
        if deletes > inserts - inserts / a:
            raise AlphaViolated(inserts, deletes, alpha)
    return StreamStats(inserts + deletes, inserts, deletes, inserts - deletes)


def exact_frequencies(stream: Sequence[StreamOp]) -> dict[int, int]:
    """Ground truth ``item -> I(x) - D(x)``; zero-frequency items are kept."""
    if isinstance(stream, OpStream):
        keys, counts = _net_counts(stream.items, stream.deletes)
        return dict(zip(keys.tolist(), counts.tolist()))
    table: dict[int, int] = {}
    for pos, (item, op) in enumerate(stream):
        c = table.get(item, 0)
        if op == Op.DELETE:
            if c <= 0:
                raise NegativeFrequency(item, pos)
            table[item] = c - 1
        else:
            table[item] = c + 1
    return table


def insert_counts(stream: Sequence[StreamOp]) -> dict[int, int]:
    if isinstance(stream, OpStream):
        keys, counts = np.unique(stream.items[~stream.deletes], return_counts=True)
        return dict(zip(keys.tolist(), counts.tolist()))
    out: dict[int, int] = {}
    for item, op in stream:
        if op != Op.DELETE:
            out[item] = out.get(item, 0) + 1
    return out


def item_id(token: str) -> int:
    """Map a file token to a 64-bit item id.

    Decimal tokens in ``[0, 2**64)`` map to themselves; anything else is the
    little-endian value of its 8-byte BLAKE2b digest.
    """
    if token.isdigit():
        v = int(token)
        if v <= MAX_ITEM:
            return v
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def parse_header(line: str) -> dict:
    """Parse a ``# spec: key=value ...`` manifest line (values kept as str)."""
    body = line.lstrip("#").strip()
    if not body.startswith("spec:"):
        return {}
    out = {}
    for tok in body[len("spec:"):].split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def read_stream(path: str | Path) -> OpStream:
    items: list[int] = []
    deletes: list[bool] = []
    header: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                header.update(parse_header(line))
                continue
            parts = line.split()
            if len(parts) != 2 or parts[0] not in ("I", "D"):
                raise ValueError(f"{path}:{lineno}: expected 'I <item>' or 'D <item>'")
            items.append(item_id(parts[1]))
            deletes.append(parts[0] == "D")
    return OpStream(np.array(items, dtype=np.uint64), np.array(deletes, dtype=bool), header)


def write_stream(stream: Sequence[StreamOp], path: str | Path, header: dict | None = None) -> None:
    if header is None and isinstance(stream, OpStream):
        header = stream.header
    items, deletes = as_arrays(stream)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write("# spec: " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for x, d in zip(items.tolist(), deletes.tolist()):
            fh.write(f"{'D' if d else 'I'} {x}\n")
