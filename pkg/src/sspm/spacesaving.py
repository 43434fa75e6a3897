"""Insertion-only SpaceSaving and its unbiased variant."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from . import serialize
from .errors import BadEpsilon, CapacityMismatch, ZeroCapacity
from .kernels import CounterTable, splitmix64


def _as_items(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        return np.ascontiguousarray(items, dtype=np.uint64)
    return np.fromiter((int(x) for x in items), dtype=np.uint64)


def merged_order(a_entries, b_entries, m):
    """Union two entry lists and keep the ``m`` largest by primary count.

    Each entry is ``(item, seq, counts...)`` with the primary count first in
    ``counts``. Counts of common items are summed element-wise. Ties are broken
    by the oldest entry of ``a`` and then the oldest entry of ``b``; the kept
    entries are returned in that same age order so callers can restamp them.
    """
    rank = {}
    merged = {}
    for origin, entries in enumerate((a_entries, b_entries)):
        for item, seq, *counts in entries:
            if item in merged:
                merged[item] = [x + y for x, y in zip(merged[item], counts)]
            else:
                merged[item] = list(counts)
                rank[item] = (origin, seq)
    by_count = sorted(merged, key=lambda x: (-merged[x][0], rank[x]))
    kept = sorted(by_count[:m], key=rank.__getitem__)
    return [(x, *merged[x]) for x in kept]


class SpaceSaving:
    """SpaceSaving summary with ``capacity`` counters.

    With ``unbiased=True`` the eviction step keeps the minimum entry's identity
    with probability ``w / (w + 1)`` (``w`` its count) and only increments it,
    which makes estimates unbiased. Draws come from a splitmix64 generator
    seeded by ``seed``; nothing reads ambient randomness.
    """

    _kind = serialize.KIND_SS

    def __init__(self, capacity: int, unbiased: bool = False, seed: int = 0):
        if capacity < 1:
            raise ZeroCapacity(f"capacity must be >= 1, got {capacity}")
        self._table = CounterTable(int(capacity), bool(unbiased), int(seed) & ((1 << 64) - 1))

    @classmethod
    def from_epsilon(cls, epsilon: float, unbiased: bool = False, seed: int = 0) -> "SpaceSaving":
        if not 0 < epsilon < 1:
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
        return cls(math.ceil(1 / epsilon), unbiased, seed)

    @property
    def capacity(self) -> int:
        return self._table.capacity

    @property
    def unbiased(self) -> bool:
        return bool(self._table.unbiased)

    @property
    def processed(self) -> int:
        return self._table.processed

    @property
    def fields(self) -> int:
        return 2 * self.capacity

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, item) -> bool:
        return int(item) in self._table

    @property
    def full(self) -> bool:
        return self._table.full

    def insert(self, item: int) -> None:
        self._table.insert(int(item))

    def extend(self, items: Iterable[int]) -> None:
        self._table.insert_many(_as_items(items))

    def query(self, item: int) -> int:
        return self._table.query(int(item))

    def query_many(self, items) -> np.ndarray:
        return self._table.query_many(_as_items(items))

    def min_count(self) -> int:
        """Smallest monitored count (0 when empty)."""
        return self._table.min_count()

    def entries(self) -> dict[int, int]:
        items, counts, _ = self._table.snapshot()
        return dict(zip(items.tolist(), counts.tolist()))

    def monitored(self) -> set[int]:
        return set(self._table.snapshot()[0].tolist())

    def _entry_rows(self):
        items, counts, seqs = self._table.snapshot()
        return list(zip(items.tolist(), seqs.tolist(), counts.tolist()))

    def merge(self, other: "SpaceSaving") -> "SpaceSaving":
        """Union both summaries, summing shared items, and keep the top ``capacity``."""
        if type(other) is not type(self) or other.capacity != self.capacity:
            raise CapacityMismatch("merge needs summaries of the same type and capacity")
        if other.unbiased != self.unbiased:
            raise CapacityMismatch("cannot merge unbiased with deterministic summaries")
        kept = merged_order(self._entry_rows(), other._entry_rows(), self.capacity)
        _, mixed = splitmix64(self._table.rng_state ^ other._table.rng_state)
        out = type(self).__new__(type(self))
        out._table = CounterTable(self.capacity, self.unbiased, 0)
        out._table.load(
            [x for x, _ in kept],
            [c for _, c in kept],
            list(range(len(kept))),
            self.processed + other.processed,
            self._table.decrements + other._table.decrements,
            len(kept),
            mixed,
        )
        return out

    def copy(self):
        return type(self).from_bytes(self.to_bytes())

    def to_bytes(self) -> bytes:
        t = self._table
        items, counts, seqs = t.snapshot()
        kind = serialize.KIND_USS if (self._kind == serialize.KIND_SS and self.unbiased) else self._kind
        header = [t.capacity, t.processed, t.decrements, t.next_seq, t.rng_state]
        return serialize.pack(kind, header, [items, counts, seqs])

    @classmethod
    def from_bytes(cls, data: bytes):
        kind = serialize.peek_kind(data)
        expected = {serialize.KIND_SS, serialize.KIND_USS} if cls._kind == serialize.KIND_SS else {cls._kind}
        if kind not in expected:
            raise serialize.CorruptSummary(f"record kind {kind} is not a {cls.__name__}")
        header, (items, counts, seqs), end = serialize.unpack(
            data, kind, 5, (np.uint64, np.int64, np.int64)
        )
        if end != len(data):
            raise serialize.CorruptSummary("trailing bytes")
        capacity, processed, decrements, next_seq, rng = header
        out = cls.__new__(cls)
        out._table = CounterTable(capacity, kind == serialize.KIND_USS, 0)
        out._table.load(items, counts, seqs, processed, decrements, next_seq, serialize.unsigned(rng))
        return out

    def __repr__(self) -> str:
        tag = "unbiased, " if self.unbiased else ""
        return f"{type(self).__name__}({tag}capacity={self.capacity}, entries={len(self)})"
