"""Sketches for the bounded-deletion model.

* :class:`DoubleSpaceSaving` keeps one SpaceSaving summary for insertions and
  another for deletions (optionally the unbiased variant on both sides).
* :class:`IntegratedSpaceSaving` keeps a single table whose entries carry an
  insert count and a delete count; eviction looks at insert counts only.
* :class:`LegacySpaceSavingPM` is the older single-count variant that
  decrements on deletion. It is only correct when every deletion follows every
  insertion and is kept here as a regression subject.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import serialize
from .errors import (
    BadAlpha,
    BadEpsilon,
    CapacityMismatch,
    NotUnbiasedSummary,
    ZeroCapacity,
)
from .kernels import DualCountTable, splitmix64
from .spacesaving import SpaceSaving, merged_order
from .stream import StreamOp, as_arrays

# domain-separation constants for the two sides of an unbiased Double summary
_INSERT_DOMAIN = 0x5353504D2D494E53  # "SSPM-INS"
_DELETE_DOMAIN = 0x5353504D2D44454C  # "SSPM-DEL"


def exact(x) -> Fraction:
    """Rational value of a parameter; floats are read by their shortest repr."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def check_params(epsilon, alpha) -> tuple[Fraction, Fraction]:
    eps = exact(epsilon)
    if not 0 < eps < 1:
        raise BadEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
    a = exact(alpha)
    if a < 1:
        raise BadAlpha(f"alpha must be >= 1, got {alpha}")
    return eps, a


def _ceil(q: Fraction) -> int:
    return math.ceil(q)


def dss_sizes(epsilon, alpha) -> tuple[int, int]:
    """``(m_I, m_D) = (ceil(2a/e), max(1, ceil(2(a-1)/e)))``."""
    eps, a = check_params(epsilon, alpha)
    return _ceil(2 * a / eps), max(1, _ceil(2 * (a - 1) / eps))


def iss_size(epsilon, alpha) -> int:
    eps, a = check_params(epsilon, alpha)
    return _ceil(a / eps)


def dss_residual_sizes(epsilon, alpha, k: int) -> tuple[int, int]:
    """Sizes under which the Double sketch meets the residual bound for ``k``."""
    eps, a = check_params(epsilon, alpha)
    return k * (_ceil(2 * a / eps) + 1), k * (_ceil(2 * (a - 1) / eps) + 1)


def iss_residual_size(epsilon, alpha, k: int) -> int:
    eps, a = check_params(epsilon, alpha)
    return k * (_ceil(a / eps) + 1)


def _relative_factor(k: int, beta: float, gamma: float) -> float:
    if not 1 < gamma < 2:
        raise ValueError("gamma must lie in (1, 2)")
    return (2 * (gamma - 1) / (2 - gamma)) * k ** (beta + 1) / 2 ** math.log(k, gamma)


def iss_relative_size(epsilon, alpha, k: int, beta: float, gamma: float) -> int:
    eps, a = check_params(epsilon, alpha)
    return k + math.ceil(_relative_factor(k, beta, gamma) * float(a / eps))


def dss_relative_size(epsilon, alpha, k: int, beta: float, gamma: float) -> int:
    """Common size ``m_I = m_D`` for the Double sketch's relative bound."""
    eps, a = check_params(epsilon, alpha)
    return k + math.ceil(_relative_factor(k, beta, gamma) * float((2 * a - 1) / eps))


def side_seeds(seed: int) -> tuple[int, int]:
    _, s_ins = splitmix64((seed ^ _INSERT_DOMAIN) & serialize.unsigned(-1))
    _, s_del = splitmix64((seed ^ _DELETE_DOMAIN) & serialize.unsigned(-1))
    return s_ins, s_del


class DoubleSpaceSaving:
    """Two independent SpaceSaving summaries, one per operation type."""

    def __init__(self, m_insert: int, m_delete: int, unbiased: bool = False, seed: int = 0):
        s_ins, s_del = side_seeds(int(seed))
        self.s_insert = SpaceSaving(m_insert, unbiased, s_ins)
        self.s_delete = SpaceSaving(m_delete, unbiased, s_del)

    @classmethod
    def from_epsilon(cls, epsilon, alpha, unbiased: bool = False, seed: int = 0):
        m_i, m_d = dss_sizes(epsilon, alpha)
        return cls(m_i, m_d, unbiased, seed)

    @property
    def unbiased(self) -> bool:
        return self.s_insert.unbiased

    @property
    def m_insert(self) -> int:
        return self.s_insert.capacity

    @property
    def m_delete(self) -> int:
        return self.s_delete.capacity

    @property
    def fields(self) -> int:
        return 2 * (self.m_insert + self.m_delete)

    @property
    def entries_capacity(self) -> int:
        return self.m_insert + self.m_delete

    def update(self, item: int, delete: bool = False) -> None:
        if delete:
            self.s_delete.insert(item)
        else:
            self.s_insert.insert(item)

    def apply(self, op: StreamOp) -> None:
        self.update(op.item, op.is_delete)

    def extend(self, stream: Sequence[StreamOp]) -> None:
        # the two sides are independent, so routing in bulk preserves order per side
        items, deletes = as_arrays(stream)
        self.s_insert.extend(items[~deletes])
        self.s_delete.extend(items[deletes])

    def query(self, item: int) -> int:
        return max(self.s_insert.query(item) - self.s_delete.query(item), 0)

    def query_many(self, items) -> np.ndarray:
        return np.maximum(self.query_raw_many(items, _check=False), 0)

    def query_raw(self, item: int) -> int:
        """Unclipped ``insert estimate - delete estimate`` (unbiased summaries only)."""
        if not self.unbiased:
            raise NotUnbiasedSummary("query_raw needs unbiased=True")
        return self.s_insert.query(item) - self.s_delete.query(item)

    def query_raw_many(self, items, _check: bool = True) -> np.ndarray:
        if _check and not self.unbiased:
            raise NotUnbiasedSummary("query_raw needs unbiased=True")
        items = np.asarray(items, dtype=np.uint64)
        return self.s_insert.query_many(items) - self.s_delete.query_many(items)

    def heavy_hitters(self) -> set[int]:
        """Every item monitored on the insert side."""
        return self.s_insert.monitored()

    def merge(self, other: "DoubleSpaceSaving") -> "DoubleSpaceSaving":
        if not isinstance(other, DoubleSpaceSaving) or (
            (self.m_insert, self.m_delete, self.unbiased)
            != (other.m_insert, other.m_delete, other.unbiased)
        ):
            raise CapacityMismatch("merge needs matching (m_I, m_D, unbiased)")
        out = DoubleSpaceSaving.__new__(DoubleSpaceSaving)
        out.s_insert = self.s_insert.merge(other.s_insert)
        out.s_delete = self.s_delete.merge(other.s_delete)
        return out

    def to_bytes(self) -> bytes:
        a = self.s_insert.to_bytes()
        b = self.s_delete.to_bytes()
        return serialize.pack(serialize.KIND_DSS, [int(self.unbiased), len(a), len(b)], []) + a + b

    @classmethod
    def from_bytes(cls, data: bytes) -> "DoubleSpaceSaving":
        (unbiased, la, lb), _, off = serialize.unpack(data, serialize.KIND_DSS, 3, ())
        if off + la + lb != len(data):
            raise serialize.CorruptSummary("length mismatch in Double record")
        out = cls.__new__(cls)
        out.s_insert = SpaceSaving.from_bytes(data[off:off + la])
        out.s_delete = SpaceSaving.from_bytes(data[off + la:])
        if out.s_insert.unbiased != bool(unbiased) or out.s_delete.unbiased != bool(unbiased):
            raise serialize.CorruptSummary("unbiased flag disagrees with sides")
        return out

    def __repr__(self) -> str:
        tag = "unbiased, " if self.unbiased else ""
        return f"DoubleSpaceSaving({tag}m_insert={self.m_insert}, m_delete={self.m_delete})"


class IntegratedSpaceSaving:
    """One table of ``(insert_count, delete_count)`` entries.

    Deletions of unmonitored items are ignored. On a stream that never deletes
    below zero this only happens once the table is full, since nothing is
    evicted before that.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ZeroCapacity(f"capacity must be >= 1, got {capacity}")
        self._table = DualCountTable(int(capacity))

    @classmethod
    def from_epsilon(cls, epsilon, alpha) -> "IntegratedSpaceSaving":
        return cls(iss_size(epsilon, alpha))

    @property
    def capacity(self) -> int:
        return self._table.capacity

    @property
    def fields(self) -> int:
        return 3 * self.capacity

    @property
    def inserts_seen(self) -> int:
        return self._table.inserts_seen

    @property
    def deletes_seen(self) -> int:
        return self._table.deletes_seen

    @property
    def f1(self) -> int:
        return self.inserts_seen - self.deletes_seen

    @property
    def full(self) -> bool:
        return self._table.full

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, item) -> bool:
        return int(item) in self._table

    def update(self, item: int, delete: bool = False) -> None:
        self._table.update(int(item), bool(delete))

    def apply(self, op: StreamOp) -> None:
        self.update(op.item, op.is_delete)

    def extend(self, stream: Sequence[StreamOp]) -> None:
        items, deletes = as_arrays(stream)
        self._table.update_many(items, deletes.view(np.uint8))

    def query(self, item: int) -> int:
        return self._table.query(int(item))

    def query_many(self, items) -> np.ndarray:
        return self._table.query_many(np.asarray(items, dtype=np.uint64))

    def min_insert(self) -> int:
        """The smallest insert count; bounds every item's estimation error."""
        return self._table.min_count()

    def insert_total(self) -> int:
        """Sum of the insert counts held in the table; always equals ``inserts_seen``."""
        return self._table.count_sum()

    def entries(self) -> dict[int, tuple[int, int]]:
        items, ins, dels, _ = self._table.snapshot()
        return {x: (i, d) for x, i, d in zip(items.tolist(), ins.tolist(), dels.tolist())}

    def snapshot(self):
        """``(items, insert_counts, delete_counts)`` arrays in entry-age order."""
        items, ins, dels, _ = self._table.snapshot()
        return items, ins, dels

    def heavy_hitters(self, epsilon) -> set[int]:
        """Monitored items whose estimate reaches ``epsilon * F1``."""
        items, ins, dels, _ = self._table.snapshot()
        threshold = exact(epsilon) * self.f1
        return {x for x, e in zip(items.tolist(), (ins - dels).tolist()) if e >= threshold}

    def merge(self, other: "IntegratedSpaceSaving") -> "IntegratedSpaceSaving":
        """Union summing both counts, then keep the top ``capacity`` by insert count."""
        if not isinstance(other, IntegratedSpaceSaving) or other.capacity != self.capacity:
            raise CapacityMismatch("merge needs Integrated summaries of equal capacity")

        def rows(s):
            items, ins, dels, seqs = s._table.snapshot()
            return list(zip(items.tolist(), seqs.tolist(), ins.tolist(), dels.tolist()))

        kept = merged_order(rows(self), rows(other), self.capacity)
        out = IntegratedSpaceSaving(self.capacity)
        out._table.load(
            [x for x, _, _ in kept],
            [i for _, i, _ in kept],
            [d for _, _, d in kept],
            list(range(len(kept))),
            self.inserts_seen + other.inserts_seen,
            self.deletes_seen + other.deletes_seen,
            len(kept),
        )
        return out

    def to_bytes(self) -> bytes:
        t = self._table
        items, ins, dels, seqs = t.snapshot()
        header = [t.capacity, t.inserts_seen, t.deletes_seen, t.next_seq]
        return serialize.pack(serialize.KIND_ISS, header, [items, ins, dels, seqs])

    @classmethod
    def from_bytes(cls, data: bytes) -> "IntegratedSpaceSaving":
        header, (items, ins, dels, seqs), end = serialize.unpack(
            data, serialize.KIND_ISS, 4, (np.uint64, np.int64, np.int64, np.int64)
        )
        if end != len(data):
            raise serialize.CorruptSummary("trailing bytes")
        capacity, inserts_seen, deletes_seen, next_seq = header
        out = cls(capacity)
        out._table.load(items, ins, dels, seqs, inserts_seen, deletes_seen, next_seq)
        return out

    def __repr__(self) -> str:
        return f"IntegratedSpaceSaving(capacity={self.capacity}, entries={len(self)})"


class LegacySpaceSavingPM(SpaceSaving):
    """Single-count SpaceSaving± that decrements on deletion.

    KNOWN INCORRECT UNDER INTERLEAVING: the error guarantee only holds when all
    deletions arrive after all insertions. Deletions lower counts, so the
    minimum count can fall and later arrivals enter with too small a count.
    Use :class:`IntegratedSpaceSaving` for general bounded-deletion streams.
    """

    known_incorrect_under_interleaving = True
    _kind = serialize.KIND_LEGACY

    def __init__(self, capacity: int):
        super().__init__(capacity, unbiased=False, seed=0)

    @classmethod
    def from_epsilon(cls, epsilon, alpha) -> "LegacySpaceSavingPM":
        return cls(iss_size(epsilon, alpha))

    def update(self, item: int, delete: bool = False) -> None:
        if delete:
            self._table.decrement(int(item))
        else:
            self._table.insert(int(item))

    def apply(self, op: StreamOp) -> None:
        self.update(op.item, op.is_delete)

    def extend(self, stream: Sequence[StreamOp]) -> None:
        items, deletes = as_arrays(stream)
        self._table.update_many(items, deletes.view(np.uint8))

