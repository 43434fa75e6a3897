"""Count-Min and CountSketch turnstile baselines.

Row hashes are multiply-shift over the two 32-bit halves of the item:
``h(x) = ((a0 * lo + a1 * hi + b) mod 2**64) >> 32``, which is strongly
universal into 32 bits. The 32-bit value is mapped onto ``[0, width)`` with
``(h * width) >> 32``. Sign hashes take the top bit of an independent row hash.
Row parameters come from a splitmix64 chain started at the sketch seed, so the
same seed gives the same hashes on every machine.
"""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from ._pykernels import MASK64, splitmix64
from .errors import BudgetTooSmall, CapacityMismatch
from .stream import StreamOp, as_arrays

_LO = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


class GridKind(str, enum.Enum):
    COUNT_MIN = "CountMin"
    COUNT_SKETCH = "CountSketch"


def depth_for_universe(universe_size: int) -> int:
    """Rows needed for failure probability ``1/|U|`` per query."""
    return max(1, math.ceil(math.log(universe_size)))


def _row_params(seed: int, rows: int) -> np.ndarray:
    state = int(seed) & MASK64
    out = np.empty((rows, 6), dtype=np.uint64)
    for r in range(rows):
        for j in range(6):
            state, v = splitmix64(state)
            out[r, j] = v
    return out


def _hash32(params: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    a0, a1, b = params
    with np.errstate(over="ignore"):
        return (a0 * lo + a1 * hi + b) >> _S32


class GridSketch:
    """``depth x width`` array of signed counters."""

    def __init__(self, kind, total_counters: int, universe_size: int, seed: int = 0):
        self.kind = GridKind(kind)
        if universe_size < 1:
            raise ValueError("universe_size must be >= 1")
        self.depth = depth_for_universe(universe_size)
        self.width = int(total_counters) // self.depth
        if self.width < 1:
            raise BudgetTooSmall(
                f"{total_counters} counters cannot fill {self.depth} rows"
            )
        self.universe_size = int(universe_size)
        self.seed = int(seed)
        self.cells = np.zeros((self.depth, self.width), dtype=np.int64)
        self._params = _row_params(self.seed, self.depth)

    @property
    def fields(self) -> int:
        return self.depth * self.width

    def _locate(self, items: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bucket indices and signs, each shaped ``(depth, len(items))``."""
        items = np.asarray(items, dtype=np.uint64)
        lo = items & _LO
        hi = items >> _S32
        w = np.uint64(self.width)
        buckets = np.empty((self.depth, len(items)), dtype=np.intp)
        signs = np.ones((self.depth, len(items)), dtype=np.int64)
        for r in range(self.depth):
            p = self._params[r]
            with np.errstate(over="ignore"):
                buckets[r] = (_hash32(p[0:3], lo, hi) * w) >> _S32
            if self.kind is GridKind.COUNT_SKETCH:
                top = _hash32(p[3:6], lo, hi) >> np.uint64(31)
                signs[r] = 1 - 2 * top.astype(np.int64)
        return buckets, signs

    def update(self, item: int, delete: bool = False) -> None:
        buckets, signs = self._locate(np.array([item], dtype=np.uint64))
        delta = -1 if delete else 1
        rows = np.arange(self.depth)
        self.cells[rows, buckets[:, 0]] += delta * signs[:, 0]

    def apply(self, op: StreamOp) -> None:
        self.update(op.item, op.is_delete)

    def extend(self, stream: Sequence[StreamOp]) -> None:
        items, deletes = as_arrays(stream)
        if len(items) == 0:
            return
        buckets, signs = self._locate(items)
        delta = np.where(deletes, -1, 1).astype(np.int64)
        for r in range(self.depth):
            self.cells[r] += np.bincount(
                buckets[r], weights=delta * signs[r], minlength=self.width
            ).astype(np.int64)

    def query_many(self, items) -> np.ndarray:
        items = np.asarray(items, dtype=np.uint64)
        buckets, signs = self._locate(items)
        rows = np.arange(self.depth)[:, None]
        vals = self.cells[rows, buckets] * signs
        if self.kind is GridKind.COUNT_MIN:
            return vals.min(axis=0)
        return np.median(vals, axis=0)

    def query(self, item: int):
        v = self.query_many(np.array([item], dtype=np.uint64))[0]
        return int(v) if self.kind is GridKind.COUNT_MIN else float(v)

    def merge(self, other: "GridSketch") -> "GridSketch":
        """Cell-wise sum of two sketches built with identical parameters."""
        if (self.kind, self.depth, self.width, self.seed) != (
            other.kind, other.depth, other.width, other.seed
        ):
            raise CapacityMismatch("grids differ in kind, shape or seed")
        out = GridSketch(self.kind, self.fields, self.universe_size, self.seed)
        out.cells = self.cells + other.cells
        return out


class CountMin(GridSketch):
    def __init__(self, total_counters: int, universe_size: int, seed: int = 0):
        super().__init__(GridKind.COUNT_MIN, total_counters, universe_size, seed)


class CountSketch(GridSketch):
    def __init__(self, total_counters: int, universe_size: int, seed: int = 0):
        super().__init__(GridKind.COUNT_SKETCH, total_counters, universe_size, seed)
