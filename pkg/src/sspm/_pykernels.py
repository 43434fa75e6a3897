"""Pure-Python counter tables.

This module mirrors ``_ckernels.pyx`` operation for operation. Both backends
must produce bit-identical state for the same input, including the random
draws of the unbiased variant, so any change here must be made there too.

Entries live in parallel slot arrays. A binary min-heap of slot indices is
ordered by ``(count, seq)`` where ``seq`` is the creation stamp of the entry,
so the root is always the smallest count with the oldest entry winning ties.
"""

import numpy as np

MASK64 = (1 << 64) - 1
TWO53 = 1 << 53


def splitmix64(state):
    """Advance a splitmix64 state. Returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _replace_threshold(w):
    # u = k / 2**53 < 1 / (w + 1)  <=>  k < ceil(2**53 / (w + 1))
    return (TWO53 + w) // (w + 1)


class _HeapTable:
    __slots__ = (
        "capacity", "_slot", "_items", "_counts", "_seqs", "_pos", "_heap", "next_seq",
    )

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._slot = {}
        self._items = []
        self._counts = []
        self._seqs = []
        self._pos = []
        self._heap = []
        self.next_seq = 0

    def __len__(self):
        return len(self._heap)

    def __contains__(self, item):
        return item in self._slot

    @property
    def full(self):
        return len(self._heap) >= self.capacity

    def _less(self, a, b):
        ca = self._counts[a]
        cb = self._counts[b]
        return ca < cb or (ca == cb and self._seqs[a] < self._seqs[b])

    def _sift_up(self, i):
        heap = self._heap
        pos = self._pos
        s = heap[i]
        while i > 0:
            parent = (i - 1) >> 1
            p = heap[parent]
            if not self._less(s, p):
                break
            heap[i] = p
            pos[p] = i
            i = parent
        heap[i] = s
        pos[s] = i

    def _sift_down(self, i):
        heap = self._heap
        pos = self._pos
        n = len(heap)
        s = heap[i]
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            c = heap[child]
            if child + 1 < n and self._less(heap[child + 1], c):
                child += 1
                c = heap[child]
            if not self._less(c, s):
                break
            heap[i] = c
            pos[c] = i
            i = child
        heap[i] = s
        pos[s] = i

    def _new_slot(self, item, count):
        s = len(self._items)
        self._items.append(item)
        self._counts.append(count)
        self._seqs.append(self.next_seq)
        self.next_seq += 1
        self._pos.append(len(self._heap))
        self._heap.append(s)
        self._slot[item] = s
        self._sift_up(len(self._heap) - 1)
        return s

    def _rename_root(self, item, count):
        s = self._heap[0]
        del self._slot[self._items[s]]
        self._items[s] = item
        self._slot[item] = s
        self._counts[s] = count
        self._seqs[s] = self.next_seq
        self.next_seq += 1
        self._sift_down(0)
        return s

    def min_count(self):
        if not self._heap:
            return 0
        return self._counts[self._heap[0]]

    def count_sum(self):
        return sum(self._counts)

    def _order(self):
        return sorted(range(len(self._items)), key=self._seqs.__getitem__)

    def _load_common(self, items, counts, seqs, next_seq):
        n = len(items)
        if n > self.capacity:
            raise ValueError("more entries than capacity")
        self._items = [int(x) for x in items]
        self._counts = [int(c) for c in counts]
        self._seqs = [int(q) for q in seqs]
        self._slot = {x: i for i, x in enumerate(self._items)}
        if len(self._slot) != n:
            raise ValueError("duplicate items")
        self._heap = sorted(range(n), key=lambda s: (self._counts[s], self._seqs[s]))
        self._pos = [0] * n
        for i, s in enumerate(self._heap):
            self._pos[s] = i
        self.next_seq = int(next_seq)


class CounterTable(_HeapTable):
    """Single-count SpaceSaving table (plain, unbiased or with decrements)."""

    __slots__ = ("unbiased", "processed", "decrements", "rng_state")

    def __init__(self, capacity, unbiased=False, seed=0):
        super().__init__(capacity)
        self.unbiased = bool(unbiased)
        self.processed = 0
        self.decrements = 0
        self.rng_state = int(seed) & MASK64

    def insert(self, item):
        self.processed += 1
        s = self._slot.get(item)
        if s is not None:
            self._counts[s] += 1
            self._sift_down(self._pos[s])
            return
        if len(self._heap) < self.capacity:
            self._new_slot(item, 1)
            return
        root = self._heap[0]
        w = self._counts[root]
        if self.unbiased:
            self.rng_state, r = splitmix64(self.rng_state)
            if (r >> 11) >= _replace_threshold(w):
                self._counts[root] = w + 1
                self._sift_down(0)
                return
        self._rename_root(item, w + 1)

    def insert_many(self, items):
        insert = self.insert
        for x in items:
            insert(int(x))

    def decrement(self, item):
        s = self._slot.get(item)
        if s is None:
            return False
        self.decrements += 1
        self._counts[s] -= 1
        self._sift_up(self._pos[s])
        return True

    def update_many(self, items, deletes):
        insert = self.insert
        decrement = self.decrement
        for x, d in zip(items, deletes):
            if d:
                decrement(int(x))
            else:
                insert(int(x))

    def query(self, item):
        s = self._slot.get(item)
        return 0 if s is None else self._counts[s]

    def query_many(self, items):
        get = self._slot.get
        counts = self._counts
        out = np.zeros(len(items), dtype=np.int64)
        for i, x in enumerate(items):
            s = get(int(x))
            if s is not None:
                out[i] = counts[s]
        return out

    def snapshot(self):
        order = self._order()
        return (
            np.array([self._items[s] for s in order], dtype=np.uint64),
            np.array([self._counts[s] for s in order], dtype=np.int64),
            np.array([self._seqs[s] for s in order], dtype=np.int64),
        )

    def load(self, items, counts, seqs, processed, decrements, next_seq, rng_state):
        self._load_common(items, counts, seqs, next_seq)
        self.processed = int(processed)
        self.decrements = int(decrements)
        self.rng_state = int(rng_state) & MASK64


class DualCountTable(_HeapTable):
    """Integrated table: each entry carries an insert and a delete count."""

    __slots__ = ("_dels", "inserts_seen", "deletes_seen")

    def __init__(self, capacity):
        super().__init__(capacity)
        self._dels = []
        self.inserts_seen = 0
        self.deletes_seen = 0

    def update(self, item, delete):
        s = self._slot.get(item)
        if delete:
            self.deletes_seen += 1
            if s is not None:
                self._dels[s] += 1
            return
        self.inserts_seen += 1
        if s is not None:
            self._counts[s] += 1
            self._sift_down(self._pos[s])
            return
        if len(self._heap) < self.capacity:
            self._new_slot(item, 1)
            self._dels.append(0)
            return
        root = self._rename_root(item, self._counts[self._heap[0]] + 1)
        self._dels[root] = 0

    def update_many(self, items, deletes):
        update = self.update
        for x, d in zip(items, deletes):
            update(int(x), bool(d))

    def query(self, item):
        s = self._slot.get(item)
        return 0 if s is None else self._counts[s] - self._dels[s]

    def query_many(self, items):
        get = self._slot.get
        counts = self._counts
        dels = self._dels
        out = np.zeros(len(items), dtype=np.int64)
        for i, x in enumerate(items):
            s = get(int(x))
            if s is not None:
                out[i] = counts[s] - dels[s]
        return out

    def snapshot(self):
        order = self._order()
        return (
            np.array([self._items[s] for s in order], dtype=np.uint64),
            np.array([self._counts[s] for s in order], dtype=np.int64),
            np.array([self._dels[s] for s in order], dtype=np.int64),
            np.array([self._seqs[s] for s in order], dtype=np.int64),
        )

    def load(self, items, inserts, deletes, seqs, inserts_seen, deletes_seen, next_seq):
        self._load_common(items, inserts, seqs, next_seq)
        self._dels = [int(d) for d in deletes]
        self.inserts_seen = int(inserts_seen)
        self.deletes_seen = int(deletes_seen)
