# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled counter tables. Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from libcpp.unordered_map cimport unordered_map
from cython.operator cimport dereference as deref

cnp.import_array()

cdef uint64_t TWO53 = (<uint64_t>1) << 53


cdef inline uint64_t _mix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix64(state):
    cdef uint64_t s = <uint64_t>state
    cdef uint64_t out = _mix(&s)
    return s, out


cdef class _HeapTable:
    cdef public Py_ssize_t capacity
    cdef public int64_t next_seq
    cdef Py_ssize_t n
    cdef uint64_t* items
    cdef int64_t* counts
    cdef int64_t* seqs
    cdef Py_ssize_t* pos
    cdef Py_ssize_t* heap
    cdef unordered_map[uint64_t, Py_ssize_t] slot

    def __cinit__(self, Py_ssize_t capacity, *args, **kwargs):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.n = 0
        self.next_seq = 0
        self.items = <uint64_t*>malloc(capacity * sizeof(uint64_t))
        self.counts = <int64_t*>malloc(capacity * sizeof(int64_t))
        self.seqs = <int64_t*>malloc(capacity * sizeof(int64_t))
        self.pos = <Py_ssize_t*>malloc(capacity * sizeof(Py_ssize_t))
        self.heap = <Py_ssize_t*>malloc(capacity * sizeof(Py_ssize_t))
        if not (self.items and self.counts and self.seqs and self.pos and self.heap):
            raise MemoryError()
        self.slot.reserve(capacity)

    def __dealloc__(self):
        free(self.items)
        free(self.counts)
        free(self.seqs)
        free(self.pos)
        free(self.heap)

    def __len__(self):
        return self.n

    def __contains__(self, item):
        return self.slot.count(<uint64_t>item) > 0

    @property
    def full(self):
        return self.n >= self.capacity

    cdef inline bint _less(self, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
        cdef int64_t ca = self.counts[a]
        cdef int64_t cb = self.counts[b]
        return ca < cb or (ca == cb and self.seqs[a] < self.seqs[b])

    cdef void _sift_up(self, Py_ssize_t i) noexcept nogil:
        cdef Py_ssize_t s = self.heap[i]
        cdef Py_ssize_t parent, p
        while i > 0:
            parent = (i - 1) >> 1
            p = self.heap[parent]
            if not self._less(s, p):
                break
            self.heap[i] = p
            self.pos[p] = i
            i = parent
        self.heap[i] = s
        self.pos[s] = i

    cdef void _sift_down(self, Py_ssize_t i) noexcept nogil:
        cdef Py_ssize_t s = self.heap[i]
        cdef Py_ssize_t child, c
        while True:
            child = 2 * i + 1
            if child >= self.n:
                break
            c = self.heap[child]
            if child + 1 < self.n and self._less(self.heap[child + 1], c):
                child += 1
                c = self.heap[child]
            if not self._less(c, s):
                break
            self.heap[i] = c
            self.pos[c] = i
            i = child
        self.heap[i] = s
        self.pos[s] = i

    cdef Py_ssize_t _find(self, uint64_t item) noexcept nogil:
        cdef unordered_map[uint64_t, Py_ssize_t].iterator it = self.slot.find(item)
        if it == self.slot.end():
            return -1
        return deref(it).second

    cdef Py_ssize_t _new_slot(self, uint64_t item, int64_t count) noexcept nogil:
        cdef Py_ssize_t s = self.n
        self.items[s] = item
        self.counts[s] = count
        self.seqs[s] = self.next_seq
        self.next_seq += 1
        self.heap[s] = s
        self.pos[s] = s
        self.slot[item] = s
        self.n += 1
        self._sift_up(s)
        return s

    cdef Py_ssize_t _rename_root(self, uint64_t item, int64_t count) noexcept nogil:
        cdef Py_ssize_t s = self.heap[0]
        self.slot.erase(self.items[s])
        self.items[s] = item
        self.slot[item] = s
        self.counts[s] = count
        self.seqs[s] = self.next_seq
        self.next_seq += 1
        self._sift_down(0)
        return s

    def min_count(self):
        if self.n == 0:
            return 0
        return self.counts[self.heap[0]]

    def count_sum(self):
        cdef int64_t total = 0
        cdef Py_ssize_t i
        for i in range(self.n):
            total += self.counts[i]
        return total

    cdef object _order(self):
        seqs = np.empty(self.n, dtype=np.int64)
        cdef int64_t[::1] sv = seqs
        cdef Py_ssize_t i
        for i in range(self.n):
            sv[i] = self.seqs[i]
        return np.argsort(seqs, kind="stable")

    cdef void _load_common(self, items, counts, seqs, next_seq) except *:
        cdef Py_ssize_t n = len(items)
        if n > self.capacity:
            raise ValueError("more entries than capacity")
        cdef cnp.ndarray[uint64_t, ndim=1] it = np.ascontiguousarray(items, dtype=np.uint64)
        cdef cnp.ndarray[int64_t, ndim=1] ct = np.ascontiguousarray(counts, dtype=np.int64)
        cdef cnp.ndarray[int64_t, ndim=1] sq = np.ascontiguousarray(seqs, dtype=np.int64)
        self.slot.clear()
        cdef Py_ssize_t i
        for i in range(n):
            self.items[i] = it[i]
            self.counts[i] = ct[i]
            self.seqs[i] = sq[i]
            self.slot[it[i]] = i
        if <Py_ssize_t>self.slot.size() != n:
            raise ValueError("duplicate items")
        order = np.lexsort((sq, ct))
        cdef Py_ssize_t s
        for i in range(n):
            s = order[i]
            self.heap[i] = s
            self.pos[s] = i
        self.n = n
        self.next_seq = next_seq


cdef class CounterTable(_HeapTable):
    """Single-count SpaceSaving table (plain, unbiased or with decrements)."""

    cdef public bint unbiased
    cdef public int64_t processed
    cdef public int64_t decrements
    cdef uint64_t _rng

    def __init__(self, Py_ssize_t capacity, unbiased=False, seed=0):
        self.unbiased = bool(unbiased)
        self.processed = 0
        self.decrements = 0
        self._rng = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)

    @property
    def rng_state(self):
        return self._rng

    @rng_state.setter
    def rng_state(self, value):
        self._rng = <uint64_t>(int(value) & 0xFFFFFFFFFFFFFFFF)

    cdef void _insert(self, uint64_t item) noexcept nogil:
        self.processed += 1
        cdef Py_ssize_t s = self._find(item)
        if s >= 0:
            self.counts[s] += 1
            self._sift_down(self.pos[s])
            return
        if self.n < self.capacity:
            self._new_slot(item, 1)
            return
        cdef Py_ssize_t root = self.heap[0]
        cdef int64_t w = self.counts[root]
        cdef uint64_t r
        if self.unbiased:
            r = _mix(&self._rng)
            if (r >> 11) >= (TWO53 + <uint64_t>w) // (<uint64_t>w + 1):
                self.counts[root] = w + 1
                self._sift_down(0)
                return
        self._rename_root(item, w + 1)

    cdef bint _decrement(self, uint64_t item) noexcept nogil:
        cdef Py_ssize_t s = self._find(item)
        if s < 0:
            return False
        self.decrements += 1
        self.counts[s] -= 1
        self._sift_up(self.pos[s])
        return True

    def insert(self, item):
        self._insert(<uint64_t>item)

    def insert_many(self, items):
        cdef const uint64_t[::1] xs = np.ascontiguousarray(items, dtype=np.uint64)
        cdef Py_ssize_t i
        with nogil:
            for i in range(xs.shape[0]):
                self._insert(xs[i])

    def decrement(self, item):
        return self._decrement(<uint64_t>item)

    def update_many(self, items, deletes):
        cdef const uint64_t[::1] xs = np.ascontiguousarray(items, dtype=np.uint64)
        cdef const cnp.uint8_t[::1] ds = np.ascontiguousarray(deletes, dtype=np.uint8)
        if xs.shape[0] != ds.shape[0]:
            raise ValueError("length mismatch")
        cdef Py_ssize_t i
        with nogil:
            for i in range(xs.shape[0]):
                if ds[i]:
                    self._decrement(xs[i])
                else:
                    self._insert(xs[i])

    def query(self, item):
        cdef Py_ssize_t s = self._find(<uint64_t>item)
        return 0 if s < 0 else self.counts[s]

    def query_many(self, items):
        cdef const uint64_t[::1] xs = np.ascontiguousarray(items, dtype=np.uint64)
        out = np.zeros(xs.shape[0], dtype=np.int64)
        cdef int64_t[::1] ov = out
        cdef Py_ssize_t i, s
        with nogil:
            for i in range(xs.shape[0]):
                s = self._find(xs[i])
                if s >= 0:
                    ov[i] = self.counts[s]
        return out

    def snapshot(self):
        order = self._order()
        items = np.empty(self.n, dtype=np.uint64)
        counts = np.empty(self.n, dtype=np.int64)
        seqs = np.empty(self.n, dtype=np.int64)
        cdef Py_ssize_t i
        for i in range(self.n):
            items[i] = self.items[i]
            counts[i] = self.counts[i]
            seqs[i] = self.seqs[i]
        return items[order], counts[order], seqs[order]

    def load(self, items, counts, seqs, processed, decrements, next_seq, rng_state):
        self._load_common(items, counts, seqs, next_seq)
        self.processed = processed
        self.decrements = decrements
        self.rng_state = rng_state


cdef class DualCountTable(_HeapTable):
    """Integrated table: each entry carries an insert and a delete count."""

    cdef int64_t* dels
    cdef public int64_t inserts_seen
    cdef public int64_t deletes_seen

    def __cinit__(self, Py_ssize_t capacity, *args, **kwargs):
        self.dels = <int64_t*>malloc(capacity * sizeof(int64_t))
        if not self.dels:
            raise MemoryError()
        self.inserts_seen = 0
        self.deletes_seen = 0

    def __dealloc__(self):
        free(self.dels)

    cdef void _update(self, uint64_t item, bint delete) noexcept nogil:
        cdef Py_ssize_t s = self._find(item)
        if delete:
            self.deletes_seen += 1
            if s >= 0:
                self.dels[s] += 1
            return
        self.inserts_seen += 1
        if s >= 0:
            self.counts[s] += 1
            self._sift_down(self.pos[s])
            return
        if self.n < self.capacity:
            s = self._new_slot(item, 1)
            self.dels[s] = 0
            return
        s = self._rename_root(item, self.counts[self.heap[0]] + 1)
        self.dels[s] = 0

    def update(self, item, delete):
        self._update(<uint64_t>item, bool(delete))

    def update_many(self, items, deletes):
        cdef const uint64_t[::1] xs = np.ascontiguousarray(items, dtype=np.uint64)
        cdef const cnp.uint8_t[::1] ds = np.ascontiguousarray(deletes, dtype=np.uint8)
        if xs.shape[0] != ds.shape[0]:
            raise ValueError("length mismatch")
        cdef Py_ssize_t i
        with nogil:
            for i in range(xs.shape[0]):
                self._update(xs[i], ds[i] != 0)

    def query(self, item):
        cdef Py_ssize_t s = self._find(<uint64_t>item)
        return 0 if s < 0 else self.counts[s] - self.dels[s]

    def query_many(self, items):
        cdef const uint64_t[::1] xs = np.ascontiguousarray(items, dtype=np.uint64)
        out = np.zeros(xs.shape[0], dtype=np.int64)
        cdef int64_t[::1] ov = out
        cdef Py_ssize_t i, s
        with nogil:
            for i in range(xs.shape[0]):
                s = self._find(xs[i])
                if s >= 0:
                    ov[i] = self.counts[s] - self.dels[s]
        return out

    def snapshot(self):
        order = self._order()
        items = np.empty(self.n, dtype=np.uint64)
        ins = np.empty(self.n, dtype=np.int64)
        dls = np.empty(self.n, dtype=np.int64)
        seqs = np.empty(self.n, dtype=np.int64)
        cdef Py_ssize_t i
        for i in range(self.n):
            items[i] = self.items[i]
            ins[i] = self.counts[i]
            dls[i] = self.dels[i]
            seqs[i] = self.seqs[i]
        return items[order], ins[order], dls[order], seqs[order]

    def load(self, items, inserts, deletes, seqs, inserts_seen, deletes_seen, next_seq):
        self._load_common(items, inserts, seqs, next_seq)
        cdef cnp.ndarray[int64_t, ndim=1] dl = np.ascontiguousarray(deletes, dtype=np.int64)
        cdef Py_ssize_t i
        for i in range(self.n):
            self.dels[i] = dl[i]
        self.inserts_seen = inserts_seen
        self.deletes_seen = deletes_seen
