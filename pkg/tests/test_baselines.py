import numpy as np
import pytest

from sspm import CountMin, CountSketch, GridSketch, OpStream, dele, exact_frequencies, ins, validate_stream
from sspm.baselines import GridKind, depth_for_universe
from sspm.errors import BudgetTooSmall, CapacityMismatch
from sspm.workloads import WorkloadSpec, generate


@pytest.fixture(scope="module")
def stream():
    s = generate(WorkloadSpec("interleaved", universe=2000, insertions=7000, deletions=2800, seed=1))
    validate_stream(s, 2)
    assert len(s) >= 9000
    return s


def test_shape_from_budget():
    g = CountMin(16384, 65536)
    assert (g.depth, g.width, g.fields) == (12, 1365, 16380)
    assert depth_for_universe(1) == 1
    with pytest.raises(BudgetTooSmall):
        CountMin(11, 65536)


def test_same_seed_same_hashes():
    probe = np.arange(1000, dtype=np.uint64) * 7919
    for kind in GridKind:
        a = GridSketch(kind, 4000, 5000, seed=42)
        b = GridSketch(kind, 4000, 5000, seed=42)
        assert all(np.array_equal(u, v) for u, v in zip(a._locate(probe), b._locate(probe)))
    c = CountMin(4000, 5000, seed=43)
    assert not np.array_equal(CountMin(4000, 5000, seed=42)._locate(probe)[0], c._locate(probe)[0])


@pytest.mark.parametrize("cls", [CountMin, CountSketch])
def test_insert_delete_restores_cells(cls, stream):
    g = cls(3000, 2000, seed=5)
    g.extend(stream[:500])
    before = g.cells.copy()
    g.apply(ins(123456))
    g.apply(dele(123456))
    assert np.array_equal(g.cells, before)


@pytest.mark.parametrize("cls", [CountMin, CountSketch])
def test_single_insert_touches_one_cell_per_row(cls):
    g = cls(3000, 2000, seed=5)
    g.update(77)
    nz = np.nonzero(g.cells)
    assert len(nz[0]) == g.depth and sorted(nz[0].tolist()) == list(range(g.depth))
    assert set(np.abs(g.cells[nz]).tolist()) == {1}
    if cls is CountMin:
        assert set(g.cells[nz].tolist()) == {1}


def test_untouched_sketch_answers_zero():
    assert CountMin(100, 50).query(9) == 0
    assert CountSketch(100, 50).query(9) == 0


def test_countmin_rows_sum_to_f1(stream):
    g = CountMin(3000, 2000, seed=2)
    g.extend(stream)
    f1 = validate_stream(stream).f1
    assert g.cells.sum(axis=1).tolist() == [f1] * g.depth


def test_countmin_never_underestimates(stream):
    g = CountMin(3000, 2000, seed=2)
    g.extend(stream)
    f = exact_frequencies(stream)
    keys = np.array(list(f), dtype=np.uint64)
    truth = np.array([f[x] for x in f])
    assert np.all(g.query_many(keys) >= truth)


@pytest.mark.parametrize("cls", [CountMin, CountSketch])
def test_bulk_matches_single_updates(cls, stream):
    bulk, single = cls(1500, 2000, seed=9), cls(1500, 2000, seed=9)
    bulk.extend(stream[:2000])
    for op in stream[:2000]:
        single.apply(op)
    assert np.array_equal(bulk.cells, single.cells)


@pytest.mark.parametrize("cls", [CountMin, CountSketch])
def test_linearity_and_merge(cls, stream):
    whole = cls(2000, 2000, seed=4)
    whole.extend(stream)
    left, right = cls(2000, 2000, seed=4), cls(2000, 2000, seed=4)
    left.extend(stream[:4000])
    right.extend(stream[4000:])
    assert np.array_equal(left.merge(right).cells, whole.cells)
    with pytest.raises(CapacityMismatch):
        left.merge(cls(2000, 2000, seed=5))


def test_countsketch_mean_estimate():
    """Per-item means over 1000 seeds stay within 3 standard errors of f."""
    items = [1] * 12 + [2] * 6 + [3] * 4 + [4] * 3 + [5] * 2 + list(range(6, 30))
    f = exact_frequencies([ins(x) for x in items])
    keys = np.array(sorted(f), dtype=np.uint64)
    truth = np.array([f[int(x)] for x in keys], dtype=float)
    arr = OpStream(np.array(items, dtype=np.uint64), np.zeros(len(items), bool))
    trials = 1000
    est = np.empty((trials, len(keys)))
    for seed in range(trials):
        g = CountSketch(24, 50, seed=seed)
        g.extend(arr)
        est[seed] = g.query_many(keys)
    se = est.std(axis=0, ddof=1) / np.sqrt(trials)
    assert np.all(np.abs(est.mean(axis=0) - truth) <= 3 * se)
