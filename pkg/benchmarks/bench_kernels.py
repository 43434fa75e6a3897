"""Compare the compiled and pure-Python counter kernels.

Feeds the same Zipf workload to both backends, checks that they end in the
same state, and prints nanoseconds per operation and the speedup.

    python3 benchmarks/bench_kernels.py --ops 200000 --capacity 1024
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sspm import _pykernels
from sspm.workloads import WorkloadSpec, generate

try:
    from sspm import _ckernels
except ImportError:  # the extension is optional
    _ckernels = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def cases(items, deletes, capacity):
    flags = deletes.view(np.uint8)
    inserts = items[~deletes]

    def counter(mod, unbiased):
        def run():
            t = mod.CounterTable(capacity, unbiased, 1)
            t.insert_many(inserts)
            return t.snapshot()
        return run

    def dual(mod):
        def run():
            t = mod.DualCountTable(capacity)
            t.update_many(items, flags)
            return t.snapshot()
        return run

    return [
        ("SpaceSaving insert", len(inserts), lambda m: counter(m, False)),
        ("Unbiased insert", len(inserts), lambda m: counter(m, True)),
        ("Integrated update", len(items), dual),
    ]


def _same(a, b):
    return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ops", type=int, default=200_000, help="insertions in the workload")
    parser.add_argument("--capacity", type=int, default=1024)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    spec = WorkloadSpec("interleaved", beta=args.beta, insertions=args.ops,
                        deletions=int(0.4 * args.ops), seed=0)
    stream = generate(spec)
    print(f"workload: {len(stream)} ops, capacity {args.capacity}, beta {args.beta}")
    print(f"{'kernel':<22}{'python ns/op':>14}{'cython ns/op':>14}{'speedup':>10}  same")
    for name, n, make in cases(stream.items, stream.deletes, args.capacity):
        py_s, py_out = _time(make(_pykernels), 1)
        if _ckernels is None:
            print(f"{name:<22}{py_s / n * 1e9:>14.0f}{'n/a':>14}{'n/a':>10}")
            continue
        c_s, c_out = _time(make(_ckernels), args.repeat)
        print(f"{name:<22}{py_s / n * 1e9:>14.0f}{c_s / n * 1e9:>14.1f}"
              f"{py_s / c_s:>9.1f}x  {_same(py_out, c_out)}")


if __name__ == "__main__":
    main()
