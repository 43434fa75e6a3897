"""Stream generators and the gamma-decreasing skew check.

Items of Zipf workloads are ranks: item ``i`` (1-based) has probability
proportional to ``i ** -beta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .deletion import exact
from .errors import NotSorted, SpecViolatesAlpha
from .stream import OpStream


class WorkloadKind(str, enum.Enum):
    ZIPF_SUFFIX = "zipf-suffix"
    INTERLEAVED = "interleaved"
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class WorkloadSpec:
    kind: WorkloadKind
    beta: float = 1.0
    universe: int = 22_000
    insertions: int = 100_000
    deletions: int = 50_000
    alpha: float = 2.0
    seed: int = 0
    update_prob: float = 0.4

    def __post_init__(self):
        object.__setattr__(self, "kind", WorkloadKind(self.kind))
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.universe < 1 or self.insertions < 1 or self.deletions < 0:
            raise ValueError("universe and insertions must be positive, deletions >= 0")
        if not 0 <= self.update_prob <= 1:
            raise ValueError("update_prob must lie in [0, 1]")
        a = exact(self.alpha)
        if a < 1:
            raise SpecViolatesAlpha(f"alpha must be >= 1, got {self.alpha}")
        if self.deletions > (1 - 1 / a) * self.insertions:
            raise SpecViolatesAlpha(
                f"{self.deletions} deletions exceed the budget for "
                f"{self.insertions} insertions at alpha={self.alpha}"
            )

    def header(self) -> dict:
        return {
            "kind": self.kind.value,
            "beta": self.beta,
            "universe": self.universe,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "alpha": self.alpha,
            "seed": self.seed,
        }


class ZipfSampler:
    """Inverse-CDF sampler over ranks ``1..universe``."""

    def __init__(self, universe: int, beta: float):
        ranks = np.arange(1, universe + 1, dtype=np.float64)
        weights = ranks ** -float(beta)
        self.normalizer = float(weights.sum())
        self.cdf = np.cumsum(weights) / self.normalizer
        self.cdf[-1] = 1.0
        self.universe = universe
        self.beta = beta

    def probability(self, rank: int) -> float:
        return rank ** -float(self.beta) / self.normalizer

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return (np.searchsorted(self.cdf, u, side="right") + 1).astype(np.uint64)


def _finish(items, deletes, spec: WorkloadSpec, extra: dict | None = None) -> OpStream:
    items = np.asarray(items, dtype=np.uint64)
    deletes = np.asarray(deletes, dtype=bool)
    n_del = int(deletes.sum())
    n_ins = len(items) - n_del
    if n_del > (1 - 1 / exact(spec.alpha)) * n_ins:
        raise SpecViolatesAlpha(
            f"generated stream has I={n_ins}, D={n_del}, beyond alpha={spec.alpha}"
        )
    header = spec.header()
    header.update(extra or {})
    header["I"] = n_ins
    header["D"] = n_del
    return OpStream(items, deletes, header)


def gen_zipf_suffix(spec: WorkloadSpec) -> OpStream:
    """Zipf insertions, then deletions drawn without replacement from them."""
    if spec.kind is not WorkloadKind.ZIPF_SUFFIX:
        raise ValueError("spec.kind must be zipf-suffix")
    rng = np.random.default_rng(spec.seed)
    inserted = ZipfSampler(spec.universe, spec.beta).sample(rng, spec.insertions)
    picked = rng.choice(spec.insertions, size=spec.deletions, replace=False)
    items = np.concatenate([inserted, inserted[picked]])
    deletes = np.zeros(len(items), dtype=bool)
    deletes[spec.insertions:] = True
    return _finish(items, deletes, spec)


def gen_interleaved(spec: WorkloadSpec) -> OpStream:
    """Load phase of fresh insertions, then a mix of inserts and updates.

    Each run step is a fresh Zipf insertion, or with probability
    ``update_prob`` an update: deletion of a uniformly chosen live occurrence
    immediately followed by a fresh Zipf insertion. The load phase is sized so
    that expected deletions match ``spec.deletions`` when insertions reach
    ``spec.insertions``.
    """
    if spec.kind is not WorkloadKind.INTERLEAVED:
        raise ValueError("spec.kind must be interleaved")
    rng = np.random.default_rng(spec.seed)
    p = spec.update_prob
    total = spec.insertions
    load = total if p == 0 else max(0, total - round(spec.deletions / p))
    fresh = ZipfSampler(spec.universe, spec.beta).sample(rng, total).tolist()
    run = total - load
    coins = (rng.random(run) < p).tolist()
    picks = rng.random(run).tolist()

    items: list[int] = fresh[:load]
    deletes: list[bool] = [False] * load
    live = list(fresh[:load])
    for step in range(run):
        if coins[step] and live:
            j = int(picks[step] * len(live))
            victim = live[j]
            live[j] = live[-1]
            live.pop()
            items.append(victim)
            deletes.append(True)
        x = fresh[load + step]
        items.append(x)
        deletes.append(False)
        live.append(x)
    return _finish(items, deletes, spec, {"update_prob": p})


def gen_adversarial(m: int, inflate: int | None = None) -> OpStream:
    """Interleaved stream that breaks the single-count SpaceSaving± with ``m`` counters.

    ``m - 1`` filler items are inserted ``K + 1`` times and a target item ``K``
    times, filling all ``m`` counters with the target as the minimum. Each round
    then inserts a fresh item (evicting the target), deletes one filler down to
    zero, and re-inserts the target, which now enters at count 1 and loses its
    history. Between rounds the target is topped back up to ``K``. The header
    records ``I``, ``D`` and the achieved ``alpha = I / (I - D)``.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    k = inflate if inflate is not None else 2 * m
    if k < 2:
        raise ValueError("inflate must be >= 2")
    target = 1
    fillers = list(range(2, m + 1))
    fresh = iter(range(m + 1, 2 * m + 1))
    ops: list[tuple[int, bool]] = []
    for f in fillers:
        ops.extend([(f, False)] * (k + 1))
    ops.extend([(target, False)] * k)
    for j, f in enumerate(fillers):
        ops.append((next(fresh), False))
        ops.extend([(f, True)] * (k + 1))
        ops.append((target, False))
        if j < len(fillers) - 1:
            ops.extend([(target, False)] * (k - 1))
    items = np.array([x for x, _ in ops], dtype=np.uint64)
    deletes = np.array([d for _, d in ops], dtype=bool)
    n_del = int(deletes.sum())
    n_ins = len(ops) - n_del
    alpha = Fraction(n_ins, n_ins - n_del)
    header = {
        "kind": WorkloadKind.ADVERSARIAL.value,
        "m": m,
        "inflate": k,
        "I": n_ins,
        "D": n_del,
        "alpha": f"{alpha.numerator}/{alpha.denominator}",
    }
    return OpStream(items, deletes, header)


def recorded_alpha(stream: OpStream) -> Fraction:
    """The ``alpha`` stored in a stream header, or ``I/(I-D)`` computed from it."""
    value = stream.header.get("alpha")
    if value is not None:
        return Fraction(str(value))
    n_del = int(stream.deletes.sum())
    n_ins = len(stream) - n_del
    return Fraction(n_ins, n_ins - n_del)


def generate(spec: WorkloadSpec) -> OpStream:
    if spec.kind is WorkloadKind.ZIPF_SUFFIX:
        return gen_zipf_suffix(spec)
    if spec.kind is WorkloadKind.INTERLEAVED:
        return gen_interleaved(spec)
    raise ValueError("adversarial streams come from gen_adversarial(m)")


def check_gamma_decreasing(freqs: Sequence[float], gamma) -> bool:
    """True iff ``f[ceil(gamma t)] <= f[t] / 2`` for every valid 1-based ``t``."""
    f = list(freqs)
    if any(a < b for a, b in zip(f, f[1:])):
        raise NotSorted("frequencies must be non-increasing")
    g = exact(gamma)
    if not 1 < g < 2:
        raise ValueError("gamma must lie in (1, 2)")
    n = len(f)
    t = 1
    while True:
        j = math.ceil(g * t)
        if j > n:
            return True
        if 2 * f[j - 1] > f[t - 1]:
            return False
        t += 1


def split_stream(stream: OpStream, cut: int) -> tuple[OpStream, OpStream]:
    """Split a stream between two sites at position ``cut``.

    Site A receives the prefix. Site B receives every later insertion, and a
    later deletion goes to B when B holds a live copy of the item, otherwise
    to A. Each site therefore sees a valid stream, the two sites together see
    exactly the original operations, and a deletion is never separated from
    the site that holds the insertion it cancels.
    """
    if not 0 <= cut <= len(stream):
        raise ValueError(f"cut must lie in [0, {len(stream)}]")
    items = stream.items.tolist()
    dels = stream.deletes.tolist()
    to_b = [False] * len(items)
    live_b: dict[int, int] = {}
    for i in range(cut, len(items)):
        x = items[i]
        if not dels[i]:
            to_b[i] = True
            live_b[x] = live_b.get(x, 0) + 1
        elif live_b.get(x, 0) > 0:
            to_b[i] = True
            live_b[x] -= 1
    mask = np.array(to_b, dtype=bool)
    site_a = OpStream(stream.items[~mask], stream.deletes[~mask], {"site": "A", "cut": cut})
    site_b = OpStream(stream.items[mask], stream.deletes[mask], {"site": "B", "cut": cut})
    return site_a, site_b
