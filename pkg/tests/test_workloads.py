import math
from fractions import Fraction

import numpy as np
import pytest

from sspm import IntegratedSpaceSaving, LegacySpaceSavingPM, exact_frequencies, validate_stream
from sspm.deletion import iss_size
from sspm.errors import NotSorted, SpecViolatesAlpha
from sspm.stream import read_stream, write_stream
from sspm.workloads import (
    WorkloadSpec,
    ZipfSampler,
    check_gamma_decreasing,
    gen_adversarial,
    gen_interleaved,
    gen_zipf_suffix,
    recorded_alpha,
    split_stream,
)


def test_suffix_stream_shape():
    s = gen_zipf_suffix(WorkloadSpec("zipf-suffix", beta=1.0, insertions=100_000, deletions=50_000))
    assert len(s) == 150_000
    assert not s.deletes[:100_000].any() and s.deletes[100_000:].all()
    stats = validate_stream(s, 2)
    assert (stats.inserts, stats.deletes) == (100_000, 50_000)


def test_suffix_without_deletions():
    s = gen_zipf_suffix(WorkloadSpec("zipf-suffix", insertions=500, deletions=0))
    assert len(s) == 500 and not s.deletes.any()


def test_generators_are_deterministic(tmp_path):
    for kind in ("zipf-suffix", "interleaved"):
        spec = WorkloadSpec(kind, insertions=3000, deletions=1000, seed=77)
        paths = [tmp_path / f"{kind}{i}.txt" for i in range(2)]
        for p in paths:
            s = gen_zipf_suffix(spec) if kind == "zipf-suffix" else gen_interleaved(spec)
            write_stream(s, p)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert read_stream(paths[0]).header["seed"] == "77"


def test_interleaved_near_target_sizes():
    spec = WorkloadSpec("interleaved", insertions=116_645, deletions=39_825, seed=0)
    s = gen_interleaved(spec)
    stats = validate_stream(s, 2)
    assert stats.inserts == 116_645
    assert abs(stats.deletes - 39_825) < 0.03 * 39_825
    assert stats.alpha_effective <= 2
    assert (s.header["I"], s.header["D"]) == (stats.inserts, stats.deletes)
    # deletions really are interleaved with insertions
    first_delete = int(np.argmax(s.deletes))
    assert not s.deletes[first_delete:].all()


def test_interleaved_without_updates():
    s = gen_interleaved(WorkloadSpec("interleaved", insertions=800, deletions=0, update_prob=0.0))
    assert len(s) == 800 and not s.deletes.any()


def test_spec_rejects_excess_deletions():
    with pytest.raises(SpecViolatesAlpha):
        WorkloadSpec("zipf-suffix", insertions=100, deletions=51, alpha=2)
    with pytest.raises(SpecViolatesAlpha):
        WorkloadSpec("zipf-suffix", alpha=0.9)


def test_zipf_sampler_table():
    z = ZipfSampler(22_000, 1.0)
    xi = sum(i ** -1.0 for i in range(1, 22_001))
    assert z.probability(1) == pytest.approx(1 / xi, rel=1e-12)
    # stratified uniforms remove sampling noise, so the 1% rule applies to the mapping itself
    n = 10**6
    u = (np.arange(n) + 0.5) / n
    ranks = np.searchsorted(z.cdf, u, side="right") + 1
    counts = np.bincount(ranks, minlength=12)
    for i in range(1, 11):
        assert abs(counts[i] / n / z.probability(i) - 1) <= 0.01


def test_zipf_sampler_random_draws():
    z = ZipfSampler(22_000, 1.0)
    n = 10**6
    counts = np.bincount(z.sample(np.random.default_rng(0), n).astype(np.int64), minlength=12)
    for i in range(1, 11):
        p = z.probability(i)
        sd = math.sqrt(n * p * (1 - p))
        assert abs(counts[i] - n * p) <= 4 * sd


def test_adversarial_breaks_legacy_only():
    stream = gen_adversarial(2)
    alpha = recorded_alpha(stream)
    assert alpha == Fraction(11, 6)
    assert validate_stream(stream, alpha).inserts == stream.header["I"]
    f = exact_frequencies(stream)
    f1 = sum(f.values())
    legacy = LegacySpaceSavingPM(2)
    legacy.extend(stream)
    assert max(abs(legacy.query(x) - fx) for x, fx in f.items()) > Fraction(f1, 2)
    iss = IntegratedSpaceSaving(iss_size(Fraction(1, 2), alpha))
    iss.extend(stream)
    assert all(abs(iss.query(x) - fx) <= Fraction(f1, 2) for x, fx in f.items())


def test_adversarial_is_deterministic():
    assert gen_adversarial(4) == gen_adversarial(4)
    with pytest.raises(ValueError):
        gen_adversarial(1)


def test_gamma_decreasing_examples():
    assert check_gamma_decreasing([2.0 ** -t for t in range(1, 30)], Fraction(3, 2))
    assert not check_gamma_decreasing([5, 5, 5], Fraction(3, 2))
    with pytest.raises(NotSorted):
        check_gamma_decreasing([1, 2], 1.5)
    with pytest.raises(ValueError):
        check_gamma_decreasing([2, 1], 2)


def _brute_force(f, gamma):
    n = len(f)
    return all(
        f[math.ceil(gamma * t) - 1] <= f[t - 1] / 2
        for t in range(1, n + 1)
        if math.ceil(gamma * t) <= n
    )


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_gamma_decreasing_matches_definition(beta):
    f = [1e6 / i**beta for i in range(1, 1001)]
    gamma = Fraction(13, 10)
    assert check_gamma_decreasing(f, gamma) == _brute_force(f, gamma)


@pytest.mark.parametrize("frac", [0.0, 0.001, 0.5, 0.999, 1.0])
def test_split_stream_keeps_every_operation(frac):
    s = gen_interleaved(WorkloadSpec("interleaved", universe=100, insertions=3500, deletions=1400, seed=6))
    cut = round(frac * len(s))
    a, b = split_stream(s, cut)
    validate_stream(a)
    validate_stream(b)
    assert len(a) + len(b) == len(s)
    assert np.array_equal(a.items[:cut], s.items[:cut])
    fa, fb = exact_frequencies(a), exact_frequencies(b)
    whole = exact_frequencies(s)
    for x, fx in whole.items():
        assert fa.get(x, 0) + fb.get(x, 0) == fx


def test_split_stream_rejects_bad_cut():
    s = gen_adversarial(2)
    with pytest.raises(ValueError):
        split_stream(s, len(s) + 1)
