import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sspm.errors import AlphaViolated, BadAlpha, NegativeFrequency
from sspm.stream import (
    Op,
    OpStream,
    StreamStats,
    dele,
    exact_frequencies,
    insert_counts,
    ins,
    item_id,
    parse_header,
    read_stream,
    validate_stream,
    write_stream,
)


def test_empty_stream_stats():
    assert validate_stream([], 2) == StreamStats(0, 0, 0, 0)
    assert validate_stream(OpStream.from_ops([]), 2) == StreamStats(0, 0, 0, 0)


def test_insert_then_delete_needs_unbounded_alpha():
    # D = I leaves F1 = 0, which no finite alpha admits: 1 > (1 - 1/2) * 1
    with pytest.raises(AlphaViolated):
        validate_stream([ins(7), dele(7)], 2)
    s = validate_stream([ins(7), dele(7)])
    assert s == StreamStats(n_ops=2, inserts=1, deletes=1, f1=0)
    assert s.alpha_effective == math.inf


def test_half_deleted_stream_on_alpha_boundary():
    s = validate_stream([ins(7), ins(7), dele(7)], 2)
    assert s == StreamStats(n_ops=3, inserts=2, deletes=1, f1=1)


def test_delete_before_insert():
    with pytest.raises(NegativeFrequency) as err:
        validate_stream([dele(7)], 2)
    assert (err.value.item, err.value.position) == (7, 0)


def test_alpha_budget_exceeded():
    # I=3, D=2 needs alpha >= 3
    ops = [ins(1), ins(2), ins(3), dele(1), dele(2)]
    with pytest.raises(AlphaViolated) as err:
        validate_stream(ops, 2)
    assert (err.value.inserts, err.value.deletes) == (3, 2)
    assert validate_stream(ops, 3).f1 == 1


def test_alpha_below_one_rejected():
    with pytest.raises(BadAlpha):
        validate_stream([ins(1)], 0.5)


def test_exact_frequencies_small():
    ops = [ins("a"), ins("a"), ins("b"), dele("a")]
    assert exact_frequencies(ops) == {"a": 1, "b": 1}
    assert exact_frequencies([]) == {}


def test_zero_frequency_items_kept():
    assert exact_frequencies(OpStream.from_ops([ins(4), dele(4)])) == {4: 0}


def _tally(ops):
    # independent reference: count inserts and deletes separately
    plus, minus = {}, {}
    for x, op in ops:
        target = minus if op == Op.DELETE else plus
        target[x] = target.get(x, 0) + 1
    return {x: plus[x] - minus.get(x, 0) for x in plus}


def test_random_stream_matches_second_tally():
    rng = random.Random(11)
    live, ops = [], []
    while len(ops) < 10_000:
        if live and rng.random() < 1 / 3:
            ops.append(dele(live.pop(rng.randrange(len(live)))))
        else:
            x = rng.randrange(300)
            live.append(x)
            ops.append(ins(x))
    stats = validate_stream(ops, 2)
    want = _tally(ops)
    assert exact_frequencies(ops) == want
    assert exact_frequencies(OpStream.from_ops(ops)) == want
    assert sum(want.values()) == stats.f1


@st.composite
def op_lists(draw):
    return draw(st.lists(st.tuples(st.integers(0, 6), st.booleans()), max_size=60))


@given(op_lists())
@settings(max_examples=200, deadline=None)
def test_array_path_agrees_with_loop(raw):
    ops = [dele(x) if d else ins(x) for x, d in raw]
    outcomes = []
    for s in (ops, OpStream.from_ops(ops)):
        try:
            outcomes.append((validate_stream(s), exact_frequencies(s)))
        except NegativeFrequency as e:
            outcomes.append((e.item, e.position))
    assert outcomes[0] == outcomes[1]
    assert insert_counts(ops) == insert_counts(OpStream.from_ops(ops))


def test_opstream_sequence_protocol():
    s = OpStream.from_ops([ins(1), ins(2), dele(1)], {"kind": "x"})
    assert len(s) == 3
    assert s[2] == dele(1) and s[2].is_delete
    assert list(s[:2]) == [ins(1), ins(2)]
    assert s[:2].header == {"kind": "x"}
    assert s == OpStream.from_ops(list(s))
    assert insert_counts(s) == {1: 1, 2: 1}


def test_opstream_rejects_ragged_arrays():
    with pytest.raises(ValueError):
        OpStream(np.zeros(3, np.uint64), np.zeros(2, bool))


def test_item_id():
    assert item_id("42") == 42
    assert item_id(str(2**64 - 1)) == 2**64 - 1
    big = item_id(str(2**64))
    assert 0 <= big < 2**64 and big != 0
    assert item_id("user:17") == item_id("user:17") != item_id("user:18")


def test_parse_header():
    assert parse_header("# spec: kind=zipf-suffix beta=1.0 seed=3") == {
        "kind": "zipf-suffix", "beta": "1.0", "seed": "3"
    }
    assert parse_header("# just a comment") == {}


def test_file_round_trip(tmp_path):
    s = OpStream.from_ops([ins(5), ins(9), dele(5)], {"kind": "demo", "seed": 1})
    path = tmp_path / "s.txt"
    write_stream(s, path)
    text = path.read_text().splitlines()
    assert text[0] == "# spec: kind=demo seed=1"
    back = read_stream(path)
    assert back == s
    assert back.header == {"kind": "demo", "seed": "1"}


def test_read_hashes_non_numeric_tokens(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("I alice\nI bob\nD alice\n")
    s = read_stream(path)
    assert exact_frequencies(s) == {item_id("alice"): 0, item_id("bob"): 1}


def test_read_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("I 1\nX 2\n")
    with pytest.raises(ValueError, match="bad.txt:2"):
        read_stream(path)
