import numpy as np
import pytest

from seqsim.data import (
    Dataset,
    SplitSpec,
    TimeSeries,
    build_pairs,
    load_jsonl,
    make_split,
    sample_pair_batch,
    save_jsonl,
    synth_distractor,
    synth_generate,
    synth_reversal,
    window,
    window_dataset,
    zscore_dataset,
)
from seqsim.numerics import Rng


def _series(id, values, label=None):
    return TimeSeries(id=id, frames=np.asarray(values, dtype=np.float64), label=label)


def _toy_dataset():
    return Dataset(
        [
            _series("a0", [[0.0], [1.0]], label=0),
            _series("a1", [[0.1], [1.1]], label=0),
            _series("b0", [[5.0], [6.0], [7.0]], label=1),
            _series("b1", [[5.1], [6.1]], label=1),
        ]
    )


# --- containers -------------------------------------------------------------


def test_timeseries_validation():
    s = _series("x", [[1.0, 2.0], [3.0, 4.0]], label=3)
    assert s.length == 2 and s.dim == 2
    with pytest.raises(ValueError):
        _series("flat", [1.0, 2.0])
    with pytest.raises(ValueError):
        _series("empty", np.zeros((0, 2)))
    with pytest.raises(ValueError):
        _series("nan", [[np.nan]])


def test_dataset_validation_and_class_ids():
    data = _toy_dataset()
    assert len(data) == 4 and data.dim == 1
    assert data.class_ids == [0, 1]
    with pytest.raises(ValueError, match="duplicate"):
        Dataset([_series("x", [[0.0]]), _series("x", [[1.0]])])
    with pytest.raises(ValueError, match="dim"):
        Dataset([_series("x", [[0.0]]), _series("y", [[1.0, 2.0]])])


# --- jsonl ------------------------------------------------------------------


def test_jsonl_round_trip_is_byte_stable(tmp_path):
    data = synth_generate(3, 4, 2, (3, 6), 0.1, seed=5)
    p1 = tmp_path / "one.jsonl"
    p2 = tmp_path / "two.jsonl"
    save_jsonl(data, p1)
    again = load_jsonl(p1)
    save_jsonl(again, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert [s.id for s in again] == [s.id for s in data]
    for s, t in zip(data, again):
        np.testing.assert_array_equal(s.frames, t.frames)
        assert s.label == t.label


@pytest.mark.parametrize(
    "line,msg",
    [
        ("not json", "invalid JSON"),
        ('{"frames": [[1.0]]}', "needs 'id'"),
        ('{"id": "a", "frames": []}', "empty frames"),
        ('{"id": "a", "frames": [[1.0], [1.0, 2.0]]}', "ragged"),
        ('{"id": "a", "frames": [[1e999]]}', "non-finite"),
        ('{"id": "a", "label": "zero", "frames": [[1.0]]}', "label"),
    ],
)
def test_jsonl_errors_name_the_line(tmp_path, line, msg):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "ok", "frames": [[0.5]]}\n' + line + "\n")
    with pytest.raises(ValueError, match=msg) as err:
        load_jsonl(path)
    assert ":2:" in str(err.value)


def test_jsonl_rejects_mixed_dims_and_empty_file(tmp_path):
    path = tmp_path / "mix.jsonl"
    path.write_text('{"id":"a","frames":[[1.0]]}\n{"id":"b","frames":[[1.0,2.0]]}\n')
    with pytest.raises(ValueError, match="dim"):
        load_jsonl(path)
    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n\n")
    with pytest.raises(ValueError, match="empty"):
        load_jsonl(empty)


# --- preprocessing ----------------------------------------------------------


def test_window_stacks_consecutive_frames():
    s = _series("w", [[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0]])
    out = window(s, 2)
    assert out.length == 3 and out.dim == 4
    # frame t is the concatenation of raw frames t and t+1
    expected = [
        [0.0, 10.0, 1.0, 11.0],
        [1.0, 11.0, 2.0, 12.0],
        [2.0, 12.0, 3.0, 13.0],
    ]
    np.testing.assert_array_equal(out.frames, expected)
    assert window(s, 1) is s
    with pytest.raises(ValueError):
        window(s, 5)
    with pytest.raises(ValueError):
        window(s, 0)


def test_window_dataset_applies_everywhere():
    data = synth_generate(2, 2, 2, (4, 6), 0.0, seed=1)
    out = window_dataset(data, 3)
    assert out.dim == 6
    for s, t in zip(data, out):
        assert t.length == s.length - 2


def test_zscore_standardizes_pooled_frames():
    data = _toy_dataset()
    out = zscore_dataset(data)
    stacked = np.vstack([s.frames for s in out])
    np.testing.assert_allclose(stacked.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(stacked.std(axis=0), 1.0, atol=1e-12)
    # a constant dimension must survive (no division by ~0)
    flat = Dataset([_series("k0", [[2.0], [2.0]]), _series("k1", [[2.0], [2.0]])])
    np.testing.assert_array_equal(zscore_dataset(flat)[0].frames, [[0.0], [0.0]])


# --- splits -----------------------------------------------------------------


def test_split_spec_validation():
    with pytest.raises(ValueError):
        SplitSpec(mode="bogus", seed=0)
    with pytest.raises(ValueError):
        SplitSpec(mode="out-of-domain", seed=0)
    with pytest.raises(ValueError, match="overlap"):
        SplitSpec(mode="out-of-domain", seed=0, train_classes={0, 1}, test_classes={1})
    with pytest.raises(ValueError):
        SplitSpec(mode="within-domain", seed=0, validation_fraction=1.0)
    with pytest.raises(ValueError):
        SplitSpec(mode="within-domain", seed=0, train_fraction=0.0)


def test_within_domain_split_partitions_and_stratifies():
    data = synth_generate(4, 10, 2, (4, 6), 0.1, seed=9)
    spec = SplitSpec(mode="within-domain", seed=3, train_fraction=0.7, validation_fraction=0.2)
    train, val, test = make_split(data, spec)
    ids = [s.id for part in (train, val, test) for s in part]
    assert sorted(ids) == sorted(s.id for s in data)
    assert len(set(ids)) == len(data)
    # 10 per class: 7 to the train pool, 3 test; validation carves ~20% of 7
    for part, per_class in ((test, 3), (val, 1), (train, 6)):
        counts = {c: sum(s.label == c for s in part) for c in range(4)}
        assert counts == {c: per_class for c in range(4)}, part


def test_split_is_deterministic_in_seed():
    data = synth_generate(3, 8, 2, (4, 6), 0.1, seed=2)
    spec = SplitSpec(mode="within-domain", seed=5, validation_fraction=0.25)
    one = make_split(data, spec)
    two = make_split(data, spec)
    for a, b in zip(one, two):
        assert [s.id for s in a] == [s.id for s in b]
    other = make_split(data, SplitSpec(mode="within-domain", seed=6, validation_fraction=0.25))
    assert any(
        [s.id for s in a] != [s.id for s in b] for a, b in zip(one, other)
    )


def test_out_of_domain_split_keeps_classes_disjoint():
    data = synth_generate(5, 6, 2, (4, 6), 0.1, seed=4)
    spec = SplitSpec(
        mode="out-of-domain",
        seed=1,
        validation_fraction=0.2,
        train_classes={0, 1, 2},
        test_classes={3, 4},
    )
    train, val, test = make_split(data, spec)
    assert set(train.class_ids) | set(val.class_ids) <= {0, 1, 2}
    assert set(test.class_ids) == {3, 4}
    assert len(test) == 12
    with pytest.raises(ValueError, match="absent"):
        make_split(
            data,
            SplitSpec(
                mode="out-of-domain", seed=1, train_classes={0}, test_classes={9}
            ),
        )


def test_split_requires_labels():
    data = Dataset([_series("u", [[0.0]])])
    with pytest.raises(ValueError, match="unlabeled"):
        make_split(data, SplitSpec(mode="within-domain", seed=0))


# --- pairs ------------------------------------------------------------------


def test_build_pairs_matches_brute_force():
    data = _toy_dataset()
    pairs = build_pairs(data)
    labels = [s.label for s in data]
    want_sim = {
        (i, j)
        for i in range(4)
        for j in range(i + 1, 4)
        if labels[i] == labels[j]
    }
    want_dis = {
        (i, j)
        for i in range(4)
        for j in range(i + 1, 4)
        if labels[i] != labels[j]
    }
    assert set(pairs.similar) == want_sim
    assert {(i, j) for i, j, kind in pairs.dissimilar} == want_dis
    assert all(kind == "cross-class" for _, _, kind in pairs.dissimilar)


def test_build_pairs_forgery_map():
    data = Dataset(
        [
            _series("g0", [[0.0]], label=0),
            _series("g1", [[0.1]], label=0),
            _series("f0", [[0.2]], label=0),
        ]
    )
    pairs = build_pairs(data, forgery_map={"g0": ["f0"]})
    # the forged series leaves the similar pool entirely
    assert set(pairs.similar) == {(0, 1)}
    assert pairs.dissimilar == [(0, 2, "forgery")]
    with pytest.raises(ValueError, match="unknown id"):
        build_pairs(data, forgery_map={"nope": ["f0"]})
    with pytest.raises(ValueError, match="unknown id"):
        build_pairs(data, forgery_map={"g0": ["nope"]})


def test_build_pairs_warns_when_no_dissimilar():
    data = Dataset([_series("a", [[0.0]], label=0), _series("b", [[1.0]], label=0)])
    with pytest.warns(UserWarning, match="no dissimilar"):
        build_pairs(data)


def test_sample_pair_batch_is_balanced():
    data = _toy_dataset()
    pairs = build_pairs(data)
    batch = sample_pair_batch(pairs, Rng(8), 12)
    assert len(batch) == 12
    assert sum(y for _, _, y in batch) == 6
    labels = [s.label for s in data]
    for i, j, y in batch:
        assert (labels[i] == labels[j]) == y
    with pytest.raises(ValueError):
        sample_pair_batch(pairs, Rng(8), 7)
    with pytest.raises(ValueError, match="similar"):
        sample_pair_batch(
            build_pairs(Dataset([_series("a", [[0.0]], 0), _series("b", [[1.0]], 1)])),
            Rng(8),
            4,
        )


# --- synthetic generators ---------------------------------------------------


def test_synth_generate_shapes_and_determinism():
    data = synth_generate(3, 5, 2, (4, 9), 0.1, seed=7)
    assert len(data) == 15 and data.dim == 2
    assert data.class_ids == [0, 1, 2]
    assert len({s.id for s in data}) == 15
    for s in data:
        assert 4 <= s.length <= 9
    again = synth_generate(3, 5, 2, (4, 9), 0.1, seed=7)
    for a, b in zip(data, again):
        np.testing.assert_array_equal(a.frames, b.frames)
    shifted = synth_generate(3, 5, 2, (4, 9), 0.1, seed=8)
    assert any(
        a.length != b.length or not np.array_equal(a.frames, b.frames)
        for a, b in zip(data, shifted)
    )


def test_synth_generate_noise_free_classes_are_pure_templates():
    data = synth_generate(3, 4, 2, (6, 6), 0.0, seed=11)
    by_class = {}
    for s in data:
        by_class.setdefault(s.label, []).append(s)
    for members in by_class.values():
        for other in members[1:]:
            np.testing.assert_array_equal(members[0].frames, other.frames)
    # distinct classes come from distinct templates
    assert not np.array_equal(by_class[0][0].frames, by_class[1][0].frames)


def test_synth_reversal_classes_are_time_mirrors():
    data = synth_reversal(3, 2, (8, 8), 0.0, seed=13)
    assert data.class_ids == [0, 1]
    forward = next(s for s in data if s.label == 0)
    backward = next(s for s in data if s.label == 1)
    np.testing.assert_allclose(backward.frames, forward.frames[::-1], atol=1e-12)
    # identical frame multisets: the time-average carries no label signal
    np.testing.assert_allclose(
        forward.frames.mean(axis=0), backward.frames.mean(axis=0), atol=1e-12
    )


def test_synth_distractor_offsets_ride_on_shared_templates():
    data = synth_distractor(
        3, 8, 2, (7, 7), 0.0, seed=17, n_distractors=4, label_scale=0.5, distractor_scale=2.0
    )
    assert len(data) == 24
    by_class = {}
    for s in data:
        by_class.setdefault(s.label, []).append(s.frames)
    # some cross-class pair shares a distractor: their difference is a
    # constant offset over time, so ptp of the difference vanishes
    found = False
    for a in by_class[0]:
        for b in by_class[1]:
            diff = a - b
            if np.ptp(diff, axis=0).max() < 1e-9 and np.abs(diff).max() > 1e-12:
                found = True
    assert found
    again = synth_distractor(
        3, 8, 2, (7, 7), 0.0, seed=17, n_distractors=4, label_scale=0.5, distractor_scale=2.0
    )
    for a, b in zip(data, again):
        np.testing.assert_array_equal(a.frames, b.frames)


def test_synth_argument_validation():
    with pytest.raises(ValueError):
        synth_generate(0, 1, 1, (2, 3), 0.1, seed=0)
    with pytest.raises(ValueError):
        synth_generate(1, 1, 1, (5, 3), 0.1, seed=0)
    with pytest.raises(ValueError):
        synth_generate(1, 1, 1, (2, 3), -0.1, seed=0)
    with pytest.raises(ValueError):
        synth_reversal(1, 0, (2, 3), 0.1, seed=0)
    with pytest.raises(ValueError):
        synth_distractor(1, 1, 1, (2, 3), 0.1, seed=0, n_distractors=0)
