"""Dataset parsing, scaling, padding, fold assignment, feature files."""

import numpy as np
import pytest

from frnet.data import (
    DELIMITED,
    SPARSE,
    Dataset,
    ScalingRecord,
    apply_scaling,
    as_images,
    as_square_images,
    dataset_stats,
    fit_scaling,
    imbalance_ratio,
    load_dataset,
    make_folds,
    pad_and_reshape,
    read_feature_file,
    scale_minmax,
    subset,
    write_feature_file,
)
from frnet.errors import DataError, ShapeMismatchError


def _dataset(n, positives, width=6, seed=0, name="toy"):
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=np.int64)
    labels[:positives] = 1
    labels = rng.permutation(labels)
    return Dataset(
        name,
        tuple(f"d{i}" for i in range(n)),
        tuple(f"t{i}" for i in range(n)),
        rng.random((n, width), dtype=np.float32),
        labels,
    )


# ---------------------------------------------------------------------------
# parsing


def test_delimited_with_header_and_ids(tmp_path):
    p = tmp_path / "pairs.tsv"
    p.write_text(
        "drug\ttarget\tlabel\tf0\tf1\tf2\n"
        "D1\tT1\t1\t0.5\t0.25\t0\n"
        "# a comment line\n"
        "D2\tT2\t0\t1\t0.75\t0.125\n"
    )
    d = load_dataset(str(p), DELIMITED, name="mini")
    assert len(d) == 2 and d.feature_count == 3
    assert d.drug_ids == ("D1", "D2") and d.target_ids == ("T1", "T2")
    assert d.labels.tolist() == [1, 0]
    assert d.features[1].tolist() == [1.0, 0.75, 0.125]


def test_delimited_without_header_or_ids(tmp_path):
    p = tmp_path / "bare.csv"
    p.write_text("1,0.5,0.25\n0,0.75,1.0\n")
    d = load_dataset(str(p), DELIMITED)
    assert len(d) == 2 and d.feature_count == 2
    assert d.drug_ids == ("row0", "row1")
    assert d.labels.tolist() == [1, 0]


def test_empty_file_is_a_parse_error(tmp_path):
    p = tmp_path / "empty.tsv"
    p.write_text("")
    with pytest.raises(DataError):
        load_dataset(str(p))
    p.write_text("# only comments\n\n")
    with pytest.raises(DataError):
        load_dataset(str(p))


def test_wrong_width_error_names_the_line(tmp_path):
    p = tmp_path / "ragged.csv"
    p.write_text("1,0.5,0.25\n0,0.75\n")
    with pytest.raises(DataError) as e:
        load_dataset(str(p))
    assert "ragged.csv:2" in str(e.value)


def test_nonbinary_label_and_bad_float_errors(tmp_path):
    p = tmp_path / "label.csv"
    p.write_text("2,0.5\n")
    with pytest.raises(DataError) as e:
        load_dataset(str(p))
    assert ":1" in str(e.value)
    p.write_text("1,zebra\n")
    with pytest.raises(DataError):
        load_dataset(str(p))


def test_declared_width_is_enforced(tmp_path):
    p = tmp_path / "narrow.csv"
    p.write_text("1,0.5,0.25\n")
    with pytest.raises(DataError):
        load_dataset(str(p), feature_count=1476)


def test_missing_file_error():
    with pytest.raises(DataError):
        load_dataset("/no/such/file.tsv")


def test_sparse_zero_based(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("1 0:0.5 3:2.0\n0 1:1.5\n")
    d = load_dataset(str(p), SPARSE)
    assert d.feature_count == 4
    assert d.features.tolist() == [[0.5, 0.0, 0.0, 2.0], [0.0, 1.5, 0.0, 0.0]]
    assert d.labels.tolist() == [1, 0]


def test_sparse_one_based_fallback(tmp_path):
    # no index 0 anywhere and the top index equals the declared width
    p = tmp_path / "s1.txt"
    p.write_text("1 1:0.5 4:2.0\n0 2:1.5\n")
    d = load_dataset(str(p), SPARSE, feature_count=4)
    assert d.features.tolist() == [[0.5, 0.0, 0.0, 2.0], [0.0, 1.5, 0.0, 0.0]]


def test_sparse_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 5:1.0\n")
    with pytest.raises(DataError):
        load_dataset(str(p), SPARSE, feature_count=3)
    p.write_text("1 a:b\n")
    with pytest.raises(DataError) as e:
        load_dataset(str(p), SPARSE)
    assert "bad.txt:1" in str(e.value)
    p.write_text("1 2.0\n")
    with pytest.raises(DataError):
        load_dataset(str(p), SPARSE)


def test_unknown_format(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,2\n")
    with pytest.raises(DataError):
        load_dataset(str(p), "parquet")


# ---------------------------------------------------------------------------
# statistics


def test_gold_standard_imbalance_ratios():
    assert imbalance_ratio(2926, 445 * 664 - 2926) == 99.98
    assert imbalance_ratio(1476, 210 * 204 - 1476) == 28.02
    assert imbalance_ratio(635, 223 * 95 - 635) == 32.36
    assert imbalance_ratio(90, 54 * 26 - 90) == 14.6


def test_dataset_stats_and_zero_positive_error():
    d = _dataset(20, 10)
    assert dataset_stats(d) == {"pairs": 20, "positives": 10, "imbalance-ratio": 1.0}
    with pytest.raises(DataError):
        dataset_stats(_dataset(10, 0))


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset("x", ("a",), ("b",), np.array([[np.inf]]), np.array([1]))
    with pytest.raises(DataError):
        Dataset("x", ("a",), ("b",), np.array([[1.0]]), np.array([2]))
    with pytest.raises(ShapeMismatchError):
        Dataset("x", ("a",), ("b", "c"), np.array([[1.0]]), np.array([1]))


def test_subset_keeps_rows_aligned():
    d = _dataset(10, 4)
    s = subset(d, np.array([7, 2]), name="slice")
    assert s.name == "slice" and len(s) == 2
    assert s.drug_ids == (d.drug_ids[7], d.drug_ids[2])
    assert np.array_equal(s.features[0], d.features[7])
    assert s.labels.tolist() == [int(d.labels[7]), int(d.labels[2])]


# ---------------------------------------------------------------------------
# scaling


def test_minmax_maps_column_linearly():
    feats = np.array([[0.0], [5.0], [10.0]], dtype=np.float32)
    rec = fit_scaling(feats)
    assert apply_scaling(feats, rec).ravel().tolist() == [0.0, 0.5, 1.0]


def test_constant_column_maps_to_zero():
    feats = np.array([[3.0, 1.0], [3.0, 2.0]], dtype=np.float32)
    out = apply_scaling(feats, fit_scaling(feats))
    assert out[:, 0].tolist() == [0.0, 0.0]
    assert out[:, 1].tolist() == [0.0, 1.0]


def test_stored_record_reapplies_bit_exactly():
    rng = np.random.default_rng(21)
    feats = (rng.standard_normal((50, 7)) * 9).astype(np.float32)
    rec = fit_scaling(feats)
    a = apply_scaling(feats, rec)
    b = apply_scaling(feats.copy(), rec)
    assert a.tobytes() == b.tobytes()
    assert a.min() >= 0.0 and a.max() <= 1.0


def test_held_out_rows_are_clipped():
    train = np.array([[0.0], [10.0]], dtype=np.float32)
    rec = fit_scaling(train)
    out = apply_scaling(np.array([[-5.0], [15.0]], dtype=np.float32), rec)
    assert out.ravel().tolist() == [0.0, 1.0]


def test_scaling_record_never_reads_held_out_fold():
    d = _dataset(50, 10, width=4, seed=3)
    plan = make_folds(d, k=5, seed=1)
    train_rows = d.features[plan.train_indices(4)]
    rec = fit_scaling(train_rows)
    # mutate a copy of the held-out fold and refit: the record cannot move
    poisoned = d.features.copy()
    poisoned[plan.test_indices(4)] = 1e6
    rec2 = fit_scaling(poisoned[plan.train_indices(4)])
    assert rec.mins.tobytes() == rec2.mins.tobytes()
    assert rec.maxs.tobytes() == rec2.maxs.tobytes()


def test_scale_minmax_fits_or_reuses():
    d = _dataset(8, 3, width=3, seed=9)
    scaled = scale_minmax(d)
    assert scaled.scaling is not None
    again = scale_minmax(d, scaled.scaling)
    assert np.array_equal(again.features, scaled.features)


def test_scaling_record_validation():
    with pytest.raises(DataError):
        ScalingRecord(np.array([1.0]), np.array([0.0]))
    with pytest.raises(ShapeMismatchError):
        ScalingRecord(np.array([0.0, 1.0]), np.array([1.0]))


# ---------------------------------------------------------------------------
# padding and reshaping


def test_pad_zero_vector():
    t = pad_and_reshape(np.zeros(1476, dtype=np.float32))
    assert t.shape == (1, 211, 7, 1)
    assert not t.data.any()


def test_pad_appends_single_zero_last():
    feats = np.arange(1, 1477, dtype=np.float32)
    t = pad_and_reshape(feats)
    flat = t.ravel()
    assert flat[1476] == 0.0
    assert np.array_equal(flat[:1476], feats)


def test_orientation_follows_row_major_index_rule():
    feats = np.arange(1, 1477, dtype=np.float32)
    tall = pad_and_reshape(feats, (211, 7)).data
    wide = pad_and_reshape(feats, (7, 211)).data
    padded = np.concatenate([feats, [0.0]])
    rng = np.random.default_rng(2)
    for k in rng.integers(0, 1477, size=60):
        assert tall[0, k // 7, k % 7, 0] == padded[k]
        assert wide[0, k // 211, k % 211, 0] == padded[k]


def test_pad_is_injective():
    a = np.zeros(1476, dtype=np.float32)
    b = a.copy()
    b[701] = 1e-6
    ta, tb = pad_and_reshape(a), pad_and_reshape(b)
    assert ta != tb


def test_pad_width_errors():
    with pytest.raises(ShapeMismatchError):
        pad_and_reshape(np.zeros(1475, dtype=np.float32))
    with pytest.raises(ShapeMismatchError):
        pad_and_reshape(np.zeros((2, 1476), dtype=np.float32))


def test_as_images_matches_rowwise_pad():
    rng = np.random.default_rng(4)
    feats = rng.random((5, 48), dtype=np.float32)
    imgs = as_images(feats, (7, 7))
    assert imgs.shape == (5, 7, 7, 1)
    for i in range(5):
        assert np.array_equal(imgs[i], pad_and_reshape(feats[i], (7, 7)).data[0])


def test_as_square_images():
    feats = np.arange(32, dtype=np.float32).reshape(2, 16)
    imgs = as_square_images(feats)
    assert imgs.shape == (2, 4, 4, 1)
    assert imgs[1, 0, 0, 0] == 16.0
    with pytest.raises(ShapeMismatchError):
        as_square_images(np.zeros((2, 15), dtype=np.float32))


# ---------------------------------------------------------------------------
# folds


def test_exactly_divisible_folds():
    d = _dataset(100, 20, seed=5)
    plan = make_folds(d, k=5, seed=11)
    for f in range(5):
        test = plan.test_indices(f)
        assert test.size == 20
        assert d.labels[test].sum() == 4


def test_nr_shaped_fold_counts():
    d = _dataset(1404, 90, width=4, seed=6)
    plan = make_folds(d, k=5, seed=0)
    sizes = sorted(plan.test_indices(f).size for f in range(5))
    assert sizes == [280, 281, 281, 281, 281]
    for f in range(5):
        pos = int(d.labels[plan.test_indices(f)].sum())
        assert abs(pos - 18) <= 1


def test_folds_deterministic_and_seed_sensitive():
    d = _dataset(60, 12, seed=7)
    a = make_folds(d, k=5, seed=3).assignments
    b = make_folds(d, k=5, seed=3).assignments
    c = make_folds(d, k=5, seed=4).assignments
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_folds_partition_the_dataset():
    d = _dataset(53, 11, seed=8)
    plan = make_folds(d, k=5, seed=2)
    seen = np.concatenate([plan.test_indices(f) for f in range(5)])
    assert sorted(seen.tolist()) == list(range(53))
    for f in range(5):
        overlap = set(plan.test_indices(f)) & set(plan.train_indices(f))
        assert not overlap


def test_fold_preconditions():
    with pytest.raises(DataError):
        make_folds(_dataset(20, 3), k=5)
    with pytest.raises(DataError):
        make_folds(_dataset(20, 10), k=1)
    with pytest.raises(DataError):
        make_folds(_dataset(4, 4, width=2), k=5)


def test_plain_mode_balances_sizes_only():
    d = _dataset(47, 20, seed=10)
    plan = make_folds(d, k=5, seed=1, stratified=False)
    sizes = sorted(plan.test_indices(f).size for f in range(5))
    assert sizes == [9, 9, 9, 10, 10]


# ---------------------------------------------------------------------------
# feature files


def test_feature_file_round_trip_is_bitwise(tmp_path):
    rng = np.random.default_rng(31)
    vals = rng.standard_normal((9, 17)).astype(np.float32)
    vals[0, 0] = np.float32(-0.0)
    vals[1, 1] = np.float32(1e-40)  # subnormal
    vals[2, 2] = np.float32(3.4e38)
    vals[3, 3] = np.float32(1.0 / 3.0)
    d = Dataset(
        "rt",
        tuple(f"d{i}" for i in range(9)),
        tuple(f"t{i}" for i in range(9)),
        vals,
        np.array([1, 0, 1, 0, 1, 0, 1, 0, 1]),
    )
    full = str(tmp_path / "features_rt.tsv")
    write_feature_file(full, d)
    back = read_feature_file(full, name="rt")
    assert back.features.tobytes() == d.features.tobytes()
    assert back.labels.tolist() == d.labels.tolist()
    assert back.drug_ids == d.drug_ids and back.target_ids == d.target_ids
