"""Ingestion and preprocessing behavior."""

import numpy as np
import pytest

from nominality import (
    EmptyInput,
    LabeledSeries,
    LabelError,
    ParseError,
    ScoreSeries,
    ShapeError,
    downsample,
    extract_windows,
    load_csv,
    minmax_apply,
    minmax_fit,
    minmax_invert,
    save_csv,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        s = load_csv(write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n5,6,0\n"), label_column="y")
        assert s.n_times == 3 and s.n_channels == 2
        assert s.labels.tolist() == [0, 1, 0]
        assert s.channel_names == ("a", "b")
        np.testing.assert_array_equal(s.values, [[1, 2], [3, 4], [5, 6]])

    def test_forward_fill(self, tmp_path):
        s = load_csv(write(tmp_path, "a,b\n1,2\n3,\n5,6\n"))
        assert s.values[:, 1].tolist() == [2.0, 2.0, 6.0]

    def test_leading_nan_becomes_zero(self, tmp_path):
        s = load_csv(write(tmp_path, "a,b\nnan,2\n3,4\n"))
        assert s.values[0, 0] == 0.0

    def test_non_binary_label(self, tmp_path):
        with pytest.raises(LabelError):
            load_csv(write(tmp_path, "a,y\n1,0\n2,2\n"), label_column="y")

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyInput):
            load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(EmptyInput):
            load_csv(write(tmp_path, "a,b\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_csv(write(tmp_path, "a,b\n1,2\n3\n"))
        assert err.value.row == 1

    def test_garbage_cell(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a,b\n1,zap\n"))

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(LabelError):
            load_csv(write(tmp_path, "a,b\n1,2\n"), label_column="y")

    def test_no_header(self, tmp_path):
        s = load_csv(write(tmp_path, "1,2\n3,4\n"), has_header=False)
        assert s.channel_names is None and s.n_times == 2

    def test_no_nan_after_ingestion(self, tmp_path):
        s = load_csv(write(tmp_path, "a,b\n,\n3,\n,4\n"))
        assert np.isfinite(s.values).all()

    def test_roundtrip_via_save(self, tmp_path):
        original = LabeledSeries(
            np.array([[0.1, 2.0], [3.5, -1.25]]), labels=[0, 1], channel_names=("u", "v")
        )
        path = str(tmp_path / "out.csv")
        save_csv(original, path)
        back = load_csv(path, label_column="label")
        np.testing.assert_array_equal(back.values, original.values)
        np.testing.assert_array_equal(back.labels, original.labels)
        assert back.channel_names == ("u", "v")


class TestSeriesInvariants:
    def test_label_length_checked(self):
        with pytest.raises(ShapeError):
            LabeledSeries(np.ones((3, 2)), labels=[0, 1])

    def test_label_values_checked(self):
        with pytest.raises(LabelError):
            LabeledSeries(np.ones((2, 2)), labels=[0, 2])

    def test_nan_rejected(self):
        with pytest.raises(ShapeError):
            LabeledSeries(np.array([[1.0, np.nan]]))

    def test_values_read_only(self):
        s = LabeledSeries(np.ones((2, 2)))
        with pytest.raises(ValueError):
            s.values[0, 0] = 5.0

    def test_score_kinds(self):
        with pytest.raises(ShapeError):
            ScoreSeries([1.0], kind="bogus")

    def test_negative_nominality_rejected(self):
        with pytest.raises(ShapeError):
            ScoreSeries([-0.5], kind="nominality")


class TestMinMax:
    def test_fit_simple(self):
        stats = minmax_fit(LabeledSeries(np.array([[0.0], [5.0], [10.0]])))
        assert stats.mins[0] == 0 and stats.maxs[0] == 10
        assert not stats.constant_mask[0]

    def test_fit_constant_flagged(self):
        stats = minmax_fit(LabeledSeries(np.array([[3.0], [3.0], [3.0]])))
        assert stats.mins[0] == stats.maxs[0] == 3
        assert stats.constant_mask[0]

    def test_fit_two_channels(self):
        stats = minmax_fit(LabeledSeries(np.array([[0.0, 1.0], [4.0, 3.0]])))
        assert stats.mins.tolist() == [0, 1] and stats.maxs.tolist() == [4, 3]

    def test_apply_midpoint(self):
        stats = minmax_fit(LabeledSeries(np.array([[0.0], [10.0]])))
        out = minmax_apply(LabeledSeries(np.array([[5.0]])), stats)
        assert out.values[0, 0] == 0.5

    def test_apply_no_clipping(self):
        stats = minmax_fit(LabeledSeries(np.array([[0.0], [10.0]])))
        out = minmax_apply(LabeledSeries(np.array([[12.0]])), stats)
        assert out.values[0, 0] == pytest.approx(1.2)

    def test_apply_constant_to_zero(self):
        stats = minmax_fit(LabeledSeries(np.array([[3.0], [3.0]])))
        out = minmax_apply(LabeledSeries(np.array([[3.0]])), stats)
        assert out.values[0, 0] == 0.0

    def test_apply_dimension_mismatch(self):
        stats = minmax_fit(LabeledSeries(np.ones((2, 2))))
        with pytest.raises(ShapeError):
            minmax_apply(LabeledSeries(np.ones((2, 3))), stats)

    def test_roundtrip_within_tolerance(self):
        rng = np.random.default_rng(11)
        train = LabeledSeries(rng.uniform(-5, 7, (50, 4)))
        other = LabeledSeries(rng.uniform(-9, 12, (30, 4)))
        stats = minmax_fit(train)
        back = minmax_invert(minmax_apply(other, stats), stats)
        rel = np.abs(back.values - other.values) / np.maximum(np.abs(other.values), 1e-30)
        assert rel.max() < 1e-12

    def test_roundtrip_constant_channel(self):
        train = LabeledSeries(np.full((4, 1), 2.5))
        stats = minmax_fit(train)
        back = minmax_invert(minmax_apply(train, stats), stats)
        np.testing.assert_array_equal(back.values, train.values)


class TestDownsample:
    def test_identity(self):
        s = LabeledSeries(np.arange(8.0).reshape(4, 2), labels=[0, 1, 0, 0])
        out = downsample(s, 1)
        np.testing.assert_array_equal(out.values, s.values)
        np.testing.assert_array_equal(out.labels, s.labels)

    def test_block_mean_and_any_label(self):
        s = LabeledSeries(np.array([[0.0], [2.0], [4.0], [6.0]]), labels=[0, 0, 1, 0])
        out = downsample(s, 2)
        assert out.values[:, 0].tolist() == [1.0, 5.0]
        assert out.labels.tolist() == [0, 1]

    def test_trailing_partial_block(self):
        s = LabeledSeries(np.arange(5.0)[:, None])
        out = downsample(s, 2)
        assert out.n_times == 3
        assert out.values[:, 0].tolist() == [0.5, 2.5, 4.0]


class TestExtractWindows:
    def test_exact_tiling(self):
        s = LabeledSeries(np.arange(10.0)[:, None])
        _, starts = extract_windows(s, 5, 5)
        assert starts.tolist() == [0, 5]

    def test_final_anchor_not_duplicated(self):
        s = LabeledSeries(np.arange(10.0)[:, None])
        _, starts = extract_windows(s, 4, 3)
        assert starts.tolist() == [0, 3, 6]

    def test_single_window(self):
        s = LabeledSeries(np.arange(4.0)[:, None])
        _, starts = extract_windows(s, 4, 10)
        assert starts.tolist() == [0]

    def test_window_longer_than_series(self):
        with pytest.raises(ShapeError):
            extract_windows(LabeledSeries(np.ones((3, 1))), 4, 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_every_index_covered(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 60))
        w = int(rng.integers(1, n + 1))
        stride = int(rng.integers(1, 20))
        s = LabeledSeries(rng.standard_normal((n, 2)))
        windows, starts = extract_windows(s, w, stride)
        covered = np.zeros(n, dtype=bool)
        for st in starts:
            covered[st : st + w] = True
        assert covered.all()
        assert windows.shape == (len(starts), w, 2)
