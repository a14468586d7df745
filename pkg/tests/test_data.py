"""Ingestion, framing, and windowing."""

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patn import data as data_mod
from patn.data import (
    FrameConfig,
    SensorSequence,
    ShortSequenceWarning,
    WindowPair,
    compute_channel_stats,
    expand_frames,
    load_motionsense,
    make_window_pairs,
    read_stream_csv,
    split_trials,
    to_frames,
    write_stream_csv,
)
from patn.errors import ConfigurationError, IngestionError, SchemaError


def _seq(values, rate=50.0, **kw):
    return SensorSequence(values=np.asarray(values, float), sample_rate_hz=rate, **kw)


class TestSensorSequence:
    def test_accepts_valid_block(self):
        s = _seq(np.zeros((10, 6)))
        assert s.n_frames == 10 and s.n_channels == 6
        assert s.duration_sec == pytest.approx(0.2)

    def test_rejects_nan(self):
        bad = np.zeros((4, 6))
        bad[2, 3] = np.nan
        with pytest.raises(SchemaError):
            _seq(bad)

    def test_rejects_wrong_channel_count(self):
        with pytest.raises(SchemaError):
            _seq(np.zeros((4, 5)))

    def test_rejects_bad_rate(self):
        with pytest.raises(SchemaError):
            _seq(np.zeros((4, 6)), rate=0.0)

    def test_rejects_1d(self):
        with pytest.raises(SchemaError):
            _seq(np.zeros(12))


class TestMotionSenseIngestion:
    def test_load_and_split(self, corpus_root):
        train, test = load_motionsense(corpus_root, split_ratio=0.75, seed=3)
        total = len(train) + len(test)
        assert total == 8 * 6  # subjects x activities, one trial each
        assert len(train) == round(0.75 * total)
        for s in train + test:
            assert s.values.shape[1] == 6
            assert s.sensitive_label in ("male", "female")
            assert s.activity_label in (
                "walking", "jogging", "upstairs", "downstairs", "sitting",
                "standing")

    def test_split_deterministic(self, corpus_root):
        a = load_motionsense(corpus_root, split_ratio=0.75, seed=3)
        b = load_motionsense(corpus_root, split_ratio=0.75, seed=3)
        assert [s.subject_id for s in a[0]] == [s.subject_id for s in b[0]]

    def test_subject_gender_consistent(self, corpus_root):
        train, test = load_motionsense(corpus_root, split_ratio=0.5, seed=0)
        by_subject = {}
        for s in train + test:
            by_subject.setdefault(s.subject_id, set()).add(s.sensitive_label)
        assert all(len(v) == 1 for v in by_subject.values())

    def test_missing_root(self, tmp_path):
        with pytest.raises(IngestionError):
            load_motionsense(tmp_path / "nope", split_ratio=0.5)

    def test_bad_ratio(self, corpus_root):
        with pytest.raises(ConfigurationError):
            load_motionsense(corpus_root, split_ratio=1.5)

    def test_split_trials_partition(self):
        seqs = [_seq(np.zeros((4, 6)), subject_id=str(i)) for i in range(10)]
        train, test = split_trials(seqs, 0.7, seed=1)
        assert len(train) == 7 and len(test) == 3
        ids = sorted(s.subject_id for s in train + test)
        assert ids == sorted(str(i) for i in range(10))


class TestFraming:
    def test_mean_pooling_hand_case(self):
        # 4 samples at 2 Hz, 1-second frames -> pairs averaged
        v = np.arange(24, dtype=float).reshape(4, 6)
        s = _seq(v, rate=2.0)
        f = to_frames(s, FrameConfig(frame_sec=1.0))
        assert f.values.shape == (2, 6)
        np.testing.assert_allclose(f.values[0], (v[0] + v[1]) / 2)
        np.testing.assert_allclose(f.values[1], (v[2] + v[3]) / 2)
        assert f.sample_rate_hz == pytest.approx(1.0)

    def test_ragged_tail_dropped(self):
        s = _seq(np.ones((7, 6)), rate=2.0)
        f = to_frames(s, FrameConfig(frame_sec=1.0))
        assert f.values.shape[0] == 3

    def test_passthrough(self):
        s = _seq(np.random.default_rng(0).normal(size=(8, 6)), rate=2.0)
        f = to_frames(s, FrameConfig(frame_sec=0.5, pooling="passthrough"))
        np.testing.assert_array_equal(f.values, s.values)

    @given(n_frames=st.integers(1, 40), spf=st.integers(1, 8))
    @settings(max_examples=40, deadline=None)
    def test_expand_then_pool_recovers(self, n_frames, spf):
        rng = np.random.default_rng(n_frames * 100 + spf)
        block = rng.normal(size=(n_frames, 6))
        raw = expand_frames(block, spf)
        assert raw.shape == (n_frames * spf, 6)
        s = _seq(raw, rate=float(spf))
        back = to_frames(s, FrameConfig(frame_sec=1.0))
        np.testing.assert_allclose(back.values, block, atol=1e-12)


class TestStreamCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        s = _seq(rng.normal(size=(40, 6)))
        p = tmp_path / "stream.csv"
        write_stream_csv(s, p)
        back = read_stream_csv(p)
        np.testing.assert_allclose(back.values, s.values, atol=1e-7)
        assert back.sample_rate_hz == s.sample_rate_hz

    def test_missing_column_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time,acc_x,acc_y\n0,1,2\n")
        with pytest.raises(SchemaError):
            read_stream_csv(p)


class TestWindowPairs:
    def test_adjacency_and_bookkeeping(self, framed_train):
        pairs = make_window_pairs(framed_train, 30, 10, 5)
        assert pairs
        for p in pairs[:50]:
            assert p.history.shape == (30, 6)
            assert p.future.shape == (10, 6)
        # pairs from one source at starts differing by T_out chain exactly
        by_src = {}
        for p in pairs:
            by_src[(p.source_id, p.start)] = p
        chained = 0
        for (src, start), p in by_src.items():
            nxt = by_src.get((src, start + 10))
            if nxt is not None:
                np.testing.assert_array_equal(nxt.history[-10:], p.future)
                chained += 1
        assert chained > 0

    def test_window_content_matches_source(self, framed_train):
        pairs = make_window_pairs(framed_train[:1], 30, 10, 7)
        src = framed_train[0].values
        for p in pairs:
            np.testing.assert_array_equal(p.history, src[p.start:p.start + 30])
            np.testing.assert_array_equal(p.future, src[p.start + 30:p.start + 40])

    @given(n=st.integers(1, 220), stride=st.integers(1, 11))
    @settings(max_examples=60, deadline=None)
    def test_count_formula(self, n, stride):
        t_in, t_out = 12, 4
        s = _seq(np.zeros((n, 6)), rate=2.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ShortSequenceWarning)
            pairs = make_window_pairs([s], t_in, t_out, stride)
        span = t_in + t_out
        expected = 0 if n < span else (n - span) // stride + 1
        assert len(pairs) == expected

    def test_short_sequence_warns(self):
        s = _seq(np.zeros((5, 6)), rate=2.0)
        with pytest.warns(ShortSequenceWarning):
            pairs = make_window_pairs([s], 30, 10, 5)
        assert pairs == []

    def test_invalid_params(self, framed_train):
        with pytest.raises(ConfigurationError):
            make_window_pairs(framed_train, 0, 10, 5)
        with pytest.raises(ConfigurationError):
            make_window_pairs(framed_train, 30, 0, 5)
        with pytest.raises(ConfigurationError):
            make_window_pairs(framed_train, 30, 10, 0)


class TestChannelStats:
    def test_hand_case(self):
        a = _seq(np.full((2, 6), 1.0), rate=2.0)
        b = _seq(np.full((2, 6), 3.0), rate=2.0)
        mu, sigma = compute_channel_stats([a, b])
        np.testing.assert_allclose(mu, np.full(6, 2.0))
        np.testing.assert_allclose(sigma, np.full(6, 1.0))  # population std

    def test_empty_rejected(self):
        from patn.errors import StatisticsError
        with pytest.raises(StatisticsError):
            compute_channel_stats([])


class TestSyntheticCorpus:
    def test_layout(self, corpus_root):
        assert (corpus_root / "data_subjects_info.csv").exists()
        trials = list((corpus_root / "A_DeviceMotion_data").iterdir())
        assert len(trials) == 6  # one folder per activity

    def test_group_balance(self, corpus_root):
        train, test = load_motionsense(corpus_root, split_ratio=0.5, seed=0)
        labels = {s.subject_id: s.sensitive_label for s in train + test}
        counts = {v: list(labels.values()).count(v) for v in set(labels.values())}
        assert set(counts) == {"male", "female"}
        assert abs(counts["male"] - counts["female"]) <= 1

    def test_static_recordings_are_quiet(self):
        static = data_mod.synthesize_static_recordings(2, 10.0, seed=0)
        for s in static:
            assert s.values.std(axis=0).max() < 0.5
