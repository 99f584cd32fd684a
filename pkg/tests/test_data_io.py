import numpy as np
import pytest

from esn_affect import data_io
from esn_affect.data_io import (
    CHANNELS,
    N_CHANNELS,
    LabelRecord,
    SchemaError,
    UtteranceSeries,
    build_manifest,
    generate_synthetic_corpus,
    load_labels,
    load_utterance,
    synthetic_targets,
    write_labels,
    write_utterance,
)


def test_channel_schema():
    assert N_CHANNELS == 23
    assert CHANNELS[:3] == ("AU1", "AU2", "AU4")
    assert CHANNELS[19] == "AU28"
    assert CHANNELS[20:] == ("neutral", "positive", "negative")


class TestUtterance:
    def test_zeros(self, tmp_path):
        p = tmp_path / "u1.csv"
        p.write_text(("," .join(["0"] * 23) + "\n") * 2)
        s = load_utterance(p)
        assert s.id == "u1"
        np.testing.assert_array_equal(s.values, np.zeros((2, 23)))

    def test_wrong_columns(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(",".join(["0"] * 22) + "\n")
        with pytest.raises(SchemaError, match="row 1 has 22 columns, expected 23"):
            load_utterance(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "bad.csv"
        rows = [["0"] * 23, ["0"] * 23]
        rows[1][4] = "abc"
        p.write_text("\n".join(",".join(r) for r in rows) + "\n")
        with pytest.raises(SchemaError, match="row 2, column 5"):
            load_utterance(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            load_utterance(p)

    def test_nan_rejected(self, tmp_path):
        p = tmp_path / "nan.csv"
        p.write_text(",".join(["nan"] + ["0"] * 22) + "\n")
        with pytest.raises(SchemaError, match="non-finite"):
            load_utterance(p)

    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((17, 23)) * 10 ** rng.integers(-300, 300, size=(17, 23)).astype(float)
        s = UtteranceSeries("rt", v)
        back = load_utterance(write_utterance(s, tmp_path))
        assert back.values.tobytes() == s.values.tobytes()

    def test_construct_validation(self):
        with pytest.raises(SchemaError):
            UtteranceSeries("x", np.zeros((3, 22)))
        with pytest.raises(SchemaError):
            UtteranceSeries("x", np.zeros((0, 23)))


class TestLabels:
    def test_header_only(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("id,arousal,valence\n")
        assert load_labels(p) == []

    def test_row(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("id,arousal,valence\nu1,0.3,-0.5\n")
        assert load_labels(p) == [LabelRecord("u1", 0.3, -0.5)]

    def test_column_order_free(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("valence,id,arousal\n-0.5,u1,0.3\n")
        assert load_labels(p) == [LabelRecord("u1", 0.3, -0.5)]

    def test_duplicate(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("id,arousal,valence\nu1,0.3,-0.5\nu1,0.1,0.1\n")
        with pytest.raises(SchemaError, match="duplicate id 'u1'"):
            load_labels(p)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("id,arousal\nu1,0.3\n")
        with pytest.raises(SchemaError, match="valence"):
            load_labels(p)

    def test_roundtrip(self, tmp_path):
        recs = [LabelRecord("a", 0.1 + 0.2, -1 / 3), LabelRecord("b", 1e-300, 5.0)]
        assert load_labels(write_labels(recs, tmp_path / "l.csv")) == recs


class TestManifest:
    def test_join(self, tmp_path):
        s, lab = generate_synthetic_corpus(3, (5, 5), seed=1)
        feat, labels = data_io.write_corpus(s, lab[:2], tmp_path)
        m = build_manifest(feat, labels)
        assert m.ids == [x.id for x in s]
        assert [e.has_label for e in m.entries] == [True, True, False]
        assert len(set(m.ids)) == len(m.ids)

    def test_orphan_label(self, tmp_path):
        s, lab = generate_synthetic_corpus(2, (5, 5), seed=1)
        feat, _ = data_io.write_corpus(s, lab, tmp_path)
        labels = write_labels(lab + [LabelRecord("ghost", 0, 0)], tmp_path / "l2.csv")
        with pytest.raises(SchemaError, match="ghost"):
            build_manifest(feat, labels)

    def test_missing_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            build_manifest(tmp_path / "nope")


class TestSynthetic:
    def test_deterministic(self):
        a = generate_synthetic_corpus(1, (10, 40), seed=5)
        b = generate_synthetic_corpus(1, (10, 40), seed=5)
        assert a[1] == b[1]
        assert a[0][0].values.tobytes() == b[0][0].values.tobytes()

    def test_fixed_length(self):
        series, _ = generate_synthetic_corpus(8, (30, 30), seed=0)
        assert all(s.frames == 30 for s in series)

    def test_range_and_ids(self):
        series, labels = generate_synthetic_corpus(12, (20, 25), seed=0)
        assert len({s.id for s in series}) == 12
        assert [r.id for r in labels] == [s.id for s in series]
        for s in series:
            assert 20 <= s.frames <= 25
            assert np.all((s.values > 0) & (s.values < 1))

    def test_hand_computed_functional(self):
        v = np.full((4, 23), 0.5)
        v[:, 0:5] = [0.2, 0.4, 0.6, 0.8, 1.0]
        v[:, 20] = 0.9
        v[:, 22] = 0.25
        a, val = synthetic_targets(v)
        assert a == pytest.approx(0.6, abs=1e-15)
        assert val == pytest.approx(0.65, abs=1e-15)

    def test_labels_reproducible_noise_free(self):
        series, labels = generate_synthetic_corpus(20, (10, 50), seed=3, noise_sigma=0.0)
        for s, r in zip(series, labels):
            v = s.values
            assert r.arousal == pytest.approx(v[:, :5].mean(), abs=1e-12)
            assert r.valence == pytest.approx(v[:, 20].mean() - v[:, 22].mean(), abs=1e-12)

    def test_labels_vary(self):
        _, labels = generate_synthetic_corpus(50, (60, 120), seed=0)
        assert np.std([r.arousal for r in labels]) > 0.05
        assert np.std([r.valence for r in labels]) > 0.1

    @pytest.mark.parametrize("args", [(0, (1, 2)), (1, (0, 2)), (1, (3, 2))])
    def test_bad_args(self, args):
        with pytest.raises(ValueError):
            generate_synthetic_corpus(*args)


def test_atomic_write_leaves_no_temp(tmp_path):
    data_io.atomic_write_text(tmp_path / "x.txt", "hello")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
