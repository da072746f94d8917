import numpy as np
import pytest

import evspike as ev
from evspike import baselines
from evspike.dataset import load_sample_csv, write_sample_csv
from evspike.events_io import (
    read_events_binary,
    read_events_text,
    write_events_binary,
    write_events_text,
)


class TestSynth:
    def test_seeded_generation_is_byte_identical(self, tmp_path):
        a = ev.synth_dataset(3, 5, seed=123)
        b = ev.synth_dataset(3, 5, seed=123)
        pa, pb = tmp_path / "a.evd", tmp_path / "b.evd"
        ev.save_dataset(a, pa)
        ev.save_dataset(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_window_gives_54_frames_at_40hz(self):
        ds = ev.synth_dataset(2, 2, seed=0)
        assert ds.samples[0].n_frames == 54
        assert ds.samples[0].duration_s == pytest.approx(1.35)

    def test_values_in_8bit_range_and_rest_start(self):
        ds = ev.synth_dataset(6, 10, seed=4)
        for s in ds.samples:
            assert s.taxel_values.min() >= 0
            assert s.taxel_values.max() <= 255
            assert np.all(s.taxel_values[:, 0] == 0)

    def test_disjoint_taxel_classes_are_linearly_separable(self):
        ds = ev.synth_dataset(2, 25, seed=9)
        result = baselines.cross_validate(
            *baselines.feature_matrix(ds, "collapsed"), n_folds=5, seed=0
        )
        assert result.mean_accuracy == 1.0

    def test_blank_class_appended(self):
        ds = ev.synth_dataset(3, 4, seed=2, include_blank_class=True)
        assert ds.n_classes == 4
        assert ds.class_names[-1] == "none"
        blanks = [s for s in ds.samples if s.label == 3]
        assert len(blanks) == 4
        # faint flutter only: far below real contact amplitudes
        assert max(s.taxel_values.max() for s in blanks) <= 32


class TestContainer:
    def test_roundtrip(self, tmp_path):
        ds = ev.synth_dataset(3, 4, seed=5)
        path = tmp_path / "data.evd"
        ev.save_dataset(ds, path)
        loaded = ev.load_dataset(path)
        assert loaded.class_names == ds.class_names
        assert len(loaded) == len(ds)
        assert loaded.sampling_rate_hz == ds.sampling_rate_hz
        for a, b in zip(loaded.samples, ds.samples):
            assert a.label == b.label
            assert np.array_equal(a.taxel_values, b.taxel_values)
        assert loaded.provenance["sha256"]

    def test_checksum_validation(self, tmp_path):
        ds = ev.synth_dataset(2, 2, seed=5)
        path = tmp_path / "data.evd"
        ev.save_dataset(ds, path)
        with pytest.raises(ValueError, match="checksum"):
            ev.load_dataset(path, expected_sha256="0" * 64)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.evd"
        path.write_bytes(b"")
        with pytest.raises(ValueError):
            ev.load_dataset(path)

    def test_truncated_file_rejected(self, tmp_path):
        ds = ev.synth_dataset(2, 2, seed=5)
        path = tmp_path / "data.evd"
        ev.save_dataset(ds, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 10])
        with pytest.raises(ValueError):
            ev.load_dataset(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bogus.evd"
        path.write_bytes(b"NOTADATA" + b"\x00" * 50)
        with pytest.raises(ValueError, match="container"):
            ev.load_dataset(path)


class TestCsvAdapter:
    def test_roundtrip_single_sample(self, tmp_path):
        rng = np.random.default_rng(0)
        seq = ev.FrameSequence(rng.integers(0, 255, (4, 9)).astype(np.uint8), 40.0, 3)
        path = tmp_path / "sample.csv"
        write_sample_csv(seq, path)
        loaded = load_sample_csv(path, 40.0, label=3)
        assert np.array_equal(loaded.taxel_values, seq.taxel_values)
        assert loaded.label == 3

    def test_rows_are_frames_columns_are_taxels(self, tmp_path):
        path = tmp_path / "sample.csv"
        path.write_text("1,2,3\n4,5,6\n")
        loaded = load_sample_csv(path, 40.0)
        assert loaded.n_taxels == 3
        assert loaded.n_frames == 2
        assert loaded.taxel_values[2, 1] == 6

    def test_empty_csv_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            load_sample_csv(path, 40.0)


class TestEventStreamIo:
    def _stream(self):
        seq = ev.FrameSequence(
            np.array([[0, 9, 3, 7], [0, 0, 5, 5]], dtype=np.float64), 40.0, 0
        )
        return ev.encode(seq, ev.EncoderConfig(threshold=2.0))

    def test_text_roundtrip(self, tmp_path):
        stream = self._stream()
        path = tmp_path / "events.txt"
        write_events_text(stream, path)
        loaded = read_events_text(path)
        assert np.array_equal(loaded.times_s, stream.times_s)
        assert np.array_equal(loaded.taxels, stream.taxels)
        assert np.array_equal(loaded.polarities, stream.polarities)
        assert loaded.duration_s == stream.duration_s

    def test_text_format_is_line_oriented(self, tmp_path):
        stream = self._stream()
        path = tmp_path / "events.txt"
        write_events_text(stream, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == len(stream) + 1  # header plus one line per event
        first = lines[1].split()
        assert len(first) == 3
        assert first[2] in ("ON", "OFF")

    def test_binary_roundtrip(self, tmp_path):
        stream = self._stream()
        path = tmp_path / "events.evt"
        write_events_binary(stream, path)
        loaded = read_events_binary(path)
        assert loaded.times_s.tobytes() == stream.times_s.tobytes()
        assert np.array_equal(loaded.taxels, stream.taxels)
        assert np.array_equal(loaded.polarities, stream.polarities)

    def test_malformed_text_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# duration_s=1.0 n_taxels=2\n0.5 0 SIDEWAYS\n")
        with pytest.raises(ValueError, match="malformed"):
            read_events_text(path)

    def test_binary_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.evt"
        path.write_bytes(b"WRONG!!!" + b"\x00" * 20)
        with pytest.raises(ValueError):
            read_events_binary(path)


class TestValidation:
    def test_out_of_range_values_rejected(self):
        with pytest.raises(ValueError, match="8-bit"):
            ev.FrameSequence(np.array([[300.0]]), 40.0, 0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            ev.FrameSequence(np.array([[np.inf]]), 40.0, 0)

    def test_inconsistent_taxels_rejected(self):
        a = ev.FrameSequence(np.zeros((2, 4)), 40.0, 0)
        b = ev.FrameSequence(np.zeros((3, 4)), 40.0, 0)
        with pytest.raises(ValueError, match="taxel"):
            ev.Dataset(samples=[a, b], class_names=["x"])

    def test_label_outside_class_list_rejected(self):
        a = ev.FrameSequence(np.zeros((2, 4)), 40.0, 5)
        with pytest.raises(ValueError, match="class list"):
            ev.Dataset(samples=[a], class_names=["only"])
