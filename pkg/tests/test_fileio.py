import numpy as np
import pytest
from numpy.testing import assert_array_equal

from conftest import random_complex
from equiproj import SteerableKernel, fileio
from equiproj.toy import HistoryRow, TrainConfig, init_params


class TestMatrixFormat:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        m = random_complex(rng, (5, 3))
        path = tmp_path / "m.bin"
        fileio.write_complex_matrix(path, m)
        assert_array_equal(fileio.read_complex_matrix(path), m)

    def test_little_endian_layout(self, tmp_path):
        m = np.array([[1.0 + 2.0j]])
        path = tmp_path / "m.bin"
        fileio.write_complex_matrix(path, m)
        raw = path.read_bytes()
        assert np.frombuffer(raw[:16], dtype="<i8").tolist() == [1, 1]
        assert np.frombuffer(raw[16:], dtype="<f8").tolist() == [1.0, 2.0]

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        fileio.write_complex_matrix(path, np.eye(3, dtype=complex))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError):
            fileio.read_complex_matrix(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        fileio.write_complex_matrix(path, np.eye(2, dtype=complex))
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(ValueError):
            fileio.read_complex_matrix(path)

    def test_bad_shape_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(np.array([-1, 4], dtype="<i8").tobytes())
        with pytest.raises(ValueError):
            fileio.read_complex_matrix(path)


class TestKernelFormat:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        k = SteerableKernel(rng.normal(size=(2, 3, 4, 4, 5, 5)))
        path = tmp_path / "k.bin"
        fileio.write_kernel(path, k)
        assert_array_equal(fileio.read_kernel(path).values, k.values)

    def test_header_is_six_ints(self, tmp_path):
        k = SteerableKernel(np.zeros((1, 2, 4, 4, 3, 3)))
        path = tmp_path / "k.bin"
        fileio.write_kernel(path, k)
        header = np.frombuffer(path.read_bytes()[:48], dtype="<i8")
        assert header.tolist() == [1, 2, 4, 4, 3, 3]


class TestParamsFormat:
    def test_round_trip(self, tmp_path):
        params = init_params(TrainConfig(seed=5, hidden=4))
        path = tmp_path / "p.bin"
        fileio.write_params(path, params)
        loaded = fileio.read_params(path)
        assert_array_equal(loaded.w1, params.w1)
        assert_array_equal(loaded.w2, params.w2)
        assert_array_equal(loaded.w_final, params.w_final)
        assert loaded.bias == params.bias
        assert loaded.max_degree == params.max_degree
        assert loaded.channels == params.channels
        assert loaded.hidden == params.hidden
        assert loaded.radial_width == params.radial_width

    def test_version_mismatch_rejected(self, tmp_path):
        params = init_params(TrainConfig(seed=6, hidden=3))
        path = tmp_path / "p.bin"
        fileio.write_params(path, params)
        raw = bytearray(path.read_bytes())
        raw[:8] = np.array([99], dtype="<i8").tobytes()
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError):
            fileio.read_params(path)


class TestHistoryCsv:
    def test_round_trip_with_missing_defect(self):
        history = [
            HistoryRow(0, 0.5, 0.1, 0.2, 0.9, 12.5),
            HistoryRow(1, 0.4, 0.1, 0.2, 0.95, None),
        ]
        text = fileio.history_csv_text(history)
        parsed = fileio.parse_history_csv(text)
        assert parsed == history

    def test_floats_round_trip_exactly(self):
        value = 0.1 + 0.2  # not exactly representable in decimal
        history = [HistoryRow(0, value, 0.0, 0.0, 1 / 3, None)]
        parsed = fileio.parse_history_csv(fileio.history_csv_text(history))
        assert parsed[0].task_loss == value
        assert parsed[0].test_accuracy == 1 / 3

    def test_malformed_header_rejected(self):
        with pytest.raises(ValueError):
            fileio.parse_history_csv("a,b,c\n1,2,3\n")
