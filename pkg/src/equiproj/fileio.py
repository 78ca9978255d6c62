"""Binary and CSV file formats used by the command-line tools.

All binary payloads are little-endian: shape headers are int64 and values
are 8-byte floats (complex matrices store interleaved re/im pairs,
row-major). CSV output is RFC-4180-style with '.' decimals and floats
rendered via repr() so that identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .projection import SteerableKernel
from .toy import HistoryRow, ToyModelParams

_INT = np.dtype("<i8")
_FLOAT = np.dtype("<f8")
PARAMS_FORMAT_VERSION = 1


def _read_ints(handle, count: int) -> np.ndarray:
    raw = handle.read(count * _INT.itemsize)
    if len(raw) != count * _INT.itemsize:
        raise ValueError("truncated header")
    return np.frombuffer(raw, dtype=_INT)


def _read_floats(handle, count: int) -> np.ndarray:
    raw = handle.read(count * _FLOAT.itemsize)
    if len(raw) != count * _FLOAT.itemsize:
        raise ValueError("truncated payload")
    return np.frombuffer(raw, dtype=_FLOAT)


def write_complex_matrix(path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ValueError("matrix file format requires a 2-D array")
    with open(path, "wb") as handle:
        handle.write(np.array(matrix.shape, dtype=_INT).tobytes())
        pairs = np.empty(matrix.shape + (2,), dtype=_FLOAT)
        pairs[..., 0] = matrix.real
        pairs[..., 1] = matrix.imag
        handle.write(pairs.tobytes())


def read_complex_matrix(path) -> np.ndarray:
    with open(path, "rb") as handle:
        rows, cols = (int(x) for x in _read_ints(handle, 2))
        if rows < 1 or cols < 1:
            raise ValueError(f"invalid matrix shape ({rows}, {cols})")
        flat = _read_floats(handle, rows * cols * 2)
        if handle.read(1):
            raise ValueError("trailing bytes after matrix payload")
    pairs = flat.reshape(rows, cols, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex128)


def write_kernel(path, kernel: SteerableKernel) -> None:
    with open(path, "wb") as handle:
        handle.write(np.array(kernel.values.shape, dtype=_INT).tobytes())
        handle.write(kernel.values.astype(_FLOAT).tobytes())


def read_kernel(path) -> SteerableKernel:
    with open(path, "rb") as handle:
        shape = tuple(int(x) for x in _read_ints(handle, 6))
        count = int(np.prod(shape))
        if count < 1:
            raise ValueError(f"invalid kernel shape {shape}")
        values = _read_floats(handle, count).reshape(shape)
        if handle.read(1):
            raise ValueError("trailing bytes after kernel payload")
    return SteerableKernel(values.copy())


def write_params(path, params: ToyModelParams) -> None:
    arrays = [
        np.atleast_1d(np.asarray(a, dtype=_FLOAT))
        for a in (
            params.radial_centers,
            params.radial_width,
            params.w1.real,
            params.w1.imag,
            params.w2.real,
            params.w2.imag,
            params.w_final,
            params.bias,
        )
    ]
    with open(path, "wb") as handle:
        header = [
            PARAMS_FORMAT_VERSION,
            params.max_degree,
            params.channels,
            params.hidden,
            len(arrays),
        ]
        handle.write(np.array(header, dtype=_INT).tobytes())
        for a in arrays:
            handle.write(np.array([a.ndim, *a.shape], dtype=_INT).tobytes())
        for a in arrays:
            handle.write(np.ascontiguousarray(a).tobytes())


def read_params(path) -> ToyModelParams:
    with open(path, "rb") as handle:
        version, max_degree, channels, hidden, n_arrays = (
            int(x) for x in _read_ints(handle, 5)
        )
        if version != PARAMS_FORMAT_VERSION:
            raise ValueError(f"unsupported params format version {version}")
        shapes = []
        for _ in range(n_arrays):
            ndim = int(_read_ints(handle, 1)[0])
            shapes.append(tuple(int(x) for x in _read_ints(handle, ndim)))
        arrays = [
            _read_floats(handle, int(np.prod(s))).reshape(s) for s in shapes
        ]
        if handle.read(1):
            raise ValueError("trailing bytes after params payload")
    centers, width, w1r, w1i, w2r, w2i, w_final, bias = arrays
    return ToyModelParams(
        radial_centers=centers.copy(),
        radial_width=float(width[0]),
        max_degree=max_degree,
        channels=channels,
        hidden=hidden,
        w1=w1r + 1j * w1i,
        w2=w2r + 1j * w2i,
        w_final=w_final.copy(),
        bias=float(bias[0]),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


HISTORY_COLUMNS = (
    "epoch",
    "task_loss",
    "penalty_g",
    "penalty_perp",
    "test_accuracy",
    "empirical_defect",
)


def history_csv_text(history) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTORY_COLUMNS)
    for row in history:
        writer.writerow(
            [
                row.epoch,
                _fmt(row.task_loss),
                _fmt(row.penalty_g),
                _fmt(row.penalty_perp),
                _fmt(row.test_accuracy),
                _fmt(row.empirical_defect),
            ]
        )
    return buf.getvalue()


def parse_history_csv(text: str):
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(rows[0]) != HISTORY_COLUMNS:
        raise ValueError("malformed history CSV header")
    history = []
    for row in rows[1:]:
        history.append(
            HistoryRow(
                epoch=int(row[0]),
                task_loss=float(row[1]),
                penalty_g=float(row[2]),
                penalty_perp=float(row[3]),
                test_accuracy=float(row[4]),
                empirical_defect=float(row[5]) if row[5] else None,
            )
        )
    return history


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")
