"""File formats: QGSF field snapshots, trajectory and ensemble CSVs."""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .dynamics import TrajectoryRecord
from .ensemble import EnsembleStats

MAGIC = b"QGSF"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")

TRAJECTORY_COLUMNS = TrajectoryRecord.COLUMNS
ENSEMBLE_COLUMNS = ("t", "mean_l2", "var_l2", "ci_l2", "mean_sup", "var_sup", "ci_sup", "n_blowup")


class SnapshotFormatError(ValueError):
    pass


def encode_snapshot(coeffs: np.ndarray, t: float) -> bytes:
    """Little-endian header ``QGSF, version, M, N, t`` then ``M*N`` f64, ``m`` outer."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2:
        raise ValueError("snapshot needs a 2-D coefficient array")
    M, N = coeffs.shape
    return _HEADER.pack(MAGIC, VERSION, M, N, float(t)) + coeffs.astype("<f8").tobytes(order="C")


def decode_snapshot(data: bytes) -> tuple[np.ndarray, float]:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, version, M, N, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * M * N:
        raise SnapshotFormatError(f"expected {8 * M * N} payload bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(M, N).astype(float), t


def write_snapshot(path, coeffs: np.ndarray, t: float) -> None:
    Path(path).write_bytes(encode_snapshot(coeffs, t))


def read_snapshot(path) -> tuple[np.ndarray, float]:
    return decode_snapshot(Path(path).read_bytes())


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path, header: tuple[str, ...], rows, meta: list[str] | None) -> None:
    buf = io.StringIO()
    for line in meta or []:
        for part in str(line).splitlines():
            buf.write(f"# {part}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def write_trajectory_csv(path, rec: TrajectoryRecord, meta: list[str] | None = None) -> None:
    cols = rec.columns()
    _write_csv(path, TRAJECTORY_COLUMNS, zip(*(cols[c] for c in TRAJECTORY_COLUMNS)), meta)


def write_ensemble_csv(path, st: EnsembleStats, meta: list[str] | None = None) -> None:
    rows = zip(st.times, st.mean_l2, st.var_l2, st.ci_l2, st.mean_sup, st.var_sup, st.ci_sup,
               st.n_blowup)
    _write_csv(path, ENSEMBLE_COLUMNS, rows, meta)


def read_csv(path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Return the ``#`` metadata lines and the numeric columns of a CSV written here."""
    meta, body = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            meta.append(line[1:].strip())
        elif line:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    return meta, {name: data[:, i] for i, name in enumerate(header)}
