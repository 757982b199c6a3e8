"""Flat binary interchange for feature matrices.

A feature matrix travels as a minimal NPY version 1.0 file (little-endian
float32 or float64, C order, 2-D) with row identifiers in a plain-text
sidecar next to it. The reader is deliberately strict: anything outside
that envelope is rejected rather than guessed at, and the writer only
produces files the reader accepts.
"""

from __future__ import annotations

import ast
import csv
import dataclasses
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .._validation import check_ids
from ..errors import FormatError, ValidationError

FEATURE_KINDS = ("pixel", "bow", "cnn-fc6", "cnn-fc7", "cnn-fc8", "generic")

_MAGIC = b"\x93NUMPY"
_VERSION = bytes((1, 0))
_DESCRS = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}
# Total header block (magic through trailing newline) pads to this multiple.
_ALIGN = 64


@dataclasses.dataclass(frozen=True)
class FeatureMatrix:
    """A batch of feature vectors with stable row identifiers.

    Attributes:
        ids: One unique, non-empty string per row.
        data: Array of shape (n_items, n_features), finite throughout.
        feature_kind: One of ``FEATURE_KINDS``; tells downstream stages
            how the vectors were produced (and whether they can be
            rendered as images).
    """

    ids: tuple[str, ...]
    data: np.ndarray
    feature_kind: str = "generic"

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValidationError(f"data must be a non-empty 2-D array, got shape {data.shape}")
        if not np.issubdtype(data.dtype, np.floating):
            raise ValidationError(f"data must be floating point, got dtype {data.dtype}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("data contains non-finite values")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValidationError(f"unknown feature kind: {self.feature_kind!r}")
        object.__setattr__(self, "ids", check_ids(self.ids, data.shape[0]))
        object.__setattr__(self, "data", data)

    @property
    def n_items(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write ``payload`` to ``path`` via a same-directory temp file + rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _build_header(shape: tuple[int, int], descr: str) -> bytes:
    header = "{'descr': '%s', 'fortran_order': False, 'shape': (%d, %d), }" % (
        descr,
        shape[0],
        shape[1],
    )
    raw = header.encode("latin1")
    prefix = len(_MAGIC) + len(_VERSION) + 2
    total = prefix + len(raw) + 1
    pad = (_ALIGN - total % _ALIGN) % _ALIGN
    raw = raw + b" " * pad + b"\n"
    return _MAGIC + _VERSION + struct.pack("<H", len(raw)) + raw


def write_npy(path, array: np.ndarray) -> None:
    """Serialize a 2-D float32/float64 array as NPY version 1.0.

    The array is written little-endian in C order; the header is padded
    so the payload starts on a 64-byte boundary. The write is atomic.
    """
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise ValidationError(f"only 2-D arrays are written, got shape {arr.shape}")
    if arr.dtype == np.float32:
        descr = "<f4"
    elif arr.dtype == np.float64:
        descr = "<f8"
    else:
        raise ValidationError(f"only float32/float64 arrays are written, got {arr.dtype}")
    out = np.ascontiguousarray(arr, dtype=np.dtype(descr))
    payload = _build_header(out.shape, descr) + out.tobytes(order="C")
    atomic_write_bytes(path, payload)


def read_npy(path) -> np.ndarray:
    """Parse an NPY version 1.0 file into a 2-D float array.

    Rejects wrong magic, any version other than 1.0, Fortran order,
    non-2-D shapes, dtypes other than little-endian float32/float64, and
    payloads whose byte count disagrees with the header.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    if len(blob) < len(_MAGIC) + 2 + 2:
        raise FormatError(f"{path}: truncated header")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not an NPY file")
    major, minor = blob[6], blob[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"{path}: unsupported NPY version {major}.{minor}")
    (header_len,) = struct.unpack("<H", blob[8:10])
    header_end = 10 + header_len
    if len(blob) < header_end:
        raise FormatError(f"{path}: truncated header")
    try:
        header = ast.literal_eval(blob[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: unparseable header") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not a dict")
    try:
        descr = header["descr"]
        fortran = header["fortran_order"]
        shape = header["shape"]
    except KeyError as exc:
        raise FormatError(f"{path}: header missing key {exc}") from exc
    if descr not in _DESCRS:
        raise FormatError(f"{path}: unsupported dtype {descr!r} (need <f4 or <f8)")
    if fortran is not False:
        raise FormatError(f"{path}: Fortran-ordered files are not supported")
    if (
        not isinstance(shape, tuple)
        or len(shape) != 2
        or not all(isinstance(v, int) and v >= 0 for v in shape)
    ):
        raise FormatError(f"{path}: shape must be a 2-D tuple, got {shape!r}")
    dtype = _DESCRS[descr]
    expected = shape[0] * shape[1] * dtype.itemsize
    body = blob[header_end:]
    if len(body) != expected:
        raise FormatError(
            f"{path}: payload is {len(body)} bytes, header implies {expected}"
        )
    data = np.frombuffer(body, dtype=dtype).reshape(shape)
    return np.ascontiguousarray(data)


def default_ids_path(path) -> Path:
    """Sidecar path for a feature file: same name with an .ids.txt suffix."""
    return Path(path).with_suffix(".ids.txt")


def write_ids(path, ids) -> None:
    """Write identifiers one per line, UTF-8, each line newline-terminated."""
    items = tuple(ids)
    items = check_ids(items, len(items))
    text = "".join(f"{item}\n" for item in items)
    atomic_write_bytes(path, text.encode("utf-8"))


def read_ids(path) -> tuple[str, ...]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: no identifiers")
    try:
        return check_ids(tuple(lines), len(lines))
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_npy(matrix: FeatureMatrix, path, ids_path=None) -> None:
    """Write a feature matrix and its identifier sidecar.

    The array is stored as float32 when it already is float32, float64
    otherwise. ``ids_path`` defaults to the .ids.txt sidecar next to
    ``path``.
    """
    path = Path(path)
    if ids_path is None:
        ids_path = default_ids_path(path)
    data = matrix.data
    if data.dtype != np.float32:
        data = data.astype(np.float64, copy=False)
    write_npy(path, data)
    write_ids(ids_path, matrix.ids)


def load_npy(path, ids_path=None, feature_kind: str = "generic") -> FeatureMatrix:
    """Read a feature matrix and its identifier sidecar.

    Row count and identifier count must agree; the array must be
    non-empty and finite (NaN or infinity in a stored file is a format
    problem, not a validation problem).
    """
    path = Path(path)
    if ids_path is None:
        ids_path = default_ids_path(path)
    data = read_npy(path)
    ids = read_ids(ids_path)
    if data.shape[0] != len(ids):
        raise FormatError(
            f"{path}: {data.shape[0]} rows but {len(ids)} ids in {ids_path}"
        )
    try:
        return FeatureMatrix(ids=ids, data=data.astype(np.float64), feature_kind=feature_kind)
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_csv(path, feature_kind: str = "generic") -> FeatureMatrix:
    """Read a feature matrix from CSV: header ``id,f0,f1,...``, one row per item.

    Every data row must have the same number of columns as the header and
    numeric entries throughout.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8") from exc
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0] != "id":
        raise FormatError(f"{path}: header must be 'id,<feature columns...>'")
    width = len(header)
    ids = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise FormatError(
                f"{path}: line {lineno} has {len(row)} columns, expected {width}"
            )
        ids.append(row[0])
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError:
            raise FormatError(f"{path}: line {lineno} has a non-numeric cell") from None
    if not ids:
        raise FormatError(f"{path}: no data rows")
    data = np.asarray(values, dtype=np.float64)
    try:
        return FeatureMatrix(ids=tuple(ids), data=data, feature_kind=feature_kind)
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc
