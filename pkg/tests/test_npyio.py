from __future__ import annotations

import struct

import numpy as np
import pytest

from demud import FeatureMatrix, FormatError, ValidationError, load_csv, load_npy, save_npy
from demud.features.npyio import default_ids_path, read_ids, read_npy, write_ids, write_npy


def _hand_built_npy(shape, descr, values, fortran=False, version=(1, 0)):
    """Assemble NPY bytes independently of the library's writer."""
    header = "{'descr': '%s', 'fortran_order': %s, 'shape': (%d, %d), }" % (
        descr,
        fortran,
        shape[0],
        shape[1],
    )
    raw = header.encode("latin1")
    total = 10 + len(raw) + 1
    pad = (64 - total % 64) % 64
    raw += b" " * pad + b"\n"
    body = np.asarray(values, dtype=descr).tobytes(order="C")
    return b"\x93NUMPY" + bytes(version) + struct.pack("<H", len(raw)) + raw + body


# ----------------------------------------------------------------------
# raw array round trips


def test_round_trip_float64_bit_exact(tmp_path, rng):
    arr = rng.normal(size=(7, 3))
    path = tmp_path / "a.npy"
    write_npy(path, arr)
    back = read_npy(path)
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back, arr)
    # Writing the reread array reproduces the file byte for byte.
    path2 = tmp_path / "b.npy"
    write_npy(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_round_trip_float32(tmp_path, rng):
    arr = rng.normal(size=(4, 5)).astype(np.float32)
    path = tmp_path / "a.npy"
    write_npy(path, arr)
    back = read_npy(path)
    assert back.dtype == np.float32
    np.testing.assert_array_equal(back, arr)


def test_reads_hand_built_file(tmp_path):
    path = tmp_path / "hand.npy"
    path.write_bytes(_hand_built_npy((1, 2), "<f8", [[1.5, -2.0]]))
    arr = read_npy(path)
    np.testing.assert_array_equal(arr, [[1.5, -2.0]])


def test_interop_with_numpy_reader_and_writer(tmp_path, rng):
    ours = tmp_path / "ours.npy"
    arr = rng.normal(size=(3, 4))
    write_npy(ours, arr)
    np.testing.assert_array_equal(np.load(ours), arr)
    theirs = tmp_path / "theirs.npy"
    np.save(theirs, arr)
    np.testing.assert_array_equal(read_npy(theirs), arr)


def test_header_is_64_byte_aligned(tmp_path):
    path = tmp_path / "a.npy"
    write_npy(path, np.ones((2, 2)))
    blob = path.read_bytes()
    (header_len,) = struct.unpack("<H", blob[8:10])
    assert (10 + header_len) % 64 == 0
    assert blob[10 + header_len - 1 : 10 + header_len] == b"\n"


# ----------------------------------------------------------------------
# malformed rejections


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.npy"
    good = _hand_built_npy((1, 1), "<f8", [[1.0]])
    path.write_bytes(b"NOTNPY" + good[6:])
    with pytest.raises(FormatError, match="magic"):
        read_npy(path)


def test_rejects_other_versions(tmp_path):
    path = tmp_path / "v2.npy"
    path.write_bytes(_hand_built_npy((1, 1), "<f8", [[1.0]], version=(2, 0)))
    with pytest.raises(FormatError, match="version"):
        read_npy(path)


def test_rejects_fortran_order(tmp_path):
    path = tmp_path / "f.npy"
    path.write_bytes(_hand_built_npy((2, 2), "<f8", np.ones((2, 2)), fortran=True))
    with pytest.raises(FormatError, match="Fortran"):
        read_npy(path)


def test_rejects_non_2d_shape(tmp_path):
    path = tmp_path / "onedim.npy"
    np.save(path, np.ones(5))
    with pytest.raises(FormatError, match="2-D"):
        read_npy(path)


def test_rejects_unsupported_dtype(tmp_path):
    path = tmp_path / "ints.npy"
    np.save(path, np.ones((2, 2), dtype=np.int64))
    with pytest.raises(FormatError, match="dtype"):
        read_npy(path)


def test_rejects_truncated_payload(tmp_path):
    path = tmp_path / "trunc.npy"
    blob = _hand_built_npy((2, 2), "<f8", np.ones((2, 2)))
    path.write_bytes(blob[:-8])
    with pytest.raises(FormatError, match="payload"):
        read_npy(path)


def test_rejects_unparseable_header(tmp_path):
    path = tmp_path / "junk.npy"
    raw = b"not a dict" + b" " * 43 + b"\n"
    path.write_bytes(b"\x93NUMPY\x01\x00" + struct.pack("<H", len(raw)) + raw)
    with pytest.raises(FormatError, match="header"):
        read_npy(path)


# ----------------------------------------------------------------------
# id sidecars


def test_ids_round_trip(tmp_path):
    path = tmp_path / "x.ids.txt"
    write_ids(path, ["alpha", "beta", "gamma"])
    assert read_ids(path) == ("alpha", "beta", "gamma")
    # LF-terminated UTF-8, one per line, trailing newline included.
    assert path.read_bytes() == b"alpha\nbeta\ngamma\n"


def test_ids_unicode(tmp_path):
    path = tmp_path / "u.ids.txt"
    write_ids(path, ["søl", "画像"])
    assert read_ids(path) == ("søl", "画像")


def test_ids_duplicate_rejected(tmp_path):
    path = tmp_path / "d.ids.txt"
    path.write_text("a\nb\na\n")
    with pytest.raises(FormatError, match="duplicate"):
        read_ids(path)


def test_default_ids_path():
    assert default_ids_path("dir/feat.npy").name == "feat.ids.txt"


# ----------------------------------------------------------------------
# feature matrix level


def test_save_load_feature_matrix(tmp_path, rng):
    fm = FeatureMatrix(
        ids=("a", "b", "c"), data=rng.normal(size=(3, 4)), feature_kind="generic"
    )
    path = tmp_path / "feat.npy"
    save_npy(fm, path)
    assert (tmp_path / "feat.ids.txt").exists()
    back = load_npy(path)
    assert back.ids == fm.ids
    np.testing.assert_array_equal(back.data, fm.data)
    assert back.feature_kind == "generic"


def test_save_preserves_float32(tmp_path, rng):
    fm = FeatureMatrix(ids=("a",), data=rng.normal(size=(1, 3)).astype(np.float32))
    path = tmp_path / "f32.npy"
    save_npy(fm, path)
    assert read_npy(path).dtype == np.float32


def test_load_id_count_mismatch(tmp_path, rng):
    path = tmp_path / "feat.npy"
    write_npy(path, rng.normal(size=(3, 2)))
    write_ids(default_ids_path(path), ["only", "two"])
    with pytest.raises(FormatError, match="ids"):
        load_npy(path)


def test_load_rejects_stored_nan(tmp_path):
    path = tmp_path / "nan.npy"
    arr = np.array([[1.0, np.nan]])
    # Bypass the library writer, which would refuse the NaN.
    path.write_bytes(_hand_built_npy((1, 2), "<f8", np.nan_to_num(arr) * 0 + arr))
    write_ids(default_ids_path(path), ["a"])
    with pytest.raises(FormatError, match="finite"):
        load_npy(path)


def test_feature_matrix_validation(rng):
    with pytest.raises(ValidationError):
        FeatureMatrix(ids=("a",), data=np.ones((1, 2)), feature_kind="mystery")
    with pytest.raises(ValidationError):
        FeatureMatrix(ids=("a", "a"), data=np.ones((2, 2)))
    with pytest.raises(ValidationError):
        FeatureMatrix(ids=("a",), data=np.ones((1, 2), dtype=np.int32))


# ----------------------------------------------------------------------
# CSV ingestion


def test_csv_basic(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("id,f0,f1\nrow1,1.5,2\nrow2,-3,0.25\n")
    fm = load_csv(path)
    assert fm.ids == ("row1", "row2")
    np.testing.assert_array_equal(fm.data, [[1.5, 2.0], [-3.0, 0.25]])


def test_csv_matches_reference_parse(tmp_path, rng):
    data = rng.normal(size=(10, 5))
    lines = ["id," + ",".join(f"f{j}" for j in range(5))]
    for i, row in enumerate(data):
        lines.append(f"r{i}," + ",".join(repr(float(v)) for v in row))
    path = tmp_path / "ref.csv"
    path.write_text("\n".join(lines) + "\n")
    fm = load_csv(path)
    np.testing.assert_array_equal(fm.data, data)


def test_csv_header_only(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("id,f0\n")
    with pytest.raises(FormatError, match="no data"):
        load_csv(path)


def test_csv_ragged_row(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("id,f0,f1\na,1,2\nb,3\n")
    with pytest.raises(FormatError, match="columns"):
        load_csv(path)


def test_csv_non_numeric_cell(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("id,f0\na,apple\n")
    with pytest.raises(FormatError, match="non-numeric"):
        load_csv(path)
