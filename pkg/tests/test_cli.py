from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from demud import FeatureMatrix, save_npy
from demud.cli import main
from demud.manifest import read_manifest
from helpers import gaussian_clusters


@pytest.fixture()
def feature_file(tmp_path):
    X, ids, labels = gaussian_clusters(n_classes=3, per_class=5, dim=4, seed=21)
    path = tmp_path / "features.npy"
    save_npy(FeatureMatrix(ids=ids, data=X), path)
    labels_path = tmp_path / "labels.csv"
    lines = ["id,label"] + [f"{i},{labels[i]}" for i in ids]
    labels_path.write_text("\n".join(lines) + "\n")
    return path, labels_path, ids, labels


def _pixel_feature_file(tmp_path, side=4, n=6):
    rng = np.random.default_rng(3)
    X = rng.integers(0, 256, size=(n, side * side * 3)).astype(np.float64)
    path = tmp_path / "pix.npy"
    ids = tuple(f"img{i}" for i in range(n))
    save_npy(FeatureMatrix(ids=ids, data=X), path)
    return path


# ----------------------------------------------------------------------
# rank


def test_rank_demud_writes_manifest_and_exports(feature_file, tmp_path, capsys):
    path, _, ids, _ = feature_file
    out = tmp_path / "run"
    rc = main(["rank", "--features", str(path), "--method", "demud", "--out", str(out)])
    assert rc == 0
    header, records = read_manifest(out / "manifest.jsonl")
    assert header.method == "demud"
    assert header.cap == 4  # auto = min(15 items, 4 features)
    assert header.seed is None
    assert header.feature_kind == "generic"
    assert header.t == len(records) == 15
    assert [r.round for r in records] == list(range(1, 16))
    assert {r.item_id for r in records} == set(ids)
    for r in records:
        assert (out / f"sel_{r.round}_recon.npy").exists()
        assert (out / f"sel_{r.round}_resid.npy").exists()
        assert (out / f"sel_{r.round}_resid_shifted.npy").exists()
        assert (out / f"sel_{r.round}_meta.json").exists()


def test_rank_is_deterministic_across_runs(feature_file, tmp_path):
    path, _, _, _ = feature_file
    blobs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["rank", "--features", str(path), "--method", "demud", "--out", str(out)]) == 0
        blobs.append((out / "manifest.jsonl").read_bytes())
    assert blobs[0] == blobs[1]


def test_rank_random_same_seed_identical(feature_file, tmp_path):
    path, _, _, _ = feature_file
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(
            ["rank", "--features", str(path), "--method", "random", "--seed", "7", "--out", str(out)]
        ) == 0
        blobs.append((out / "manifest.jsonl").read_bytes())
    assert blobs[0] == blobs[1]
    header, records = read_manifest(tmp_path / "a" / "manifest.jsonl")
    assert header.seed == 7
    assert header.cap is None
    assert all(r.score is None for r in records)


def test_rank_n1_demud_matches_svd_top(feature_file, tmp_path):
    path, _, _, _ = feature_file
    outs = {}
    for method in ("demud", "svd"):
        out = tmp_path / method
        assert main(
            ["rank", "--features", str(path), "--method", method, "--n", "1", "--out", str(out)]
        ) == 0
        outs[method] = read_manifest(out / "manifest.jsonl")[1][0]
    assert outs["demud"].item_index == outs["svd"].item_index
    assert outs["demud"].score == pytest.approx(outs["svd"].score, rel=1e-12)


def test_rank_svd_explains_only_behind_flag(feature_file, tmp_path):
    path, _, _, _ = feature_file
    plain = tmp_path / "plain"
    assert main(["rank", "--features", str(path), "--method", "svd", "--out", str(plain)]) == 0
    assert not list(plain.glob("sel_*"))
    flagged = tmp_path / "flagged"
    assert main(
        ["rank", "--features", str(path), "--method", "svd", "--explain-svd", "--out", str(flagged)]
    ) == 0
    assert (flagged / "sel_1_recon.npy").exists()


def test_rank_pixel_kind_writes_renders(tmp_path):
    path = _pixel_feature_file(tmp_path)
    out = tmp_path / "run"
    rc = main(
        [
            "rank",
            "--features",
            str(path),
            "--method",
            "demud",
            "--feature-kind",
            "pixel",
            "--n",
            "2",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert (out / "sel_1_recon.png").exists()
    assert (out / "sel_2_resid.png").exists()
    header, _ = read_manifest(out / "manifest.jsonl")
    assert header.feature_kind == "pixel"


def test_rank_k_flag_values(feature_file, tmp_path):
    path, _, _, _ = feature_file
    out = tmp_path / "k2"
    assert main(
        ["rank", "--features", str(path), "--method", "demud", "--k", "2", "--out", str(out)]
    ) == 0
    assert read_manifest(out / "manifest.jsonl")[0].cap == 2
    assert main(
        ["rank", "--features", str(path), "--method", "demud", "--k", "nope", "--out", str(out)]
    ) == 1


def test_rank_n_out_of_bounds_is_usage_error(feature_file, tmp_path, capsys):
    path, _, _, _ = feature_file
    rc = main(
        ["rank", "--features", str(path), "--method", "demud", "--n", "99", "--out", str(tmp_path / "x")]
    )
    assert rc == 1
    assert "usage error" in capsys.readouterr().err


def test_rank_bad_npy_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.npy"
    bad.write_bytes(b"garbage bytes")
    (tmp_path / "bad.ids.txt").write_text("a\n")
    rc = main(["rank", "--features", str(bad), "--method", "demud", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error" in capsys.readouterr().err


# ----------------------------------------------------------------------
# eval


def _rank(path, out, *extra):
    assert main(["rank", "--features", str(path), "--method", "demud", "--out", str(out), *extra]) == 0


def test_eval_reports_nauc_and_baseline(feature_file, tmp_path, capsys):
    path, labels_path, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    capsys.readouterr()
    rc = main(
        [
            "eval",
            "--manifest",
            str(out / "manifest.jsonl"),
            "--labels",
            str(labels_path),
            "--t",
            "9",
            "--trials",
            "200",
        ]
    )
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["t"] == 9
    assert report["t_provenance"] == "flag"
    assert report["n_classes"] == 3
    assert len(report["curve"]) == 9
    assert report["curve"][0] == 1
    assert 0 < report["nauc"] <= 100.0
    assert 0 < report["random_mean"] <= 100.0
    assert report["nauc"] > report["random_mean"]


def test_eval_estimates_t_when_absent(feature_file, tmp_path, capsys):
    path, labels_path, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    capsys.readouterr()
    rc = main(
        [
            "eval",
            "--manifest",
            str(out / "manifest.jsonl"),
            "--labels",
            str(labels_path),
            "--trials",
            "100",
        ]
    )
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["t_provenance"].startswith("estimated")
    assert 1 <= report["t"] <= 15


def test_eval_perfect_three_item_ranking(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = np.eye(3) * 50 + rng.normal(size=(3, 3))
    path = tmp_path / "f.npy"
    save_npy(FeatureMatrix(ids=("a", "b", "c"), data=X), path)
    labels = tmp_path / "l.csv"
    labels.write_text("id,label\na,A\nb,B\nc,C\n")
    out = tmp_path / "run"
    _rank(path, out)
    capsys.readouterr()
    rc = main(["eval", "--manifest", str(out / "manifest.jsonl"), "--labels", str(labels), "--t", "3", "--trials", "50"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["nauc"] == pytest.approx(100.0)


def test_eval_missing_label_names_offender(feature_file, tmp_path, capsys):
    path, _, ids, labels = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    capsys.readouterr()
    partial = tmp_path / "partial.csv"
    dropped = ids[0]
    lines = ["id,label"] + [f"{i},{labels[i]}" for i in ids if i != dropped]
    partial.write_text("\n".join(lines) + "\n")
    rc = main(["eval", "--manifest", str(out / "manifest.jsonl"), "--labels", str(partial), "--t", "15", "--trials", "20"])
    assert rc == 2
    assert dropped in capsys.readouterr().err


def test_eval_digest_guard(feature_file, tmp_path, capsys):
    path, labels_path, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    other = tmp_path / "other.npy"
    rng = np.random.default_rng(1)
    save_npy(FeatureMatrix(ids=("q",), data=rng.normal(size=(1, 4))), other)
    args = [
        "eval",
        "--manifest",
        str(out / "manifest.jsonl"),
        "--labels",
        str(labels_path),
        "--t",
        "5",
        "--trials",
        "20",
        "--features",
        str(other),
    ]
    assert main(args) == 2
    capsys.readouterr()
    assert main(args + ["--ignore-digest"]) == 0


def test_eval_report_file_output(feature_file, tmp_path):
    path, labels_path, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    report_path = tmp_path / "report.json"
    rc = main(
        [
            "eval",
            "--manifest",
            str(out / "manifest.jsonl"),
            "--labels",
            str(labels_path),
            "--t",
            "6",
            "--trials",
            "20",
            "--out",
            str(report_path),
        ]
    )
    assert rc == 0
    assert json.loads(report_path.read_text())["t"] == 6


# ----------------------------------------------------------------------
# explain


def test_explain_recomputes_rank_exports_bitwise(feature_file, tmp_path):
    path, _, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    redo = tmp_path / "redo"
    rc = main(
        [
            "explain",
            "--manifest",
            str(out / "manifest.jsonl"),
            "--features",
            str(path),
            "--round",
            "3",
            "--out",
            str(redo),
        ]
    )
    assert rc == 0
    for name in ("sel_3_recon.npy", "sel_3_resid.npy", "sel_3_resid_shifted.npy", "sel_3_meta.json"):
        assert (redo / name).read_bytes() == (out / name).read_bytes()


def test_explain_round_bounds(feature_file, tmp_path, capsys):
    path, _, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    base = ["explain", "--manifest", str(out / "manifest.jsonl"), "--features", str(path), "--out", str(tmp_path / "e")]
    assert main(base + ["--round", "0"]) == 1
    assert main(base + ["--round", "99"]) == 1


def test_explain_rejects_non_demud_manifest(feature_file, tmp_path, capsys):
    path, _, _, _ = feature_file
    out = tmp_path / "rand"
    assert main(["rank", "--features", str(path), "--method", "random", "--out", str(out)]) == 0
    rc = main(
        [
            "explain",
            "--manifest",
            str(out / "manifest.jsonl"),
            "--features",
            str(path),
            "--round",
            "1",
            "--out",
            str(tmp_path / "e"),
        ]
    )
    assert rc == 1


def test_explain_digest_guard(feature_file, tmp_path):
    path, _, _, _ = feature_file
    out = tmp_path / "run"
    _rank(path, out)
    tampered = tmp_path / "tampered.npy"
    tampered.write_bytes(path.read_bytes()[:-8] + b"\x00" * 8)
    (tmp_path / "tampered.ids.txt").write_bytes((tmp_path / "features.ids.txt").read_bytes())
    rc = main(
        [
            "explain",
            "--manifest",
            str(out / "manifest.jsonl"),
            "--features",
            str(tampered),
            "--round",
            "1",
            "--out",
            str(tmp_path / "e"),
        ]
    )
    assert rc == 2


# ----------------------------------------------------------------------
# featurize


def _write_png(path, arr):
    from PIL import Image

    Image.fromarray(arr.astype(np.uint8), mode="RGB").save(path)


def test_featurize_pixel_dir(tmp_path, capsys):
    rng = np.random.default_rng(2)
    img_dir = tmp_path / "imgs"
    img_dir.mkdir()
    for name in ("b", "a", "c"):
        _write_png(img_dir / f"{name}.png", rng.integers(0, 256, size=(10, 12, 3)))
    out = tmp_path / "feat.npy"
    rc = main(["featurize", "--mode", "pixel", "--images", str(img_dir), "--side", "4", "--out", str(out)])
    assert rc == 0
    from demud.features.npyio import read_ids, read_npy

    arr = read_npy(out)
    assert arr.shape == (3, 48)
    assert arr.dtype == np.float32
    # Lexicographic id order regardless of directory listing order.
    assert read_ids(tmp_path / "feat.ids.txt") == ("a", "b", "c")
    report = json.loads((tmp_path / "feat.report.json").read_text())
    assert report["processed"] == ["a", "b", "c"]
    assert report["skipped"] == []


def test_featurize_pixel_default_side_is_227(tmp_path):
    rng = np.random.default_rng(4)
    img_dir = tmp_path / "imgs"
    img_dir.mkdir()
    _write_png(img_dir / "one.png", rng.integers(0, 256, size=(8, 8, 3)))
    out = tmp_path / "feat.npy"
    assert main(["featurize", "--mode", "pixel", "--images", str(img_dir), "--out", str(out)]) == 0
    from demud.features.npyio import read_npy

    assert read_npy(out).shape == (1, 227 * 227 * 3)


def test_featurize_skips_corrupt_images(tmp_path, capsys):
    rng = np.random.default_rng(5)
    img_dir = tmp_path / "imgs"
    img_dir.mkdir()
    _write_png(img_dir / "good.png", rng.integers(0, 256, size=(6, 6, 3)))
    (img_dir / "broken.png").write_bytes(b"not an image")
    out = tmp_path / "feat.npy"
    rc = main(["featurize", "--mode", "pixel", "--images", str(img_dir), "--side", "3", "--out", str(out)])
    assert rc == 0
    err = capsys.readouterr().err
    assert "broken.png" in err
    report = json.loads((tmp_path / "feat.report.json").read_text())
    assert report["processed"] == ["good"]
    assert [s["file"] for s in report["skipped"]] == ["broken.png"]


def test_featurize_all_corrupt_fails(tmp_path, capsys):
    img_dir = tmp_path / "imgs"
    img_dir.mkdir()
    (img_dir / "junk.png").write_bytes(b"nope")
    rc = main(["featurize", "--mode", "pixel", "--images", str(img_dir), "--out", str(tmp_path / "f.npy")])
    assert rc == 2


def test_featurize_empty_dir_fails(tmp_path):
    img_dir = tmp_path / "imgs"
    img_dir.mkdir()
    rc = main(["featurize", "--mode", "pixel", "--images", str(img_dir), "--out", str(tmp_path / "f.npy")])
    assert rc == 2


def test_featurize_bow(tmp_path):
    from demud.features.npyio import read_npy, write_npy

    rng = np.random.default_rng(6)
    desc_dir = tmp_path / "desc"
    desc_dir.mkdir()
    for i in range(4):
        write_npy(desc_dir / f"item{i}.npy", rng.normal(size=(20 + i, 5)))
    out = tmp_path / "bow.npy"
    rc = main(
        ["featurize", "--mode", "bow", "--descriptors", str(desc_dir), "--k-sift", "4", "--out", str(out)]
    )
    assert rc == 0
    arr = read_npy(out)
    assert arr.shape == (4, 4)
    np.testing.assert_array_equal(arr.sum(axis=1), [20.0, 21.0, 22.0, 23.0])


def test_featurize_bow_requires_k_sift(tmp_path):
    desc_dir = tmp_path / "desc"
    desc_dir.mkdir()
    rc = main(["featurize", "--mode", "bow", "--descriptors", str(desc_dir), "--out", str(tmp_path / "b.npy")])
    assert rc == 1


# ----------------------------------------------------------------------
# top-level behavior


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["rank", "--bogus"]) == 1


def test_version_via_module_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "demud", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("demud ")
