"""Command-line interface.

Four subcommands cover the pipeline: ``featurize`` turns images or
descriptor sets into a feature NPY with an id sidecar, ``rank`` produces
a manifest plus explanation exports, ``eval`` scores a manifest against
class labels, and ``explain`` recomputes a single round's explanation
from the manifest alone.

Exit codes: 0 success, 1 usage error, 2 data or format error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DemudError, FormatError, ValidationError
from .evaluation import choose_t, discovery_curve, load_labels, nauc, random_baseline
from .explain import export_explanation, export_pixel_renders
from .features.npyio import FEATURE_KINDS, FeatureMatrix, atomic_write_bytes, load_npy, read_npy, save_npy
from .features.pixels import DEFAULT_SIDE, load_image, pixel_features
from .features.bow import VisualWordCodebook
from .manifest import ManifestHeader, as_ranking, file_sha256, read_manifest, write_manifest
from .selectors import RandomSelector, SvdSelector, demud_iter


class UsageError(DemudError):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="demud", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"demud {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("featurize", help="extract a feature matrix from raw inputs")
    p.add_argument("--mode", required=True, choices=("pixel", "bow"))
    p.add_argument("--images", help="directory of images (pixel mode)")
    p.add_argument("--descriptors", help="directory of per-item descriptor NPYs (bow mode)")
    p.add_argument("--out", required=True, help="output feature NPY path")
    p.add_argument("--side", type=int, default=DEFAULT_SIDE, help="crop/resize size (pixel mode)")
    p.add_argument("--k-sift", type=int, help="codebook size (bow mode)")
    p.add_argument("--seed", type=int, default=0, help="codebook seed (bow mode)")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("rank", help="rank items and export explanations")
    p.add_argument("--features", required=True, help="feature NPY path")
    p.add_argument("--ids", help="id sidecar path (default: <features>.ids.txt)")
    p.add_argument("--method", required=True, choices=("demud", "svd", "random"))
    p.add_argument("--k", default="auto", help="basis cap: 'auto' (= min(n, d)) or an integer >= 0")
    p.add_argument("--n", type=int, help="selections to make (default: all items)")
    p.add_argument("--seed", type=int, default=0, help="seed (random method)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--feature-kind", default="generic", choices=FEATURE_KINDS)
    p.add_argument(
        "--explain-svd",
        action="store_true",
        help="also export per-round explanations for method=svd",
    )
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="score a ranking manifest against labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels", required=True, help="CSV with header id,label")
    p.add_argument("--t", type=int, help="evaluation budget (default: estimated)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", help="feature NPY to verify against the manifest digest")
    p.add_argument("--ignore-digest", action="store_true")
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("explain", help="recompute one round's explanation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--ids", help="id sidecar path (default: <features>.ids.txt)")
    p.add_argument("--round", required=True, type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--ignore-digest", action="store_true")
    p.set_defaults(func=cmd_explain)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError("a subcommand is required (featurize, rank, eval, explain)")
        return args.func(args)
    except UsageError as exc:
        print(f"demud: usage error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, ValidationError) as exc:
        print(f"demud: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything unanticipated is an internal error
        print(f"demud: internal error: {exc!r}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


# ----------------------------------------------------------------------
# featurize


def cmd_featurize(args) -> int:
    out = Path(args.out)
    if args.mode == "pixel":
        if not args.images:
            raise UsageError("--images is required for --mode pixel")
        if args.side < 1:
            raise UsageError(f"--side must be >= 1, got {args.side}")
        ids, rows, skipped = _featurize_pixel(Path(args.images), args.side)
    else:
        if not args.descriptors:
            raise UsageError("--descriptors is required for --mode bow")
        if args.k_sift is None:
            raise UsageError("--k-sift is required for --mode bow")
        if args.k_sift < 1:
            raise UsageError(f"--k-sift must be >= 1, got {args.k_sift}")
        ids, rows, skipped = _featurize_bow(Path(args.descriptors), args.k_sift, args.seed)
    matrix = FeatureMatrix(
        ids=tuple(ids),
        data=np.vstack(rows),
        feature_kind="pixel" if args.mode == "pixel" else "bow",
    )
    save_npy(matrix, out)
    report = {
        "mode": args.mode,
        "out": str(out),
        "n_items": matrix.n_items,
        "n_features": matrix.n_features,
        "processed": list(matrix.ids),
        "skipped": skipped,
    }
    report_path = out.with_suffix(".report.json")
    atomic_write_bytes(report_path, (json.dumps(report, indent=2) + "\n").encode("utf-8"))
    print(f"wrote {out} ({matrix.n_items} x {matrix.n_features})")
    return 0


def _featurize_pixel(image_dir: Path, side: int):
    if not image_dir.is_dir():
        raise ValidationError(f"{image_dir}: not a directory")
    files = sorted((p for p in image_dir.iterdir() if p.is_file()), key=lambda p: p.stem)
    if not files:
        raise ValidationError(f"{image_dir}: no files to featurize")
    ids, rows, skipped = [], [], []
    for path in files:
        try:
            img = load_image(path)
        except FormatError as exc:
            print(f"demud: warning: skipping {path.name}: {exc}", file=sys.stderr)
            skipped.append({"file": path.name, "reason": str(exc)})
            continue
        rows.append(pixel_features(img, side=side).astype(np.float32))
        ids.append(path.stem)
    if not rows:
        raise ValidationError(f"{image_dir}: every file failed to decode")
    return ids, rows, skipped


def _featurize_bow(desc_dir: Path, k_sift: int, seed: int):
    if not desc_dir.is_dir():
        raise ValidationError(f"{desc_dir}: not a directory")
    files = sorted((p for p in desc_dir.iterdir() if p.suffix == ".npy"), key=lambda p: p.stem)
    if not files:
        raise ValidationError(f"{desc_dir}: no descriptor NPY files")
    ids, sets, skipped = [], [], []
    for path in files:
        try:
            sets.append(read_npy(path).astype(np.float64))
        except FormatError as exc:
            print(f"demud: warning: skipping {path.name}: {exc}", file=sys.stderr)
            skipped.append({"file": path.name, "reason": str(exc)})
            continue
        ids.append(path.stem)
    if not sets:
        raise ValidationError(f"{desc_dir}: every descriptor file failed to parse")
    codebook = VisualWordCodebook(n_clusters=k_sift, seed=seed).fit(sets)
    rows = [codebook.histogram(d).astype(np.float32) for d in sets]
    return ids, rows, skipped


# ----------------------------------------------------------------------
# rank


def _parse_cap(raw: str, n_items: int, n_features: int) -> int:
    if raw == "auto":
        return min(n_items, n_features)
    try:
        cap = int(raw)
    except ValueError:
        raise UsageError(f"--k must be 'auto' or an integer, got {raw!r}") from None
    if cap < 0:
        raise UsageError(f"--k must be >= 0, got {cap}")
    return cap


def _pixel_side(n_features: int) -> int:
    if n_features % 3 == 0:
        side = math.isqrt(n_features // 3)
        if side * side * 3 == n_features:
            return side
    raise ValidationError(
        f"pixel features of length {n_features} do not form a square image "
        "(need side * side * 3)"
    )


def cmd_rank(args) -> int:
    matrix = load_npy(args.features, ids_path=args.ids, feature_kind=args.feature_kind)
    cap = _parse_cap(args.k, matrix.n_items, matrix.n_features)
    if args.n is not None and not 1 <= args.n <= matrix.n_items:
        raise UsageError(f"--n must be between 1 and {matrix.n_items}, got {args.n}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = file_sha256(args.features)
    side = _pixel_side(matrix.n_features) if matrix.feature_kind == "pixel" else None

    if args.method == "demud":
        records = []
        for record, explanation in demud_iter(
            matrix.data, ids=matrix.ids, n_components=cap, n_select=args.n
        ):
            records.append(record)
            export_explanation(explanation, out_dir, feature_kind=matrix.feature_kind)
            if side is not None:
                export_pixel_renders(explanation, side, out_dir)
        seed = None
    elif args.method == "svd":
        selector = SvdSelector(n_components=cap, n_select=args.n).fit(
            matrix.data, ids=matrix.ids
        )
        records = list(selector.result_.records)
        if args.explain_svd:
            for record in records:
                explanation = selector.explain_round(matrix.data, record.round)
                export_explanation(explanation, out_dir, feature_kind=matrix.feature_kind)
                if side is not None:
                    export_pixel_renders(explanation, side, out_dir)
        seed = None
    else:
        selector = RandomSelector(seed=args.seed, n_select=args.n).fit(
            matrix.data, ids=matrix.ids
        )
        records = list(selector.result_.records)
        seed = int(args.seed)

    header = ManifestHeader(
        version=__version__,
        method=args.method,
        cap=None if args.method == "random" else cap,
        seed=seed,
        t=len(records),
        features_sha256=digest,
        feature_kind=matrix.feature_kind,
    )
    manifest_path = out_dir / "manifest.jsonl"
    write_manifest(manifest_path, header, records)
    print(f"wrote {manifest_path} ({len(records)} selections, method={args.method})")
    return 0


# ----------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    header, records = read_manifest(args.manifest)
    labels = load_labels(args.labels)
    digest_checked = False
    if args.features:
        digest = file_sha256(args.features)
        if digest != header.features_sha256:
            if not args.ignore_digest:
                raise ValidationError(
                    f"{args.features}: sha256 does not match the manifest "
                    "(pass --ignore-digest to evaluate anyway)"
                )
        else:
            digest_checked = True
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")

    if args.t is not None:
        if args.t < 1:
            raise UsageError(f"--t must be >= 1, got {args.t}")
        t = args.t
        provenance = "flag"
    else:
        t = choose_t(labels, cap_t=300, trials=args.trials, seed=args.seed)
        provenance = "estimated"
        if t > len(records):
            t = len(records)
            provenance = "estimated, clamped to ranking length"

    ranking = as_ranking(header, records)
    curve = discovery_curve(ranking, labels, t=t)
    mean, std = random_baseline(labels, t=t, trials=args.trials, seed=args.seed)
    report = {
        "manifest": str(args.manifest),
        "method": header.method,
        "t": t,
        "t_provenance": provenance,
        "n_classes": curve.n_classes,
        "curve": [int(v) for v in curve.counts],
        "nauc": nauc(curve),
        "random_mean": mean,
        "random_std": std,
        "trials": args.trials,
        "seed": args.seed,
        "digest_checked": digest_checked,
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        atomic_write_bytes(Path(args.out), text.encode("utf-8"))
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


# ----------------------------------------------------------------------
# explain


def cmd_explain(args) -> int:
    header, records = read_manifest(args.manifest)
    if header.method != "demud":
        raise UsageError(
            f"explanations require a demud manifest, this one is method={header.method!r}"
        )
    if args.round < 1:
        raise UsageError(f"--round must be >= 1, got {args.round}")
    if args.round > len(records):
        raise UsageError(
            f"--round {args.round} exceeds the {len(records)} recorded selections"
        )
    matrix = load_npy(args.features, ids_path=args.ids, feature_kind=header.feature_kind)
    digest = file_sha256(args.features)
    if digest != header.features_sha256 and not args.ignore_digest:
        raise ValidationError(
            f"{args.features}: sha256 does not match the manifest "
            "(pass --ignore-digest to recompute anyway)"
        )

    replayed = None
    for record, explanation in demud_iter(
        matrix.data, ids=matrix.ids, n_components=header.cap, n_select=args.round
    ):
        stored = records[record.round - 1]
        if record.item_id != stored.item_id or record.item_index != stored.item_index:
            raise ValidationError(
                f"replay diverged at round {record.round}: recomputed "
                f"{record.item_id!r} but manifest has {stored.item_id!r}"
            )
        replayed = explanation
    out_dir = Path(args.out)
    paths = export_explanation(replayed, out_dir, feature_kind=header.feature_kind)
    if header.feature_kind == "pixel":
        paths += export_pixel_renders(replayed, _pixel_side(matrix.n_features), out_dir)
    print(f"wrote round {args.round} explanation to {out_dir} ({len(paths)} files)")
    return 0


if __name__ == "__main__":
    entry()
