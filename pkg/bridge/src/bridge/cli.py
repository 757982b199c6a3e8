"""Command line: extract convnet-layer features to the interchange format.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys

from .extract import DEFAULT_SIDE, LAYER_DIMS, extract_features, list_images, write_interchange


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    extract = sub.add_parser("extract", help="extract one layer's features for a directory of images")
    extract.add_argument("--layer", required=True, choices=sorted(LAYER_DIMS))
    extract.add_argument("--images", required=True, help="directory of images")
    extract.add_argument("--out", required=True, help="output feature NPY path")
    extract.add_argument("--seed", type=int, default=0, help="network weight seed")
    extract.add_argument("--side", type=int, default=DEFAULT_SIDE, help="input crop size")
    extract.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"bridge: usage error: {exc}", file=sys.stderr)
        return 1
    try:
        paths = list_images(args.images)
        ids, matrix = extract_features(
            paths,
            args.layer,
            seed=args.seed,
            side=args.side,
            batch_size=args.batch_size,
        )
        write_interchange(args.out, ids, matrix)
    except (NotADirectoryError, ValueError, OSError) as exc:
        print(f"bridge: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} ({matrix.shape[0]} x {matrix.shape[1]}, layer={args.layer})")
    return 0


def entry() -> None:
    sys.exit(main())
