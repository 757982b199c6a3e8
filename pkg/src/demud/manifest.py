"""Ranking manifests: one JSON object per line, header first.

The header pins everything needed to reproduce or audit a run: tool
version, method, basis cap, seed, selection count, a digest of the
feature file, and the feature kind. Record lines follow in round order.
Scores are printed with 17 significant digits, which round-trips IEEE
doubles exactly, and the byte stream is fully determined by the inputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

from .errors import FormatError, ValidationError
from .selectors import RankingResult, SelectionRecord


@dataclasses.dataclass(frozen=True)
class ManifestHeader:
    """Run provenance stored in the first manifest line.

    ``version`` is the tool version that produced the ranking.
    """

    version: str
    method: str
    cap: int | None
    seed: int | None
    t: int
    features_sha256: str
    feature_kind: str


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def format_float(value: float) -> str:
    """Decimal rendering with 17 significant digits (lossless for doubles)."""
    return format(float(value), ".17g")


def manifest_lines(header: ManifestHeader, records) -> list[str]:
    """Serialize header and records to the manifest's line strings.

    Field order is fixed and score values are embedded pre-formatted, so
    identical runs serialize to identical bytes.
    """
    head = {
        "version": header.version,
        "method": header.method,
        "cap": header.cap,
        "seed": header.seed,
        "t": header.t,
        "features_sha256": header.features_sha256,
        "feature_kind": header.feature_kind,
    }
    lines = [json.dumps(head, separators=(", ", ": "))]
    for record in records:
        score = "null" if record.score is None else format_float(record.score)
        lines.append(
            '{"round": %d, "id": %s, "index": %d, "score": %s}'
            % (record.round, json.dumps(record.item_id), record.item_index, score)
        )
    return lines


def write_manifest(path, header: ManifestHeader, records) -> None:
    from .features.npyio import atomic_write_bytes

    text = "\n".join(manifest_lines(header, records)) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def read_manifest(path) -> tuple[ManifestHeader, tuple[SelectionRecord, ...]]:
    """Parse and validate a manifest file.

    Round numbers must be consecutive from 1 and ids unique; violations
    are format errors.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8") from exc
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise FormatError(f"{path}: empty manifest")
    parsed = []
    for lineno, line in enumerate(lines, start=1):
        try:
            parsed.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: line {lineno} is not valid JSON") from exc
    head = parsed[0]
    required = {"version", "method", "cap", "seed", "t", "features_sha256", "feature_kind"}
    if not isinstance(head, dict) or not required.issubset(head):
        raise FormatError(f"{path}: first line is not a complete header")
    if not isinstance(head["version"], str) or not head["version"]:
        raise FormatError(f"{path}: header version must be a non-empty string")
    header = ManifestHeader(
        version=head["version"],
        method=str(head["method"]),
        cap=None if head["cap"] is None else int(head["cap"]),
        seed=None if head["seed"] is None else int(head["seed"]),
        t=int(head["t"]),
        features_sha256=str(head["features_sha256"]),
        feature_kind=str(head["feature_kind"]),
    )
    records = []
    for lineno, obj in enumerate(parsed[1:], start=2):
        if not isinstance(obj, dict) or not {"round", "id", "index", "score"}.issubset(obj):
            raise FormatError(f"{path}: line {lineno} is not a complete record")
        records.append(
            SelectionRecord(
                round=int(obj["round"]),
                item_id=str(obj["id"]),
                item_index=int(obj["index"]),
                score=None if obj["score"] is None else float(obj["score"]),
            )
        )
    if not records:
        raise FormatError(f"{path}: manifest has no records")
    for expected, record in enumerate(records, start=1):
        if record.round != expected:
            raise FormatError(
                f"{path}: rounds must be consecutive from 1, found {record.round} "
                f"at position {expected}"
            )
    if len({r.item_id for r in records}) != len(records):
        raise FormatError(f"{path}: duplicate ids in records")
    if header.t != len(records):
        raise FormatError(
            f"{path}: header says t={header.t} but {len(records)} records present"
        )
    return header, tuple(records)


def as_ranking(header: ManifestHeader, records) -> RankingResult:
    """Rehydrate a RankingResult from manifest content."""
    if header.method not in ("demud", "svd", "random"):
        raise ValidationError(f"unknown method {header.method!r}")
    return RankingResult(
        method=header.method,
        records=tuple(records),
        n_components=header.cap,
        seed=header.seed,
    )
