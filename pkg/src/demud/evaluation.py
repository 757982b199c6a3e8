"""Class-discovery evaluation of rankings.

A ranking is judged by how quickly it surfaces items from classes not
seen earlier in the ranking: the discovery curve counts distinct classes
found within the first t selections, and its normalized area compares
the curve against the best achievable one.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .selectors import RankingResult, SelectionRecord


@dataclasses.dataclass(frozen=True)
class DiscoveryCurve:
    """Distinct classes found within the first i selections, i = 1..t.

    Attributes:
        counts: Integer array of length t; starts at 1, nondecreasing,
            steps by at most 1, never exceeds ``n_classes``.
        n_classes: Total distinct classes in the labeled collection.
    """

    counts: np.ndarray
    n_classes: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 1:
            raise ValidationError("counts must be a non-empty 1-D array")
        if counts[0] != 1:
            raise ValidationError("a discovery curve starts at 1")
        steps = np.diff(counts)
        if np.any(steps < 0) or np.any(steps > 1):
            raise ValidationError("counts must be nondecreasing with unit steps")
        if self.n_classes < 1:
            raise ValidationError("n_classes must be >= 1")
        if counts[-1] > self.n_classes:
            raise ValidationError("counts exceed the number of classes")
        object.__setattr__(self, "counts", counts)

    @property
    def t(self) -> int:
        return int(self.counts.size)


def load_labels(path) -> dict[str, str]:
    """Read an ``id,label`` CSV (with that header) into a mapping."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8") from exc
    if not rows or rows[0] != ["id", "label"]:
        raise FormatError(f"{path}: header must be exactly 'id,label'")
    out: dict[str, str] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise FormatError(f"{path}: line {lineno} must have two columns")
        item_id, label = row
        if not item_id:
            raise FormatError(f"{path}: line {lineno} has an empty id")
        if item_id in out:
            raise FormatError(f"{path}: duplicate id {item_id!r} at line {lineno}")
        out[item_id] = label
    if not out:
        raise FormatError(f"{path}: no label rows")
    return out


def _counts_from_sequence(class_seq: Sequence, t: int) -> np.ndarray:
    """Cumulative distinct-class counts over the first t of a label sequence."""
    seen: set = set()
    counts = np.empty(t, dtype=np.int64)
    found = 0
    for i in range(t):
        if class_seq[i] not in seen:
            seen.add(class_seq[i])
            found += 1
        counts[i] = found
    return counts


def discovery_curve(
    ranking: RankingResult | Sequence[SelectionRecord],
    labels: Mapping[str, str],
    t: int | None = None,
) -> DiscoveryCurve:
    """Discovery curve of a ranking under a label mapping.

    Args:
        ranking: A RankingResult or its record sequence.
        labels: Mapping from item id to class label; must cover every
            ranked id. Its distinct values define the class total.
        t: Curve length; defaults to the full ranking. Must not exceed
            the number of records.
    """
    records = ranking.records if isinstance(ranking, RankingResult) else tuple(ranking)
    if not records:
        raise ValidationError("ranking has no records")
    if t is None:
        t = len(records)
    if not 1 <= t <= len(records):
        raise ValidationError(f"t must be between 1 and {len(records)}, got {t}")
    seq = []
    for record in records[:t]:
        if record.item_id not in labels:
            raise ValidationError(f"no label for ranked id {record.item_id!r}")
        seq.append(labels[record.item_id])
    n_classes = len(set(labels.values()))
    return DiscoveryCurve(counts=_counts_from_sequence(seq, t), n_classes=n_classes)


def nauc(curve: DiscoveryCurve) -> float:
    """Normalized area under a discovery curve, as a percentage.

    The area sum(counts) is divided by the area of the ideal curve that
    finds a new class at each of the first min(t, c) selections and stays
    at c afterwards, then scaled by 100. 100 means ideal ordering.
    """
    t = curve.t
    c = curve.n_classes
    m = min(t, c)
    ideal = m * (m + 1) // 2 + c * max(0, t - c)
    return float(curve.counts.sum()) / ideal * 100.0


def _label_codes(labels, n_items: int | None) -> np.ndarray:
    """Integer class codes for a label mapping or per-item sequence."""
    if isinstance(labels, Mapping):
        values = [labels[k] for k in sorted(labels)]
    else:
        values = list(labels)
    if not values:
        raise ValidationError("labels are empty")
    if n_items is not None and n_items != len(values):
        raise ValidationError(f"got {len(values)} labels for {n_items} items")
    _, codes = np.unique(np.asarray(values, dtype=object), return_inverse=True)
    return codes


def random_baseline(
    labels,
    n_items: int | None = None,
    t: int | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> tuple[float, float]:
    """Mean and standard deviation of nAUC over random orderings.

    Args:
        labels: Mapping id -> label (items taken in sorted-id order) or a
            per-item label sequence.
        n_items: Expected item count, as a cross-check; optional.
        t: Curve length; defaults to the item count.
        trials: Number of seeded random permutations to average.
        seed: Root seed; each trial derives its own child generator, so
            results do not depend on how trials are scheduled.
    """
    codes = _label_codes(labels, n_items)
    n = codes.size
    if t is None:
        t = n
    if not 1 <= t <= n:
        raise ValidationError(f"t must be between 1 and {n}, got {t}")
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    c = int(codes.max()) + 1
    m = min(t, c)
    ideal = m * (m + 1) // 2 + c * max(0, t - c)
    children = np.random.SeedSequence(seed).spawn(trials)
    values = np.empty(trials)
    for i, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        perm = rng.permutation(n)[:t]
        seq = codes[perm]
        counts = _counts_from_sequence(seq, t)
        values[i] = counts.sum() / ideal * 100.0
    return float(values.mean()), float(values.std())


def choose_t(
    labels,
    n_items: int | None = None,
    cap_t: int = 300,
    trials: int = 1000,
    seed: int = 0,
) -> int:
    """Evaluation budget: expected selections for a random order to cover
    every class, rounded up, capped by ``cap_t`` and the item count.
    """
    codes = _label_codes(labels, n_items)
    n = codes.size
    if cap_t < 1:
        raise ValidationError(f"cap_t must be >= 1, got {cap_t}")
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    children = np.random.SeedSequence(seed).spawn(trials)
    cover = np.empty(trials)
    for i, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        perm = rng.permutation(n)
        _, first_pos = np.unique(codes[perm], return_index=True)
        cover[i] = first_pos.max() + 1
    t = math.ceil(cover.mean())
    return min(t, cap_t, n)
