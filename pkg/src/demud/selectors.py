"""Ranking strategies: reconstruction-error-driven, static, and random.

The adaptive ranker picks the item the current model reconstructs worst,
explains the pick against the model as it stood before the pick, then
absorbs the item and repeats. The first round is special: the model is
fitted to the whole collection once, the worst-reconstructed item seeds
the ranking, and the working model restarts from that single item.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterator, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_float_matrix, check_component_cap, check_ids
from .errors import ValidationError
from .explain import Explanation, make_explanation
from .subspace import IncrementalSvdModel


@dataclasses.dataclass(frozen=True)
class SelectionRecord:
    """One ranked item.

    Attributes:
        round: 1-based position in the ranking.
        item_id: Identifier of the item.
        item_index: Row index of the item in the input matrix.
        score: Selection score (reconstruction error norm), or None for
            rankings that do not score items.
    """

    round: int
    item_id: str
    item_index: int
    score: float | None


@dataclasses.dataclass(frozen=True)
class RankingResult:
    """An ordered ranking with the settings that produced it."""

    method: str
    records: tuple[SelectionRecord, ...]
    n_components: int | None
    seed: int | None

    @property
    def n_selected(self) -> int:
        return len(self.records)


def _resolve_n_select(n_select: int | None, n_items: int) -> int:
    if n_select is None:
        return n_items
    if isinstance(n_select, bool) or not isinstance(n_select, (int, np.integer)):
        raise ValidationError(f"n_select must be an integer, got {n_select!r}")
    if not 1 <= n_select <= n_items:
        raise ValidationError(
            f"n_select must be between 1 and {n_items}, got {n_select}"
        )
    return int(n_select)


def demud_iter(
    X,
    ids: Sequence[str] | None = None,
    n_components: int | None = None,
    n_select: int | None = None,
) -> Iterator[tuple[SelectionRecord, Explanation]]:
    """Yield (record, explanation) pairs one selection round at a time.

    Round 1 scores every item against a model of the full collection and
    seeds with the worst-reconstructed one; the working model is then
    re-initialized to that single item. Later rounds score the remaining
    items against the working model, pick the highest scorer (ties go to
    the lowest row index), explain it before updating, then absorb it.
    """
    X = as_float_matrix(X)
    n, _ = X.shape
    ids = check_ids(ids, n)
    cap = check_component_cap(n_components)
    n_select = _resolve_n_select(n_select, n)

    seed_model = IncrementalSvdModel(n_components=cap).fit(X)
    scores = seed_model.score_samples(X)
    first = int(np.argmax(scores))
    yield (
        SelectionRecord(1, ids[first], first, float(scores[first])),
        make_explanation(seed_model, X[first], ids[first], 1),
    )

    model = IncrementalSvdModel(n_components=cap).partial_fit(X[first])
    remaining = np.delete(np.arange(n), first)
    for round_no in range(2, n_select + 1):
        rest = model.score_samples(X[remaining])
        pos = int(np.argmax(rest))
        idx = int(remaining[pos])
        yield (
            SelectionRecord(round_no, ids[idx], idx, float(rest[pos])),
            make_explanation(model, X[idx], ids[idx], round_no),
        )
        model.partial_fit(X[idx])
        remaining = np.delete(remaining, pos)


class DemudSelector(BaseEstimator):
    """Adaptive ranking by incremental reconstruction error.

    Parameters:
        n_components: Basis-size cap for the underlying subspace model;
            None lets the rank grow with the data.
        n_select: Number of rounds to run; None ranks every item.

    Attributes:
        result_: The RankingResult.
        explanations_: One Explanation per round, aligned with
            ``result_.records``.
    """

    def __init__(self, n_components: int | None = None, n_select: int | None = None):
        self.n_components = n_components
        self.n_select = n_select

    def fit(self, X, y=None, ids: Sequence[str] | None = None) -> "DemudSelector":
        records = []
        explanations = []
        for record, explanation in demud_iter(
            X, ids=ids, n_components=self.n_components, n_select=self.n_select
        ):
            records.append(record)
            explanations.append(explanation)
        self.result_ = RankingResult(
            method="demud",
            records=tuple(records),
            n_components=check_component_cap(self.n_components),
            seed=None,
        )
        self.explanations_ = explanations
        return self


class SvdSelector(BaseEstimator):
    """Static ranking by reconstruction error under one fixed model.

    The model is fitted to the whole collection once and never updated;
    items are ranked by descending score with ties broken by the lower
    row index (the sort is stable over the original order).

    Attributes:
        result_: The RankingResult.
        model_: The fitted subspace model, kept so individual picks can
            be explained against it.
    """

    def __init__(self, n_components: int | None = None, n_select: int | None = None):
        self.n_components = n_components
        self.n_select = n_select

    def fit(self, X, y=None, ids: Sequence[str] | None = None) -> "SvdSelector":
        X = as_float_matrix(X)
        n, _ = X.shape
        ids = check_ids(ids, n)
        cap = check_component_cap(self.n_components)
        n_select = _resolve_n_select(self.n_select, n)
        model = IncrementalSvdModel(n_components=cap).fit(X)
        scores = model.score_samples(X)
        order = np.argsort(-scores, kind="stable")[:n_select]
        records = tuple(
            SelectionRecord(r, ids[i], int(i), float(scores[i]))
            for r, i in enumerate(order, start=1)
        )
        self.result_ = RankingResult(
            method="svd", records=records, n_components=cap, seed=None
        )
        self.model_ = model
        return self

    def explain_round(self, X, round: int) -> Explanation:
        """Explain one ranked item against the fixed model."""
        if not hasattr(self, "result_"):
            raise ValidationError("selector is not fitted; call fit first")
        if not 1 <= round <= len(self.result_.records):
            raise ValidationError(
                f"round must be between 1 and {len(self.result_.records)}, got {round}"
            )
        X = as_float_matrix(X)
        record = self.result_.records[round - 1]
        return make_explanation(self.model_, X[record.item_index], record.item_id, round)


class RandomSelector(BaseEstimator):
    """Uniform random ranking from a seeded generator; scores are None.

    The permutation comes from a PCG64 generator seeded with ``seed``, so
    equal seeds give identical rankings on equal-size inputs.
    """

    def __init__(self, seed: int = 0, n_select: int | None = None):
        self.seed = seed
        self.n_select = n_select

    def fit(self, X, y=None, ids: Sequence[str] | None = None) -> "RandomSelector":
        X = as_float_matrix(X)
        n, _ = X.shape
        ids = check_ids(ids, n)
        n_select = _resolve_n_select(self.n_select, n)
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        rng = np.random.Generator(np.random.PCG64(self.seed))
        order = rng.permutation(n)[:n_select]
        records = tuple(
            SelectionRecord(r, ids[i], int(i), None)
            for r, i in enumerate(order, start=1)
        )
        self.result_ = RankingResult(
            method="random", records=records, n_components=None, seed=int(self.seed)
        )
        return self
