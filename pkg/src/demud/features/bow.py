"""Bag-of-visual-words features over local descriptor sets.

A codebook is learned by k-means over the pooled descriptors of a
collection; each item is then represented by the raw count of its
descriptors falling nearest to each codeword. Everything is seeded and
tie-breaks are fixed, so a given corpus and seed always produce the same
codebook and histograms.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import as_float_matrix
from ..errors import ValidationError

# Rows scored against the codebook per block; bounds peak memory.
_ASSIGN_BLOCK = 8192


def _nearest(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest center per row and the squared distance to it.

    Distances are computed directly as sums of squared differences (no
    norm-expansion shortcut), so exactly coincident distances compare
    equal and ties resolve to the lowest center index via argmin.
    """
    n = X.shape[0]
    labels = np.empty(n, dtype=np.intp)
    best = np.empty(n)
    for lo in range(0, n, _ASSIGN_BLOCK):
        hi = min(lo + _ASSIGN_BLOCK, n)
        diff = X[lo:hi, None, :] - centers[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        labels[lo:hi] = np.argmin(d2, axis=1)
        best[lo:hi] = d2[np.arange(hi - lo), labels[lo:hi]]
    return labels, best


def _plus_plus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ seeding over the pooled descriptors."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = np.einsum("ij,ij->i", X - centers[0], X - centers[0])
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # All mass already covered; fall back to a uniform draw.
            idx = int(rng.integers(n))
        centers[j] = X[idx]
        new_d2 = np.einsum("ij,ij->i", X - centers[j], X - centers[j])
        np.minimum(d2, new_d2, out=d2)
    return centers


class VisualWordCodebook(BaseEstimator):
    """K-means codebook with raw-count histogram features.

    Parameters:
        n_clusters: Number of visual words.
        seed: Seed for the ++ initialization.
        max_iter: Lloyd iteration cap.
        tol: Convergence threshold on the largest centroid movement
            (Euclidean norm) in one iteration.

    Attributes:
        cluster_centers_: Array of shape (n_clusters, n_dims).
        n_iter_: Lloyd iterations actually run.
        inertia_history_: Total squared assignment distance recorded at
            each iteration's assignment step; non-increasing.
    """

    def __init__(
        self,
        n_clusters: int,
        seed: int = 0,
        max_iter: int = 300,
        tol: float = 1e-6,
    ):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, descriptor_sets, y=None) -> "VisualWordCodebook":
        """Learn the codebook from descriptor sets (or one pooled matrix).

        Args:
            descriptor_sets: Either a single 2-D array of descriptors or
                an iterable of 2-D arrays, one per item, all with the
                same column count. Pooled row count must be at least
                ``n_clusters``.
        """
        k = self.n_clusters
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
            raise ValidationError(f"n_clusters must be a positive integer, got {k!r}")
        k = int(k)
        X = _pool(descriptor_sets)
        if X.shape[0] < k:
            raise ValidationError(
                f"need at least {k} descriptors to fit {k} clusters, got {X.shape[0]}"
            )
        rng = np.random.Generator(np.random.PCG64(self.seed))
        centers = _plus_plus_init(X, k, rng)
        history = []
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            labels, d2 = _nearest(X, centers)
            history.append(float(d2.sum()))
            counts = np.bincount(labels, minlength=k)
            empty = np.flatnonzero(counts == 0)
            if empty.size:
                # Re-seed each empty cluster at the point currently
                # farthest from its assigned center, one point per
                # cluster, then redo the assignment.
                order = np.argsort(-d2, kind="stable")
                taken = 0
                for j in empty:
                    centers[j] = X[order[taken]]
                    taken += 1
                labels, d2 = _nearest(X, centers)
                history[-1] = float(d2.sum())
                counts = np.bincount(labels, minlength=k)
            new_centers = np.zeros_like(centers)
            np.add.at(new_centers, labels, X)
            nonzero = counts > 0
            new_centers[nonzero] /= counts[nonzero, None]
            new_centers[~nonzero] = centers[~nonzero]
            movement = np.sqrt(
                np.einsum("ij,ij->i", new_centers - centers, new_centers - centers)
            )
            centers = new_centers
            if movement.max() < self.tol:
                break
        self.cluster_centers_ = centers
        self.n_iter_ = n_iter
        self.inertia_history_ = history
        return self

    def histogram(self, descriptors) -> np.ndarray:
        """Raw count of descriptors assigned to each visual word."""
        self._check_fitted()
        X = as_float_matrix(descriptors, name="descriptors")
        if X.shape[1] != self.cluster_centers_.shape[1]:
            raise ValidationError(
                f"descriptors have {X.shape[1]} dims, codebook expects "
                f"{self.cluster_centers_.shape[1]}"
            )
        labels, _ = _nearest(X, self.cluster_centers_)
        return np.bincount(labels, minlength=self.cluster_centers_.shape[0]).astype(
            np.int64
        )

    def transform(self, descriptor_sets) -> np.ndarray:
        """Stack one histogram row per descriptor set."""
        self._check_fitted()
        rows = [self.histogram(d) for d in descriptor_sets]
        if not rows:
            raise ValidationError("descriptor_sets is empty")
        return np.vstack(rows)

    def _check_fitted(self) -> None:
        if not hasattr(self, "cluster_centers_"):
            raise ValidationError("codebook is not fitted; call fit first")


def _pool(descriptor_sets) -> np.ndarray:
    """Validate and vertically stack descriptor sets into one matrix."""
    arr = np.asarray(descriptor_sets) if isinstance(descriptor_sets, np.ndarray) else None
    if arr is not None and arr.ndim == 2:
        return as_float_matrix(arr, name="descriptors")
    mats = [as_float_matrix(d, name="descriptors") for d in descriptor_sets]
    if not mats:
        raise ValidationError("descriptor_sets is empty")
    width = mats[0].shape[1]
    for i, m in enumerate(mats):
        if m.shape[1] != width:
            raise ValidationError(
                f"descriptor set {i} has {m.shape[1]} dims, expected {width}"
            )
    return np.vstack(mats)
