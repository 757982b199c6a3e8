"""Low-rank subspace tracking with an exact running mean.

The model maintains a thin SVD of the mean-centered data seen so far and
supports one-at-a-time rank-one updates, so reconstruction error can be
scored against "everything selected so far" without refitting from
scratch.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._parallel import chunk_bounds, run_chunked
from ._validation import as_float_matrix, as_float_vector, check_component_cap
from .errors import ValidationError

# Relative floor under which singular values are treated as numerical zero.
_SINGULAR_FLOOR = 1e-10
# Max |U^T U - I| entry tolerated before the basis is re-orthonormalized.
_ORTHO_TOL = 1e-10
# A projection residual smaller than this fraction of the update vector is
# treated as lying inside the current span.
_SPAN_TOL = 1e-13


class IncrementalSvdModel(BaseEstimator):
    """Thin SVD of mean-centered data with incremental rank-one updates.

    Parameters:
        n_components: Cap on the number of basis vectors kept. ``None``
            means no explicit cap (the rank is still bounded by the data:
            at most ``min(n_samples - 1, n_features)`` directions carry
            variance). ``0`` keeps no basis at all, so scores degenerate
            to distance from the mean.

    Attributes:
        components_: Array of shape (k, n_features); orthonormal rows
            spanning the retained subspace. Each row's largest-magnitude
            entry is non-negative, fixing the sign convention.
        singular_values_: Array of shape (k,); non-increasing, positive.
        mean_: Array of shape (n_features,); exact running mean of all
            observed samples.
        n_samples_seen_: Number of samples absorbed so far.
        n_features_in_: Dimensionality of the input space.
    """

    def __init__(self, n_components: int | None = None):
        self.n_components = n_components

    # ------------------------------------------------------------------
    # fitting

    def fit(self, X, y=None) -> "IncrementalSvdModel":
        """Fit the model to a batch of samples in one shot.

        The centered rows are decomposed directly rather than through
        their Gram matrix: squaring doubles the exponent of small
        singular values, which would let decomposition noise at the
        square root of machine precision survive the relative floor.
        """
        X = as_float_matrix(X)
        cap = check_component_cap(self.n_components)
        n, d = X.shape
        mean = X.mean(axis=0)
        centered = X - mean
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        keep = _spectrum_mask(s, cap)
        s = s[keep]
        basis = _canonicalize(vt[keep].T)
        self.components_ = np.ascontiguousarray(basis.T)
        self.singular_values_ = s
        self.mean_ = mean
        self.n_samples_seen_ = n
        self.n_features_in_ = d
        return self

    def partial_fit(self, X, y=None) -> "IncrementalSvdModel":
        """Absorb samples one at a time, updating mean and basis in place.

        Accepts a single vector or a 2-D batch; batch rows are applied
        sequentially in order. The first sample ever seen initializes a
        zero-rank model whose mean is that sample, so its reconstruction
        error is exactly zero and any other vector scores as its distance
        from the sample.
        """
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 1:
            rows = as_float_matrix(arr[None, :])
        else:
            rows = as_float_matrix(arr)
        check_component_cap(self.n_components)
        for row in rows:
            self._update_one(row)
        return self

    def _update_one(self, x: np.ndarray) -> None:
        if not hasattr(self, "mean_"):
            d = x.shape[0]
            self.components_ = np.empty((0, d))
            self.singular_values_ = np.empty(0)
            self.mean_ = x.copy()
            self.n_samples_seen_ = 1
            self.n_features_in_ = d
            return
        d = self.n_features_in_
        if x.shape[0] != d:
            raise ValidationError(f"sample has {x.shape[0]} features, model expects {d}")
        cap = check_component_cap(self.n_components)
        count = self.n_samples_seen_
        basis = self.components_.T  # (d, k)
        s = self.singular_values_
        k = s.shape[0]

        # The scatter matrix gains the single outer product of this
        # weighted deviation, so one augmented column is enough.
        deviation = np.sqrt(count / (count + 1.0)) * (x - self.mean_)
        coeffs = basis.T @ deviation
        orth = deviation - basis @ coeffs
        orth_norm = float(np.linalg.norm(orth))
        dev_norm = float(np.linalg.norm(deviation))

        if orth_norm > dev_norm * _SPAN_TOL and orth_norm > 0.0:
            small = np.zeros((k + 1, k + 1))
            small[:k, :k] = np.diag(s)
            small[:k, k] = coeffs
            small[k, k] = orth_norm
            left = np.hstack([basis, (orth / orth_norm)[:, None]])
        elif k == 0:
            # Nothing new outside a rank-zero span: only the mean moves.
            self.mean_ = self.mean_ + (x - self.mean_) / (count + 1.0)
            self.n_samples_seen_ = count + 1
            return
        else:
            small = np.hstack([np.diag(s), coeffs[:, None]])
            left = basis
        rot, s_new, _ = np.linalg.svd(small, full_matrices=False)
        keep = _spectrum_mask(s_new, cap)
        new_basis = _canonicalize(left @ rot[:, keep])
        self.components_ = np.ascontiguousarray(new_basis.T)
        self.singular_values_ = s_new[keep]
        self.mean_ = self.mean_ + (x - self.mean_) / (count + 1.0)
        self.n_samples_seen_ = count + 1

    # ------------------------------------------------------------------
    # inference

    def reconstruct(self, X) -> np.ndarray:
        """Project onto the retained subspace and add the mean back.

        Accepts a single vector or a batch; the output matches the input
        arrangement.
        """
        self._check_fitted()
        arr = np.asarray(X, dtype=np.float64)
        single = arr.ndim == 1
        rows = as_float_matrix(arr[None, :] if single else arr)
        if rows.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"input has {rows.shape[1]} features, model expects {self.n_features_in_}"
            )
        out = self._reconstruct_rows(rows)
        return out[0] if single else out

    def residual(self, X) -> np.ndarray:
        """Difference between the input and its reconstruction."""
        arr = np.asarray(X, dtype=np.float64)
        single = arr.ndim == 1
        rows = as_float_matrix(arr[None, :] if single else arr)
        recon = self.reconstruct(rows)
        out = rows - recon
        return out[0] if single else out

    def score_samples(self, X) -> np.ndarray:
        """Euclidean reconstruction-error norm for each row of ``X``.

        Rows are scored in fixed-size chunks whose boundaries depend only
        on the input shape, so the result is bitwise reproducible for any
        DEMUD_THREADS setting.
        """
        self._check_fitted()
        rows = as_float_matrix(X)
        n, d = rows.shape
        if d != self.n_features_in_:
            raise ValidationError(
                f"input has {d} features, model expects {self.n_features_in_}"
            )
        out = np.empty(n)
        basis = self.components_.T
        k = basis.shape[1]
        mean = self.mean_

        def work(lo: int, hi: int) -> None:
            centered = rows[lo:hi] - mean
            if k:
                resid = centered - (centered @ basis) @ basis.T
            else:
                resid = centered
            out[lo:hi] = np.sqrt(np.einsum("ij,ij->i", resid, resid))

        run_chunked(work, chunk_bounds(n, d))
        return out

    def transform(self, X) -> np.ndarray:
        """Coordinates of the centered input in the retained basis."""
        self._check_fitted()
        rows = as_float_matrix(X)
        if rows.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"input has {rows.shape[1]} features, model expects {self.n_features_in_}"
            )
        return (rows - self.mean_) @ self.components_.T

    def inverse_transform(self, Z) -> np.ndarray:
        """Map basis coordinates back to feature space (adds the mean)."""
        self._check_fitted()
        coords = np.asarray(Z, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != self.components_.shape[0]:
            raise ValidationError(
                f"coordinates must have shape (n, {self.components_.shape[0]})"
            )
        return coords @ self.components_ + self.mean_

    # ------------------------------------------------------------------

    def _reconstruct_rows(self, rows: np.ndarray) -> np.ndarray:
        basis = self.components_.T
        if basis.shape[1] == 0:
            return np.broadcast_to(self.mean_, rows.shape).copy()
        centered = rows - self.mean_
        return (centered @ basis) @ basis.T + self.mean_

    def _check_fitted(self) -> None:
        if not hasattr(self, "mean_"):
            raise ValidationError("model is not fitted; call fit or partial_fit first")


def _spectrum_mask(s: np.ndarray, cap: int | None) -> np.ndarray:
    """Boolean mask keeping significant leading singular values.

    ``s`` must be non-increasing. Values below a relative floor of the
    largest are numerical zeros and dropped; the cap then truncates.
    """
    if s.size == 0:
        return np.zeros(0, dtype=bool)
    top = s[0]
    if top <= 0.0:
        return np.zeros(s.shape, dtype=bool)
    keep = s > top * _SINGULAR_FLOOR
    if cap is not None:
        keep &= np.arange(s.size) < cap
    return keep


def _canonicalize(basis: np.ndarray) -> np.ndarray:
    """Fix signs (largest-|entry| non-negative) and restore orthonormality.

    QR is applied only when accumulated drift exceeds the tolerance, then
    the sign convention is reapplied.
    """
    if basis.size == 0:
        return basis
    k = basis.shape[1]
    gram = basis.T @ basis
    if np.abs(gram - np.eye(k)).max() > _ORTHO_TOL:
        q, r = np.linalg.qr(basis)
        basis = q * np.where(np.diag(r) < 0.0, -1.0, 1.0)
    idx = np.abs(basis).argmax(axis=0)
    signs = np.where(basis[idx, np.arange(k)] < 0.0, -1.0, 1.0)
    return basis * signs
