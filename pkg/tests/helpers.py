"""Independent oracles shared by the test modules.

Everything here recomputes expected values from first principles (dense
decompositions, brute-force recounts) so the library is checked against
math it does not itself use.
"""

from __future__ import annotations

import numpy as np


def dense_reference(X, cap=None):
    """Batch-SVD reference: (mean, basis columns, singular values).

    Centered dense SVD with numerically-zero singular values dropped at
    the same relative floor the library documents, then truncated to cap.
    """
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    u, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    keep = s > (s[0] * 1e-10 if s.size and s[0] > 0 else np.inf)
    s = s[keep]
    basis = vt[keep].T
    if cap is not None:
        basis = basis[:, :cap]
        s = s[:cap]
    return mean, basis, s


def oracle_reconstruct(mean, basis, x):
    """Direct-algebra reconstruction of one vector."""
    centered = np.asarray(x, dtype=np.float64) - mean
    return basis @ (basis.T @ centered) + mean


def oracle_score(mean, basis, x):
    """Direct-algebra reconstruction error norm of one vector."""
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64) - oracle_reconstruct(mean, basis, x)))


def principal_angles(A, B):
    """Largest principal angle (radians) between the column spans of A and B."""
    from scipy.linalg import subspace_angles

    if A.shape[1] == 0 and B.shape[1] == 0:
        return 0.0
    if A.shape[1] != B.shape[1]:
        return np.pi / 2
    return float(subspace_angles(A, B).max())


def brute_force_curve(labels_in_order, t):
    """Set-recount discovery curve oracle."""
    counts = []
    for i in range(1, t + 1):
        counts.append(len(set(labels_in_order[:i])))
    return np.asarray(counts, dtype=np.int64)


def gaussian_clusters(n_classes=10, per_class=30, dim=50, spread=1.0, sep=40.0, seed=7):
    """Well-separated labeled Gaussian blobs.

    Cluster j sits at sep * e_j, so pairwise center distances are
    sep * sqrt(2), far beyond the within-cluster spread.
    """
    rng = np.random.default_rng(seed)
    rows, labels, ids = [], {}, []
    for j in range(n_classes):
        center = np.zeros(dim)
        center[j] = sep
        block = center + rng.normal(scale=spread, size=(per_class, dim))
        for i in range(per_class):
            item = f"c{j:02d}_{i:03d}"
            ids.append(item)
            labels[item] = f"class{j:02d}"
        rows.append(block)
    X = np.vstack(rows)
    return X, tuple(ids), labels
