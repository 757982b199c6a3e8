"""Input validation helpers used by the estimators and feature loaders."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import ValidationError


def as_float_matrix(X, *, name: str = "X") -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float64 array with at least one row.

    Args:
        X: Array-like of shape (n_samples, n_features).
        name: Argument name used in error messages.

    Returns:
        A C-contiguous float64 array of shape (n_samples, n_features).

    Raises:
        ValidationError: If ``X`` is not 2-D, is empty, or contains
            non-finite values.
    """
    try:
        arr = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def as_float_vector(x, dim: int | None = None, *, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 vector, optionally of length ``dim``."""
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValidationError(f"{name} must be non-empty")
    if dim is not None and arr.shape[0] != dim:
        raise ValidationError(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def check_component_cap(cap, *, name: str = "n_components") -> int | None:
    """Validate a basis-size cap: None (auto) or an integer >= 0."""
    if cap is None:
        return None
    if isinstance(cap, bool) or not isinstance(cap, (int, np.integer)):
        raise ValidationError(f"{name} must be None or an integer, got {cap!r}")
    if cap < 0:
        raise ValidationError(f"{name} must be >= 0, got {cap}")
    return int(cap)


def check_ids(ids: Sequence[str] | None, n: int) -> tuple[str, ...]:
    """Validate item identifiers: one non-empty unique string per row.

    When ``ids`` is None, decimal row indices are generated.
    """
    if ids is None:
        return tuple(str(i) for i in range(n))
    out = []
    for i, item in enumerate(ids):
        if not isinstance(item, str):
            raise ValidationError(f"id at position {i} is not a string: {item!r}")
        if not item:
            raise ValidationError(f"id at position {i} is empty")
        out.append(item)
    if len(out) != n:
        raise ValidationError(f"got {len(out)} ids for {n} rows")
    if len(set(out)) != len(out):
        seen: set[str] = set()
        for item in out:
            if item in seen:
                raise ValidationError(f"duplicate id: {item!r}")
            seen.add(item)
    return tuple(out)
