"""Per-selection explanation artifacts.

Every selection is explained by what the current model expected (the
reconstruction), what it missed (the residual), and a visualization-
friendly shifted residual whose mean matches the reconstruction's.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ._validation import as_float_vector
from .errors import ValidationError
from .features.npyio import FEATURE_KINDS, atomic_write_bytes, write_npy

# Pixel gray level used when a residual has zero dynamic range.
_MID_GRAY = 128


@dataclasses.dataclass(frozen=True)
class Explanation:
    """Reconstruction-based explanation for one selected item.

    Attributes:
        item_id: Identifier of the selected item.
        round: 1-based selection round the item was chosen in.
        selected: The item's feature vector.
        reconstruction: Model's estimate of the vector before seeing it.
        residual: ``selected - reconstruction``, elementwise.
        shifted_residual: Residual translated so its mean equals the
            reconstruction's mean, preserving all pairwise differences.
        score: Euclidean norm of the residual.
    """

    item_id: str
    round: int
    selected: np.ndarray
    reconstruction: np.ndarray
    residual: np.ndarray
    shifted_residual: np.ndarray
    score: float


def shift_residual(residual, reconstruction) -> np.ndarray:
    """Translate the residual to the reconstruction's mean level.

    Adds the constant ``mean(reconstruction) - mean(residual)`` to every
    entry, which leaves every pairwise difference of the residual intact
    while making the result directly comparable to the reconstruction.
    """
    resid = as_float_vector(residual, name="residual")
    recon = as_float_vector(reconstruction, resid.shape[0], name="reconstruction")
    offset = np.mean(recon) - np.mean(resid)
    return resid + offset


def make_explanation(model, x, item_id: str, round: int) -> Explanation:
    """Explain ``x`` against ``model`` as fitted before ``x`` is absorbed.

    Args:
        model: A fitted subspace model exposing ``reconstruct``.
        x: Feature vector of the selected item.
        item_id: Identifier recorded with the artifact.
        round: 1-based selection round.

    Returns:
        The populated Explanation.
    """
    if round < 1:
        raise ValidationError(f"round must be >= 1, got {round}")
    vec = as_float_vector(x, name="x")
    recon = model.reconstruct(vec)
    resid = vec - recon
    shifted = shift_residual(resid, recon)
    score = float(np.linalg.norm(resid))
    return Explanation(
        item_id=item_id,
        round=round,
        selected=vec,
        reconstruction=recon,
        residual=resid,
        shifted_residual=shifted,
        score=score,
    )


def render_pixel_explanation(
    explanation: Explanation, side: int
) -> tuple[np.ndarray, np.ndarray]:
    """Render reconstruction and residual as ``(side, side, 3)`` uint8 images.

    The reconstruction is clipped to [0, 255] and rounded. The residual is
    normalized over its global min-max range across all pixels and
    channels jointly, mapped to [0, 255]; a zero-range residual renders as
    uniform mid-gray so a perfect reconstruction is visibly flat.
    """
    if side < 1:
        raise ValidationError(f"side must be >= 1, got {side}")
    expected = side * side * 3
    if explanation.selected.shape[0] != expected:
        raise ValidationError(
            f"explanation has {explanation.selected.shape[0]} features, "
            f"expected {expected} for side {side}"
        )
    recon = explanation.reconstruction.reshape(side, side, 3)
    recon_img = np.rint(np.clip(recon, 0.0, 255.0)).astype(np.uint8)
    resid = explanation.residual.reshape(side, side, 3)
    lo = resid.min()
    hi = resid.max()
    if hi > lo:
        scaled = (resid - lo) * (255.0 / (hi - lo))
        resid_img = np.rint(scaled).astype(np.uint8)
    else:
        resid_img = np.full((side, side, 3), _MID_GRAY, dtype=np.uint8)
    return recon_img, resid_img


def export_explanation(
    explanation: Explanation, out_dir, feature_kind: str = "generic"
) -> list[Path]:
    """Write one explanation's arrays and metadata under ``out_dir``.

    Produces ``sel_<round>_recon.npy``, ``sel_<round>_resid.npy`` and
    ``sel_<round>_resid_shifted.npy`` (each a 1 x d float32 row) plus
    ``sel_<round>_meta.json``. Returns the written paths.
    """
    if feature_kind not in FEATURE_KINDS:
        raise ValidationError(f"unknown feature kind: {feature_kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    r = explanation.round
    arrays = {
        f"sel_{r}_recon.npy": explanation.reconstruction,
        f"sel_{r}_resid.npy": explanation.residual,
        f"sel_{r}_resid_shifted.npy": explanation.shifted_residual,
    }
    paths = []
    for name, vec in arrays.items():
        path = out / name
        write_npy(path, vec.astype(np.float32)[None, :])
        paths.append(path)
    meta = {
        "id": explanation.item_id,
        "round": r,
        "score": explanation.score,
        "feature_kind": feature_kind,
    }
    meta_path = out / f"sel_{r}_meta.json"
    atomic_write_bytes(
        meta_path, (json.dumps(meta, indent=2) + "\n").encode("utf-8")
    )
    paths.append(meta_path)
    return paths


def export_pixel_renders(explanation: Explanation, side: int, out_dir) -> list[Path]:
    """Write PNG renders of the reconstruction and residual images."""
    import io

    from PIL import Image

    recon_img, resid_img = render_pixel_explanation(explanation, side)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    r = explanation.round
    paths = []
    for name, img in (
        (f"sel_{r}_recon.png", recon_img),
        (f"sel_{r}_resid.png", resid_img),
    ):
        path = out / name
        buf = io.BytesIO()
        Image.fromarray(img, mode="RGB").save(buf, format="PNG")
        atomic_write_bytes(path, buf.getvalue())
        paths.append(path)
    return paths
