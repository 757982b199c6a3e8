"""Image loading, preprocessing, and batched feature extraction."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import transforms

from .net import build_network, capture_layer

LAYER_DIMS = {"fc6": 4096, "fc7": 4096, "fc8": 1000}

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff"}

DEFAULT_SIDE = 227


def list_images(directory) -> list[Path]:
    """Image files under ``directory``, sorted by stem for stable ids."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    paths = [
        p
        for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
    ]
    return sorted(paths, key=lambda p: p.stem)


def _preprocessor(side: int) -> transforms.Compose:
    # Standard inference pipeline: scale the short edge, center crop,
    # normalize per channel.
    return transforms.Compose(
        [
            transforms.Resize(side),
            transforms.CenterCrop(side),
            transforms.ToTensor(),
            transforms.Normalize(
                mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]
            ),
        ]
    )


def extract_features(
    paths,
    layer: str,
    seed: int = 0,
    side: int = DEFAULT_SIDE,
    batch_size: int = 32,
) -> tuple[list[str], np.ndarray]:
    """Extract one feature vector per readable image.

    Returns the ids (file stems, input order preserved) and a float32
    matrix with one row per id. Unreadable files are skipped with a
    warning; if nothing is readable a ValueError is raised.
    """
    if layer not in LAYER_DIMS:
        raise ValueError(f"unknown layer {layer!r}; expected one of {sorted(LAYER_DIMS)}")
    if side < 63:
        raise ValueError(f"side must be >= 63 for this topology, got {side}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")

    prep = _preprocessor(side)
    ids: list[str] = []
    tensors: list[torch.Tensor] = []
    for path in paths:
        path = Path(path)
        try:
            with Image.open(path) as image:
                tensors.append(prep(image.convert("RGB")))
        except Exception as exc:  # noqa: BLE001 - any decode failure means skip
            warnings.warn(f"skipping unreadable image {path}: {exc}", stacklevel=2)
            continue
        ids.append(path.stem)
    if not ids:
        raise ValueError("no readable images")

    model = build_network(seed)
    rows = []
    for start in range(0, len(tensors), batch_size):
        batch = torch.stack(tensors[start : start + batch_size])
        rows.append(capture_layer(model, batch, layer).numpy())
    matrix = np.ascontiguousarray(np.concatenate(rows, axis=0), dtype=np.float32)
    return ids, matrix


def write_interchange(out_path, ids, matrix: np.ndarray) -> Path:
    """Write the feature matrix and its id sidecar.

    The matrix goes to ``out_path`` in NPY format; ids go next to it as
    UTF-8 text, one per row, newline-terminated. Returns the sidecar
    path.
    """
    out_path = Path(out_path)
    if matrix.ndim != 2 or len(ids) != matrix.shape[0]:
        raise ValueError(
            f"need one id per row, got {len(ids)} ids for shape {matrix.shape}"
        )
    np.save(out_path, matrix)
    sidecar = out_path.with_suffix(".ids.txt")
    sidecar.write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")
    return sidecar
