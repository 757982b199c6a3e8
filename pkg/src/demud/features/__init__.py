"""Feature extraction and on-disk interchange formats."""

from .bow import VisualWordCodebook
from .npyio import (
    FEATURE_KINDS,
    FeatureMatrix,
    default_ids_path,
    load_csv,
    load_npy,
    read_ids,
    read_npy,
    save_npy,
    write_ids,
    write_npy,
)
from .pixels import bilinear_resize, center_crop, load_image, pixel_features

__all__ = [
    "FEATURE_KINDS",
    "FeatureMatrix",
    "VisualWordCodebook",
    "bilinear_resize",
    "center_crop",
    "default_ids_path",
    "load_csv",
    "load_image",
    "load_npy",
    "pixel_features",
    "read_ids",
    "read_npy",
    "save_npy",
    "write_ids",
    "write_npy",
]
