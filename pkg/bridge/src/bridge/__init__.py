"""Convnet-layer feature extraction bridge.

Runs images through a fixed eight-layer convolutional topology and
captures one fully connected layer per item as a feature vector,
written as an NPY matrix with a plain-text id sidecar — the interchange
format the ranking toolkit consumes. The two inner fully connected
layers are captured before rectification, so their negative halves
survive; the final layer has no rectifier and is captured as-is.

Pretrained weights are deliberately not bundled or downloaded: the
network is initialized from an explicit seed, so extractions are
reproducible and the package works fully offline. Feature quality is
that of a seeded random projection through the topology, not of a
trained network.
"""

from .extract import LAYER_DIMS, extract_features, list_images
from .net import build_network

__all__ = [
    "LAYER_DIMS",
    "build_network",
    "extract_features",
    "list_images",
]

__version__ = "0.1.0"
