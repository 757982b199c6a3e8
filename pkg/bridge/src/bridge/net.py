"""Network construction and single-layer capture."""

from __future__ import annotations

import torch
from torchvision.models import alexnet

# Position of each capturable fully connected layer in the classifier
# stack. The two inner layers sit immediately before their rectifiers,
# so capturing the module output yields pre-rectification values; the
# final layer is the stack's last module.
_CLASSIFIER_STOP = {"fc6": 1, "fc7": 4, "fc8": 6}


def build_network(seed: int = 0) -> torch.nn.Module:
    """Eight-layer convolutional network with seeded random weights.

    The topology is the standard five-convolution, three-fully-connected
    stack. Weights are drawn from the constructor's initializers under a
    fixed seed, so two calls with the same seed produce identical
    networks. The model is returned in inference mode.
    """
    torch.manual_seed(seed)
    model = alexnet(weights=None)
    model.eval()
    return model


def capture_layer(model: torch.nn.Module, batch: torch.Tensor, layer: str) -> torch.Tensor:
    """Forward ``batch`` and return the requested layer's activations.

    ``fc6`` and ``fc7`` are taken before rectification; ``fc8`` is the
    final output. In inference mode the dropout modules on the path are
    identity, so the capture is a pure function of weights and input.
    """
    if layer not in _CLASSIFIER_STOP:
        raise ValueError(f"unknown layer {layer!r}; expected one of {sorted(_CLASSIFIER_STOP)}")
    stop = _CLASSIFIER_STOP[layer]
    with torch.no_grad():
        x = model.features(batch)
        x = model.avgpool(x)
        x = torch.flatten(x, 1)
        for index, module in enumerate(model.classifier):
            x = module(x)
            if index == stop:
                return x
    raise AssertionError("classifier stack ended before the capture point")
