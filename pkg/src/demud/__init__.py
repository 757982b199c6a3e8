"""Novelty ranking with per-selection explanations.

Items are selected greedily by how badly a low-rank model of everything
chosen so far reconstructs them; each pick is explained by the model's
expectation, the residual it missed, and a shifted residual for visual
comparison. Evaluation measures how fast a ranking discovers classes.
"""

from .errors import DemudError, FormatError, ValidationError
from .evaluation import (
    DiscoveryCurve,
    choose_t,
    discovery_curve,
    load_labels,
    nauc,
    random_baseline,
)
from .explain import (
    Explanation,
    export_explanation,
    make_explanation,
    render_pixel_explanation,
    shift_residual,
)
from .features import (
    FEATURE_KINDS,
    FeatureMatrix,
    VisualWordCodebook,
    load_csv,
    load_npy,
    pixel_features,
    save_npy,
)
from .selectors import (
    DemudSelector,
    RandomSelector,
    RankingResult,
    SelectionRecord,
    SvdSelector,
    demud_iter,
)
from .subspace import IncrementalSvdModel

__version__ = "0.1.0"

__all__ = [
    "DemudError",
    "DemudSelector",
    "DiscoveryCurve",
    "Explanation",
    "FEATURE_KINDS",
    "FeatureMatrix",
    "FormatError",
    "IncrementalSvdModel",
    "RandomSelector",
    "RankingResult",
    "SelectionRecord",
    "SvdSelector",
    "ValidationError",
    "VisualWordCodebook",
    "choose_t",
    "demud_iter",
    "discovery_curve",
    "export_explanation",
    "load_csv",
    "load_labels",
    "load_npy",
    "make_explanation",
    "nauc",
    "pixel_features",
    "random_baseline",
    "render_pixel_explanation",
    "save_npy",
    "shift_residual",
]
