"""Iris indexing by intrinsic dimension: normalization, key portions, correlation
dimension, PCA codes and penetration-rate evaluation."""

from .errors import IrisIndexError
from .model import (
    EyeLabel,
    IntrinsicIrisCode,
    KeyPortion,
    NormalizedIris,
    QualityReport,
    Reason,
    Side,
    Stage,
    format_label,
    parse_label,
)

__version__ = "0.1.0"
