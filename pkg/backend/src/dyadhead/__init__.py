"""Posterior-producing backend: frozen encoder features, a trainable
convolutional head, and FPOS export for the scoring engine."""

__version__ = "0.1.0"

from .encoder import FilterbankEncoder, resample_features
from .formats import Session, read_fpos, read_manifest, read_rttm_labels, write_fpos
from .head import DiarizationHead, LayerMix
from .train import TrainConfig, TrainResult, extract_posteriors, train_head

__all__ = [
    "DiarizationHead",
    "FilterbankEncoder",
    "LayerMix",
    "Session",
    "TrainConfig",
    "TrainResult",
    "extract_posteriors",
    "read_fpos",
    "read_manifest",
    "read_rttm_labels",
    "resample_features",
    "train_head",
    "write_fpos",
]
