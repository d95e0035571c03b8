"""Mammographic lesion classification with random-projection feature reduction."""

from .evaluation import loco_cv, reports_from_loco, roc_auc
from .features import FeatureParams, extract_features
from .layout import LAYOUT_V1
from .reduction import RandomProjection, ReducerConfig, RpConfig, jl_dimension
from .segmentation import SegmentationParams, segment
from .svm import SvmConfig, fit_calibrated_svm

__all__ = [
    "FeatureParams", "LAYOUT_V1", "RandomProjection", "ReducerConfig", "RpConfig",
    "SegmentationParams", "SvmConfig", "extract_features", "fit_calibrated_svm",
    "jl_dimension", "loco_cv", "reports_from_loco", "roc_auc", "segment",
]
