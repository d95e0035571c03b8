"""Per-region feature extraction: segmentation followed by all six feature groups."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import geometric_features
from .imaging import Roi
from .layout import FeatureVector, assemble_feature_vector
from .segmentation import SegmentationParams, SegmentationResult, segment
from .texture import (GLDM_DISTANCE, GLCM_DISTANCE, LEVELS, gldm_features, gldm_pdfs,
                      glcm, glcm_features, glrlm, glrlm_features, stats_group)
from .wavelet import wavelet_features


@dataclass(frozen=True)
class FeatureParams:
    levels: int = LEVELS
    glcm_distance: int = GLCM_DISTANCE
    gldm_distance: int = GLDM_DISTANCE
    wavelet_levels: int = 3


def extract_features(roi: Roi, seg_params: SegmentationParams = SegmentationParams(),
                     params: FeatureParams = FeatureParams(),
                     seg: SegmentationResult | None = None) -> FeatureVector:
    seg = seg or segment(roi, seg_params)
    full_scale = float(2 ** roi.image.bit_depth - 1)
    return assemble_feature_vector(
        stats_group(roi, seg.lesion, seg.blobs, full_scale),
        glrlm_features(glrlm(roi.pixels, params.levels)),
        gldm_features(gldm_pdfs(roi, params.gldm_distance)),
        glcm_features(glcm(roi.pixels, params.levels, params.glcm_distance)),
        wavelet_features(roi, seg.lesion, params.wavelet_levels),
        geometric_features(seg.lesion),
    )
