"""Manifest-level feature extraction with per-region failure isolation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .features import FeatureParams, extract_features
from .imaging import DatasetManifest, FeatureRow, LesionAnnotation, extract_roi, load_png16
from .segmentation import SegmentationParams, segment
from .wavelet import dump_coefficients, dwt2_db4

log = logging.getLogger(__name__)


@dataclass
class RegionFailure:
    case_id: str
    view: str
    reason: str


@dataclass
class ExtractionResult:
    rows: list[FeatureRow]
    failures: list[RegionFailure]
    timings: dict[str, float]


def _dump_stages(seg, out_dir: Path, stem: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, img in seg.stages().items():
        Image.fromarray(np.rint(img * 255).astype(np.uint8)).save(out_dir / f"{stem}_{name}.png")


def _extract_one(args):
    record, root, seg_params, feat_params, dump_dir, wavelet_dir = args
    record: LesionAnnotation
    t = {}
    try:
        t0 = time.perf_counter()
        image = load_png16(Path(root) / record.image_path)
        roi = extract_roi(image, record.center, record.case_id, record.view)
        t1 = time.perf_counter()
        seg = segment(roi, seg_params)
        t2 = time.perf_counter()
        vec = extract_features(roi, seg_params, feat_params, seg=seg)
        t3 = time.perf_counter()
        if dump_dir is not None:
            _dump_stages(seg, Path(dump_dir), f"{record.case_id}_{record.view}")
        if wavelet_dir is not None:
            Path(wavelet_dir).mkdir(parents=True, exist_ok=True)
            dump_coefficients(dwt2_db4(roi.pixels, feat_params.wavelet_levels),
                              Path(wavelet_dir) / f"{record.case_id}_{record.view}.npz")
        t = {"load": t1 - t0, "segment": t2 - t1, "features": t3 - t2}
    except Exception as exc:  # noqa: BLE001  one bad region must not stop the batch
        return None, RegionFailure(record.case_id, record.view, f"{type(exc).__name__}: {exc}"), t
    return FeatureRow(record.case_id, record.view, record.label, vec.values), None, t


def extract_manifest(manifest: DatasetManifest,
                     seg_params: SegmentationParams = SegmentationParams(),
                     feat_params: FeatureParams = FeatureParams(),
                     jobs: int = 1, dump_dir=None, wavelet_dir=None) -> ExtractionResult:
    """Rows come back in manifest order whatever the scheduling; failed regions are skipped."""
    tasks = [(r, manifest.root, seg_params, feat_params, dump_dir, wavelet_dir)
             for r in manifest.records]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_extract_one, tasks, chunksize=4))
    else:
        results = [_extract_one(t) for t in tasks]
    rows, failures = [], []
    timings = {"load": 0.0, "segment": 0.0, "features": 0.0}
    for i, (row, failure, t) in enumerate(results, 1):
        for k, v in t.items():
            timings[k] += v
        if failure is not None:
            log.warning("skipping %s/%s: %s", failure.case_id, failure.view, failure.reason)
            failures.append(failure)
        else:
            rows.append(row)
        if i % 50 == 0 or i == len(results):
            log.info("processed %d/%d regions", i, len(results))
    return ExtractionResult(rows, failures, timings)
