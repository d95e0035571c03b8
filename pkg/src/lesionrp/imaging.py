"""Image and dataset ingestion: PNG I/O, ROI cropping, manifests, feature matrices."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

ROI_SIZE = 150
VIEWS = ("CC", "MLO")
LABELS = ("malignant", "benign")
MANIFEST_HEADER = ("case_id", "view", "image_path", "x", "y", "label")
META_COLUMNS = ("case_id", "view", "label")


class DataError(ValueError):
    """Input data violates a documented file or dataset invariant."""


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray  # (height, width), unsigned integer
    bit_depth: int = 16

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        if px.size and (px.min() < 0 or px.max() >= 2 ** self.bit_depth):
            raise ValueError("intensity out of range for bit depth")
        dtype = np.uint8 if self.bit_depth == 8 else np.uint16
        px = px.astype(dtype, copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class LesionAnnotation:
    case_id: str
    view: str
    image_path: str
    center: tuple[int, int]  # (x=column, y=row), zero-based
    label: str

    @property
    def is_malignant(self) -> bool:
        return self.label == "malignant"


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[LesionAnnotation, ...]
    root: Path = field(default=Path("."), compare=False)

    def case_ids(self) -> list[str]:
        seen = dict.fromkeys(r.case_id for r in self.records)
        return list(seen)

    def resolve(self, record: LesionAnnotation) -> Path:
        p = Path(record.image_path)
        return p if p.is_absolute() else self.root / p


@dataclass(frozen=True)
class Roi:
    image: GrayImage
    case_id: str = ""
    view: str = ""

    def __post_init__(self):
        if self.image.width != ROI_SIZE or self.image.height != ROI_SIZE:
            raise ValueError(f"ROI must be {ROI_SIZE}x{ROI_SIZE}, got "
                             f"{self.image.width}x{self.image.height}")

    @property
    def pixels(self) -> np.ndarray:
        return self.image.pixels


def load_png16(path) -> GrayImage:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.array(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DataError(f"cannot decode {path}: {exc}") from exc
    if mode == "L":
        return GrayImage(arr, 8)
    if mode.startswith("I;16"):
        return GrayImage(arr.astype(np.uint16), 16)
    if mode == "I" and arr.size and arr.min() >= 0 and arr.max() < 2 ** 16:
        return GrayImage(arr.astype(np.uint16), 16)
    raise DataError(f"{path}: unsupported PNG mode {mode!r} (need 8/16-bit grayscale)")


def save_png16(image: GrayImage, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image.pixels).save(path, format="PNG")


def roi_window(shape: tuple[int, int], center: tuple[int, int], size: int = ROI_SIZE):
    """Top-left (row, col) of a size x size window centred on ``center``.

    The window is shifted, never padded, so it always lies inside the image.
    """
    h, w = shape
    x, y = center
    if not (0 <= x < w and 0 <= y < h):
        raise ValueError(f"center {center} outside {w}x{h} image")
    if h < size or w < size:
        raise ValueError(f"image {w}x{h} smaller than ROI size {size}")
    half = size // 2
    r0 = min(max(y - half, 0), h - size)
    c0 = min(max(x - half, 0), w - size)
    return r0, c0


def extract_roi(image: GrayImage, center: tuple[int, int], case_id: str = "",
                view: str = "") -> Roi:
    r0, c0 = roi_window(image.pixels.shape, center)
    crop = image.pixels[r0:r0 + ROI_SIZE, c0:c0 + ROI_SIZE]
    return Roi(GrayImage(crop, image.bit_depth), case_id, view)


def validate_records(records: Sequence[LesionAnnotation]) -> None:
    seen: set[tuple[str, str]] = set()
    labels: dict[str, str] = {}
    counts: dict[str, int] = {}
    for r in records:
        if r.view not in VIEWS:
            raise DataError(f"case {r.case_id}: bad view {r.view!r}")
        if r.label not in LABELS:
            raise DataError(f"case {r.case_id}: bad label {r.label!r}")
        key = (r.case_id, r.view)
        if key in seen:
            raise DataError(f"duplicate record for case {r.case_id} view {r.view}")
        seen.add(key)
        if labels.setdefault(r.case_id, r.label) != r.label:
            raise DataError(f"case {r.case_id}: conflicting labels")
        counts[r.case_id] = counts.get(r.case_id, 0) + 1
        if counts[r.case_id] > 2:
            raise DataError(f"case {r.case_id}: more than two views")


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise DataError(f"{path}: header must be {','.join(MANIFEST_HEADER)}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise DataError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            case_id, view, image_path, x, y, label = (c.strip() for c in row)
            try:
                center = (int(x), int(y))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer coordinates") from None
            if not case_id or not image_path:
                raise DataError(f"{path}:{lineno}: empty case_id or image_path")
            records.append(LesionAnnotation(case_id, view, image_path, center, label))
    validate_records(records)
    return DatasetManifest(tuple(records), root=path.parent)


def save_manifest(manifest: DatasetManifest, path) -> None:
    validate_records(manifest.records)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for r in manifest.records:
            w.writerow([r.case_id, r.view, r.image_path, r.center[0], r.center[1], r.label])


@dataclass(frozen=True)
class FeatureRow:
    case_id: str
    view: str
    label: str
    values: np.ndarray


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_feature_matrix(rows: Iterable[FeatureRow], names: Sequence[str], path) -> None:
    names = list(names)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*META_COLUMNS, *names])
        for row in rows:
            vals = np.asarray(row.values, dtype=float)
            if vals.shape != (len(names),):
                raise DataError(f"row {row.case_id}/{row.view} has {vals.size} values, "
                                f"layout has {len(names)}")
            w.writerow([row.case_id, row.view, row.label, *map(_fmt, vals)])


@dataclass
class FeatureMatrix:
    names: list[str]
    case_ids: list[str]
    views: list[str]
    labels: list[str]
    values: np.ndarray  # (n_regions, n_features)

    def __len__(self):
        return len(self.case_ids)

    def rows(self) -> list[FeatureRow]:
        return [FeatureRow(c, v, l, self.values[i])
                for i, (c, v, l) in enumerate(zip(self.case_ids, self.views, self.labels))]

    @property
    def y(self) -> np.ndarray:
        """+1 for malignant, -1 for benign."""
        return np.where(np.asarray(self.labels) == "malignant", 1, -1)


def load_feature_matrix(path) -> FeatureMatrix:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header[:3]) != META_COLUMNS:
            raise DataError(f"{path}: header must start with {','.join(META_COLUMNS)}")
        names = header[3:]
        cases, views, labels, values = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
            cases.append(row[0])
            views.append(row[1])
            labels.append(row[2])
            try:
                vals = [float(v) for v in row[3:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric feature value") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            values.append(vals)
    arr = np.array(values, dtype=float).reshape(len(values), len(names))
    return FeatureMatrix(names, cases, views, labels, arr)
