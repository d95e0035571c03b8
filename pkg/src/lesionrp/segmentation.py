"""Lesion segmentation: low-pass differencing, Otsu, open/close, largest blob."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .imaging import Roi

FOUR_CONNECTED = ndi.generate_binary_structure(2, 1)


class SegmentationError(RuntimeError):
    """No lesion could be segmented from the ROI."""


class DegenerateImageError(ValueError):
    """Image has a single distinct value, so no threshold exists."""


@dataclass(frozen=True)
class BlobSet:
    labels: np.ndarray  # int array, 0 = background, blobs labelled 1..n in scan order
    areas: tuple[int, ...]

    def __len__(self):
        return len(self.areas)

    def union(self) -> np.ndarray:
        return self.labels > 0


@dataclass(frozen=True)
class LesionMask:
    bits: np.ndarray  # bool

    @property
    def blob_area(self) -> int:
        return int(self.bits.sum())

    @property
    def shape(self):
        return self.bits.shape


@dataclass(frozen=True)
class Region:
    """Pixels of an image restricted to a mask; pixels outside the mask do not exist."""

    image: np.ndarray
    mask: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.image[self.mask]

    def __len__(self):
        return int(self.mask.sum())


def _as_float(img) -> np.ndarray:
    if isinstance(img, Roi):
        img = img.pixels
    return np.asarray(img, dtype=float)


def mean_filter(img, window: int = 30) -> np.ndarray:
    """Box mean with replicate padding.

    Even windows are anchored so the current pixel sits at offset window//2,
    i.e. the box spans [i - window//2, i + (window - 1)//2].
    """
    a = _as_float(img)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > 2 * min(a.shape):
        raise ValueError(f"window {window} larger than twice the image side")
    return ndi.uniform_filter(a, size=window, mode="nearest")


def highpass_residual(img, window: int = 30) -> np.ndarray:
    a = _as_float(img)
    return np.abs(a - mean_filter(a, window))


def _minmax(a: np.ndarray) -> np.ndarray:
    lo, hi = a.min(), a.max()
    if hi <= lo:
        return np.zeros_like(a, dtype=float)
    return (a - lo) / (hi - lo)


def enhance(img, residual: np.ndarray) -> np.ndarray:
    a = _as_float(img)
    if a.shape != residual.shape:
        raise ValueError("shape mismatch")
    return _minmax(_minmax(a) + _minmax(np.asarray(residual, dtype=float)))


def _otsu_cut(a: np.ndarray, bins: int = 256):
    """Histogram bin index of each pixel and the Otsu cut: bins <= cut are background."""
    lo, hi = a.min(), a.max()
    if hi <= lo:
        raise DegenerateImageError("constant image has no Otsu threshold")
    idx = np.minimum(((a - lo) / (hi - lo) * bins).astype(int), bins - 1)
    p = np.bincount(idx.ravel(), minlength=bins) / idx.size
    w0 = np.cumsum(p)[:-1]
    m0 = np.cumsum(p * np.arange(bins))[:-1]
    mu = np.dot(p, np.arange(bins))
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu * w0 - m0) ** 2 / (w0 * (1.0 - w0))
    between[~np.isfinite(between)] = -1.0
    return idx, int(np.argmax(between))


def otsu_threshold(img: np.ndarray, bins: int = 256) -> float:
    a = np.asarray(img, dtype=float)
    _, cut = _otsu_cut(a, bins)
    lo, hi = a.min(), a.max()
    return lo + (cut + 1) / bins * (hi - lo)


def binarize_otsu(img: np.ndarray, bins: int = 256) -> np.ndarray:
    idx, cut = _otsu_cut(np.asarray(img, dtype=float), bins)
    return idx > cut


def disk(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


def morph_open_close(mask: np.ndarray, radius: int = 3) -> np.ndarray:
    """Opening followed by closing with a disk, treating outside the image as background."""
    m = np.asarray(mask, dtype=bool)
    if radius <= 0:
        return m.copy()
    se = disk(radius)
    pad = 2 * radius + 1
    p = np.pad(m, pad)
    p = ndi.binary_dilation(ndi.binary_erosion(p, se), se)
    p = ndi.binary_erosion(ndi.binary_dilation(p, se), se)
    return p[pad:-pad, pad:-pad]


def label_blobs(mask: np.ndarray, min_area: int = 50) -> BlobSet:
    m = np.asarray(mask, dtype=bool)
    lab, n = ndi.label(m, structure=FOUR_CONNECTED)
    if n == 0:
        return BlobSet(np.zeros(m.shape, dtype=np.int32), ())
    areas = np.bincount(lab.ravel(), minlength=n + 1)[1:]
    keep = np.flatnonzero(areas > min_area)
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[keep + 1] = np.arange(1, keep.size + 1)
    return BlobSet(remap[lab], tuple(int(a) for a in areas[keep]))


def select_largest_blob(blobs: BlobSet) -> LesionMask:
    if not len(blobs):
        raise SegmentationError("no lesion found")
    best = int(np.argmax(blobs.areas)) + 1  # argmax returns the first maximum
    return LesionMask(blobs.labels == best)


def apply_mask(img, mask) -> Region:
    a = _as_float(img)
    bits = mask.bits if isinstance(mask, LesionMask) else np.asarray(mask, dtype=bool)
    if a.shape != bits.shape:
        raise ValueError("shape mismatch")
    return Region(a, bits.copy())


@dataclass(frozen=True)
class SegmentationParams:
    window: int = 30
    radius: int = 3
    min_area: int = 50


@dataclass(frozen=True)
class SegmentationResult:
    roi: np.ndarray
    residual: np.ndarray
    enhanced: np.ndarray
    morphed: np.ndarray
    blobs: BlobSet
    lesion: LesionMask

    @property
    def region(self) -> Region:
        return apply_mask(self.roi, self.lesion)

    def stages(self) -> dict[str, np.ndarray]:
        """Intermediate images (a)-(f), each scaled to [0, 1] for dumping."""
        return {
            "a_roi": _minmax(self.roi),
            "b_residual": _minmax(self.residual),
            "c_enhanced": self.enhanced,
            "d_morphology": self.blobs.union().astype(float),
            "e_lesion_mask": self.lesion.bits.astype(float),
            "f_lesion": np.where(self.lesion.bits, _minmax(self.roi), 0.0),
        }


def segment(roi, params: SegmentationParams = SegmentationParams()) -> SegmentationResult:
    a = _as_float(roi)
    residual = highpass_residual(a, params.window)
    enhanced = enhance(a, residual)
    try:
        binary = binarize_otsu(enhanced)
    except DegenerateImageError as exc:
        raise SegmentationError(str(exc)) from exc
    morphed = morph_open_close(binary, params.radius)
    blobs = label_blobs(morphed, params.min_area)
    lesion = select_largest_blob(blobs)
    return SegmentationResult(a, residual, enhanced, morphed, blobs, lesion)
