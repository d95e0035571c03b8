"""Three-level Db4 decomposition and principal-component wavelet features."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imaging import Roi
from .segmentation import LesionMask
from .texture import STATS_NAMES, stats20

# Daubechies scaling filter with four vanishing moments (8 taps), derived by
# minimum-phase spectral factorisation at 40 digits.
DB4_SCALING = np.array([
    0.2303778133088965008632912,
    0.714846570552915647089922,
    0.6308807679298589078817163,
    -0.02798376941685985421141375,
    -0.1870348117190930840795707,
    0.03084138183556076362721936,
    0.03288301166688519973540751,
    -0.01059740178506903210488321,
])
DB4_WAVELET = np.array([(-1) ** n * DB4_SCALING[-1 - n] for n in range(8)])

WAVELET_STAT_NAMES = (
    "contrast", "correlation", "energy", "homogeneity", "mean", "std", "entropy",
    "rms", "variance", "smoothness", "kurtosis", "skewness", "idm",
)
LESION_WAVELET_STAT_NAMES = WAVELET_STAT_NAMES[:10]


@lru_cache(maxsize=64)
def analysis_matrix(n: int) -> np.ndarray:
    """Orthonormal periodised Db4 analysis operator for an even length ``n``."""
    if n % 2:
        raise ValueError("analysis length must be even")
    half = n // 2
    W = np.zeros((n, n))
    for k in range(half):
        for t in range(8):
            col = (2 * k + t) % n
            W[k, col] += DB4_SCALING[t]
            W[half + k, col] += DB4_WAVELET[t]
    W.setflags(write=False)
    return W


def _even(n: int) -> int:
    return n + (n % 2)


@dataclass(frozen=True)
class SubbandLevel:
    LL: np.ndarray
    LH: np.ndarray  # low-pass across columns, high-pass down rows
    HL: np.ndarray  # high-pass across columns, low-pass down rows
    HH: np.ndarray
    input_shape: tuple[int, int]


@dataclass(frozen=True)
class SubbandSet:
    levels: tuple[SubbandLevel, ...]
    filter: str = "db4"

    @property
    def deepest(self) -> SubbandLevel:
        return self.levels[-1]

    def coefficients(self) -> list[np.ndarray]:
        """Non-redundant coefficient set: deepest LL plus every detail band."""
        out = [self.deepest.LL]
        for lv in self.levels:
            out += [lv.LH, lv.HL, lv.HH]
        return out


def dwt2_level(x: np.ndarray) -> SubbandLevel:
    h, w = x.shape
    # odd sides are zero-padded, which keeps the transform energy preserving
    xp = np.zeros((_even(h), _even(w)))
    xp[:h, :w] = x
    Wr, Wc = analysis_matrix(xp.shape[0]), analysis_matrix(xp.shape[1])
    y = Wr @ xp @ Wc.T
    hr, hc = xp.shape[0] // 2, xp.shape[1] // 2
    return SubbandLevel(y[:hr, :hc], y[hr:, :hc], y[:hr, hc:], y[hr:, hc:], (h, w))


def idwt2_level(level: SubbandLevel, LL: np.ndarray | None = None) -> np.ndarray:
    LL = level.LL if LL is None else LL
    y = np.block([[LL, level.HL], [level.LH, level.HH]])
    Wr, Wc = analysis_matrix(y.shape[0]), analysis_matrix(y.shape[1])
    x = Wr.T @ y @ Wc
    h, w = level.input_shape
    return x[:h, :w]


def dwt2_db4(image, levels: int = 3) -> SubbandSet:
    x = np.asarray(image.pixels if isinstance(image, Roi) else image, dtype=float)
    if min(x.shape) < 8:
        raise ValueError(f"image side must be >= 8, got {x.shape}")
    out = []
    for _ in range(levels):
        lv = dwt2_level(x)
        out.append(lv)
        x = lv.LL
    return SubbandSet(tuple(out))


def idwt2_db4(s: SubbandSet) -> np.ndarray:
    x = s.deepest.LL
    for lv in reversed(s.levels):
        x = idwt2_level(lv, x)
    return x


def dump_coefficients(s: SubbandSet, path) -> None:
    """Save every level's four grids to an .npz archive, keys like ``level1_LH``."""
    grids = {f"level{i}_{band}": getattr(lv, band)
             for i, lv in enumerate(s.levels, 1) for band in ("LL", "LH", "HL", "HH")}
    np.savez(path, **grids)


@dataclass(frozen=True)
class SubbandPcaBasis:
    components: np.ndarray  # (4, 4), column c is the c-th principal direction
    variances: np.ndarray   # descending
    data: np.ndarray        # (4, M) stacked LL, LH, HL, HH of the deepest level
    grid_shape: tuple[int, int]

    def principal_map(self, index: int = 0) -> np.ndarray:
        return (self.components[:, index] @ self.data).reshape(self.grid_shape)


def subband_pca(s: SubbandSet) -> SubbandPcaBasis:
    d = s.deepest
    data = np.stack([d.LL.ravel(), d.LH.ravel(), d.HL.ravel(), d.HH.ravel()])
    if not np.any(data):
        raise ValueError("all-zero subband matrix")
    m = data.shape[1]
    centred = data - data.mean(axis=1, keepdims=True)
    U, sv, _ = np.linalg.svd(centred, full_matrices=True)
    var = np.zeros(4)
    var[:sv.size] = sv ** 2 / max(m - 1, 1)
    if var[0] <= 1e-12 * max(1.0, float(np.abs(data).max()) ** 2):
        # no spread at all: keep the subband axes, approximation band first
        U, var = np.eye(4), np.zeros(4)
    else:
        signs = np.sign(U[np.argmax(np.abs(U), axis=0), np.arange(4)])
        U = U * np.where(signs == 0, 1.0, signs)
    return SubbandPcaBasis(U, var, data, d.LL.shape)


def _map_stats(pc_map: np.ndarray, names) -> np.ndarray:
    scale = float(np.abs(pc_map).max()) or 1.0
    full = dict(zip(STATS_NAMES, stats20(pc_map, full_scale=scale)))
    return np.array([full[n] for n in names])


def lesion_patch(roi_pixels: np.ndarray, mask: np.ndarray, min_side: int = 8) -> np.ndarray:
    """Bounding box of the mask (grown to ``min_side``), background filled with the lesion mean."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ValueError("empty lesion mask")
    bounds = []
    for lo, hi, size in ((rows.min(), rows.max() + 1, mask.shape[0]),
                         (cols.min(), cols.max() + 1, mask.shape[1])):
        if hi - lo < min_side:
            lo = max(0, lo - (min_side - (hi - lo)) // 2)
            hi = min(size, lo + min_side)
            lo = max(0, hi - min_side)
        bounds.append((lo, hi))
    (r0, r1), (c0, c1) = bounds
    patch = np.asarray(roi_pixels, dtype=float)[r0:r1, c0:c1].copy()
    sub = mask[r0:r1, c0:c1]
    patch[~sub] = patch[sub].mean()
    return patch


def wavelet_features(roi, lesion: LesionMask | np.ndarray, levels: int = 3) -> np.ndarray:
    """13 descriptors of the ROI's principal wavelet map, then 10 of the lesion's."""
    px = np.asarray(roi.pixels if isinstance(roi, Roi) else roi, dtype=float)
    bits = np.asarray(lesion.bits if isinstance(lesion, LesionMask) else lesion, dtype=bool)
    roi_map = subband_pca(dwt2_db4(px, levels)).principal_map()
    les_map = subband_pca(dwt2_db4(lesion_patch(px, bits), levels)).principal_map()
    return np.concatenate([
        _map_stats(roi_map, WAVELET_STAT_NAMES),
        _map_stats(les_map, LESION_WAVELET_STAT_NAMES),
    ])
