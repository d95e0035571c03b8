"""Intensity statistics and gray-level texture matrices (GLDM, GLCM, GLRLM).

All matrices are built from integer counts first and normalised last, so any
permutation of directions (e.g. a 90 degree rotation of the input) produces
bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import Roi
from .segmentation import BlobSet, LesionMask, Region

LEVELS = 16
GLCM_DISTANCE = 2
GLDM_DISTANCE = 11

# (drow, dcol) for 0, 45, 90, 135 degrees; rows grow downwards
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))


def _region(obj) -> Region:
    if isinstance(obj, Region):
        return obj
    if isinstance(obj, Roi):
        obj = obj.pixels
    a = np.asarray(obj, dtype=float)
    return Region(a, np.ones(a.shape, dtype=bool))


def _xlog2x(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def quantize(region, levels: int = LEVELS) -> np.ndarray:
    """Uniform binning of the region's [min, max] into ``levels`` bins; -1 outside the mask."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    reg = _region(region)
    q = np.full(reg.image.shape, -1, dtype=np.int64)
    vals = reg.values
    if vals.size == 0:
        return q
    lo, hi = vals.min(), vals.max()
    if hi > lo:
        lv = np.floor((vals - lo) / (hi - lo) * levels).astype(np.int64)
        q[reg.mask] = np.minimum(lv, levels - 1)
    else:
        q[reg.mask] = 0
    return q


def _shift_pairs(a: np.ndarray, dr: int, dc: int):
    """Views (first, second) with second[k] = a[r + dr, c + dc] for all in-bounds pairs."""
    h, w = a.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    if r1 <= r0 or c1 <= c0:
        return a[:0, :0], a[:0, :0]
    return a[r0:r1, c0:c1], a[r0 + dr:r1 + dr, c0 + dc:c1 + dc]


@dataclass(frozen=True)
class GlcmMatrix:
    P: np.ndarray
    distance: int
    normalized: bool = True

    @property
    def levels(self) -> int:
        return self.P.shape[0]


def glcm_counts(q: np.ndarray, levels: int, distance: int) -> np.ndarray:
    """Symmetric co-occurrence counts summed over the four directions."""
    counts = np.zeros(levels * levels, dtype=np.int64)
    for dr, dc in GLCM_OFFSETS:
        a, b = _shift_pairs(q, dr * distance, dc * distance)
        ok = (a >= 0) & (b >= 0)
        counts += np.bincount((a[ok] * levels + b[ok]).ravel(), minlength=levels * levels)
    m = counts.reshape(levels, levels)
    return m + m.T


def glcm(region, levels: int = LEVELS, distance: int = GLCM_DISTANCE) -> GlcmMatrix:
    q = quantize(region, levels)
    m = glcm_counts(q, levels, distance)
    total = m.sum()
    if total == 0:
        # too few pixels for any pair: fall back to self co-occurrence
        valid = q[q >= 0]
        if valid.size == 0:
            raise ValueError("empty region")
        m = np.zeros((levels, levels), dtype=np.int64)
        m[valid[0], valid[0]] = 1
        total = 1
    return GlcmMatrix(m / total, distance)


GLCM_FEATURE_NAMES = (
    # Haralick's 14
    "asm", "contrast", "correlation", "sum_of_squares", "idm",
    "sum_average", "sum_variance", "sum_entropy", "entropy",
    "difference_variance", "difference_entropy", "imc1", "imc2",
    "max_correlation_coeff",
    # extended co-occurrence statistics
    "autocorrelation", "cluster_shade", "cluster_prominence", "cluster_tendency",
    "dissimilarity", "max_probability", "homogeneity", "energy", "joint_average",
    "inverse_difference_normalized", "inverse_difference_moment_normalized",
    "inverse_variance", "difference_energy", "sum_energy", "diagonal_probability",
    "marginal_entropy", "mutual_information", "hxy1", "hxy2",
    "contrast_normalized", "dissimilarity_normalized", "autocorrelation_normalized",
    "marginal_skewness", "marginal_kurtosis", "difference_max_probability",
    "sum_max_probability", "marginal_energy", "difference_mode", "sum_mode",
    "normalized_entropy",
)
assert len(GLCM_FEATURE_NAMES) == 44


def _max_correlation_coeff(P: np.ndarray, px: np.ndarray, py: np.ndarray) -> float:
    rows = px > 0
    cols = py > 0
    if rows.sum() < 2:
        return 0.0
    A = P[np.ix_(rows, cols)] / np.sqrt(px[rows][:, None] * py[cols][None, :])
    # eigenvalues of Q = D^-1/2 A A^T D^-1/2 are the squared singular values of A
    s = np.linalg.svd(A, compute_uv=False)
    if s.size < 2:
        return 0.0
    return float(min(1.0, s[1]))


def glcm_features(g: GlcmMatrix | np.ndarray) -> np.ndarray:
    P = np.asarray(g.P if isinstance(g, GlcmMatrix) else g, dtype=float)
    L = P.shape[0]
    lv = np.arange(1, L + 1, dtype=float)
    i, j = np.meshgrid(lv, lv, indexing="ij")
    px, py = P.sum(1), P.sum(0)
    mux, muy = lv @ px, lv @ py
    varx, vary = ((lv - mux) ** 2) @ px, ((lv - muy) ** 2) @ py
    sdx, sdy = np.sqrt(varx), np.sqrt(vary)

    kd = np.abs(i - j).astype(np.int64)
    ks = (i + j).astype(np.int64)
    p_diff = np.bincount(kd.ravel(), weights=P.ravel(), minlength=L)
    p_sum = np.bincount(ks.ravel(), weights=P.ravel(), minlength=2 * L + 1)[2:]
    k_diff = np.arange(L, dtype=float)
    k_sum = np.arange(2, 2 * L + 1, dtype=float)

    hx = -_xlog2x(px).sum()
    hy = -_xlog2x(py).sum()
    hxy = -_xlog2x(P).sum()
    pxpy = np.outer(px, py)
    nz = P > 0
    hxy1 = -float((P[nz] * np.log2(pxpy[nz])).sum())
    hxy2 = -_xlog2x(pxpy).sum()

    asm = float((P ** 2).sum())
    contrast = float(((i - j) ** 2 * P).sum())
    sdprod = sdx * sdy
    correlation = float(((i * j * P).sum() - mux * muy) / sdprod) if sdprod > 0 else 0.0
    sum_avg = float(k_sum @ p_sum)
    diff_avg = float(k_diff @ p_diff)
    maxh = max(hx, hy)
    imc1 = (hxy - hxy1) / maxh if maxh > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))
    cl = i + j - mux - muy
    autocorr = float((i * j * P).sum())
    dissim = float((np.abs(i - j) * P).sum())
    off = i != j
    if sdx > 0:
        m_skew = float(((lv - mux) ** 3) @ px / sdx ** 3)
        m_kurt = float(((lv - mux) ** 4) @ px / sdx ** 4)
    else:
        m_skew = m_kurt = 0.0

    vals = [
        asm,
        contrast,
        correlation,
        float(((i - mux) ** 2 * P).sum()),
        float((P / (1.0 + (i - j) ** 2)).sum()),
        sum_avg,
        float(((k_sum - sum_avg) ** 2) @ p_sum),
        float(-_xlog2x(p_sum).sum()),
        float(hxy),
        float(((k_diff - diff_avg) ** 2) @ p_diff),
        float(-_xlog2x(p_diff).sum()),
        float(imc1),
        imc2,
        _max_correlation_coeff(P, px, py),
        autocorr,
        float((cl ** 3 * P).sum()),
        float((cl ** 4 * P).sum()),
        float((cl ** 2 * P).sum()),
        dissim,
        float(P.max()),
        float((P / (1.0 + np.abs(i - j))).sum()),
        float(np.sqrt(asm)),
        float(mux),
        float((P / (1.0 + np.abs(i - j) / L)).sum()),
        float((P / (1.0 + (i - j) ** 2 / L ** 2)).sum()),
        float((P[off] / (i[off] - j[off]) ** 2).sum()),
        float((p_diff ** 2).sum()),
        float((p_sum ** 2).sum()),
        float(p_diff[0]),
        float(hx),
        float(hx + hy - hxy),
        hxy1,
        float(hxy2),
        contrast / (L - 1) ** 2,
        dissim / (L - 1),
        autocorr / L ** 2,
        m_skew,
        m_kurt,
        float(p_diff.max()),
        float(p_sum.max()),
        float((px ** 2).sum()),
        float(k_diff[np.argmax(p_diff)]),
        float(k_sum[np.argmax(p_sum)]),
        float(hxy / np.log2(L * L)),
    ]
    return np.array(vals, dtype=float)


# ---------------------------------------------------------------- statistics

STATS_NAMES = (
    "mean", "variance", "skewness", "kurtosis", "entropy", "correlation",
    "energy", "rms", "uniformity", "max", "min", "median", "range",
    "mean_abs_deviation", "contrast", "homogeneity", "smoothness", "idm",
    "volume", "std",
)


def stats20(region, full_scale: float = 65535.0, hist_bins: int = 256) -> np.ndarray:
    """The 20 per-region intensity statistics, in STATS_NAMES order.

    ``full_scale`` normalises the variance inside the smoothness term
    1 - 1/(1 + var/full_scale^2). The five co-occurrence scalars come from a
    16-level, distance-1 GLCM of the same region.
    """
    reg = _region(region)
    x = reg.values
    if x.size == 0:
        raise ValueError("empty region")
    n = x.size
    mean = x.mean()
    dev = x - mean
    var = float((dev ** 2).mean())
    sd = np.sqrt(var)
    if sd > 0:
        skew = float((dev ** 3).mean() / sd ** 3)
        kurt = float((dev ** 4).mean() / sd ** 4)
    else:
        skew = kurt = 0.0
    lo, hi = x.min(), x.max()
    if hi > lo:
        idx = np.minimum(((x - lo) / (hi - lo) * hist_bins).astype(int), hist_bins - 1)
        p = np.bincount(idx, minlength=hist_bins) / n
    else:
        p = np.array([1.0])
    entropy = float(-_xlog2x(p).sum())
    uniformity = float((p ** 2).sum())

    G = glcm(reg, LEVELS, 1).P
    lv = np.arange(1, LEVELS + 1, dtype=float)
    i, j = np.meshgrid(lv, lv, indexing="ij")
    px = G.sum(1)
    mu = lv @ px
    gsd = np.sqrt(((lv - mu) ** 2) @ px)
    g_corr = float(((i * j * G).sum() - mu * mu) / gsd ** 2) if gsd > 0 else 0.0

    return np.array([
        mean, var, skew, kurt, entropy, g_corr,
        float((G ** 2).sum()),
        float(np.sqrt((x ** 2).mean())),
        uniformity, hi, lo, float(np.median(x)), hi - lo,
        float(np.abs(dev).mean()),
        float(((i - j) ** 2 * G).sum()),
        float((G / (1.0 + np.abs(i - j))).sum()),
        1.0 - 1.0 / (1.0 + var / full_scale ** 2),
        float((G / (1.0 + (i - j) ** 2)).sum()),
        float(n), sd,
    ], dtype=float)


def stats_group(roi, lesion: LesionMask, blobs: BlobSet, full_scale: float = 65535.0) -> np.ndarray:
    img = np.asarray(roi.pixels if isinstance(roi, Roi) else roi, dtype=float)
    parts = [
        Region(img, np.ones(img.shape, dtype=bool)),
        Region(img, lesion.bits),
        Region(img, blobs.union()),
    ]
    return np.concatenate([stats20(r, full_scale) for r in parts])


# ---------------------------------------------------------------------- GLDM

# (dx, dy) with x = column, y = row, for 0, 45, 90, 135 degrees
GLDM_DIRECTIONS = ((1, 0), (1, 1), (0, 1), (-1, 1))


@dataclass(frozen=True)
class GldmPdf:
    probs: np.ndarray  # probs[i] = P(|I(m,n) - I(m+dx, n+dy)| = i)
    displacement: tuple[int, int]


def gldm_pdfs(roi, d: int = GLDM_DISTANCE, levels: int | None = None) -> list[GldmPdf]:
    if isinstance(roi, Roi):
        levels = levels or 2 ** roi.image.bit_depth
        a = roi.pixels.astype(np.int64)
    else:
        a = np.asarray(roi).astype(np.int64)
        levels = levels or int(a.max()) + 1
    if not 1 <= d < min(a.shape):
        raise ValueError(f"displacement {d} out of range for {a.shape} image")
    out = []
    for ux, uy in GLDM_DIRECTIONS:
        dx, dy = ux * d, uy * d
        first, second = _shift_pairs(a, dy, dx)
        diff = np.abs(first - second).ravel()
        counts = np.bincount(diff, minlength=levels)
        out.append(GldmPdf(counts / counts.sum(), (dx, dy)))
    return out


@dataclass(frozen=True)
class MomentSet:
    mean: float
    std: float
    rms: float
    central: tuple[float, float, float, float]


def pdf_moments(p: np.ndarray) -> MomentSet:
    """Mean, spread and central moments sum_i p_i (x_i - mu)^n, n = 1..4, with x_i = i."""
    p = np.asarray(p, dtype=float)
    x = np.arange(p.size, dtype=float)
    mu = float(p @ x)
    dev = x - mu
    m = tuple(float(p @ dev ** n) for n in (1, 2, 3, 4))
    return MomentSet(mu, float(np.sqrt(max(m[1], 0.0))), float(np.sqrt(p @ x ** 2)), m)


def gldm_features(pdfs: list[GldmPdf]) -> np.ndarray:
    vals = []
    for pdf in pdfs:
        ms = pdf_moments(pdf.probs)
        vals.extend([ms.std, ms.rms, *ms.central])
    return np.array(vals, dtype=float)


# --------------------------------------------------------------------- GLRLM

@dataclass(frozen=True)
class GlrlmMatrix:
    per_direction: np.ndarray  # (4, levels, max_run) run counts, column l-1 = length l

    @property
    def summed(self) -> np.ndarray:
        return self.per_direction.sum(axis=0)


def _direction_lines(q: np.ndarray) -> list[list[np.ndarray]]:
    flip = np.fliplr(q)
    h, w = q.shape
    return [
        list(q),                                                  # 0 degrees: rows
        [flip.diagonal(k) for k in range(-(h - 1), w)],           # 45 degrees: anti-diagonals
        list(q.T),                                                # 90 degrees: columns
        [q.diagonal(k) for k in range(-(h - 1), w)],              # 135 degrees: diagonals
    ]


def _run_counts(lines: list[np.ndarray], levels: int, max_run: int) -> np.ndarray:
    sep = np.array([-2], dtype=np.int64)
    seq = np.concatenate([x for line in lines for x in (line, sep)])
    change = np.flatnonzero(np.diff(seq)) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [seq.size]]))
    vals = seq[starts]
    keep = vals >= 0
    out = np.zeros((levels, max_run), dtype=np.int64)
    np.add.at(out, (vals[keep], lengths[keep] - 1), 1)
    return out


def glrlm_counts(q: np.ndarray, levels: int) -> np.ndarray:
    """Run counts (4, levels, max_run) of a quantised array; -1 marks pixels outside the mask."""
    max_run = max(q.shape)
    return np.stack([_run_counts(lines, levels, max_run) for lines in _direction_lines(q)])


def glrlm(region, levels: int = LEVELS) -> GlrlmMatrix:
    return GlrlmMatrix(glrlm_counts(quantize(region, levels), levels))


GLRLM_FEATURE_NAMES = (
    "short_run_emphasis", "long_run_emphasis", "gray_level_nonuniformity",
    "run_percentage", "run_length_nonuniformity", "low_gray_level_run_emphasis",
    "high_gray_level_run_emphasis",
)


def glrlm_features(R: GlrlmMatrix | np.ndarray) -> np.ndarray:
    M = np.asarray(R.summed if isinstance(R, GlrlmMatrix) else R, dtype=float)
    nr = M.sum()
    if nr == 0:
        raise ValueError("empty run-length matrix")
    g = np.arange(1, M.shape[0] + 1, dtype=float)[:, None]
    l = np.arange(1, M.shape[1] + 1, dtype=float)[None, :]
    return np.array([
        (M / l ** 2).sum() / nr,
        (M * l ** 2).sum() / nr,
        (M.sum(1) ** 2).sum() / nr,
        nr / (M * l).sum(),
        (M.sum(0) ** 2).sum() / nr,
        (M / g ** 2).sum() / nr,
        (M * g ** 2).sum() / nr,
    ], dtype=float)
