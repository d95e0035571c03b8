"""Shape descriptors of a segmented lesion mask."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from skimage.measure import perimeter, perimeter_crofton, regionprops

from .segmentation import LesionMask

GEOMETRY_NAMES = (
    "area", "major_axis_length", "minor_axis_length", "eccentricity", "orientation",
    "convex_area", "circularity", "filled_area", "euler_number", "equivalent_diameter",
    "solidity", "extent", "perimeter", "perimeter_old", "max_feret_diameter",
    "max_feret_angle", "min_feret_diameter", "min_feret_angle", "roundness_ratio",
)
DERIVED_GEOMETRY_NAMES = (
    "aspect_ratio", "compactness", "convex_perimeter_ratio", "feret_aspect_ratio",
)


def _corner_points(bits: np.ndarray) -> np.ndarray:
    """(x, y) corners of every foreground pixel, pixel centres at integer coordinates."""
    rows, cols = np.nonzero(bits)
    pts = np.concatenate([
        np.stack([cols + dx, rows + dy], axis=1)
        for dx in (-0.5, 0.5) for dy in (-0.5, 0.5)
    ])
    return np.unique(pts, axis=0)


def _hull(points: np.ndarray) -> np.ndarray:
    try:
        return points[ConvexHull(points).vertices]
    except QhullError:
        return points


def _angle_deg(vx: float, vy: float) -> float:
    # image y grows downwards; report counter-clockwise angles in [0, 180)
    return math.degrees(math.atan2(-vy, vx)) % 180.0


def feret(bits: np.ndarray) -> tuple[float, float, float, float]:
    """(max diameter, its angle, min caliper width, its angle), angles in degrees."""
    hull = _hull(_corner_points(bits))
    diff = hull[:, None, :] - hull[None, :, :]
    d2 = (diff ** 2).sum(-1)
    a, b = np.unravel_index(np.argmax(d2), d2.shape)
    vmax = hull[b] - hull[a]
    dmax = float(math.sqrt(d2[a, b]))

    n = len(hull)
    best_w, best_dir = math.inf, (1.0, 0.0)
    for k in range(n):
        e = hull[(k + 1) % n] - hull[k]
        norm = math.hypot(*e)
        if norm == 0:
            continue
        normal = np.array([-e[1], e[0]]) / norm
        proj = (hull - hull[k]) @ normal
        w = float(proj.max() - proj.min())
        if w < best_w:
            best_w, best_dir = w, (normal[0], normal[1])
    return dmax, _angle_deg(*vmax), best_w, _angle_deg(*best_dir)


def _convex_perimeter(bits: np.ndarray) -> float:
    hull = _hull(_corner_points(bits))
    return float(np.linalg.norm(hull - np.roll(hull, -1, axis=0), axis=1).sum())


def geometric_features(mask: LesionMask | np.ndarray) -> np.ndarray:
    """19 shape descriptors followed by 4 derived ratios (see GEOMETRY_NAMES)."""
    bits = np.asarray(mask.bits if isinstance(mask, LesionMask) else mask, dtype=bool)
    if not bits.any():
        raise ValueError("empty mask")
    props = regionprops(bits.astype(np.uint8))[0]
    area = float(props.area)
    major = float(props.axis_major_length)
    minor = float(props.axis_minor_length)
    per = float(perimeter_crofton(bits, 4))
    per_old = float(perimeter(bits, 4))
    fmax, fmax_ang, fmin, fmin_ang = feret(bits)
    circ = 4 * math.pi * area / per ** 2 if per > 0 else 0.0

    base = [
        area, major, minor, float(props.eccentricity), math.degrees(props.orientation),
        float(props.area_convex), circ, float(props.area_filled), float(props.euler_number),
        float(props.equivalent_diameter_area), float(props.solidity), float(props.extent),
        per, per_old, fmax, fmax_ang, fmin, fmin_ang,
        4 * area / (math.pi * major ** 2) if major > 0 else 0.0,
    ]
    derived = [
        major / minor if minor > 0 else 0.0,
        per ** 2 / (4 * math.pi * area),
        _convex_perimeter(bits) / per if per > 0 else 0.0,
        fmin / fmax if fmax > 0 else 0.0,
    ]
    return np.array(base + derived, dtype=float)
