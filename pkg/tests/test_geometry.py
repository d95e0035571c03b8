import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lesionrp.geometry import DERIVED_GEOMETRY_NAMES, GEOMETRY_NAMES, feret, geometric_features

NAMES = GEOMETRY_NAMES + DERIVED_GEOMETRY_NAMES


def feats(bits):
    return dict(zip(NAMES, geometric_features(bits)))


def disk_mask(size, r, cy=None, cx=None):
    yy, xx = np.mgrid[:size, :size]
    cy = size / 2 if cy is None else cy
    cx = size / 2 if cx is None else cx
    return np.hypot(yy - cy, xx - cx) <= r


def caliper_sweep(bits, step_deg=0.02):
    """Projected widths of all pixel corners over a fine sweep of directions."""
    rows, cols = np.nonzero(bits)
    pts = np.concatenate([np.stack([cols + dx, rows + dy], 1)
                          for dx in (-0.5, 0.5) for dy in (-0.5, 0.5)])
    ang = np.deg2rad(np.arange(0, 180, step_deg))
    proj = pts @ np.stack([np.cos(ang), np.sin(ang)])
    widths = proj.max(0) - proj.min(0)
    return widths.max(), widths.min()


def test_names():
    assert len(NAMES) == 23 and len(set(NAMES)) == 23


def test_square():
    m = np.zeros((40, 40), bool)
    m[10:30, 10:30] = True
    f = feats(m)
    assert f["area"] == 400 and f["convex_area"] == 400 and f["filled_area"] == 400
    assert f["extent"] == 1.0 and f["solidity"] == 1.0 and f["euler_number"] == 1.0
    assert math.isclose(f["max_feret_diameter"], 20 * math.sqrt(2))
    assert math.isclose(f["min_feret_diameter"], 20.0)
    assert math.isclose(f["max_feret_angle"] % 90, 45.0)
    assert math.isclose(f["aspect_ratio"], 1.0)
    assert math.isclose(f["equivalent_diameter"], math.sqrt(4 * 400 / math.pi))


def test_disk_circularity_and_eccentricity():
    f = feats(disk_mask(100, 30))
    assert 0.95 <= f["circularity"] <= 1.05
    assert f["eccentricity"] < 0.1
    assert abs(f["max_feret_diameter"] - 61) < 1.5
    assert abs(f["compactness"] * f["circularity"] - 1) < 1e-12


def test_ellipse_eccentricity():
    yy, xx = np.mgrid[:120, :120]
    a, b = 40, 20
    m = ((xx - 60) / a) ** 2 + ((yy - 60) / b) ** 2 <= 1
    f = feats(m)
    assert abs(f["eccentricity"] - math.sqrt(1 - (b / a) ** 2)) < 0.01
    assert abs(abs(f["orientation"]) - 90.0) < 1.0


def test_hole_changes_euler_and_filled_area():
    m = disk_mask(60, 20)
    m[28:32, 28:32] = False
    f = feats(m)
    assert f["euler_number"] == 0.0
    assert f["filled_area"] == f["area"] + 16


@pytest.mark.parametrize("shape", ["rotated_square", "ellipse", "blob"])
def test_feret_against_caliper_sweep(shape, rng):
    yy, xx = np.mgrid[:80, :80]
    if shape == "rotated_square":
        m = np.abs(xx - 40) + np.abs(yy - 40) <= 20
    elif shape == "ellipse":
        u = (xx - 40) * math.cos(0.5) + (yy - 40) * math.sin(0.5)
        v = -(xx - 40) * math.sin(0.5) + (yy - 40) * math.cos(0.5)
        m = (u / 30) ** 2 + (v / 12) ** 2 <= 1
    else:
        m = disk_mask(80, 15) | disk_mask(80, 8, 20, 55)
    dmax, _, dmin, _ = feret(m)
    smax, smin = caliper_sweep(m)
    assert dmax >= smax - 1e-9 and dmax - smax < 1e-3
    assert dmin <= smin + 1e-9 and smin - dmin < 1e-2


@given(st.integers(-15, 15), st.integers(-15, 15), st.integers(0, 1000))
@settings(max_examples=25)
def test_translation_invariance(dy, dx, seed):
    rng = np.random.default_rng(seed)
    base = np.zeros((100, 100), bool)
    base[35:65, 35:65] = rng.random((30, 30)) < 0.85
    base[40:60, 40:60] = True
    moved = np.roll(np.roll(base, dy, 0), dx, 1)
    np.testing.assert_allclose(geometric_features(base), geometric_features(moved), atol=1e-9)


def test_empty_mask_rejected():
    with pytest.raises(ValueError):
        geometric_features(np.zeros((10, 10), bool))
