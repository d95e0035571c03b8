import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lesionrp.wavelet import (DB4_SCALING, DB4_WAVELET, analysis_matrix, dump_coefficients,
                              dwt2_db4, idwt2_db4, lesion_patch, subband_pca, wavelet_features)

# published decomposition low-pass filter of db4 (time reversed scaling filter)
PUBLISHED_DEC_LO = [
    -0.010597401784997278, 0.032883011666982945, 0.030841381835986965, -0.18703481171888114,
    -0.02798376941698385, 0.6308807679295904, 0.7148465705525415, 0.23037781330885523,
]


def test_filter_conditions():
    h = DB4_SCALING
    assert np.isclose(h.sum(), np.sqrt(2), atol=1e-14)
    for k in range(4):
        assert np.isclose(np.dot(h[:8 - 2 * k], h[2 * k:]), float(k == 0), atol=1e-14)
    n = np.arange(8)
    for m in range(4):
        assert abs(np.sum((-1.0) ** n * n ** m * h)) < 1e-10
    np.testing.assert_allclose(h[::-1], PUBLISHED_DEC_LO, atol=1e-12)
    assert np.isclose(DB4_WAVELET.sum(), 0.0, atol=1e-14)


@pytest.mark.parametrize("n", [8, 10, 38, 150])
def test_analysis_matrix_orthonormal_and_matches_loop(n):
    W = analysis_matrix(n)
    assert np.allclose(W @ W.T, np.eye(n), atol=1e-12)
    x = np.random.default_rng(n).normal(size=n)
    lo = [sum(DB4_SCALING[t] * x[(2 * k + t) % n] for t in range(8)) for k in range(n // 2)]
    hi = [sum(DB4_WAVELET[t] * x[(2 * k + t) % n] for t in range(8)) for k in range(n // 2)]
    np.testing.assert_allclose(W @ x, lo + hi, atol=1e-12)


def test_constant_image_has_no_detail():
    s = dwt2_db4(np.full((64, 64), 123.0))
    for lv in s.levels:
        for band in (lv.LH, lv.HL, lv.HH):
            assert np.abs(band).max() < 1e-9


def test_ramp_killed_by_vanishing_moments():
    # polynomial of degree <= 3 along rows, away from the periodic wrap
    x = np.tile(np.arange(32.0) ** 2, (32, 1))
    lv = dwt2_db4(x, 1).levels[0]
    assert np.abs(lv.HL[:, :12]).max() < 1e-8


def test_subband_shapes():
    s = dwt2_db4(np.zeros((150, 150)) + 1.0)
    assert [lv.LL.shape for lv in s.levels] == [(75, 75), (38, 38), (19, 19)]


@given(st.integers(8, 60), st.integers(8, 60), st.integers(1, 3), st.integers(0, 1000))
@settings(max_examples=30)
def test_reconstruction_and_energy(h, w, levels, seed):
    x = np.random.default_rng(seed).normal(size=(h, w)) * 1000
    if min(h, w) < 8 * 2 ** (levels - 1):
        levels = 1
    s = dwt2_db4(x, levels)
    back = idwt2_db4(s)
    assert np.linalg.norm(back - x) / np.linalg.norm(x) < 1e-10
    energy = sum((c ** 2).sum() for c in s.coefficients())
    assert abs(energy - (x ** 2).sum()) / (x ** 2).sum() < 1e-10


def test_reconstruction_on_roi(rng):
    x = rng.integers(0, 65536, (150, 150)).astype(float)
    s = dwt2_db4(x)
    assert np.linalg.norm(idwt2_db4(s) - x) / np.linalg.norm(x) < 1e-10


def test_small_image_rejected():
    with pytest.raises(ValueError):
        dwt2_db4(np.zeros((7, 20)))


def test_subband_pca_matches_eigh(rng):
    s = dwt2_db4(rng.normal(size=(150, 150)) * 50 + np.add.outer(np.arange(150), np.arange(150)))
    basis = subband_pca(s)
    evals, evecs = np.linalg.eigh(np.cov(basis.data))
    np.testing.assert_allclose(basis.variances, evals[::-1], rtol=1e-9)
    for c in range(4):
        assert abs(abs(basis.components[:, c] @ evecs[:, 3 - c]) - 1) < 1e-8
    assert np.allclose(basis.components.T @ basis.components, np.eye(4), atol=1e-12)
    assert basis.principal_map().shape == (19, 19)


def test_subband_pca_constant_input():
    basis = subband_pca(dwt2_db4(np.full((64, 64), 5.0)))
    assert np.array_equal(basis.components, np.eye(4))
    with pytest.raises(ValueError):
        subband_pca(dwt2_db4(np.zeros((64, 64))))


def test_lesion_patch_and_features(rng):
    px = rng.integers(0, 4000, (150, 150)).astype(float)
    yy, xx = np.mgrid[:150, :150]
    mask = np.hypot(yy - 70, xx - 80) <= 20
    px[mask] += 20000
    patch = lesion_patch(px, mask)
    assert patch.shape == (41, 41)
    assert patch.min() >= 20000
    tiny = np.zeros((150, 150), bool)
    tiny[0, 149] = True
    assert lesion_patch(px, tiny).shape == (8, 8)
    f = wavelet_features(px, mask)
    assert f.shape == (23,) and np.isfinite(f).all()


def test_dump_coefficients(tmp_path, rng):
    s = dwt2_db4(rng.normal(size=(40, 40)), 2)
    dump_coefficients(s, tmp_path / "c.npz")
    z = np.load(tmp_path / "c.npz")
    assert sorted(z.files) == sorted(f"level{i}_{b}" for i in (1, 2) for b in ("LL", "LH", "HL", "HH"))
    assert np.array_equal(z["level2_HH"], s.levels[1].HH)
