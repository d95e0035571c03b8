import numpy as np
import pytest
from hypothesis import given, strategies as st
from PIL import Image

from lesionrp.imaging import (DataError, DatasetManifest, FeatureRow, GrayImage,
                              LesionAnnotation, Roi, extract_roi, load_feature_matrix,
                              load_manifest, load_png16, roi_window, save_feature_matrix,
                              save_manifest, save_png16)
from lesionrp.layout import LAYOUT_V1

HEADER = "case_id,view,image_path,x,y,label\n"


def write(path, text):
    path.write_text(text)
    return path


# ------------------------------------------------------------------ PNG I/O

def test_png_round_trip(tmp_path, rng):
    img = GrayImage(rng.integers(0, 65536, (37, 53)), 16)
    save_png16(img, tmp_path / "a.png")
    back = load_png16(tmp_path / "a.png")
    assert back.bit_depth == 16
    assert np.array_equal(back.pixels, img.pixels)


def test_png_extremes(tmp_path):
    img = GrayImage(np.array([[0, 65535], [1, 2]]), 16)
    save_png16(img, tmp_path / "e.png")
    assert load_png16(tmp_path / "e.png").pixels.tolist() == [[0, 65535], [1, 2]]


def test_png_every_16bit_value(tmp_path):
    img = GrayImage(np.arange(65536).reshape(256, 256), 16)
    save_png16(img, tmp_path / "all.png")
    assert np.array_equal(load_png16(tmp_path / "all.png").pixels, img.pixels)


def test_png_8bit(tmp_path):
    Image.fromarray(np.array([[0, 255], [7, 9]], dtype=np.uint8)).save(tmp_path / "b.png")
    img = load_png16(tmp_path / "b.png")
    assert img.bit_depth == 8
    assert img.pixels.tolist() == [[0, 255], [7, 9]]


def test_png_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_png16(tmp_path / "missing.png")
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(tmp_path / "rgb.png")
    with pytest.raises(DataError):
        load_png16(tmp_path / "rgb.png")
    (tmp_path / "junk.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really")
    with pytest.raises(DataError):
        load_png16(tmp_path / "junk.png")


def test_gray_image_validation():
    with pytest.raises(ValueError):
        GrayImage(np.array([[256]]), 8)
    with pytest.raises(ValueError):
        GrayImage(np.zeros(5), 16)
    with pytest.raises(ValueError):
        GrayImage(np.zeros((2, 2)), 12)
    img = GrayImage(np.zeros((2, 2)), 16)
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1


def test_synth_roi_loads_as_150(small_corpus):
    manifest, root = small_corpus
    img = load_png16(manifest.resolve(manifest.records[0]))
    assert (img.width, img.height) == (150, 150)


# --------------------------------------------------------------------- ROI

def test_interior_crop(rng):
    px = rng.integers(0, 65536, (500, 500))
    roi = extract_roi(GrayImage(px), (250, 250))
    assert np.array_equal(roi.pixels, px[175:325, 175:325])
    assert roi.pixels[75, 75] == px[250, 250]


def _reference_window(h, w, x, y, size=150):
    # independent clamp: walk the window back inside one step at a time
    r0, c0 = y - size // 2, x - size // 2
    while r0 < 0:
        r0 += 1
    while r0 + size > h:
        r0 -= 1
    while c0 < 0:
        c0 += 1
    while c0 + size > w:
        c0 -= 1
    return r0, c0


@given(st.integers(150, 400), st.integers(150, 400), st.data())
def test_border_window_matches_reference(h, w, data):
    x = data.draw(st.integers(0, w - 1))
    y = data.draw(st.integers(0, h - 1))
    assert roi_window((h, w), (x, y)) == _reference_window(h, w, x, y)


def test_corner_crop_shifted():
    px = np.arange(300 * 300).reshape(300, 300) % 65536
    roi = extract_roi(GrayImage(px), (10, 10))
    assert roi.pixels.shape == (150, 150)
    assert np.array_equal(roi.pixels, px[:150, :150])


def test_constant_roi():
    roi = extract_roi(GrayImage(np.full((200, 220), 77)), (100, 100))
    assert np.all(roi.pixels == 77)


def test_roi_errors():
    img = GrayImage(np.zeros((200, 200)))
    with pytest.raises(ValueError):
        extract_roi(img, (200, 5))
    with pytest.raises(ValueError):
        extract_roi(GrayImage(np.zeros((100, 300))), (50, 50))
    with pytest.raises(ValueError):
        Roi(GrayImage(np.zeros((149, 150))))


@given(st.integers(80, 120), st.integers(80, 120), st.integers(-20, 20), st.integers(-20, 20))
def test_roi_translation_consistent(x, y, tx, ty):
    rng = np.random.default_rng(x * 1000 + y)
    big = rng.integers(0, 65536, (400, 400))
    base = big[50:350, 50:350]
    shifted = big[50 - ty:350 - ty, 50 - tx:350 - tx]
    a = extract_roi(GrayImage(base), (x + 30, y + 30)).pixels
    b = extract_roi(GrayImage(shifted), (x + 30 + tx, y + 30 + ty)).pixels
    assert np.array_equal(a, b)


# ---------------------------------------------------------------- manifest

def test_manifest_two_views(tmp_path):
    p = write(tmp_path / "m.csv", HEADER + "C1,CC,a.png,10,20,malignant\nC1,MLO,b.png,5,6,malignant\n")
    m = load_manifest(p)
    assert m.case_ids() == ["C1"]
    assert len(m.records) == 2
    assert m.records[0].center == (10, 20)
    assert m.resolve(m.records[0]) == tmp_path / "a.png"


@pytest.mark.parametrize("body, msg", [
    ("C1,CC,a.png,1,1,malignant\nC1,MLO,b.png,1,1,benign\n", "conflicting"),
    ("C1,CC,a.png,1,1,benign\nC1,CC,b.png,1,1,benign\n", "duplicate"),
    ("C1,XX,a.png,1,1,benign\n", "view"),
    ("C1,CC,a.png,1,1,unknown\n", "label"),
    ("C1,CC,a.png,1.5,1,benign\n", "coordinates"),
    ("C1,CC,a.png,1,benign\n", "fields"),
])
def test_manifest_errors(tmp_path, body, msg):
    p = write(tmp_path / "m.csv", HEADER + body)
    with pytest.raises(DataError, match=msg):
        load_manifest(p)


def test_manifest_more_than_two_views():
    recs = [LesionAnnotation("C1", v, "a.png", (0, 0), "benign") for v in ("CC", "MLO")]
    recs.append(LesionAnnotation("C1", "CC", "b.png", (0, 0), "benign"))
    from lesionrp.imaging import validate_records
    with pytest.raises(DataError):
        validate_records(recs)


def test_manifest_bad_header(tmp_path):
    p = write(tmp_path / "m.csv", "case,view\nC1,CC\n")
    with pytest.raises(DataError, match="header"):
        load_manifest(p)


def test_manifest_round_trip_idempotent(tmp_path):
    recs = tuple(LesionAnnotation(f"C{i}", v, f"img{i}{v}.png", (i, 2 * i),
                                  "malignant" if i % 2 else "benign")
                 for i in range(10) for v in (("CC", "MLO") if i % 3 else ("MLO",)))
    save_manifest(DatasetManifest(recs), tmp_path / "m.csv")
    first = load_manifest(tmp_path / "m.csv")
    save_manifest(first, tmp_path / "m2.csv")
    second = load_manifest(tmp_path / "m2.csv")
    assert first.records == recs == second.records


def test_large_manifest_case_count(tmp_path):
    recs = tuple(LesionAnnotation(f"C{i:04d}", "CC", "x.png", (1, 1), "benign") for i in range(1487))
    save_manifest(DatasetManifest(recs), tmp_path / "m.csv")
    assert len(load_manifest(tmp_path / "m.csv").case_ids()) == 1487


# ---------------------------------------------------------- feature matrix

def test_feature_matrix_empty(tmp_path):
    save_feature_matrix([], LAYOUT_V1.names, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert len(lines) == 1
    assert len(lines[0].split(",")) == 184


def test_feature_matrix_one_row(tmp_path, rng):
    row = FeatureRow("C1", "CC", "benign", rng.normal(size=181))
    save_feature_matrix([row], LAYOUT_V1.names, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert len(lines) == 2
    assert all(len(line.split(",")) == 184 for line in lines)


def test_feature_matrix_round_trip(tmp_path, rng):
    vals = rng.normal(size=(10, 181)) * 10.0 ** rng.integers(-300, 300, size=(10, 181))
    rows = [FeatureRow(f"C{i}", "CC", "malignant", vals[i]) for i in range(10)]
    save_feature_matrix(rows, LAYOUT_V1.names, tmp_path / "f.csv")
    m = load_feature_matrix(tmp_path / "f.csv")
    assert np.array_equal(m.values, vals)
    assert m.names == LAYOUT_V1.names
    assert m.y.tolist() == [1] * 10


def test_feature_matrix_mixed_layouts(tmp_path):
    rows = [FeatureRow("C1", "CC", "benign", np.zeros(181)),
            FeatureRow("C2", "CC", "benign", np.zeros(180))]
    with pytest.raises(DataError):
        save_feature_matrix(rows, LAYOUT_V1.names, tmp_path / "f.csv")


def test_feature_matrix_rejects_nonfinite(tmp_path):
    p = write(tmp_path / "f.csv", "case_id,view,label,a\nC1,CC,benign,nan\n")
    with pytest.raises(DataError):
        load_feature_matrix(p)
