"""Seeded synthetic two-view lesion ROIs with ground-truth masks.

Benign lesions are smooth, elliptical bumps with soft edges. Malignant lesions
carry radial spikes and lobulation, sharper edges and a heterogeneous core, all
scaled by a per-case severity; mild malignant cases look nearly benign, which
keeps the default task learnable but far from trivial.
Every case draws from its own stream seeded by (seed, case index), so output
does not depend on generation order or parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage as ndi

from .imaging import (DatasetManifest, GrayImage, LesionAnnotation, save_manifest,
                      save_png16)


@dataclass(frozen=True)
class SynthConfig:
    n_cases: int = 200
    two_view_fraction: float = 0.68
    malignant_fraction: float = 0.433
    noise: float = 400.0          # white-noise std, 16-bit intensity units
    texture_scale: float = 4.0    # smoothing sigma of the background texture, pixels
    texture_amplitude: float = 1500.0
    spiculation: float = 0.45     # relative spike height of malignant lesions
    benign_smoothness: float = 2.5  # edge blur sigma of benign lesions, pixels
    min_severity: float = 0.1     # malignant severity is uniform on [min_severity, 1]
    image_size: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.n_cases < 1:
            raise ValueError("n_cases must be >= 1")
        for name in ("two_view_fraction", "malignant_fraction", "min_severity"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.image_size < 150:
            raise ValueError("image_size must be >= 150")


@dataclass
class SynthView:
    view: str
    image: np.ndarray  # uint16
    mask: np.ndarray   # bool ground truth
    center: tuple[int, int]


@dataclass
class SynthCase:
    case_id: str
    label: str
    views: list[SynthView]


def floor_plus_remainder(fraction: float, n: int, rng: np.random.Generator) -> int:
    """floor(fraction * n), plus one with probability equal to the fractional remainder."""
    exact = fraction * n
    base = math.floor(exact)
    return base + int(rng.random() < exact - base)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _radius_fn(malignant: bool, severity: float, cfg: SynthConfig, rng: np.random.Generator):
    """Case-level shape: returns a function (theta, view_rng) -> radius."""
    R = rng.uniform(15.0, 24.0)
    phase = rng.uniform(0, 2 * np.pi)
    if malignant:
        n_spikes = int(rng.integers(4, 12))
        angles = rng.uniform(-np.pi, np.pi, n_spikes)
        heights = severity * cfg.spiculation * rng.uniform(0.6, 1.0, n_spikes)
        lobes = rng.uniform(0.03, 0.12)

        def radius(theta, vr):
            jitter = vr.normal(0.0, 0.08, n_spikes)
            r = 1.0 + lobes * np.sin(3 * theta + phase)
            for a, h, j in zip(angles, heights, jitter):
                r = r + h * np.exp(-(_wrap(theta - a - j) / 0.13) ** 2)
            return R * vr.uniform(0.9, 1.1) * r
    else:
        aspect = rng.uniform(1.0, 1.4)
        wobble = rng.uniform(0.0, 0.08)

        def radius(theta, vr):
            tilt = vr.uniform(-np.pi, np.pi)
            ell = 1.0 / np.sqrt(np.cos(theta - tilt) ** 2 + (np.sin(theta - tilt) / aspect) ** 2)
            return R * vr.uniform(0.9, 1.1) * ell * (1.0 + wobble * np.sin(3 * theta + phase))
    return radius


def _render_view(view: str, malignant: bool, severity: float, radius, cfg: SynthConfig,
                 vr: np.random.Generator) -> SynthView:
    n = cfg.image_size
    c = n // 2
    yy, xx = np.mgrid[:n, :n].astype(float)
    dx, dy = xx - c, yy - c
    theta = np.arctan2(dy, dx)
    rot = vr.uniform(-np.pi, np.pi)
    mask = np.hypot(dx, dy) <= radius(_wrap(theta - rot), vr)
    # keep the single component containing the centre
    lab, _ = ndi.label(mask)
    mask = lab == lab[c, c]

    tex = ndi.gaussian_filter(vr.normal(size=(n, n)), cfg.texture_scale)
    tex /= tex.std() or 1.0
    background = vr.uniform(14000, 22000) + cfg.texture_amplitude * tex
    background += 800.0 * (xx / n - 0.5) * vr.normal()

    # severe malignant lesions have sharp edges, mild ones blur like benign ones
    edge_sigma = cfg.benign_smoothness - severity * (cfg.benign_smoothness - 1.0)
    profile = ndi.gaussian_filter(mask.astype(float), edge_sigma * vr.uniform(0.8, 1.2))
    contrast = vr.uniform(5000, 8000)
    core = 1.0
    if malignant:
        core = 1.0 + severity * 0.18 * ndi.gaussian_filter(vr.normal(size=(n, n)), 1.5) / 0.19
    img = background + contrast * profile * core + vr.normal(0.0, cfg.noise, (n, n))
    img = np.clip(np.rint(img), 0, 65535).astype(np.uint16)
    return SynthView(view, img, mask, (c, c))


def generate_case(cfg: SynthConfig, index: int, malignant: bool, two_view: bool) -> SynthCase:
    rng = np.random.default_rng((cfg.seed, index + 1))
    severity = rng.uniform(cfg.min_severity, 1.0) if malignant else 0.0
    radius = _radius_fn(malignant, severity, cfg, rng)
    views = ("CC", "MLO") if two_view else (("CC", "MLO")[int(rng.integers(2))],)
    out = [_render_view(v, malignant, severity, radius, cfg, np.random.default_rng((cfg.seed, index + 1, k)))
           for k, v in enumerate(views)]
    return SynthCase(f"C{index + 1:04d}", "malignant" if malignant else "benign", out)


def case_plan(cfg: SynthConfig) -> list[tuple[int, bool, bool]]:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_cases
    n_mal = floor_plus_remainder(cfg.malignant_fraction, n, rng)
    n_two = floor_plus_remainder(cfg.two_view_fraction, n, rng)
    malignant = np.zeros(n, dtype=bool)
    malignant[rng.permutation(n)[:n_mal]] = True
    two = np.zeros(n, dtype=bool)
    two[rng.permutation(n)[:n_two]] = True
    return [(i, bool(malignant[i]), bool(two[i])) for i in range(n)]


def _write_case(args) -> list[LesionAnnotation]:
    cfg, out_dir, (index, malignant, two_view) = args
    case = generate_case(cfg, index, malignant, two_view)
    records = []
    for v in case.views:
        stem = f"{case.case_id}_{v.view}.png"
        save_png16(GrayImage(v.image, 16), out_dir / "images" / stem)
        (out_dir / "masks").mkdir(parents=True, exist_ok=True)
        Image.fromarray(v.mask.astype(np.uint8) * 255).save(out_dir / "masks" / stem)
        records.append(LesionAnnotation(case.case_id, v.view, f"images/{stem}", v.center,
                                        case.label))
    return records


def generate_dataset(cfg: SynthConfig, out_dir, jobs: int = 1) -> DatasetManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, out_dir, p) for p in case_plan(cfg)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            per_case = list(ex.map(_write_case, tasks, chunksize=8))
    else:
        per_case = [_write_case(t) for t in tasks]
    manifest = DatasetManifest(tuple(r for recs in per_case for r in recs), root=out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    return manifest


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im) > 0
