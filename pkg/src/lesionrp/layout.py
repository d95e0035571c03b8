"""The frozen 181-feature layout and vector assembly."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .geometry import DERIVED_GEOMETRY_NAMES, GEOMETRY_NAMES
from .texture import GLCM_FEATURE_NAMES, GLRLM_FEATURE_NAMES, STATS_NAMES
from .wavelet import LESION_WAVELET_STAT_NAMES, WAVELET_STAT_NAMES

LAYOUT_VERSION = "v1"
GROUPS = ("STATS", "GLRLM", "GLDM", "GLCM", "WAVELET", "GEOM")
GROUP_SIZES = {"STATS": 60, "GLRLM": 7, "GLDM": 24, "GLCM": 44, "WAVELET": 23, "GEOM": 23}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    group: str
    derived: bool = False


@dataclass(frozen=True)
class FeatureLayout:
    features: tuple[FeatureSpec, ...]
    version: str = LAYOUT_VERSION

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def __len__(self):
        return len(self.features)

    def group_slice(self, group: str) -> slice:
        idx = [i for i, f in enumerate(self.features) if f.group == group]
        return slice(idx[0], idx[-1] + 1)


def _build_v1() -> FeatureLayout:
    specs = []
    for source in ("roi", "lesion", "blobs"):
        specs += [FeatureSpec(f"stats_{source}_{n}", "STATS") for n in STATS_NAMES]
    specs += [FeatureSpec(f"glrlm_{n}", "GLRLM") for n in GLRLM_FEATURE_NAMES]
    for angle in (0, 45, 90, 135):
        specs += [FeatureSpec(f"gldm_{angle}_{n}", "GLDM")
                  for n in ("std", "rms", "m1", "m2", "m3", "m4")]
    specs += [FeatureSpec(f"glcm_{n}", "GLCM") for n in GLCM_FEATURE_NAMES]
    specs += [FeatureSpec(f"wavelet_roi_{n}", "WAVELET") for n in WAVELET_STAT_NAMES]
    specs += [FeatureSpec(f"wavelet_lesion_{n}", "WAVELET") for n in LESION_WAVELET_STAT_NAMES]
    specs += [FeatureSpec(f"geom_{n}", "GEOM") for n in GEOMETRY_NAMES]
    specs += [FeatureSpec(f"geom_{n}", "GEOM", derived=True) for n in DERIVED_GEOMETRY_NAMES]
    return FeatureLayout(tuple(specs))


LAYOUT_V1 = _build_v1()


def read_shipped_layout() -> FeatureLayout:
    """Layout as published in the package data file."""
    text = resources.files("lesionrp").joinpath("data/feature_layout_v1.csv").read_text()
    rows = list(csv.DictReader(text.splitlines()))
    return FeatureLayout(tuple(FeatureSpec(r["name"], r["group"], r["derived"] == "true")
                               for r in rows))


def write_layout(layout: FeatureLayout, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "group", "derived"])
        for f in layout.features:
            w.writerow([f.name, f.group, "true" if f.derived else "false"])


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout_version: str = LAYOUT_VERSION


def assemble_feature_vector(stats, glrlm, gldm, glcm, wavelet, geom,
                            layout: FeatureLayout = LAYOUT_V1) -> FeatureVector:
    parts = dict(zip(GROUPS, (stats, glrlm, gldm, glcm, wavelet, geom)))
    for g, vals in parts.items():
        n = np.asarray(vals).size
        if n != GROUP_SIZES[g]:
            raise FeatureError(f"group {g} has {n} values, expected {GROUP_SIZES[g]}")
    values = np.concatenate([np.asarray(parts[g], dtype=float).ravel() for g in GROUPS])
    bad = [layout.features[i].name for i in np.flatnonzero(~np.isfinite(values))]
    if bad:
        raise FeatureError(f"non-finite feature value(s): {', '.join(bad)}")
    return FeatureVector(values, layout.version)
