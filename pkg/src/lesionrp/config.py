"""Pipeline configuration: defaults, ``key = value`` files and range checks."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, fields

from .features import FeatureParams
from .reduction import REDUCER_KINDS, ReducerConfig
from .segmentation import SegmentationParams
from .svm import SvmConfig
from .synth import SynthConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    # paths
    manifest: str | None = None
    features: str | None = None
    out: str | None = None
    # segmentation
    window: int = 30
    radius: int = 3
    min_area: int = 50
    # features
    levels: int = 16
    glcm_distance: int = 2
    gldm_distance: int = 11
    wavelet_levels: int = 3
    # reducer
    reducer: str = "none"
    k: int | None = None
    epsilon: float | None = None
    density: float | None = None
    nmf_max_iter: int = 200
    nmf_tol: float = 1e-4
    chi2_bins: int | None = None
    # classifier
    c: float = 1.0
    grid: bool = False
    tol: float = 1e-3
    max_iter: int = 20000
    threshold: float = 0.5
    # synthetic data
    cases: int = 200
    two_view_fraction: float = 0.68
    malignant_fraction: float = 0.433
    # run control
    seed: int = 0
    jobs: int = 1
    dump_stages: str | None = None
    dump_wavelet: str | None = None

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.window >= 1, "window must be >= 1"),
            (self.radius >= 0, "radius must be >= 0"),
            (self.min_area >= 0, "min_area must be >= 0"),
            (2 <= self.levels <= 256, "levels must lie in [2, 256]"),
            (1 <= self.glcm_distance < 150, "glcm_distance must lie in [1, 149]"),
            (1 <= self.gldm_distance < 150, "gldm_distance must lie in [1, 149]"),
            (1 <= self.wavelet_levels <= 4, "wavelet_levels must lie in [1, 4]"),
            (self.reducer in REDUCER_KINDS, f"reducer must be one of {', '.join(REDUCER_KINDS)}"),
            (self.k is None or self.k >= 1, "k must be >= 1"),
            (self.epsilon is None or 0 < self.epsilon < 1, "epsilon must lie in (0, 1)"),
            (self.density is None or 0 < self.density <= 1, "density must lie in (0, 1]"),
            (self.chi2_bins is None or self.chi2_bins >= 1, "chi2_bins must be >= 1"),
            (self.c > 0, "c must be positive"),
            (self.tol > 0, "tol must be positive"),
            (self.max_iter >= 1, "max_iter must be >= 1"),
            (0 <= self.threshold <= 1, "threshold must lie in [0, 1]"),
            (self.cases >= 1, "cases must be >= 1"),
            (0 <= self.two_view_fraction <= 1, "two_view_fraction must lie in [0, 1]"),
            (0 <= self.malignant_fraction <= 1, "malignant_fraction must lie in [0, 1]"),
            (self.jobs >= 1, "jobs must be >= 1"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if bad:
            raise ConfigError("; ".join(bad))
        return self

    def segmentation(self) -> SegmentationParams:
        return SegmentationParams(self.window, self.radius, self.min_area)

    def feature_params(self) -> FeatureParams:
        return FeatureParams(self.levels, self.glcm_distance, self.gldm_distance,
                             self.wavelet_levels)

    def reducer_config(self, kind: str | None = None) -> ReducerConfig:
        return ReducerConfig(kind or self.reducer, self.k, self.epsilon, self.density,
                             nmf_max_iter=self.nmf_max_iter, nmf_tol=self.nmf_tol,
                             chi2_bins=self.chi2_bins, seed=self.seed)

    def svm_config(self) -> SvmConfig:
        return SvmConfig(C=self.c, tol=self.tol, max_iter=self.max_iter, seed=self.seed,
                         grid=self.grid)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(n_cases=self.cases, two_view_fraction=self.two_view_fraction,
                           malignant_fraction=self.malignant_fraction, seed=self.seed)


_HINTS = typing.get_type_hints(PipelineConfig)


def _parse_value(name: str, text: str):
    hint = _HINTS[name]
    optional = type(None) in typing.get_args(hint)
    base = next((a for a in typing.get_args(hint) if a is not type(None)), hint)
    if optional and text.lower() in ("", "none"):
        return None
    try:
        if base is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(text)
            return low in ("true", "1", "yes", "on")
        return base(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as {base.__name__}") from None


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    known = {f.name for f in fields(PipelineConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, value)
    return out


def load_config_file(path) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def resolve_config(file_values: dict | None = None, cli_values: dict | None = None) -> PipelineConfig:
    """Defaults, overridden by config-file values, overridden by command-line flags."""
    cfg = dataclasses.replace(PipelineConfig(), **(file_values or {}))
    cfg = dataclasses.replace(cfg, **(cli_values or {}))
    return cfg.validate()
