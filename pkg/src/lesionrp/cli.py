"""Command-line entry point: ``synth``, ``features``, ``evaluate`` and ``compare``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, PipelineConfig, load_config_file, resolve_config
from .evaluation import loco_cv, reports_from_loco
from .imaging import DataError, FeatureMatrix, load_feature_matrix, load_manifest, save_feature_matrix
from .layout import LAYOUT_V1
from .pipeline import extract_manifest
from .reduction import REDUCER_KINDS, jl_dimension
from .reports import comparison_text, write_report
from .synth import generate_dataset

log = logging.getLogger("lesionrp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3

COMPARE_MODELS = ("original", "nmf", "chi2", "pca", "rp")
_MODEL_KIND = {"original": "none", "nmf": "nmf", "chi2": "chi2", "pca": "pca", "rp": "rp"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    # every default is SUPPRESS so that only flags actually given override the config file
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_eval(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", help="feature matrix CSV")
    p.add_argument("--manifest", help="manifest, used to extract features when --features is absent")
    p.add_argument("--c", type=float)
    p.add_argument("--grid", action="store_const", const=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--density", type=float)
    p.add_argument("--chi2-bins", dest="chi2_bins", type=int, help="bin features before Chi2 scoring")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lesionrp", description=__doc__.splitlines()[0],
                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic two-view corpus",
                       argument_default=argparse.SUPPRESS)
    _add_common(p)
    p.add_argument("--cases", type=int)
    p.add_argument("--malignant-fraction", dest="malignant_fraction", type=float)
    p.add_argument("--two-view-fraction", dest="two_view_fraction", type=float)

    p = sub.add_parser("features", help="segment regions and write the 181-feature matrix",
                       argument_default=argparse.SUPPRESS)
    _add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--window", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--min-area", dest="min_area", type=int)
    p.add_argument("--dump-stages", dest="dump_stages", help="directory for stage PNGs")
    p.add_argument("--dump-wavelet", dest="dump_wavelet", help="directory for coefficient grids")

    p = sub.add_parser("evaluate", help="leave-one-case-out evaluation of one model",
                       argument_default=argparse.SUPPRESS)
    _add_common(p)
    _add_eval(p)
    p.add_argument("--reducer", choices=REDUCER_KINDS)

    p = sub.add_parser("compare", help="evaluate the original, NMF, Chi2, PCA and RP models",
                       argument_default=argparse.SUPPRESS)
    _add_common(p)
    _add_eval(p)
    return parser


def _config_from_args(ns: argparse.Namespace) -> PipelineConfig:
    cli = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "verbose")}
    file_values = load_config_file(ns.config) if getattr(ns, "config", None) else {}
    return resolve_config(file_values, cli)


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


# ---------------------------------------------------------------- commands

def cmd_synth(cfg: PipelineConfig) -> int:
    out = _require(cfg.out, "--out")
    t0 = time.perf_counter()
    manifest = generate_dataset(cfg.synth_config(), out, jobs=cfg.jobs)
    n_mal = len({r.case_id for r in manifest.records if r.label == "malignant"})
    log.info("wrote %d cases (%d malignant), %d regions to %s in %.1f s",
             len(manifest.case_ids()), n_mal, len(manifest.records), out,
             time.perf_counter() - t0)
    return EXIT_OK


def _extract(cfg: PipelineConfig, manifest_path) -> tuple[FeatureMatrix, int]:
    manifest = load_manifest(manifest_path)
    result = extract_manifest(manifest, cfg.segmentation(), cfg.feature_params(), cfg.jobs,
                              cfg.dump_stages, cfg.dump_wavelet)
    t = result.timings
    log.info("timing: load %.1f s, segmentation %.1f s, features %.1f s",
             t["load"], t["segment"], t["features"])
    rows = result.rows
    values = np.array([r.values for r in rows]).reshape(len(rows), len(LAYOUT_V1))
    matrix = FeatureMatrix(LAYOUT_V1.names, [r.case_id for r in rows], [r.view for r in rows],
                           [r.label for r in rows], values)
    return matrix, len(result.failures)


def cmd_features(cfg: PipelineConfig) -> int:
    manifest = _require(cfg.manifest, "--manifest")
    out = _require(cfg.out, "--out")
    matrix, failed = _extract(cfg, manifest)
    save_feature_matrix(matrix.rows(), matrix.names, out)
    log.info("wrote %d x %d feature matrix to %s", len(matrix), len(matrix.names), out)
    if failed:
        log.warning("%d region(s) failed and were skipped", failed)
        return EXIT_PARTIAL
    return EXIT_OK


def _load_matrix(cfg: PipelineConfig) -> tuple[FeatureMatrix, int]:
    if cfg.features:
        return load_feature_matrix(cfg.features), 0
    if cfg.manifest:
        return _extract(cfg, cfg.manifest)
    raise UsageError("--features or --manifest is required")


def _log_rp_dimension(cfg: PipelineConfig, matrix: FeatureMatrix, kind: str) -> None:
    if kind == "rp" and cfg.k is None and cfg.epsilon is not None:
        n = len(set(matrix.case_ids))
        log.info("RP dimension k = %d from N = %d cases, epsilon = %g",
                 jl_dimension(n, cfg.epsilon), n, cfg.epsilon)


def _evaluate_one(cfg: PipelineConfig, matrix: FeatureMatrix, kind: str):
    _log_rp_dimension(cfg, matrix, kind)
    t0 = time.perf_counter()
    result = loco_cv(matrix, cfg.reducer_config(kind), cfg.svm_config(), jobs=cfg.jobs)
    reports = reports_from_loco(result, cfg.threshold)
    log.info("%s: %d folds in %.1f s, region AUC %.4f, case AUC %.4f", kind,
             len(result.feature_counts), time.perf_counter() - t0,
             reports["region"].auc, reports["case"].auc)
    return result, reports


def cmd_evaluate(cfg: PipelineConfig) -> int:
    out = _require(cfg.out, "--out")
    matrix, failed = _load_matrix(cfg)
    result, reports = _evaluate_one(cfg, matrix, cfg.reducer)
    text = write_report(cfg.reducer, result, reports, cfg.threshold, out)
    sys.stdout.write(text)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_compare(cfg: PipelineConfig) -> int:
    out = Path(_require(cfg.out, "--out"))
    matrix, failed = _load_matrix(cfg)
    results = {}
    for name in COMPARE_MODELS:
        kind = _MODEL_KIND[name]
        # --k applies to RP only; the other reducers keep their own default sizes
        model_cfg = cfg if kind == "rp" else replace(cfg, k=None)
        result, reports = _evaluate_one(model_cfg, matrix, kind)
        write_report(name, result, reports, cfg.threshold, out / name)
        results[name] = reports
    text = comparison_text(results, cfg.threshold)
    (out / "comparison.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_PARTIAL if failed else EXIT_OK


COMMANDS = {"synth": cmd_synth, "features": cmd_features, "evaluate": cmd_evaluate,
            "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(ns, "verbose", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _config_from_args(ns)
        return COMMANDS[ns.command](cfg)
    except (UsageError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
