"""Generate a synthetic corpus, extract features and compare the five models.

    python3 scripts/synthetic_comparison.py --cases 200 --seed 0 --out runs/synth200
"""

import argparse
import logging
import time
from pathlib import Path

import numpy as np

from lesionrp.cli import COMPARE_MODELS
from lesionrp.evaluation import loco_cv, reports_from_loco
from lesionrp.imaging import FeatureMatrix, save_feature_matrix
from lesionrp.layout import LAYOUT_V1
from lesionrp.pipeline import extract_manifest
from lesionrp.reduction import ReducerConfig
from lesionrp.reports import comparison_text, write_report
from lesionrp.svm import SvmConfig
from lesionrp.synth import SynthConfig, generate_dataset

KIND = {"original": "none", "nmf": "nmf", "chi2": "chi2", "pca": "pca", "rp": "rp"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--min-severity", type=float, default=SynthConfig.min_severity)
    ap.add_argument("--out", default="runs/synthetic_comparison")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    out = Path(args.out)

    t0 = time.perf_counter()
    cfg = SynthConfig(n_cases=args.cases, seed=args.seed, min_severity=args.min_severity)
    manifest = generate_dataset(cfg, out / "data", jobs=args.jobs)
    res = extract_manifest(manifest, jobs=args.jobs)
    rows = res.rows
    matrix = FeatureMatrix(LAYOUT_V1.names, [r.case_id for r in rows], [r.view for r in rows],
                           [r.label for r in rows], np.array([r.values for r in rows]))
    save_feature_matrix(rows, LAYOUT_V1.names, out / "features.csv")
    print(f"{len(rows)} regions from {args.cases} cases in {time.perf_counter() - t0:.0f} s")

    results = {}
    for name in COMPARE_MODELS:
        result = loco_cv(matrix, ReducerConfig(KIND[name], seed=args.seed),
                         SvmConfig(seed=args.seed), jobs=args.jobs)
        results[name] = reports_from_loco(result)
        write_report(name, result, results[name], 0.5, out / name)
    text = comparison_text(results, 0.5)
    (out / "comparison.txt").write_text(text)
    print(text)


if __name__ == "__main__":
    main()
