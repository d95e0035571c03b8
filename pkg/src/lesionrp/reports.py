"""Text and CSV renderings of evaluation results. Undefined metrics print as "undefined"."""

from __future__ import annotations

import csv
from pathlib import Path

from .evaluation import EvalReport, LocoResult


def fmt_metric(v, scale: float = 1.0, digits: int = 1) -> str:
    return "undefined" if v is None else f"{v * scale:.{digits}f}"


def write_scores(result: LocoResult, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "scores_region.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "view", "label", "score"])
        for r in result.records:
            w.writerow([r.case_id, r.view, r.label, format(r.score, ".17g")])
    with open(out_dir / "scores_case.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "label", "score"])
        for c in result.cases:
            w.writerow([c.case_id, c.label, format(c.score, ".17g")])
    with open(out_dir / "fold_features.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["held_out_case", "n_features"])
        for c, k in zip(dict.fromkeys(r.case_id for r in result.records), result.feature_counts):
            w.writerow([c, k])


def write_roc(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(report.thresholds, report.fpr, report.tpr):
            w.writerow([format(t, ".17g"), format(f, ".17g"), format(p, ".17g")])


def summary_text(name: str, reports: dict[str, EvalReport], threshold: float) -> str:
    region, case = reports["region"], reports["case"]
    cm, m = case.confusion, case.metrics
    lines = [
        f"model: {name}",
        f"features (mean over folds): {case.n_features:g}",
        f"region AUC: {region.auc:.4f} (Hanley-McNeil SE {region.auc_se:.4f})",
        f"case AUC: {case.auc:.4f} (Hanley-McNeil SE {case.auc_se:.4f})",
        f"case counts: {case.n_pos} malignant, {case.n_neg} benign",
        f"confusion at T = {threshold:g} (positive iff S > T): "
        f"TP {cm.tp}  FP {cm.fp}  FN {cm.fn}  TN {cm.tn}",
        f"accuracy: {fmt_metric(m.accuracy, 100)}%",
        f"sensitivity: {fmt_metric(m.sensitivity, 100)}%",
        f"specificity: {fmt_metric(m.specificity, 100)}%",
        f"odds ratio: {fmt_metric(m.odds_ratio, digits=2)}",
    ]
    return "\n".join(lines) + "\n"


def write_report(name: str, result: LocoResult, reports: dict[str, EvalReport],
                 threshold: float, out_dir) -> str:
    out_dir = Path(out_dir)
    write_scores(result, out_dir)
    for mode, rep in reports.items():
        write_roc(rep, out_dir / f"roc_{mode}.csv")
    text = summary_text(name, reports, threshold)
    (out_dir / "summary.txt").write_text(text)
    return text


def comparison_text(results: dict[str, dict[str, EvalReport]], threshold: float) -> str:
    """Feature counts and AUCs, confusion matrices, and case metrics for several models."""
    names = list(results)
    out = ["AUC by model and scoring mode",
           f"{'model':<10} {'mode':<7} {'features':>9} {'AUC':>7} {'SE':>7}"]
    for n in names:
        for mode in ("region", "case"):
            r = results[n][mode]
            out.append(f"{n:<10} {mode:<7} {r.n_features:>9g} {r.auc:>7.4f} {r.auc_se:>7.4f}")
    out += ["", f"Case confusion matrices at T = {threshold:g}",
            f"{'model':<10} {'TP':>6} {'FP':>6} {'FN':>6} {'TN':>6}"]
    for n in names:
        cm = results[n]["case"].confusion
        out.append(f"{n:<10} {cm.tp:>6} {cm.fp:>6} {cm.fn:>6} {cm.tn:>6}")
    out += ["", "Case metrics",
            f"{'model':<10} {'accuracy':>10} {'sensitivity':>12} {'specificity':>12} {'OR':>10}"]
    for n in names:
        m = results[n]["case"].metrics
        out.append(f"{n:<10} {fmt_metric(m.accuracy, 100):>10} {fmt_metric(m.sensitivity, 100):>12} "
                   f"{fmt_metric(m.specificity, 100):>12} {fmt_metric(m.odds_ratio, digits=2):>10}")
    return "\n".join(out) + "\n"
