"""Leave-one-case-out evaluation, two-view score fusion and ROC / confusion metrics."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .imaging import FeatureMatrix
from .reduction import NormalizationParams, Reducer, ReducerConfig, fit_minmax
from .svm import SvmConfig, SvmModel, fit_calibrated_svm, predict_score

log = logging.getLogger(__name__)

THRESHOLD = 0.5


@dataclass(frozen=True)
class ScoreRecord:
    case_id: str
    view: str
    score: float
    label: int  # +1 malignant, -1 benign


@dataclass(frozen=True)
class CaseScore:
    case_id: str
    score: float
    label: int


def fuse_case_scores(records) -> CaseScore:
    records = list(records)
    if not records:
        raise ValueError("no records to fuse")
    ids = {r.case_id for r in records}
    if len(ids) != 1:
        raise ValueError(f"records span several cases: {sorted(ids)}")
    if len(records) > 2:
        raise ValueError("a case has at most two views")
    return CaseScore(records[0].case_id, float(np.mean([r.score for r in records])),
                     records[0].label)


def fuse_all(records) -> list[CaseScore]:
    by_case: dict[str, list[ScoreRecord]] = {}
    for r in records:
        by_case.setdefault(r.case_id, []).append(r)
    return [fuse_case_scores(rs) for rs in by_case.values()]


# --------------------------------------------------------------------- ROC

def _check_binary(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels) > 0
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if y.all() or not y.any():
        raise ValueError("ROC needs both classes")
    return s, y


def roc_curve(scores, labels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds), one point per distinct score plus the (0, 0) origin."""
    s, y = _check_binary(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(y)[last]
    fp = np.cumsum(~y)[last]
    tp = np.r_[0, tp]
    fp = np.r_[0, fp]
    return fp / fp[-1], tp / tp[-1], np.r_[np.inf, s[last]]


def roc_auc(scores, labels) -> float:
    """Trapezoidal AUC, evaluated in integer arithmetic so ties count one half exactly."""
    s, y = _check_binary(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.r_[0, np.cumsum(y)[last]].astype(np.int64)
    fp = np.r_[0, np.cumsum(~y)[last]].astype(np.int64)
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return twice_area / (2 * int(tp[-1]) * int(fp[-1]))


def auc_standard_error(auc: float, n_pos: int, n_neg: int) -> float:
    """Hanley-McNeil standard error of an AUC."""
    if not 0.0 <= auc <= 1.0:
        raise ValueError("AUC must lie in [0, 1]")
    if n_pos < 1 or n_neg < 1:
        raise ValueError("need at least one case per class")
    q1 = auc / (2.0 - auc)
    q2 = 2.0 * auc * auc / (1.0 + auc)
    var = (auc * (1 - auc) + (n_pos - 1) * (q1 - auc ** 2) + (n_neg - 1) * (q2 - auc ** 2))
    return math.sqrt(max(var, 0.0) / (n_pos * n_neg))


# --------------------------------------------------------------- confusion

@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion_at_threshold(scores, labels, threshold: float = THRESHOLD) -> ConfusionMatrix:
    """Positive prediction iff score > threshold; a score equal to it counts as negative."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels) > 0
    pred = s > threshold
    return ConfusionMatrix(int((pred & y).sum()), int((pred & ~y).sum()),
                           int((~pred & y).sum()), int((~pred & ~y).sum()))


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    odds_ratio: float | None  # None marks an undefined value


def _ratio(num, den):
    return num / den if den else None


def classification_metrics(cm: ConfusionMatrix) -> ClassificationMetrics:
    return ClassificationMetrics(
        _ratio(cm.tp + cm.tn, cm.total),
        _ratio(cm.tp, cm.tp + cm.fn),
        _ratio(cm.tn, cm.tn + cm.fp),
        _ratio(cm.tp * cm.tn, cm.fp * cm.fn),
    )


# --------------------------------------------------------------------- LOCO

@dataclass
class FoldModel:
    normalization: NormalizationParams
    reducer: Reducer
    svm: SvmModel

    def score(self, X) -> np.ndarray:
        Z = self.reducer.transform(self.normalization.apply(X))
        return predict_score(self.svm, Z)


def _inner_cv_c(X, y, groups, reducer_cfg: ReducerConfig, svm_cfg: SvmConfig) -> float:
    """Choose C by grouped k-fold AUC on the training fold only; ties go to the smaller C."""
    cases = list(dict.fromkeys(groups))
    rng = np.random.default_rng(svm_cfg.seed)
    fold_of = {c: i % svm_cfg.inner_folds for i, c in enumerate(rng.permutation(cases))}
    fold = np.array([fold_of[g] for g in groups])
    best_c, best_auc = svm_cfg.grid_values[0], -1.0
    for C in sorted(svm_cfg.grid_values):
        scores = np.zeros(len(y))
        for k in range(svm_cfg.inner_folds):
            te = fold == k
            tr = ~te
            if not te.any() or len(set(y[tr])) < 2:
                continue
            scores[te] = _fit(X[tr], y[tr], reducer_cfg, replace(svm_cfg, grid=False), C).score(X[te])
        try:
            auc = roc_auc(scores, y)
        except ValueError:
            continue
        if auc > best_auc:
            best_c, best_auc = C, auc
    return best_c


def _fit(X, y, reducer_cfg: ReducerConfig, svm_cfg: SvmConfig, C: float | None = None) -> FoldModel:
    norm = fit_minmax(X)
    Xn = norm.apply(X)
    reducer = reducer_cfg.build()
    Z = reducer.fit_transform(Xn, y)
    return FoldModel(norm, reducer, fit_calibrated_svm(Z, y, svm_cfg, C))


def fit_fold(X, y, groups, reducer_cfg: ReducerConfig, svm_cfg: SvmConfig) -> FoldModel:
    """Fit normalisation, reducer, SVM and calibration on training rows only."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(set(y.tolist())) < 2:
        raise ValueError("training fold has a single class")
    C = _inner_cv_c(X, y, list(groups), reducer_cfg, svm_cfg) if svm_cfg.grid else None
    return _fit(X, y, reducer_cfg, svm_cfg, C)


def loco_folds(case_ids) -> list[tuple[str, np.ndarray, np.ndarray]]:
    case_ids = np.asarray(case_ids)
    out = []
    for c in dict.fromkeys(case_ids.tolist()):
        test = case_ids == c
        out.append((c, np.flatnonzero(~test), np.flatnonzero(test)))
    return out


@dataclass
class LocoResult:
    records: list[ScoreRecord]
    cases: list[CaseScore]
    feature_counts: list[int]
    unconverged_folds: int = 0
    models: dict[str, FoldModel] | None = None

    @property
    def mean_feature_count(self) -> float:
        return float(np.mean(self.feature_counts))


def _run_fold(args):
    X, y, groups, train, test, reducer_cfg, svm_cfg = args
    model = fit_fold(X[train], y[train], [groups[i] for i in train], reducer_cfg, svm_cfg)
    return model, model.score(X[test])


def loco_cv(matrix: FeatureMatrix, reducer_cfg: ReducerConfig = ReducerConfig(),
            svm_cfg: SvmConfig = SvmConfig(), jobs: int = 1,
            keep_models: bool = False) -> LocoResult:
    X = np.asarray(matrix.values, dtype=float)
    y = matrix.y
    groups = list(matrix.case_ids)
    folds = loco_folds(groups)
    if len(folds) < 3:
        raise ValueError("LOCO needs at least three cases")
    if len(set(y.tolist())) < 2:
        raise ValueError("both labels must be present")
    if reducer_cfg.kind == "rp" and reducer_cfg.k is None and reducer_cfg.n_points is None:
        reducer_cfg = replace(reducer_cfg, n_points=len(folds))
    tasks = [(X, y, groups, tr, te, reducer_cfg, svm_cfg) for _, tr, te in folds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_run_fold, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_fold(t) for t in tasks]

    scores = np.zeros(len(y))
    models = {}
    counts = []
    unconverged = 0
    for (case, _, te), (model, s) in zip(folds, results):
        scores[te] = s
        counts.append(model.reducer.d_out)
        unconverged += not model.svm.converged
        if keep_models:
            models[case] = model
    if unconverged:
        log.warning("%d of %d folds stopped before SVM convergence", unconverged, len(folds))
    records = [ScoreRecord(c, v, float(s), int(l))
               for c, v, s, l in zip(groups, matrix.views, scores, y)]
    return LocoResult(records, fuse_all(records), counts, unconverged,
                      models if keep_models else None)


# ------------------------------------------------------------------ reports

@dataclass
class EvalReport:
    mode: str  # "region" or "case"
    n_features: float
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    auc_se: float
    n_pos: int
    n_neg: int
    confusion: ConfusionMatrix
    metrics: ClassificationMetrics
    extra: dict = field(default_factory=dict)


def evaluate_scores(scores, labels, mode: str, n_features: float,
                    threshold: float = THRESHOLD) -> EvalReport:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    fpr, tpr, thr = roc_curve(s, y)
    auc = roc_auc(s, y)
    n_pos, n_neg = int((y > 0).sum()), int((y <= 0).sum())
    cm = confusion_at_threshold(s, y, threshold)
    return EvalReport(mode, n_features, fpr, tpr, thr, auc,
                      auc_standard_error(auc, n_pos, n_neg), n_pos, n_neg, cm,
                      classification_metrics(cm))


def reports_from_loco(result: LocoResult, threshold: float = THRESHOLD) -> dict[str, EvalReport]:
    k = result.mean_feature_count
    return {
        "region": evaluate_scores([r.score for r in result.records],
                                  [r.label for r in result.records], "region", k, threshold),
        "case": evaluate_scores([c.score for c in result.cases],
                                [c.label for c in result.cases], "case", k, threshold),
    }
