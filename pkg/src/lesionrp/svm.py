"""Linear SVM trained by dual coordinate descent, with Platt score calibration.

The solver minimises the L1-loss (hinge) primal

    0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))

i.e. the bias is handled as an extra constant feature and is regularised along
with the weights. Each dual coordinate update is exact, and the loop stops
when the spread of projected gradients falls below ``tol``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_iter: int = 20000
    seed: int = 0
    grid: bool = False
    grid_values: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    inner_folds: int = 5


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    C: float
    A: float = 1.0
    B: float = 0.0
    n_iter: int = 0
    converged: bool = True

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.w.size:
            raise ValueError(f"expected {self.w.size} features, got {X.shape[1]}")
        return X @ self.w + self.b

    def with_calibration(self, A: float, B: float) -> "SvmModel":
        return SvmModel(self.w, self.b, self.C, A, B, self.n_iter, self.converged)


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def primal_objective(w, b, X, y, C) -> float:
    X = np.asarray(X, dtype=float)
    margins = np.asarray(y, dtype=float) * (X @ w + b)
    return float(0.5 * (np.dot(w, w) + b * b) + C * np.maximum(0.0, 1.0 - margins).sum())


@njit(cache=True)
def _dual_epoch(yX, qd, alpha, w, order, C):
    """One pass of exact coordinate updates; returns the projected-gradient spread."""
    pg_max, pg_min = -np.inf, np.inf
    d = yX.shape[1]
    for i in order:
        g = -1.0
        for j in range(d):
            g += yX[i, j] * w[j]
        a = alpha[i]
        if a <= 0.0:
            pg = min(g, 0.0)
        elif a >= C:
            pg = max(g, 0.0)
        else:
            pg = g
        pg_max = max(pg_max, pg)
        pg_min = min(pg_min, pg)
        if pg != 0.0 and qd[i] > 0.0:
            new = min(max(a - g / qd[i], 0.0), C)
            if new != a:
                step = new - a
                for j in range(d):
                    w[j] += step * yX[i, j]
                alpha[i] = new
    return pg_max - pg_min


def train_linear_svm(X, y, C: float = 1.0, tol: float = 1e-3, max_iter: int = 20000,
                     seed: int = 0) -> SvmModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("labels must contain both -1 and +1")
    if C <= 0:
        raise ValueError("C must be positive")
    Xa = _augment(X)
    n, d = Xa.shape
    yX = np.ascontiguousarray(Xa * y[:, None])
    qd = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    w = np.zeros(d)
    rng = np.random.default_rng(seed)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if _dual_epoch(yX, qd, alpha, w, rng.permutation(n), float(C)) < tol:
            converged = True
            break
    if not converged:
        log.debug("SVM dual solver stopped at max_iter=%d before reaching tol=%g",
                  max_iter, tol)
    return SvmModel(w[:-1].copy(), float(w[-1]), C, n_iter=it, converged=converged)


# ------------------------------------------------------------ calibration

def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def platt_targets(labels) -> np.ndarray:
    y = np.asarray(labels)
    n_pos, n_neg = int((y > 0).sum()), int((y <= 0).sum())
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    return np.where(y > 0, hi, lo)


def platt_nll(A: float, B: float, values, labels) -> float:
    """Negative log-likelihood of sigmoid(A*v + B) against Platt's smoothed targets."""
    v = np.asarray(values, dtype=float)
    t = platt_targets(labels)
    z = A * v + B
    return float(np.sum((1.0 - t) * z + np.logaddexp(0.0, -z)))


def calibrate_platt(values, labels, max_iter: int = 100) -> tuple[float, float]:
    """Fit (A, B) so that P(positive | v) = sigmoid(A*v + B), by damped Newton."""
    v = np.asarray(values, dtype=float)
    y = np.asarray(labels)
    if not ((y > 0).any() and (y <= 0).any()):
        raise ValueError("calibration needs both classes")
    if np.ptp(v) == 0:
        raise ValueError("degenerate decision values (all equal)")
    t = platt_targets(y)
    n_pos, n_neg = int((y > 0).sum()), int((y <= 0).sum())
    A, B = 0.0, math.log((n_pos + 1.0) / (n_neg + 1.0))
    f = platt_nll(A, B, v, y)
    for _ in range(max_iter):
        p = _sigmoid(A * v + B)
        r = p - t
        gA, gB = float(r @ v), float(r.sum())
        if abs(gA) < 1e-5 and abs(gB) < 1e-5:
            break
        s = p * (1.0 - p)
        h11 = float(s @ (v * v)) + 1e-12
        h22 = float(s.sum()) + 1e-12
        h21 = float(s @ v)
        det = h11 * h22 - h21 * h21
        dA = -(h22 * gA - h21 * gB) / det
        dB = -(-h21 * gA + h11 * gB) / det
        slope = gA * dA + gB * dB
        step = 1.0
        while step >= 1e-10:
            nA, nB = A + step * dA, B + step * dB
            nf = platt_nll(nA, nB, v, y)
            if nf < f + 1e-4 * step * slope:
                A, B, f = nA, nB, nf
                break
            step /= 2.0
        else:
            log.warning("Platt line search failed")
            break
    return A, B


def predict_score(model: SvmModel, X) -> np.ndarray:
    return _sigmoid(model.A * model.decision(X) + model.B)


def fit_calibrated_svm(X, y, config: SvmConfig = SvmConfig(), C: float | None = None) -> SvmModel:
    model = train_linear_svm(X, y, config.C if C is None else C, config.tol,
                             config.max_iter, config.seed)
    A, B = calibrate_platt(model.decision(X), y)
    return model.with_calibration(A, B)
