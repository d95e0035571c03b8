import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lesionrp.svm import (SvmConfig, calibrate_platt, fit_calibrated_svm, platt_nll,
                          platt_targets, predict_score, primal_objective, train_linear_svm)


def qp_oracle(X, y, C):
    """Primal hinge-loss QP with regularised bias, solved by a general conic solver."""
    w, b = cp.Variable(X.shape[1]), cp.Variable()
    obj = 0.5 * (cp.sum_squares(w) + b ** 2) + C * cp.sum(cp.pos(1 - cp.multiply(y, X @ w + b)))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve()
    return prob.value


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(4, 21)), int(rng.integers(1, 6))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[:2] = (1.0, -1.0)
    X = rng.normal(size=(n, d)) + float(rng.uniform(0, 1.5)) * y[:, None]
    return X, y, float(10 ** rng.uniform(-2, 2))


@pytest.mark.parametrize("seed", range(25))
def test_objective_matches_qp(seed):
    X, y, C = random_instance(seed)
    m = train_linear_svm(X, y, C, tol=1e-6, max_iter=200_000)
    f = primal_objective(m.w, m.b, X, y, C)
    ref = qp_oracle(X, y, C)
    assert abs(f - ref) <= 1e-4 * max(1.0, abs(ref))


def test_one_dimensional_analytic():
    X = np.array([[1.0], [2.0], [-1.0], [-3.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    m = train_linear_svm(X, y, C=1e3, tol=1e-9, max_iter=100_000)
    # active constraints w + b = 1 and -w + b = -1 give w = 1, b = 0
    assert m.w[0] == pytest.approx(1.0, abs=1e-6)
    assert m.b == pytest.approx(0.0, abs=1e-6)
    assert m.converged


def test_separable_blobs(rng):
    X = np.vstack([rng.normal(3, 0.5, (40, 4)), rng.normal(-3, 0.5, (40, 4))])
    y = np.r_[np.ones(40), -np.ones(40)]
    m = train_linear_svm(X, y)
    assert np.all(np.sign(m.decision(X)) == y)


def test_deterministic_and_errors(rng):
    X, y, C = random_instance(7)
    a, b = train_linear_svm(X, y, C, seed=3), train_linear_svm(X, y, C, seed=3)
    assert np.array_equal(a.w, b.w) and a.b == b.b
    with pytest.raises(ValueError):
        train_linear_svm(X, np.ones(len(y)))
    with pytest.raises(ValueError):
        train_linear_svm(X, y, C=0.0)
    with pytest.raises(ValueError):
        a.decision(np.zeros((1, X.shape[1] + 1)))


# ------------------------------------------------------------ calibration

def test_platt_targets():
    t = platt_targets([1, 1, 1, -1])
    assert t.tolist() == [0.8, 0.8, 0.8, pytest.approx(1 / 3)]


def test_platt_symmetric_and_sign():
    v = np.linspace(-2, 2, 40)
    y = np.where(v + 0.3 * np.sin(7 * v) > 0, 1, -1)
    A, B = calibrate_platt(v, y)
    assert A > 0 and abs(B) < 0.2
    A2, _ = calibrate_platt(-v, y)
    assert A2 == pytest.approx(-A, rel=1e-6)


def test_platt_minimises_nll_on_grid(rng):
    v = rng.normal(size=200)
    y = np.where(rng.random(200) < 1 / (1 + np.exp(-(2 * v - 0.5))), 1, -1)
    A, B = calibrate_platt(v, y)
    best = platt_nll(A, B, v, y)
    grid = [(a, b) for a in np.linspace(A - 1, A + 1, 100) for b in np.linspace(B - 1, B + 1, 100)]
    assert best <= min(platt_nll(a, b, v, y) for a, b in grid) + 1e-6


def test_platt_errors():
    with pytest.raises(ValueError):
        calibrate_platt([0.1, 0.2], [1, 1])
    with pytest.raises(ValueError):
        calibrate_platt([0.5, 0.5], [1, -1])


@given(st.integers(0, 1000))
@settings(max_examples=20)
def test_scores_in_unit_interval_and_monotone(seed):
    X, y, _ = random_instance(seed)
    m = fit_calibrated_svm(X, y, SvmConfig())
    s = predict_score(m, X)
    assert np.all((s > 0) & (s < 1))
    order = np.argsort(m.decision(X))
    if m.A > 0:
        assert np.all(np.diff(s[order]) >= 0)
    else:
        assert np.all(np.diff(s[order]) <= 0)
