"""Min-max normalisation, JL sizing and the four dimensionality reducers.

Every reducer is fit once on training rows and then applied; ``transform``
never touches fitted state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

REDUCER_KINDS = ("none", "rp", "pca", "nmf", "chi2")


# ------------------------------------------------------------ normalisation

@dataclass(frozen=True)
class NormalizationParams:
    lo: np.ndarray
    hi: np.ndarray

    def apply(self, rows) -> np.ndarray:
        x = np.asarray(rows, dtype=float)
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (x - self.lo) / safe, 0.0)
        return np.clip(out, 0.0, 1.0)


def fit_minmax(train_rows) -> NormalizationParams:
    x = np.atleast_2d(np.asarray(train_rows, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    return NormalizationParams(x.min(axis=0), x.max(axis=0))


def apply_minmax(params: NormalizationParams, rows) -> np.ndarray:
    return params.apply(rows)


# ----------------------------------------------------------------- geometry

def euclidean_distance(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("length mismatch")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def unit_ball_volume(d: int, r: float = 1.0) -> float:
    """Volume of the d-dimensional ball of radius r: pi^(d/2) r^d / Gamma(d/2 + 1)."""
    if d < 1 or r <= 0:
        raise ValueError("need d >= 1 and r > 0")
    return math.exp(0.5 * d * math.log(math.pi) + d * math.log(r) - math.lgamma(d / 2 + 1))


def jl_dimension(n_points: int, eps: float) -> int:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    return max(1, math.ceil(4 * math.log(n_points) / (eps ** 2 / 2 - eps ** 3 / 3)))


def jl_bound_holds(u, v, fu, fv, eps: float) -> bool:
    d2 = float(np.sum((np.asarray(u) - np.asarray(v)) ** 2))
    f2 = float(np.sum((np.asarray(fu) - np.asarray(fv)) ** 2))
    return (1 - eps) * d2 <= f2 <= (1 + eps) * d2


def jl_bound_holds_rearranged(u, v, fu, fv, eps: float) -> bool:
    d2 = float(np.sum((np.asarray(u) - np.asarray(v)) ** 2))
    f2 = float(np.sum((np.asarray(fu) - np.asarray(fv)) ** 2))
    return f2 / (1 + eps) <= d2 <= f2 / (1 - eps)


@dataclass(frozen=True)
class PointCloudReport:
    min_ratio: float
    max_ratio: float
    fraction_within: float
    n_pairs: int


def distortion_report(points, projected, eps: float) -> PointCloudReport:
    """Squared-distance ratios |f(u)-f(v)|^2 / |u-v|^2 over all pairs."""
    X = np.asarray(points, dtype=float)
    Y = np.asarray(projected, dtype=float)

    def sqdist(A):
        g = A @ A.T
        n = np.diag(g)
        return n[:, None] + n[None, :] - 2 * g

    iu = np.triu_indices(X.shape[0], 1)
    dx, dy = sqdist(X)[iu], sqdist(Y)[iu]
    ok = dx > 0
    ratio = dy[ok] / dx[ok]
    within = ((1 - eps) * dx[ok] <= dy[ok]) & (dy[ok] <= (1 + eps) * dx[ok])
    return PointCloudReport(float(ratio.min()), float(ratio.max()),
                            float(within.mean()), int(ok.sum()))


# ------------------------------------------------------- sparse projection

def sample_sparse_rp(d: int, k: int, density: float | None = None, seed: int = 0) -> np.ndarray:
    """k x d matrix with entries -sqrt(s/k), 0, +sqrt(s/k) w.p. 1/2s, 1-1/s, 1/2s; s = 1/density."""
    if d < 1 or k < 1:
        raise ValueError("d and k must be >= 1")
    density = 1.0 / math.sqrt(d) if density is None else density
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    s = 1.0 / density
    u = np.random.default_rng(seed).random((k, d))
    v = math.sqrt(s / k)
    half = 1.0 / (2 * s)
    R = np.zeros((k, d))
    R[u < half] = -v
    R[u >= 1.0 - half] = v
    return R


class Reducer:
    kind = "base"
    d_in: int
    d_out: int

    def fit(self, X, y=None) -> "Reducer":
        raise NotImplementedError

    def transform(self, X) -> np.ndarray:
        raise NotImplementedError

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).transform(X)

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not hasattr(self, "d_in"):
            raise RuntimeError(f"{self.kind} reducer used before fit")
        if X.shape[1] != self.d_in:
            raise ValueError(f"expected {self.d_in} features, got {X.shape[1]}")
        return X


class IdentityReducer(Reducer):
    kind = "none"

    def fit(self, X, y=None):
        self.d_in = self.d_out = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        return self._check(X).copy()


@dataclass
class RpConfig:
    k: int | None = 80
    eps: float | None = None
    n_points: int | None = None
    density: float | None = None
    seed: int = 0

    def resolve_k(self, n_points: int) -> int:
        if self.k is not None:
            return self.k
        if self.eps is None:
            raise ValueError("RP needs either k or eps")
        return jl_dimension(self.n_points or n_points, self.eps)


class RandomProjection(Reducer):
    kind = "rp"

    def __init__(self, config: RpConfig | None = None):
        self.config = config or RpConfig()

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.d_in = X.shape[1]
        self.d_out = self.config.resolve_k(X.shape[0])
        self.density = (1.0 / math.sqrt(self.d_in) if self.config.density is None
                        else self.config.density)
        self.matrix = sample_sparse_rp(self.d_in, self.d_out, self.density, self.config.seed)
        return self

    def transform(self, X):
        return self._check(X) @ self.matrix.T


class PCAReducer(Reducer):
    kind = "pca"

    def __init__(self, k: int = 83):
        self.k = k

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] < 2:
            raise ValueError("PCA needs at least two rows")
        self.d_in = X.shape[1]
        self.mean = X.mean(axis=0)
        _, s, Vt = np.linalg.svd(X - self.mean, full_matrices=False)
        var = s ** 2 / (X.shape[0] - 1)
        rank = int(np.sum(s > s[0] * max(X.shape) * np.finfo(float).eps)) if s.size else 0
        self.d_out = max(1, min(self.k, rank))
        self.components = Vt[:self.d_out]
        self.variances = var[:self.d_out]
        return self

    def transform(self, X):
        return (self._check(X) - self.mean) @ self.components.T


class NMFReducer(Reducer):
    """Multiplicative-update NMF, X ~ H @ W with the basis W of shape (k, d)."""

    kind = "nmf"

    def __init__(self, k: int = 100, max_iter: int = 200, tol: float = 1e-4, seed: int = 0):
        self.k, self.max_iter, self.tol, self.seed = k, max_iter, tol, seed

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if np.any(X < 0):
            raise ValueError("NMF input must be nonnegative")
        n, d = X.shape
        self.d_in, self.d_out = d, self.k
        rng = np.random.default_rng(self.seed)
        # uniform on (0, 1]
        H = 1.0 - rng.random((n, self.k))
        W = 1.0 - rng.random((self.k, d))
        tiny = np.finfo(float).tiny
        objective = [float(np.sum((X - H @ W) ** 2))]
        self.converged = False
        for _ in range(self.max_iter):
            H *= (X @ W.T) / np.maximum(H @ (W @ W.T), tiny)
            W *= (H.T @ X) / np.maximum((H.T @ H) @ W, tiny)
            objective.append(float(np.sum((X - H @ W) ** 2)))
            prev = objective[-2]
            if prev == 0 or (prev - objective[-1]) / prev < self.tol:
                self.converged = True
                break
        self.basis, self.coefficients = W, H
        self.objective_log = objective
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).coefficients.copy()

    def transform(self, X):
        X = self._check(X)
        return np.array([nnls(self.basis.T, row)[0] for row in X])


def chi2_scores(X, labels) -> np.ndarray:
    """Per-feature chi-square between class-wise feature mass and label frequency."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("chi2 needs two classes")
    if np.any(X < 0):
        raise ValueError("chi2 input must be nonnegative")
    observed = np.stack([X[y == c].sum(axis=0) for c in classes])
    class_prob = np.array([(y == c).mean() for c in classes])
    expected = class_prob[:, None] * X.sum(axis=0)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    return terms.sum(axis=0)


class Chi2Selector(Reducer):
    """Keep the k columns with the largest chi-square scores (ties to the lower index).

    With ``bins`` set, scores come from the column values binned into that many
    equal-width levels over [0, 1]; otherwise the normalised values are used as is.
    """

    kind = "chi2"

    def __init__(self, k: int = 76, bins: int | None = None):
        self.k, self.bins = k, bins

    def fit(self, X, y=None):
        if y is None:
            raise ValueError("chi2 selection needs labels")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.d_in = X.shape[1]
        if self.bins is not None:
            if self.bins < 1:
                raise ValueError("bins must be >= 1")
            X = np.minimum(np.floor(np.clip(X, 0.0, 1.0) * self.bins), self.bins - 1)
        self.scores = chi2_scores(X, y)
        k = min(self.k, self.d_in)
        order = np.lexsort((np.arange(self.d_in), -self.scores))
        self.indices = np.sort(order[:k])
        self.d_out = k
        return self

    def transform(self, X):
        return self._check(X)[:, self.indices]


@dataclass
class ReducerConfig:
    kind: str = "none"
    k: int | None = None
    eps: float | None = None
    density: float | None = None
    n_points: int | None = None
    nmf_max_iter: int = 200
    nmf_tol: float = 1e-4
    chi2_bins: int | None = None
    seed: int = 0

    DEFAULT_K = {"rp": 80, "pca": 83, "nmf": 100, "chi2": 76}

    def __post_init__(self):
        if self.kind not in REDUCER_KINDS:
            raise ValueError(f"unknown reducer {self.kind!r}; choose from {REDUCER_KINDS}")

    def build(self) -> Reducer:
        if self.kind == "none":
            return IdentityReducer()
        if self.kind == "rp":
            # an explicit k wins; otherwise eps selects the JL dimension
            k = self.k if self.k is not None or self.eps is not None else self.DEFAULT_K["rp"]
            return RandomProjection(RpConfig(k, self.eps, self.n_points, self.density, self.seed))
        k = self.k if self.k is not None else self.DEFAULT_K[self.kind]
        if self.kind == "pca":
            return PCAReducer(k)
        if self.kind == "nmf":
            return NMFReducer(k, self.nmf_max_iter, self.nmf_tol, self.seed)
        return Chi2Selector(k, self.chi2_bins)


# ------------------------------------------------------------ serialisation

FORMAT_VERSION = "lesionrp-reducer 1"


def _arr(a) -> str:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    return " ".join(format(v, ".17g") for v in a.ravel())


def dump_reducer(r: Reducer) -> str:
    """Versioned line-based text form of a fitted reducer."""
    lines = [FORMAT_VERSION, f"kind {r.kind}", f"d_in {r.d_in}", f"d_out {r.d_out}"]
    if isinstance(r, RandomProjection):
        lines += [f"seed {r.config.seed}", f"density {format(r.density, '.17g')}"]
        rows, cols = np.nonzero(r.matrix)
        lines.append(f"nnz {rows.size}")
        lines += [f"{i} {j} {format(r.matrix[i, j], '.17g')}" for i, j in zip(rows, cols)]
    elif isinstance(r, PCAReducer):
        lines += [f"mean {_arr(r.mean)}", f"variances {_arr(r.variances)}"]
        lines += [f"component {_arr(c)}" for c in r.components]
    elif isinstance(r, NMFReducer):
        lines += [f"basis {_arr(w)}" for w in r.basis]
    elif isinstance(r, Chi2Selector):
        lines += [f"indices {' '.join(map(str, r.indices))}", f"scores {_arr(r.scores)}"]
    return "\n".join(lines) + "\n"


def load_reducer(text: str) -> Reducer:
    lines = text.strip().splitlines()
    if lines[0] != FORMAT_VERSION:
        raise ValueError(f"unsupported reducer format {lines[0]!r}")
    head = dict(line.split(" ", 1) for line in lines[1:4])
    kind, d_in, d_out = head["kind"], int(head["d_in"]), int(head["d_out"])
    body = lines[4:]

    def floats(line):
        return np.array([float(v) for v in line.split(" ", 1)[1].split()])

    if kind == "none":
        r: Reducer = IdentityReducer()
    elif kind == "rp":
        seed = int(body[0].split()[1])
        density = float(body[1].split()[1])
        r = RandomProjection(RpConfig(k=d_out, density=density, seed=seed))
        r.density = density
        r.matrix = np.zeros((d_out, d_in))
        for line in body[3:]:
            i, j, v = line.split()
            r.matrix[int(i), int(j)] = float(v)
    elif kind == "pca":
        r = PCAReducer(d_out)
        r.mean, r.variances = floats(body[0]), floats(body[1])
        r.components = np.array([floats(l) for l in body[2:]])
    elif kind == "nmf":
        r = NMFReducer(d_out)
        r.basis = np.array([floats(l) for l in body])
    elif kind == "chi2":
        r = Chi2Selector(d_out)
        r.indices = np.array([int(v) for v in body[0].split()[1:]])
        r.scores = floats(body[1])
    else:
        raise ValueError(f"unknown reducer kind {kind!r}")
    r.d_in, r.d_out = d_in, d_out
    return r
