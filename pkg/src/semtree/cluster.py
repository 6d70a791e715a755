"""Dimensionality reduction, diagonal-covariance GMM via EM, BIC model
selection, and soft cluster assignment.

The reducer interface is pluggable; the shipped implementation is PCA
(deterministic, reusable on new vectors).  EM uses k-means++-style
seeding, a variance floor against duplicate points, and is fully
deterministic given a seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from semtree.kernels import weighted_log_prob

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class ReducerConfig:
    method: str = "pca"  # or "none"
    target_dim: int = 10


@dataclass(frozen=True)
class PcaProjection:
    """Fitted linear projection: center then project onto top components."""

    mean: np.ndarray
    components: np.ndarray  # (target_dim, input_dim), rows ordered by variance
    explained_variance: np.ndarray
    identity: bool = False

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.identity:
            return np.asarray(X, dtype=np.float64)
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T


def reduce(X: np.ndarray, cfg: ReducerConfig) -> tuple[np.ndarray, PcaProjection]:
    """Fit the configured reducer on ``X`` and return (reduced, projection)."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if cfg.method == "none":
        proj = PcaProjection(np.zeros(d), np.eye(d), np.ones(d), identity=True)
        return X, proj
    if cfg.method != "pca":
        raise ValueError(f"unknown reducer method {cfg.method!r}")
    if n < 2:
        raise ValueError("pca needs at least 2 vectors")
    target = min(cfg.target_dim, d, n - 1)
    mean = X.mean(axis=0)
    centered = X - mean
    if not np.any(np.abs(centered) > 1e-12):
        logger.warning("all input vectors identical; falling back to identity reduction")
        proj = PcaProjection(np.zeros(d), np.eye(d), np.ones(d), identity=True)
        return X, proj
    # SVD of the centered matrix; sign fixed so each component's
    # largest-magnitude entry is positive (determinism).
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:target]
    for i in range(comps.shape[0]):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    explained = (s[:target] ** 2) / max(n - 1, 1)
    proj = PcaProjection(mean, comps, explained)
    return centered @ comps.T, proj


@dataclass(frozen=True)
class GmmModel:
    k: int
    weights: np.ndarray
    means: np.ndarray  # (k, d)
    variances: np.ndarray  # (k, d), diagonal covariances
    log_likelihood: float
    seed: int
    ll_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _logsumexp(rows: np.ndarray) -> np.ndarray:
    m = rows.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(rows - m).sum(axis=1, keepdims=True)))[:, 0]


def _kmeanspp_means(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    first = int(rng.integers(n))
    centers = [X[first]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - centers[-1]) ** 2, axis=1))
    return np.stack(centers)


def fit_gmm(data: np.ndarray, k: int, seed: int, *, tol: float = 1e-4,
            max_iter: int = 200, n_init: int = 1) -> GmmModel:
    """Fit a diagonal-covariance Gaussian mixture by EM.

    Converges when the absolute log-likelihood change drops below
    ``tol`` (or after ``max_iter`` iterations); the likelihood is
    checked non-decreasing every step.  With ``n_init > 1`` the fit is
    restarted from seeds derived deterministically from ``seed`` and
    the best-likelihood run wins, which guards against bad local
    optima of the k-means++ seeding.
    """
    if n_init > 1:
        fits = [fit_gmm(data, k, seed + 7919 * i, tol=tol, max_iter=max_iter)
                for i in range(n_init)]
        return max(fits, key=lambda m: m.log_likelihood)
    X = np.asarray(data, dtype=np.float64)
    n, d = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n <= k:
        raise ValueError(f"need more points than components (n={n}, k={k})")
    rng = np.random.default_rng(seed)
    means = _kmeanspp_means(X, k, rng)
    global_var = np.maximum(X.var(axis=0), VARIANCE_FLOOR)
    variances = np.tile(global_var, (k, 1))
    weights = np.full(k, 1.0 / k)

    prev_ll = -np.inf
    history: list[float] = []
    for _ in range(max_iter):
        wlp = weighted_log_prob(X, means, variances, np.log(weights))
        log_norm = _logsumexp(wlp)
        ll = float(log_norm.sum())
        if ll + 1e-8 < prev_ll:
            raise AssertionError(f"EM log-likelihood decreased: {prev_ll} -> {ll}")
        history.append(ll)
        resp = np.exp(wlp - log_norm[:, None])
        converged = math.isfinite(prev_ll) and abs(ll - prev_ll) < tol
        prev_ll = ll
        if converged:
            break
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        ex2 = (resp.T @ (X * X)) / nk[:, None]
        variances = np.maximum(ex2 - means**2, VARIANCE_FLOOR)

    return GmmModel(
        k=k,
        weights=weights,
        means=means,
        variances=variances,
        log_likelihood=prev_ll,
        seed=seed,
        ll_history=tuple(history),
    )


def bic(model: GmmModel, n: int) -> float:
    """BIC = p·ln(n) − 2·ln L̂ with p = (k−1) + 2kd for diagonal mixtures."""
    p = (model.k - 1) + 2 * model.k * model.dim
    return p * math.log(n) - 2.0 * model.log_likelihood


def select_k_bic(data: np.ndarray, k_range: range, seed: int,
                 n_init: int = 3) -> tuple[GmmModel, list[tuple[int, float]]]:
    """Fit one GMM per candidate k and return the BIC minimizer plus the curve."""
    X = np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    candidates = [k for k in k_range if 1 <= k < n]
    if not candidates:
        raise ValueError(f"no valid k in {k_range!r} for n={n}")
    curve: list[tuple[int, float]] = []
    best: GmmModel | None = None
    best_bic = math.inf
    for k in candidates:
        model = fit_gmm(X, k, seed, n_init=n_init)
        value = bic(model, n)
        curve.append((k, value))
        if value < best_bic:
            best, best_bic = model, value
    assert best is not None
    return best, curve


@dataclass(frozen=True)
class SoftAssignment:
    responsibilities: np.ndarray  # (n, k), row-stochastic
    memberships: tuple[tuple[int, ...], ...]  # per item, sorted cluster indices


def soft_assign(model: GmmModel, data: np.ndarray, threshold: float = 0.2) -> SoftAssignment:
    """Memberships are clusters above ``threshold`` responsibility, always
    including the argmax cluster."""
    X = np.asarray(data, dtype=np.float64)
    if X.shape[1] != model.dim:
        raise ValueError("data dimensionality does not match the fitted model")
    wlp = weighted_log_prob(X, model.means, model.variances, np.log(model.weights))
    resp = np.exp(wlp - _logsumexp(wlp)[:, None])
    memberships = []
    for i in range(resp.shape[0]):
        picked = set(np.flatnonzero(resp[i] >= threshold).tolist())
        picked.add(int(np.argmax(resp[i])))
        memberships.append(tuple(sorted(picked)))
    return SoftAssignment(responsibilities=resp, memberships=tuple(memberships))
