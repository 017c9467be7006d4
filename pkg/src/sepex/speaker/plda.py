"""Two-covariance probabilistic discriminant backend.

Model: a speaker identity ``y ~ N(mean, B)`` and observations
``x | y ~ N(y, W)``.  Fit by expectation-maximization on labeled
embeddings; scoring returns the log-likelihood ratio between the
same-identity and independent-identity hypotheses of a vector pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = ["PldaModel", "plda_fit", "plda_score", "plda_pair_log_likelihoods"]

_RIDGE = 1e-8
_LL_DECREASE_TOL = 1e-8


@dataclass(frozen=True)
class PldaModel:
    """Global mean with between- and within-class covariances."""

    mean: np.ndarray
    between: np.ndarray
    within: np.ndarray
    log_likelihood_trace: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        d = self.mean.shape[0]
        for name, mat in (("between", self.between), ("within", self.within)):
            if mat.shape != (d, d):
                raise ValueError(f"{name} covariance must be {d}x{d}")
            if not np.allclose(mat, mat.T, atol=1e-10):
                raise ValueError(f"{name} covariance must be symmetric")


def _regularize(mat: np.ndarray) -> np.ndarray:
    sym = 0.5 * (mat + mat.T)
    d = sym.shape[0]
    smallest = np.linalg.eigvalsh(sym)[0]
    if smallest < _RIDGE * max(np.trace(sym) / d, 1.0):
        sym = sym + (_RIDGE * max(np.trace(sym) / d, 1.0) - min(smallest, 0.0)) * np.eye(d)
    return sym


def _class_stats(x: np.ndarray, labels: np.ndarray):
    classes = np.unique(labels)
    counts = np.array([np.sum(labels == c) for c in classes])
    means = np.stack([x[labels == c].mean(axis=0) for c in classes])
    scatters = []
    for c, mu in zip(classes, means):
        centered = x[labels == c] - mu
        scatters.append(centered.T @ centered)
    return counts, means, np.array(scatters)


def _marginal_log_likelihood(
    counts: np.ndarray, class_means: np.ndarray, class_scatters: np.ndarray,
    mean: np.ndarray, between: np.ndarray, within: np.ndarray,
) -> float:
    """Exact marginal likelihood of the grouped data under the model."""
    d = mean.shape[0]
    total = 0.0
    w_cho = cho_factor(within)
    logdet_w = 2.0 * np.sum(np.log(np.diag(w_cho[0])))
    for n, xbar, scatter in zip(counts, class_means, class_scatters):
        pooled = within + n * between
        p_cho = cho_factor(pooled)
        logdet_p = 2.0 * np.sum(np.log(np.diag(p_cho[0])))
        diff = xbar - mean
        quad_mean = n * float(diff @ cho_solve(p_cho, diff))
        quad_within = float(np.trace(cho_solve(w_cho, scatter)))
        total += -0.5 * (
            n * d * np.log(2.0 * np.pi)
            + (n - 1) * logdet_w
            + logdet_p
            + quad_within
            + quad_mean
        )
    return total


def plda_fit(embeddings: np.ndarray, labels, em_iterations: int = 20) -> PldaModel:
    """Fit the two-covariance model by EM.

    The marginal log-likelihood is recorded per iteration and must be
    non-decreasing; a decrease beyond tolerance aborts with a
    diagnostic.  Covariances are ridge-regularized whenever an update
    leaves them non-positive-definite.

    Args:
        embeddings: array (n_samples, dim), typically projected and
            length-normalized.
        labels: per-sample class labels, at least two classes.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.shape[0] < 2:
        raise ValueError("need at least two classes")
    d = x.shape[1]

    counts, class_means, class_scatters = _class_stats(x, labels)
    mean = x.mean(axis=0)
    centered_means = class_means - mean
    between = _regularize(
        (centered_means * counts[:, None]).T @ centered_means / counts.sum()
    )
    within = _regularize(class_scatters.sum(axis=0) / counts.sum())

    trace: list[float] = []
    for iteration in range(em_iterations):
        trace.append(
            _marginal_log_likelihood(counts, class_means, class_scatters, mean, between, within)
        )
        if iteration >= 1 and trace[-1] < trace[-2] - _LL_DECREASE_TOL * max(1.0, abs(trace[-2])):
            raise RuntimeError(
                f"EM log-likelihood decreased at iteration {iteration}: "
                f"{trace[-2]:.6f} -> {trace[-1]:.6f}"
            )
        # E-step: posterior of each class identity
        b_inv = np.linalg.inv(between)
        w_inv = np.linalg.inv(within)
        post_means = np.empty_like(class_means)
        post_cov_sum = np.zeros((d, d))
        post_cov_weighted = np.zeros((d, d))
        for i, (n, xbar) in enumerate(zip(counts, class_means)):
            precision = b_inv + n * w_inv
            cov = np.linalg.inv(precision)
            post_means[i] = cov @ (b_inv @ mean + n * (w_inv @ xbar))
            post_cov_sum += cov
            post_cov_weighted += n * cov
        # M-step
        mean = post_means.mean(axis=0)
        dev = post_means - mean
        between = _regularize((dev.T @ dev + post_cov_sum) / classes.shape[0])
        residual = np.zeros((d, d))
        for i, (n, xbar, scatter) in enumerate(zip(counts, class_means, class_scatters)):
            offset = (xbar - post_means[i])[:, None]
            residual += scatter + n * (offset @ offset.T)
        within = _regularize((residual + post_cov_weighted) / counts.sum())

    trace.append(
        _marginal_log_likelihood(counts, class_means, class_scatters, mean, between, within)
    )
    return PldaModel(mean, between, within, tuple(trace))


def plda_pair_log_likelihoods(model: PldaModel, first: np.ndarray, second: np.ndarray):
    """Log densities of a pair under the same/different hypotheses."""
    d = model.mean.shape[0]
    total = model.between + model.within
    joint = np.block([[total, model.between], [model.between, total]])
    x = np.atleast_2d(first) - model.mean
    y = np.atleast_2d(second) - model.mean

    stacked = np.concatenate([x, y], axis=1)
    j_cho = cho_factor(joint)
    logdet_j = 2.0 * np.sum(np.log(np.diag(j_cho[0])))
    quad_j = np.sum(stacked * cho_solve(j_cho, stacked.T).T, axis=1)
    log_same = -0.5 * (2 * d * np.log(2.0 * np.pi) + logdet_j + quad_j)

    t_cho = cho_factor(total)
    logdet_t = 2.0 * np.sum(np.log(np.diag(t_cho[0])))
    quad_x = np.sum(x * cho_solve(t_cho, x.T).T, axis=1)
    quad_y = np.sum(y * cho_solve(t_cho, y.T).T, axis=1)
    log_diff = -0.5 * (2 * d * np.log(2.0 * np.pi) + 2 * logdet_t + quad_x + quad_y)
    return log_same, log_diff


def plda_score(model: PldaModel, first, second) -> float | np.ndarray:
    """Same-speaker log-likelihood ratio of one pair or a batch.

    Accepts vectors or (n, dim) batches (broadcast when one side is a
    single vector); returns a scalar for a vector pair.
    """
    first = np.asarray(first, dtype=np.float64)
    second = np.asarray(second, dtype=np.float64)
    scalar = first.ndim == 1 and second.ndim == 1
    a, b = np.atleast_2d(first), np.atleast_2d(second)
    if a.shape[0] == 1 and b.shape[0] > 1:
        a = np.broadcast_to(a, b.shape)
    if b.shape[0] == 1 and a.shape[0] > 1:
        b = np.broadcast_to(b, a.shape)
    log_same, log_diff = plda_pair_log_likelihoods(model, a, b)
    ratio = log_same - log_diff
    return float(ratio[0]) if scalar else ratio
