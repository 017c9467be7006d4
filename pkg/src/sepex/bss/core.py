"""Local-Gaussian separation engine shared by the separation algorithms.

Conventions used throughout this subpackage:

* mixture/source spectrograms are complex arrays of shape
  ``(n_sources, n_bins, n_frames)`` -- axis order (m, f, t);
* demixing matrices are complex arrays of shape
  ``(n_bins, n_sources, n_sources)``, row m of ``W[f]`` producing
  source m: ``y[m, f, t] = (W[f] @ x[:, f, t])[m]``;
* per-source variance fields are positive real arrays of shape
  ``(n_sources, n_bins, n_frames)``.

Row updates follow the iterative-projection scheme: the new demixing
vector for source m solves ``(W_f V_fm) w = e_m`` and is normalized so
that ``w^H V_fm w = 1``.  Within one sweep the source index is updated
sequentially while frequency bins are independent, so updates are
vectorized over f.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "EPS_VARIANCE",
    "DemixingError",
    "demix",
    "objective",
    "compute_spatial_covariance",
    "ip_update",
    "ip_sweep",
    "projection_back",
]

EPS_VARIANCE = 1e-10


class DemixingError(RuntimeError):
    """Raised when a demixing row update hits a singular system."""

    def __init__(self, message: str, bin_index: int | None = None):
        super().__init__(message)
        self.bin_index = bin_index


def demix(x: np.ndarray, demixing: np.ndarray) -> np.ndarray:
    """Apply per-bin demixing matrices: ``y[:, f, t] = W[f] @ x[:, f, t]``."""
    x = np.asarray(x)
    demixing = np.asarray(demixing)
    if x.ndim != 3 or demixing.ndim != 3:
        raise ValueError("expected x (m, f, t) and demixing (f, m, m)")
    if demixing.shape[0] != x.shape[1] or demixing.shape[1:] != (x.shape[0], x.shape[0]):
        raise ValueError(
            f"shape mismatch: x {x.shape} vs demixing {demixing.shape}"
        )
    return np.einsum("fmn,nft->mft", demixing, x)


def objective(x: np.ndarray, demixing: np.ndarray, variance: np.ndarray) -> float:
    """Negated log-likelihood of the demixing/variance model (lower is better).

    Computes ``sum(log v + |y|^2 / v) - 2 T sum_f log |det W_f|`` with the
    variance floored at :data:`EPS_VARIANCE`; Gaussian normalization
    constants are dropped.
    """
    y = demix(x, demixing)
    v = np.maximum(variance, EPS_VARIANCE)
    if v.shape != y.shape:
        raise ValueError(f"variance shape {v.shape} does not match {y.shape}")
    n_frames = x.shape[2]
    _, logabsdet = np.linalg.slogdet(demixing)
    value = float(np.sum(np.log(v) + (np.abs(y) ** 2) / v) - 2.0 * n_frames * np.sum(logabsdet))
    if not np.isfinite(value):
        raise FloatingPointError("objective evaluated to a non-finite value")
    return value


def compute_spatial_covariance(x: np.ndarray, variance_row: np.ndarray) -> np.ndarray:
    """Variance-weighted spatial covariance per bin.

    Args:
        x: mixture, shape (m, f, t).
        variance_row: one source's variance surface, shape (f, t).

    Returns:
        Hermitian array of shape (f, m, m):
        ``V[f] = (1/T) sum_t x[:, f, t] x[:, f, t]^H / r[f, t]``.
    """
    n_frames = x.shape[2]
    if n_frames == 0:
        raise ValueError("covariance of an empty frame axis")
    weights = 1.0 / np.maximum(variance_row, EPS_VARIANCE)
    cov = np.einsum("mft,nft,ft->fmn", x, np.conj(x), weights) / n_frames
    return 0.5 * (cov + np.conj(cov.transpose(0, 2, 1)))


def ip_update(demixing_f: np.ndarray, covariance_fm: np.ndarray, m: int) -> np.ndarray:
    """Iterative-projection update of one demixing vector.

    Solves ``(W_f V_fm) w = e_m`` and rescales so ``w^H V_fm w = 1``.
    The updated row of ``W_f`` is ``conj(w)``.

    Raises:
        DemixingError: if the system stays singular after a one-shot
            trace regularization of ``V_fm``.
    """
    n = demixing_f.shape[0]
    e_m = np.zeros(n, dtype=complex)
    e_m[m] = 1.0
    cov = covariance_fm
    try:
        w = np.linalg.solve(demixing_f @ cov, e_m)
    except np.linalg.LinAlgError:
        ridge = 1e-10 * np.real(np.trace(cov)) / n
        cov = cov + ridge * np.eye(n)
        try:
            w = np.linalg.solve(demixing_f @ cov, e_m)
        except np.linalg.LinAlgError as exc:
            raise DemixingError(f"singular demixing system for source {m}") from exc
    scale = np.real(np.conj(w) @ cov @ w)
    if not scale > 0:
        raise DemixingError(f"non-positive quadratic form in row update for source {m}")
    return w / np.sqrt(scale)


def ip_sweep(x: np.ndarray, demixing: np.ndarray, variance: np.ndarray) -> np.ndarray:
    """One full pass of row updates over every (bin, source) pair.

    Bins are processed in parallel; within each bin the source index is
    updated sequentially in ascending order.  Returns a new demixing
    array; the input is not modified.
    """
    n_src, n_bins, _ = x.shape
    demixing = demixing.copy()
    eye = np.eye(n_src, dtype=complex)
    for m in range(n_src):
        cov = compute_spatial_covariance(x, variance[m])
        rhs = np.broadcast_to(eye[:, m : m + 1], (n_bins, n_src, 1))
        try:
            w = np.linalg.solve(demixing @ cov, rhs)[:, :, 0]
        except np.linalg.LinAlgError:
            w = _solve_rows_regularized(demixing, cov, m)
        scale = np.real(np.einsum("fm,fmn,fn->f", np.conj(w), cov, w))
        bad = ~(scale > 0)
        if np.any(bad):
            raise DemixingError(
                f"non-positive quadratic form for source {m}",
                bin_index=int(np.flatnonzero(bad)[0]),
            )
        demixing[:, m, :] = np.conj(w / np.sqrt(scale)[:, None])
    return demixing


def _solve_rows_regularized(demixing: np.ndarray, cov: np.ndarray, m: int) -> np.ndarray:
    """Per-bin fallback for a sweep whose batched solve hit a singular bin.

    Returns already-normalized rows, so the sweep's common rescale is a
    no-op for them.
    """
    n_bins, n_src = cov.shape[0], cov.shape[1]
    w = np.empty((n_bins, n_src), dtype=complex)
    for f in range(n_bins):
        try:
            w[f] = ip_update(demixing[f], cov[f], m)
        except DemixingError as exc:
            raise DemixingError(str(exc) + f" at bin {f}", bin_index=f) from exc
    return w


def projection_back(y: np.ndarray, demixing: np.ndarray, reference_channel: int = 0) -> np.ndarray:
    """Rescale separated sources to their image at a reference channel.

    Each source m is multiplied per bin by ``inv(W_f)[reference, m]``,
    which removes the per-bin scale ambiguity of the demixing solution.
    """
    try:
        mixing = np.linalg.inv(demixing)
    except np.linalg.LinAlgError as exc:
        raise DemixingError("singular demixing matrix in projection back") from exc
    scales = mixing[:, reference_channel, :]  # (f, m)
    return y * scales.T[:, :, None]
