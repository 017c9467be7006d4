"""Independent low-rank matrix analysis.

Determined separation with iterative-projection demixing updates and a
rank-K nonnegative matrix factorization of each source's time-frequency
variance.  Basis and activation follow multiplicative updates with a
square-root exponent, which decreases the Itakura-Saito mismatch
between the separated power and the modeled variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rng import stream
from ..stft import SpectrogramTensor
from . import core

__all__ = ["NmfModel", "IlrmaResult", "nmf_variance", "nmf_update", "run_ilrma"]

EPS_NMF = 1e-10


@dataclass(frozen=True)
class NmfModel:
    """Rank-K variance model per source.

    basis has shape (n_sources, n_bins, K), activation has shape
    (n_sources, K, n_frames); all entries are kept >= EPS_NMF.
    """

    basis: np.ndarray
    activation: np.ndarray

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=np.float64)
        activation = np.asarray(self.activation, dtype=np.float64)
        if basis.ndim != 3 or activation.ndim != 3:
            raise ValueError("basis (m, f, k) and activation (m, k, t) must be 3-d")
        if basis.shape[0] != activation.shape[0] or basis.shape[2] != activation.shape[1]:
            raise ValueError(
                f"inconsistent shapes: basis {basis.shape}, activation {activation.shape}"
            )
        if np.any(basis < EPS_NMF) or np.any(activation < EPS_NMF):
            raise ValueError(f"model entries must be >= {EPS_NMF}")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "activation", activation)

    @property
    def n_components(self) -> int:
        return self.basis.shape[2]


def random_nmf_model(n_sources: int, n_bins: int, n_frames: int, n_components: int, seed: int) -> NmfModel:
    """Uniform [0.1, 1] initialization from a counter-based stream."""
    rng = stream(seed)
    basis = rng.uniform(0.1, 1.0, size=(n_sources, n_bins, n_components))
    activation = rng.uniform(0.1, 1.0, size=(n_sources, n_components, n_frames))
    return NmfModel(basis, activation)


def nmf_variance(model: NmfModel) -> np.ndarray:
    """Modeled variance field ``v[m, f, t] = sum_k basis[m, f, k] activation[m, k, t]``."""
    return np.einsum("mfk,mkt->mft", model.basis, model.activation)


def nmf_update(model: NmfModel, power: np.ndarray) -> NmfModel:
    """One multiplicative basis+activation update toward the observed power.

    Args:
        model: current variance model.
        power: separated source power ``|y|^2``, shape (m, f, t).

    Returns:
        Updated model; entries re-floored at EPS_NMF.  When ``power``
        equals the modeled variance the update is the identity.
    """
    power = np.asarray(power, dtype=np.float64)
    if np.any(power < 0):
        raise ValueError("power must be nonnegative")
    basis = model.basis.copy()
    activation = model.activation.copy()
    variance = np.einsum("mfk,mkt->mft", basis, activation)

    inv_v = 1.0 / np.maximum(variance, EPS_NMF)
    num = np.einsum("mft,mkt->mfk", power * inv_v**2, activation)
    den = np.einsum("mft,mkt->mfk", inv_v, activation)
    basis *= np.sqrt(num / np.maximum(den, EPS_NMF))
    np.maximum(basis, EPS_NMF, out=basis)

    variance = np.einsum("mfk,mkt->mft", basis, activation)
    inv_v = 1.0 / np.maximum(variance, EPS_NMF)
    num = np.einsum("mfk,mft->mkt", basis, power * inv_v**2)
    den = np.einsum("mfk,mft->mkt", basis, inv_v)
    activation *= np.sqrt(num / np.maximum(den, EPS_NMF))
    np.maximum(activation, EPS_NMF, out=activation)

    return NmfModel(basis, activation)


@dataclass
class IlrmaResult:
    """Separated spectrogram plus the fitted demixing system and model."""

    spectrogram: SpectrogramTensor
    demixing: np.ndarray
    model: NmfModel
    objective_trace: list[float] = field(default_factory=list)


def run_ilrma(
    x: SpectrogramTensor,
    iterations: int = 100,
    n_components: int = 2,
    seed: int = 0,
    initial_demixing: np.ndarray | None = None,
    reference_channel: int = 0,
    apply_projection: bool = True,
) -> IlrmaResult:
    """Separate a determined multichannel mixture.

    Each iteration demixes with the current matrices, performs one
    multiplicative model update per source, recomputes the variance
    field and runs one iterative-projection sweep; the separated
    spectrogram is finally rescaled to the reference channel.  The
    negated log-likelihood is recorded once per iteration and is
    non-increasing.

    Args:
        x: mixture spectrogram with at least two channels.
        iterations: update count; 0 returns the (possibly warm-started)
            initial system unchanged.
        n_components: NMF rank K per source.
        seed: model initialization seed; identical seeds give
            bit-identical initializations and outputs.
        initial_demixing: optional warm start, shape (f, m, m);
            identity when omitted.
        reference_channel: channel used by projection back.
        apply_projection: skip the final rescaling when False (used for
            warm starts feeding another separator).
    """
    values = x.values
    n_src, n_bins, n_frames = values.shape
    if n_src < 2:
        raise ValueError("need at least two channels for determined separation")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")

    if initial_demixing is None:
        demixing = np.tile(np.eye(n_src, dtype=complex), (n_bins, 1, 1))
    else:
        demixing = np.array(initial_demixing, dtype=complex)
        if demixing.shape != (n_bins, n_src, n_src):
            raise ValueError(f"initial demixing has shape {demixing.shape}")

    model = random_nmf_model(n_src, n_bins, n_frames, n_components, seed)
    basis = model.basis
    activation = model.activation
    trace: list[float] = []

    for _ in range(iterations):
        y = core.demix(values, demixing)
        model = nmf_update(NmfModel(basis, activation), np.abs(y) ** 2)
        basis, activation = model.basis.copy(), model.activation.copy()
        variance = nmf_variance(model)
        demixing = core.ip_sweep(values, demixing, variance)

        # Rebalance per-source scale between the demixing rows and the
        # model; leaves the objective unchanged but keeps magnitudes sane.
        y = core.demix(values, demixing)
        scale = np.sqrt(np.mean(np.abs(y) ** 2, axis=(1, 2)))
        scale = np.maximum(scale, 1e-150)
        demixing /= scale[None, :, None]
        basis /= (scale**2)[:, None, None]
        np.maximum(basis, EPS_NMF, out=basis)
        model = NmfModel(basis, activation)

        trace.append(core.objective(values, demixing, nmf_variance(model)))

    y = core.demix(values, demixing)
    if apply_projection:
        y = core.projection_back(y, demixing, reference_channel)
    return IlrmaResult(x.with_values(y), demixing, model, trace)
