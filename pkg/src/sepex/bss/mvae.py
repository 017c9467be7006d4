"""Separation with a trained decoder network as the source model.

Each source's time-frequency variance is ``g * decoder(z, c)`` where z
is a latent vector, c a class-mixture vector and g a scalar energy
compensation.  At separation time z and the class logits are refined by
gradient descent on the per-source share of the separation objective,
g has a closed-form update, and the demixing matrices follow the same
iterative-projection sweeps as the other separators.  The demixing is
warm-started from an ILRMA run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ..nn.container import ContainerError, WeightContainer
from ..nn.network import SequentialNet, net_from_container
from ..stft import SpectrogramTensor
from . import core
from .ilrma import run_ilrma

__all__ = [
    "DecoderWeights",
    "EncoderWeights",
    "NeuralSourceState",
    "MvaeResult",
    "decoder_forward",
    "decoder_backward",
    "update_scale",
    "update_latents",
    "run_mvae",
]

SCALE_FLOOR = 1e-12
STEP_FLOOR = 1e-8
_SIGMA_FLOOR = 1e-120


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True)
class DecoderWeights:
    """Decoder network mapping (latent, class) to a log-variance surface."""

    net: SequentialNet
    latent_dim: int
    class_dim: int
    frequency_bins: int

    def __post_init__(self) -> None:
        if self.net.input_channels != self.latent_dim + self.class_dim:
            raise ContainerError(
                f"decoder input {self.net.input_channels} != latent {self.latent_dim}"
                f" + class {self.class_dim}"
            )
        if self.net.output_channels != self.frequency_bins:
            raise ContainerError(
                f"decoder output {self.net.output_channels} != {self.frequency_bins} bins"
            )

    @classmethod
    def from_container(cls, container: WeightContainer) -> "DecoderWeights":
        if container.kind != "cvae-decoder":
            raise ContainerError(f"expected a cvae-decoder container, got {container.kind!r}")
        meta = container.meta
        latent, classes, bins = (
            int(meta["latent_dim"]),
            int(meta["class_dim"]),
            int(meta["frequency_bins"]),
        )
        return cls(net_from_container(container, latent + classes), latent, classes, bins)


@dataclass(frozen=True)
class EncoderWeights:
    """Optional encoder mapping a log-power spectrogram to a latent mean."""

    net: SequentialNet
    latent_dim: int
    class_dim: int
    frequency_bins: int

    @classmethod
    def from_container(cls, container: WeightContainer) -> "EncoderWeights":
        if container.kind != "cvae-encoder":
            raise ContainerError(f"expected a cvae-encoder container, got {container.kind!r}")
        meta = container.meta
        latent, classes, bins = (
            int(meta["latent_dim"]),
            int(meta["class_dim"]),
            int(meta["frequency_bins"]),
        )
        net = net_from_container(container, bins + classes)
        if net.output_channels != 2 * latent:
            raise ContainerError("encoder must emit mean and log-variance per latent dim")
        return cls(net, latent, classes, bins)

    def latent_mean(self, power: np.ndarray, class_vector: np.ndarray) -> np.ndarray:
        """Posterior mean for a power spectrogram (bins, frames)."""
        features = np.log(np.maximum(power, 1e-12))
        x = np.concatenate(
            [features, np.broadcast_to(class_vector[:, None], (self.class_dim, power.shape[1]))]
        )
        out = self.net.forward(x)
        return out[: self.latent_dim].mean(axis=1)


@dataclass(frozen=True)
class NeuralSourceState:
    """Per-source latent vector, class logits and energy scale."""

    z: np.ndarray
    c_logits: np.ndarray
    g: float = 1.0

    def __post_init__(self) -> None:
        if self.g <= 0:
            raise ValueError("scale g must be positive")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=np.float64))
        object.__setattr__(self, "c_logits", np.asarray(self.c_logits, dtype=np.float64))

    @property
    def class_vector(self) -> np.ndarray:
        return softmax(self.c_logits)


def decoder_forward(
    weights: DecoderWeights,
    z: np.ndarray,
    class_vector: np.ndarray,
    n_frames: int,
    want_cache: bool = False,
):
    """Variance surface sigma^2 of shape (bins, frames), strictly positive.

    The network output is interpreted as log-variance; the exponential
    head keeps the surface positive for any parameters.
    """
    if z.shape != (weights.latent_dim,) or class_vector.shape != (weights.class_dim,):
        raise ContainerError(
            f"latent/class shapes {z.shape}/{class_vector.shape} do not match decoder"
        )
    u = np.concatenate([z, class_vector])[:, None]
    x = np.broadcast_to(u, (u.shape[0], n_frames)).copy()
    if want_cache:
        out, cache = weights.net.forward(x, want_cache=True)
        sigma_sq = np.maximum(np.exp(out), _SIGMA_FLOOR)
        return sigma_sq, (cache, sigma_sq, class_vector)
    out = weights.net.forward(x)
    return np.maximum(np.exp(out), _SIGMA_FLOOR)


def decoder_backward(weights: DecoderWeights, cache, grad_sigma_sq: np.ndarray):
    """Gradients of a scalar loss w.r.t. z and the class logits.

    Args:
        weights: decoder used for the cached forward pass.
        cache: second return value of ``decoder_forward(want_cache=True)``.
        grad_sigma_sq: upstream gradient w.r.t. the variance surface.

    Returns:
        Tuple ``(grad_z, grad_c_logits)``.
    """
    net_cache, sigma_sq, class_vector = cache
    grad_head = grad_sigma_sq * sigma_sq  # exp head
    grad_in = weights.net.backward_input(net_cache, grad_head)
    grad_z = grad_in[: weights.latent_dim].sum(axis=1)
    grad_c = grad_in[weights.latent_dim :].sum(axis=1)
    # softmax Jacobian
    grad_logits = class_vector * (grad_c - float(class_vector @ grad_c))
    return grad_z, grad_logits


def update_scale(source: np.ndarray, sigma_sq: np.ndarray) -> float:
    """Closed-form energy compensation ``g = mean(|y|^2 / sigma^2)``."""
    if source.shape != sigma_sq.shape:
        raise ValueError(f"shape mismatch {source.shape} vs {sigma_sq.shape}")
    power = np.abs(source) ** 2
    return max(float(np.mean(power / sigma_sq)), SCALE_FLOOR)


def _source_objective(power: np.ndarray, sigma_sq: np.ndarray, g: float) -> float:
    v = np.maximum(g * sigma_sq, core.EPS_VARIANCE)
    return float(np.sum(np.log(v) + power / v))


def update_latents(
    state: NeuralSourceState,
    source: np.ndarray,
    weights: DecoderWeights,
    steps: int = 10,
    step_size: float = 1e-2,
) -> NeuralSourceState:
    """Gradient-descent refinement of one source's latent and class logits.

    Minimizes ``sum(log(g sigma^2) + |y|^2 / (g sigma^2))`` over z and the
    class logits, recomputing the optimal g after every step.  A step
    that would increase the objective is retried with a halved step
    size; if the step size underflows the remaining steps are skipped
    with a warning.  The objective never increases.
    """
    power = np.abs(source) ** 2
    z, logits = state.z.copy(), state.c_logits.copy()

    def evaluate(z_try: np.ndarray, logits_try: np.ndarray):
        c = softmax(logits_try)
        sigma_sq, cache = decoder_forward(weights, z_try, c, power.shape[1], want_cache=True)
        g = max(float(np.mean(power / sigma_sq)), SCALE_FLOOR)
        return _source_objective(power, sigma_sq, g), g, sigma_sq, cache

    value, g, sigma_sq, cache = evaluate(z, logits)
    lr = step_size
    for _ in range(steps):
        grad_sigma_sq = 1.0 / sigma_sq - power / (g * sigma_sq**2)
        grad_z, grad_logits = decoder_backward(weights, cache, grad_sigma_sq)
        grad_norm = np.sqrt(np.sum(grad_z**2) + np.sum(grad_logits**2))
        if grad_norm == 0.0:
            break
        while True:
            trial = evaluate(z - lr * grad_z, logits - lr * grad_logits)
            if trial[0] <= value:
                z -= lr * grad_z
                logits -= lr * grad_logits
                value, g, sigma_sq, cache = trial
                break
            lr *= 0.5
            if lr < STEP_FLOOR:
                warnings.warn("latent update step size underflowed; stopping early")
                return NeuralSourceState(z, logits, g)
    return NeuralSourceState(z, logits, g)


@dataclass
class MvaeResult:
    """Separated spectrogram plus demixing system and per-source states."""

    spectrogram: SpectrogramTensor
    demixing: np.ndarray
    states: list[NeuralSourceState]
    objective_trace: list[float] = field(default_factory=list)


def run_mvae(
    x: SpectrogramTensor,
    weights: DecoderWeights,
    iterations: int = 30,
    warm_start_iterations: int = 30,
    latent_steps: int = 10,
    step_size: float = 1e-2,
    seed: int = 0,
    encoder: EncoderWeights | None = None,
    reference_channel: int = 0,
) -> MvaeResult:
    """Separate a determined mixture with the neural source model.

    The demixing matrices are initialized by ``warm_start_iterations``
    of ILRMA (identity when 0).  Latents start at zero, or at the
    encoder's posterior mean when an encoder is supplied; class logits
    start uniform.  Each iteration refines every source's latent state,
    rebuilds the variance field ``g * sigma^2`` and runs one
    iterative-projection sweep.  The recorded objective never increases.
    """
    values = x.values
    n_src, n_bins, n_frames = values.shape
    if n_bins != weights.frequency_bins:
        raise ContainerError(
            f"mixture has {n_bins} bins but decoder expects {weights.frequency_bins}"
        )
    if iterations < 0 or warm_start_iterations < 0:
        raise ValueError("iteration counts must be >= 0")

    if warm_start_iterations > 0:
        warm = run_ilrma(
            x, warm_start_iterations, seed=seed, apply_projection=False
        )
        demixing = warm.demixing
    else:
        demixing = np.tile(np.eye(n_src, dtype=complex), (n_bins, 1, 1))

    y = core.demix(values, demixing)
    uniform = np.zeros(weights.class_dim)
    states: list[NeuralSourceState] = []
    variance = np.empty_like(values, dtype=np.float64)
    for m in range(n_src):
        if encoder is not None:
            z0 = encoder.latent_mean(np.abs(y[m]) ** 2, softmax(uniform))
        else:
            z0 = np.zeros(weights.latent_dim)
        sigma_sq = decoder_forward(weights, z0, softmax(uniform), n_frames)
        g = update_scale(y[m], sigma_sq)
        states.append(NeuralSourceState(z0, uniform.copy(), g))
        variance[m] = g * sigma_sq

    trace = [core.objective(values, demixing, variance)]
    for _ in range(iterations):
        y = core.demix(values, demixing)
        for m in range(n_src):
            states[m] = update_latents(states[m], y[m], weights, latent_steps, step_size)
            sigma_sq = decoder_forward(
                weights, states[m].z, states[m].class_vector, n_frames
            )
            g = update_scale(y[m], sigma_sq)
            states[m] = replace(states[m], g=g)
            variance[m] = g * sigma_sq
        demixing = core.ip_sweep(values, demixing, variance)
        trace.append(core.objective(values, demixing, variance))

    y = core.demix(values, demixing)
    y = core.projection_back(y, demixing, reference_channel)
    return MvaeResult(x.with_values(y), demixing, states, trace)
