"""Sequence-network forward passes and input gradients.

Networks operate on float64 arrays of shape (channels, frames).  Only
gradients with respect to the *input* are implemented: the separation
algorithms optimize latent inputs of a fixed, already-trained network,
so parameter gradients are never needed here.

Convolution uses the usual cross-correlation convention: with weight
``w[out, in, k]``, ``y[o, t] = b[o] + sum_{i,k} w[o,i,k] *
x_pad[i, t*stride + k*dilation]``.  Transposed convolution is its exact
adjoint with weight stored as ``w[in, out, k]``.  The two operations are
each other's input-gradient, which the implementation exploits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .container import (
    STATS_POOLING_EPS,
    ContainerError,
    LayerSpec,
    WeightContainer,
)

__all__ = ["Layer", "SequentialNet", "net_from_container", "net_to_tensors"]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _conv(x: np.ndarray, weight: np.ndarray, stride: int, padding: int, dilation: int) -> np.ndarray:
    """Strided dilated cross-correlation of (C, T) with weight (O, C, K)."""
    kernel = weight.shape[2]
    span = dilation * (kernel - 1) + 1
    xp = np.pad(x, ((0, 0), (padding, padding)))
    if xp.shape[1] < span:
        raise ContainerError(f"sequence of {x.shape[1]} frames too short for kernel span {span}")
    windows = sliding_window_view(xp, span, axis=1)[:, ::stride, ::dilation]
    return np.einsum("oik,itk->ot", weight, windows)


def _tconv(x: np.ndarray, weight: np.ndarray, stride: int, padding: int, dilation: int) -> np.ndarray:
    """Transposed convolution of (C, T) with weight (C, O, K); adjoint of _conv."""
    n_in, length = x.shape
    kernel = weight.shape[2]
    if stride > 1:
        up = np.zeros((n_in, (length - 1) * stride + 1))
        up[:, ::stride] = x
    else:
        up = x
    margin = dilation * (kernel - 1)
    up = np.pad(up, ((0, 0), (margin, margin)))
    flipped = weight[:, :, ::-1].transpose(1, 0, 2)  # (O, C, K) kernel-reversed
    full = _conv(up, flipped, stride=1, padding=0, dilation=dilation)
    out_len = full.shape[1] - 2 * padding
    if out_len < 1:
        raise ContainerError("transposed convolution output is empty")
    return full[:, padding : padding + out_len] if padding else full


@dataclass
class Layer:
    """A layer descriptor with its parameters (float64)."""

    spec: LayerSpec
    weight: np.ndarray | None
    bias: np.ndarray | None

    def __post_init__(self) -> None:
        expected_w, expected_b = self.spec.weight_shape(), self.spec.bias_shape()
        got_w = None if self.weight is None else tuple(self.weight.shape)
        got_b = None if self.bias is None else tuple(self.bias.shape)
        if got_w != expected_w or got_b != expected_b:
            raise ContainerError(
                f"parameter shapes {got_w}/{got_b} do not match layer {self.spec}"
            )

    def forward(self, x: np.ndarray, cache: list | None = None) -> np.ndarray:
        spec = self.spec
        if x.shape[0] != spec.in_channels:
            raise ContainerError(
                f"layer expects {spec.in_channels} channels, got {x.shape[0]}"
            )
        if spec.kind == "fully-connected":
            pre = self.weight @ x + self.bias[:, None]
        elif spec.kind == "convolution-1d":
            pre = _conv(x, self.weight, spec.stride, spec.padding, spec.dilation)
            pre += self.bias[:, None]
        elif spec.kind == "transposed-convolution-1d":
            pre = _tconv(x, self.weight, spec.stride, spec.padding, spec.dilation)
            pre += self.bias[:, None]
        else:  # statistics-pooling
            mean = x.mean(axis=1)
            var = np.mean((x - mean[:, None]) ** 2, axis=1)
            pre = np.concatenate([mean, np.sqrt(var + STATS_POOLING_EPS)])[:, None]

        if spec.activation == "linear":
            out = pre
        elif spec.activation == "relu":
            out = np.maximum(pre, 0.0)
        else:  # gated-linear
            half = spec.out_channels
            gate = _sigmoid(pre[half:])
            out = pre[:half] * gate
        if cache is not None:
            cache.append((x.shape[1], pre))
        return out

    def backward_input(self, cached: tuple, grad_out: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. this layer's input given the cached forward pass."""
        in_length, pre = cached
        spec = self.spec
        if spec.activation == "linear":
            grad_pre = grad_out
        elif spec.activation == "relu":
            grad_pre = grad_out * (pre > 0)
        else:  # gated-linear
            half = spec.out_channels
            gate = _sigmoid(pre[half:])
            grad_pre = np.concatenate(
                [grad_out * gate, grad_out * pre[:half] * gate * (1.0 - gate)]
            )

        if spec.kind == "fully-connected":
            return self.weight.T @ grad_pre
        if spec.kind == "convolution-1d":
            # adjoint: the (out, in, k) conv weight read as a (in', out', k)
            # transposed-conv weight is exactly the input gradient
            grad_x = _tconv(grad_pre, self.weight, spec.stride, 0, spec.dilation)
            padded_len = in_length + 2 * spec.padding
            if grad_x.shape[1] < padded_len:  # conv dropped a tail remainder
                grad_x = np.pad(grad_x, ((0, 0), (0, padded_len - grad_x.shape[1])))
            if spec.padding:
                grad_x = grad_x[:, spec.padding : spec.padding + in_length]
            return grad_x
        if spec.kind == "transposed-convolution-1d":
            grad_x = _conv(grad_pre, self.weight, spec.stride, spec.padding, spec.dilation)
            return grad_x[:, :in_length]
        raise NotImplementedError(f"no input gradient for {spec.kind}")


class SequentialNet:
    """Ordered layer chain with shape checking at construction."""

    def __init__(self, layers: list[Layer], input_channels: int):
        channels = input_channels
        for layer in layers:
            if layer.spec.in_channels != channels:
                raise ContainerError(
                    f"layer expects {layer.spec.in_channels} input channels, "
                    f"previous layer produces {channels}"
                )
            channels = layer.spec.out_channels
        self.layers = layers
        self.input_channels = input_channels
        self.output_channels = channels

    def output_length(self, length: int) -> int:
        for layer in self.layers:
            length = layer.spec.output_length(length)
        return length

    def forward(self, x: np.ndarray, want_cache: bool = False):
        cache: list | None = [] if want_cache else None
        for layer in self.layers:
            x = layer.forward(x, cache)
        return (x, cache) if want_cache else x

    def backward_input(self, cache: list, grad_out: np.ndarray) -> np.ndarray:
        for layer, cached in zip(reversed(self.layers), reversed(cache)):
            grad_out = layer.backward_input(cached, grad_out)
        return grad_out


def net_from_container(container: WeightContainer, input_channels: int) -> SequentialNet:
    """Assemble a net from layer records and ``layers.<i>.{weight,bias}`` tensors."""
    layers = []
    for i, spec in enumerate(container.layers):
        weight = bias = None
        if spec.weight_shape() is not None:
            weight = container.tensor(f"layers.{i}.weight")
        if spec.bias_shape() is not None:
            bias = container.tensor(f"layers.{i}.bias")
        layers.append(Layer(spec, weight, bias))
    return SequentialNet(layers, input_channels)


def net_to_tensors(net: SequentialNet) -> dict[str, np.ndarray]:
    """Tensor table for serializing a net, inverse of net_from_container."""
    tensors: dict[str, np.ndarray] = {}
    for i, layer in enumerate(net.layers):
        if layer.weight is not None:
            tensors[f"layers.{i}.weight"] = layer.weight
        if layer.bias is not None:
            tensors[f"layers.{i}.bias"] = layer.bias
    return tensors
