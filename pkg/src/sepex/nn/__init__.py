from .container import (
    ACTIVATIONS,
    LAYER_KINDS,
    STATS_POOLING_EPS,
    ContainerError,
    LayerSpec,
    WeightContainer,
    read_container,
    write_container,
)
from .network import Layer, SequentialNet, net_from_container, net_to_tensors

__all__ = [
    "ACTIVATIONS",
    "LAYER_KINDS",
    "STATS_POOLING_EPS",
    "ContainerError",
    "LayerSpec",
    "WeightContainer",
    "read_container",
    "write_container",
    "Layer",
    "SequentialNet",
    "net_from_container",
    "net_to_tensors",
]
