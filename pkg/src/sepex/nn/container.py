"""Network weight container files (extension ``.nnw``).

Layout: one ASCII header line ``NNW <version> <manifest_bytes>``, the
UTF-8 JSON manifest, then the tensor blobs concatenated back to back.
The manifest records the format version, an architecture descriptor
(a kind tag plus ordered layer records) and a tensor table with name,
shape, byte offset into the blob section and a CRC32 of the raw bytes.
Tensor data is little-endian float32.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["LayerSpec", "WeightContainer", "ContainerError", "read_container", "write_container"]

FORMAT_VERSION = 1

LAYER_KINDS = (
    "fully-connected",
    "convolution-1d",
    "transposed-convolution-1d",
    "statistics-pooling",
)
ACTIVATIONS = ("linear", "relu", "gated-linear")

# Epsilon added to the variance inside statistics pooling; part of the
# file format contract so independent implementations agree bit-for-bit
# on semantics.
STATS_POOLING_EPS = 1e-10


class ContainerError(ValueError):
    """Malformed, inconsistent or corrupted weight container."""


@dataclass(frozen=True)
class LayerSpec:
    """One layer record of the architecture descriptor."""

    kind: str
    in_channels: int
    out_channels: int
    kernel: int = 1
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    activation: str = "linear"

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ContainerError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ContainerError(f"unknown activation {self.activation!r}")
        if min(self.in_channels, self.out_channels, self.kernel, self.stride, self.dilation) < 1:
            raise ContainerError("layer dimensions must be positive")
        if self.padding < 0:
            raise ContainerError("padding must be nonnegative")
        if self.kind == "statistics-pooling":
            if self.activation != "linear":
                raise ContainerError("statistics-pooling takes no activation")
            if self.out_channels != 2 * self.in_channels:
                raise ContainerError("statistics-pooling must double the channel count")

    @property
    def gated(self) -> bool:
        return self.activation == "gated-linear"

    @property
    def pre_activation_channels(self) -> int:
        """Channels produced by the affine map, before any gating."""
        return 2 * self.out_channels if self.gated else self.out_channels

    def weight_shape(self) -> tuple[int, ...] | None:
        if self.kind == "fully-connected":
            return (self.pre_activation_channels, self.in_channels)
        if self.kind == "convolution-1d":
            return (self.pre_activation_channels, self.in_channels, self.kernel)
        if self.kind == "transposed-convolution-1d":
            return (self.in_channels, self.pre_activation_channels, self.kernel)
        return None  # statistics-pooling has no parameters

    def bias_shape(self) -> tuple[int, ...] | None:
        if self.kind == "statistics-pooling":
            return None
        return (self.pre_activation_channels,)

    def output_length(self, length: int) -> int:
        if self.kind == "convolution-1d":
            span = self.dilation * (self.kernel - 1) + 1
            out = (length + 2 * self.padding - span) // self.stride + 1
            if out < 1:
                raise ContainerError(f"sequence of {length} frames too short for {self}")
            return out
        if self.kind == "transposed-convolution-1d":
            out = (length - 1) * self.stride - 2 * self.padding + self.dilation * (self.kernel - 1) + 1
            if out < 1:
                raise ContainerError(f"sequence of {length} frames too short for {self}")
            return out
        if self.kind == "statistics-pooling":
            return 1
        return length

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
            "stride": self.stride,
            "padding": self.padding,
            "dilation": self.dilation,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "LayerSpec":
        known = {f: record[f] for f in (
            "kind", "in_channels", "out_channels", "kernel", "stride",
            "padding", "dilation", "activation",
        ) if f in record}
        return cls(**known)


@dataclass
class WeightContainer:
    """In-memory form of a ``.nnw`` file."""

    kind: str
    layers: list[LayerSpec]
    meta: dict = field(default_factory=dict)
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def tensor(self, name: str) -> np.ndarray:
        if name not in self.tensors:
            raise ContainerError(f"container has no tensor {name!r}")
        return self.tensors[name]


def write_container(path: str | Path, container: WeightContainer) -> None:
    """Serialize a container; tensors are stored little-endian float32."""
    if not container.tensors and not container.layers:
        raise ContainerError("refusing to write an empty container")
    blobs = []
    table = []
    offset = 0
    for name in container.tensors:
        data = np.ascontiguousarray(container.tensors[name], dtype="<f4")
        raw = data.tobytes()
        table.append(
            {
                "name": name,
                "shape": list(data.shape),
                "offset": offset,
                "crc32": zlib.crc32(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "endianness": "little",
        "architecture": {
            "kind": container.kind,
            "meta": dict(sorted(container.meta.items())),
            "layers": [layer.to_dict() for layer in container.layers],
        },
        "tensors": table,
    }
    payload = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(f"NNW {FORMAT_VERSION} {len(payload)}\n".encode("ascii"))
        fh.write(payload)
        for raw in blobs:
            fh.write(raw)


def read_container(path: str | Path) -> WeightContainer:
    """Parse and checksum-verify a ``.nnw`` file."""
    with open(path, "rb") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 3 or parts[0] != b"NNW":
            raise ContainerError(f"{path}: not a weight container")
        version, manifest_size = int(parts[1]), int(parts[2])
        if version != FORMAT_VERSION:
            raise ContainerError(f"{path}: unsupported format version {version}")
        try:
            manifest = json.loads(fh.read(manifest_size).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ContainerError(f"{path}: bad manifest: {exc}") from exc
        blob = fh.read()

    arch = manifest.get("architecture", {})
    layers = [LayerSpec.from_dict(rec) for rec in arch.get("layers", [])]
    tensors: dict[str, np.ndarray] = {}
    for rec in manifest.get("tensors", []):
        shape = tuple(rec["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = rec["offset"]
        raw = blob[start : start + 4 * count]
        if len(raw) != 4 * count:
            raise ContainerError(f"{path}: truncated blob for tensor {rec['name']!r}")
        if zlib.crc32(raw) != rec["crc32"]:
            raise ContainerError(f"{path}: checksum failure for tensor {rec['name']!r}")
        tensors[rec["name"]] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
    return WeightContainer(
        kind=arch.get("kind", ""),
        layers=layers,
        meta=dict(arch.get("meta", {})),
        tensors=tensors,
    )
