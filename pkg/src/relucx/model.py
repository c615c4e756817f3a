"""Fully-connected ReLU networks and their node maps.

A network is a chain of affine layers with ReLU between them and a single
affine output map at the end.  The node maps are the pre-activations of
every hidden unit plus the final output, numbered layer-major with units
ascending; with architecture (n_0, n_1, ..., n_m, 1) there are
N = n_1 + ... + n_m + 1 of them and the output map is number N.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signs import SignSequence

__all__ = [
    "AffineLayer",
    "ReluNetwork",
    "NodeIndex",
    "AffineFunctional",
    "ModelFormatError",
    "node_map_values",
    "node_map_value_matrix",
    "region_affine_maps",
    "random_init",
    "read_model",
    "write_model",
]


class ModelFormatError(ValueError):
    """Raised when a model dict/file is malformed; message names the field."""


def _check_architecture(architecture: Sequence[int]) -> tuple[int, ...]:
    arch = tuple(architecture)
    if len(arch) < 3:
        raise ModelFormatError(
            f"architecture must list input, hidden and output widths, got {list(arch)}"
        )
    for i, w in enumerate(arch):
        if not isinstance(w, int) or isinstance(w, bool) or w < 1:
            raise ModelFormatError(f"architecture[{i}] must be a positive integer, got {w!r}")
    if arch[-1] != 1:
        raise ModelFormatError(f"architecture[-1] must be 1 (scalar output), got {arch[-1]}")
    return arch


@dataclass(frozen=True, eq=False)
class AffineLayer:
    """One affine map x -> weights @ x + bias; weights has shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    architecture: tuple[int, ...]
    layers: tuple[AffineLayer, ...]

    def __post_init__(self):
        arch = _check_architecture(self.architecture)
        object.__setattr__(self, "architecture", arch)
        if len(self.layers) != len(arch) - 1:
            raise ModelFormatError(
                f"layers has {len(self.layers)} entries, architecture needs {len(arch) - 1}"
            )
        for t, layer in enumerate(self.layers):
            want = (arch[t + 1], arch[t])
            if layer.weights.shape != want:
                raise ModelFormatError(
                    f"layers[{t}].weights has shape {layer.weights.shape}, expected {want}"
                )
            if layer.bias.shape != (arch[t + 1],):
                raise ModelFormatError(
                    f"layers[{t}].bias has shape {layer.bias.shape}, expected ({arch[t + 1]},)"
                )

    @property
    def n0(self) -> int:
        return self.architecture[0]

    @property
    def depth(self) -> int:
        """Number of hidden layers (the output map is not counted)."""
        return len(self.architecture) - 2

    @property
    def num_node_maps(self) -> int:
        return sum(self.architecture[1:])

    def layer_offset(self, layer: int) -> int:
        """Flat index of the first node map of `layer` (1-based layer number)."""
        return sum(self.architecture[1:layer])


@dataclass(frozen=True)
class NodeIndex:
    """Node map address: 1-based layer and unit, plus the 0-based flat index."""

    layer: int
    unit: int
    flat: int


def node_index_table(architecture: Sequence[int]) -> list[NodeIndex]:
    arch = _check_architecture(architecture)
    out = []
    flat = 0
    for layer, width in enumerate(arch[1:], start=1):
        for unit in range(1, width + 1):
            out.append(NodeIndex(layer, unit, flat))
            flat += 1
    return out


@dataclass(frozen=True, eq=False)
class AffineFunctional:
    """Affine map R^{n_0} -> R, x -> normal @ x + offset."""

    normal: np.ndarray
    offset: float

    def value(self, x: np.ndarray) -> float:
        return float(self.normal @ x + self.offset)


def node_map_value_matrix(net: ReluNetwork, points: np.ndarray) -> np.ndarray:
    """Node map values at many points; rows are points, columns node maps."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != net.n0:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {net.n0}")
    cols = []
    h = pts
    for t, layer in enumerate(net.layers):
        z = h @ layer.weights.T + layer.bias
        cols.append(z)
        if t < len(net.layers) - 1:
            h = np.maximum(z, 0.0)
    return np.concatenate(cols, axis=1)


def node_map_values(net: ReluNetwork, x: np.ndarray) -> np.ndarray:
    """Values of all N node maps at a single input point."""
    return node_map_value_matrix(net, np.asarray(x, dtype=float).reshape(1, -1))[0]


def region_affine_maps(
    net: ReluNetwork, region_signs: SignSequence, upto_layer: int
) -> list[AffineFunctional]:
    """Affine functionals of all node maps of layers 1..upto_layer on one region.

    `region_signs` fixes the activation pattern: it must cover the node maps of
    layers strictly below `upto_layer` with no zero entries.  On the closed
    region selected by those signs, every node map of layers <= upto_layer
    restricts to an affine function of the input; the returned list gives those
    functionals in flat node order.
    """
    if not 1 <= upto_layer <= net.depth + 1:
        raise ValueError(f"upto_layer must be in 1..{net.depth + 1}, got {upto_layer}")
    prefix_len = net.layer_offset(upto_layer)
    if region_signs.n != prefix_len:
        raise ValueError(
            f"region signs cover {region_signs.n} node maps, expected {prefix_len}"
        )
    if region_signs.n_zeros():
        raise ValueError("region signs must have no zero entries")

    entries = region_signs.entries
    out: list[AffineFunctional] = []
    mat = net.layers[0].weights.astype(float, copy=True)
    off = net.layers[0].bias.astype(float, copy=True)
    pos = 0
    for layer_no in range(1, upto_layer + 1):
        width = net.architecture[layer_no]
        for j in range(width):
            out.append(AffineFunctional(mat[j].copy(), float(off[j])))
        if layer_no == upto_layer:
            break
        mask = np.array(
            [1.0 if entries[pos + j] > 0 else 0.0 for j in range(width)]
        )
        pos += width
        nxt = net.layers[layer_no]
        mat = nxt.weights @ (mask[:, None] * mat)
        off = nxt.weights @ (mask * off) + nxt.bias
    return out


def random_init(architecture: Sequence[int], seed: int) -> ReluNetwork:
    """Network with iid standard normal weights and biases; seed-deterministic."""
    arch = _check_architecture(architecture)
    rng = np.random.default_rng(seed)
    layers = []
    for t in range(len(arch) - 1):
        w = rng.standard_normal((arch[t + 1], arch[t]))
        b = rng.standard_normal(arch[t + 1])
        layers.append(AffineLayer(w, b))
    return ReluNetwork(arch, tuple(layers))


def network_to_dict(net: ReluNetwork) -> dict:
    return {
        "architecture": list(net.architecture),
        "layers": [
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist()}
            for layer in net.layers
        ],
    }


def network_from_dict(data: dict) -> ReluNetwork:
    if not isinstance(data, dict):
        raise ModelFormatError(f"model must be a JSON object, got {type(data).__name__}")
    if "architecture" not in data:
        raise ModelFormatError("missing field 'architecture'")
    if "layers" not in data:
        raise ModelFormatError("missing field 'layers'")
    arch = data["architecture"]
    if not isinstance(arch, list):
        raise ModelFormatError("'architecture' must be a list of integers")
    arch = _check_architecture(arch)
    raw_layers = data["layers"]
    if not isinstance(raw_layers, list) or len(raw_layers) != len(arch) - 1:
        raise ModelFormatError(
            f"'layers' must be a list of {len(arch) - 1} objects for this architecture"
        )
    layers = []
    for t, entry in enumerate(raw_layers):
        if not isinstance(entry, dict) or "weights" not in entry or "bias" not in entry:
            raise ModelFormatError(f"layers[{t}] must have 'weights' and 'bias'")
        rows = entry["weights"]
        if not isinstance(rows, list) or len(rows) != arch[t + 1]:
            raise ModelFormatError(f"layers[{t}].weights must have {arch[t + 1]} rows")
        for r, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != arch[t]:
                raise ModelFormatError(
                    f"layers[{t}].weights row {r} must have length {arch[t]}"
                )
        bias = entry["bias"]
        if not isinstance(bias, list) or len(bias) != arch[t + 1]:
            raise ModelFormatError(f"layers[{t}].bias must have length {arch[t + 1]}")
        w = np.array(rows, dtype=float)
        b = np.array(bias, dtype=float)
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ModelFormatError(f"layers[{t}] contains a non-finite value")
        layers.append(AffineLayer(w, b))
    return ReluNetwork(arch, tuple(layers))


def read_model(path: str) -> ReluNetwork:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON in {path}: {exc}") from exc
    return network_from_dict(data)


def write_model(net: ReluNetwork, path: str) -> None:
    # json round-trips finite doubles exactly (repr-based float encoding)
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh)
        fh.write("\n")
