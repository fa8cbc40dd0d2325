#!/usr/bin/env python3
"""
Coordinate networks.
Perceptrons and MLPs with identity, ReLU or sine activations over raw
coordinates or Fourier-mapped inputs, with analytic MSE gradients and the
JSON / binary weight-file formats.
"""
import enum
import json
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from FourierEmbedding import DimensionMismatchError, ProgressiveState, embed, embed_progressive
from FourierLattice import FrequencyMatrix

WEIGHTS_FORMAT = "fourier-inr-weights"
BINARY_MAGIC = b"FSNW"
BINARY_VERSION = 1


class NumericalFailureError(ArithmeticError):
    """A forward or backward pass produced NaN or Inf."""


class Activation(str, enum.Enum):
    IDENTITY = "identity"
    RELU = "relu"
    SINE = "sine"


class InputMode(str, enum.Enum):
    RAW = "raw"
    MAPPED = "mapped"
    MAPPED_PROGRESSIVE = "mapped_progressive"


@dataclass(eq=False)
class Layer:
    """Affine map followed by an activation; sine layers compute sin(omega0 * z)."""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY
    omega0: float = 1.0

    @property
    def fan_in(self) -> int:
        return self.weight.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[0]

    def copy(self) -> "Layer":
        return Layer(self.weight.copy(), self.bias.copy(), self.activation, self.omega0)


@dataclass(eq=False)
class NetworkParams:
    layers: List[Layer]
    input_mode: InputMode = InputMode.RAW
    mapping: Optional[FrequencyMatrix] = None
    progressive: Optional[ProgressiveState] = None

    def __post_init__(self):
        self.input_mode = InputMode(self.input_mode)
        if self.input_mode != InputMode.RAW and self.mapping is None:
            raise ValueError(f"Input mode {self.input_mode.value} needs a frequency mapping")
        if self.input_mode == InputMode.MAPPED_PROGRESSIVE and self.progressive is None:
            self.progressive = ProgressiveState.for_mapping(self.mapping)
        expected = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.fan_in != expected:
                raise DimensionMismatchError(
                    f"Layer {i} expects {layer.fan_in} inputs but receives {expected}"
                )
            if layer.bias.shape != (layer.fan_out,):
                raise DimensionMismatchError(f"Layer {i} bias has shape {layer.bias.shape}")
            expected = layer.fan_out

    @property
    def d(self) -> int:
        if self.mapping is not None:
            return self.mapping.d
        return self.layers[0].fan_in

    @property
    def input_dim(self) -> int:
        if self.input_mode == InputMode.RAW:
            return self.layers[0].fan_in
        return 2 * self.mapping.m

    @property
    def out_dim(self) -> int:
        return self.layers[-1].fan_out

    @property
    def is_mapped_perceptron(self) -> bool:
        return (
            self.input_mode != InputMode.RAW
            and len(self.layers) == 1
            and self.layers[0].activation == Activation.IDENTITY
        )

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            layers=[layer.copy() for layer in self.layers],
            input_mode=self.input_mode,
            mapping=self.mapping,
            progressive=self.progressive,
        )

    def arrays(self) -> List[np.ndarray]:
        """Trainable arrays in a fixed order: w0, b0, w1, b1, ..."""
        out: List[np.ndarray] = []
        for layer in self.layers:
            out.extend([layer.weight, layer.bias])
        return out


@dataclass(eq=False)
class Gradients:
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def arrays(self) -> List[np.ndarray]:
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


@dataclass(frozen=True)
class NetworkSpec:
    """Layer recipe: `depth` hidden layers of `width` units, then a linear output."""

    out_dim: int = 1
    depth: int = 0
    width: int = 32
    activation: Activation = Activation.RELU
    input_mode: InputMode = InputMode.MAPPED
    mapping: Optional[FrequencyMatrix] = field(default=None, compare=False)
    d: int = 2
    first_omega0: float = 30.0
    hidden_omega0: float = 30.0

    @classmethod
    def mapped_perceptron(cls, mapping: FrequencyMatrix, out_dim: int = 1,
                          progressive: bool = False) -> "NetworkSpec":
        mode = InputMode.MAPPED_PROGRESSIVE if progressive else InputMode.MAPPED
        return cls(out_dim=out_dim, depth=0, activation=Activation.IDENTITY,
                   input_mode=mode, mapping=mapping, d=mapping.d)

    @classmethod
    def one_layer_siren(cls, width: int, d: int = 2, out_dim: int = 1,
                        omega0: float = 30.0) -> "NetworkSpec":
        return cls(out_dim=out_dim, depth=1, width=width, activation=Activation.SINE,
                   input_mode=InputMode.RAW, mapping=None, d=d, first_omega0=omega0)


def init_network(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Seeded initialization.

    ReLU layers: He uniform, U(-sqrt(6/fan_in), sqrt(6/fan_in)).
    Sine layers on raw coordinates: U(-1/fan_in, 1/fan_in) with omega0 = first_omega0.
    Other sine layers: U(-sqrt(6/fan_in)/omega0, sqrt(6/fan_in)/omega0) with
    omega0 = hidden_omega0, so omega0 * z keeps unit scale.
    Linear output: U(-sqrt(3/fan_in), sqrt(3/fan_in)), preserving E[h^2].
    Biases start at zero.
    """
    input_mode = InputMode(spec.input_mode)
    activation = Activation(spec.activation)
    if input_mode != InputMode.RAW and spec.mapping is None:
        raise ValueError("Mapped networks need a frequency mapping")
    if spec.depth < 0 or spec.width < 1 or spec.out_dim < 1:
        raise ValueError(f"Invalid layer recipe: {spec}")
    if spec.depth > 0 and activation == Activation.IDENTITY:
        raise ValueError("Hidden layers need a relu or sine activation")

    rng = np.random.Generator(np.random.PCG64(seed))
    fan_in = spec.d if input_mode == InputMode.RAW else 2 * spec.mapping.m
    layers: List[Layer] = []
    for i in range(spec.depth):
        if activation == Activation.RELU:
            bound, omega0 = math.sqrt(6.0 / fan_in), 1.0
        elif i == 0 and input_mode == InputMode.RAW:
            bound, omega0 = 1.0 / fan_in, spec.first_omega0
        else:
            bound, omega0 = math.sqrt(6.0 / fan_in) / spec.hidden_omega0, spec.hidden_omega0
        weight = rng.uniform(-bound, bound, size=(spec.width, fan_in))
        layers.append(Layer(weight, np.zeros(spec.width), activation, omega0))
        fan_in = spec.width

    bound = math.sqrt(3.0 / fan_in)
    weight = rng.uniform(-bound, bound, size=(spec.out_dim, fan_in))
    layers.append(Layer(weight, np.zeros(spec.out_dim), Activation.IDENTITY, 1.0))
    return NetworkParams(layers=layers, input_mode=input_mode, mapping=spec.mapping)


def input_features(params: NetworkParams, x) -> np.ndarray:
    """First-layer input: raw coordinates or (progressively weighted) Fourier features."""
    if params.input_mode == InputMode.RAW:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[-1] != params.input_dim:
            raise DimensionMismatchError(f"Expected coordinates with {params.input_dim} entries")
        return x
    if params.input_mode == InputMode.MAPPED_PROGRESSIVE:
        return embed_progressive(x, params.mapping, params.progressive)
    return embed(x, params.mapping)


def _activate(layer: Layer, z: np.ndarray) -> np.ndarray:
    if layer.activation == Activation.RELU:
        return np.maximum(z, 0.0)
    if layer.activation == Activation.SINE:
        return np.sin(layer.omega0 * z)
    return z


def _activation_grad(layer: Layer, z: np.ndarray) -> np.ndarray:
    if layer.activation == Activation.RELU:
        return np.where(z > 0.0, 1.0, 0.0)  # derivative at the kink taken as 0
    if layer.activation == Activation.SINE:
        return layer.omega0 * np.cos(layer.omega0 * z)
    return np.ones_like(z)


def _forward_cached(params: NetworkParams, x) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    h = input_features(params, x)
    inputs, preactivations = [], []
    for layer in params.layers:
        inputs.append(h)
        z = h @ layer.weight.T + layer.bias
        preactivations.append(z)
        h = _activate(layer, z)
    return h, inputs, preactivations


def forward(params: NetworkParams, x) -> np.ndarray:
    """Network output of shape (out_dim,) for one coordinate or (n, out_dim) for a batch."""
    y, _, _ = _forward_cached(params, x)
    if not np.all(np.isfinite(y)):
        raise NumericalFailureError("Forward pass produced non-finite values")
    return y


def backward(params: NetworkParams, x_batch, target_batch) -> Tuple[float, Gradients]:
    """Mean-squared error over samples and channels, and its gradient for every layer."""
    x_batch = np.asarray(x_batch, dtype=np.float64)
    if x_batch.ndim != 2 or x_batch.shape[0] == 0:
        raise ValueError("backward needs a non-empty (n, d) batch")
    target = np.asarray(target_batch, dtype=np.float64).reshape(x_batch.shape[0], -1)
    if target.shape[1] != params.out_dim:
        raise DimensionMismatchError(f"Targets have {target.shape[1]} channels, network has {params.out_dim}")

    y, inputs, preactivations = _forward_cached(params, x_batch)
    if not np.all(np.isfinite(y)):
        raise NumericalFailureError("Forward pass produced non-finite values")
    residual = y - target
    loss = float(np.mean(residual ** 2))

    grad_w: List[np.ndarray] = [np.empty(0)] * len(params.layers)
    grad_b: List[np.ndarray] = [np.empty(0)] * len(params.layers)
    delta = 2.0 * residual / residual.size
    for i in reversed(range(len(params.layers))):
        layer = params.layers[i]
        delta = delta * _activation_grad(layer, preactivations[i])
        grad_w[i] = delta.T @ inputs[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ layer.weight
    grads = Gradients(weights=grad_w, biases=grad_b)
    if not all(np.all(np.isfinite(g)) for g in grads.arrays()):
        raise NumericalFailureError("Backward pass produced non-finite gradients")
    return loss, grads


def set_output_weights(params: NetworkParams, W, b) -> NetworkParams:
    """Replace the readout of a mapped perceptron, e.g. with spectral coefficients."""
    if not params.is_mapped_perceptron:
        raise ValueError("set_output_weights only applies to a Fourier-mapped perceptron")
    layer = params.layers[0]
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if W.shape != layer.weight.shape or b.shape != layer.bias.shape:
        raise DimensionMismatchError(
            f"Expected W {layer.weight.shape} and b {layer.bias.shape}, got {W.shape} and {b.shape}"
        )
    return replace(params, layers=[Layer(W.copy(), b.copy(), Activation.IDENTITY, 1.0)])


def params_to_document(params: NetworkParams) -> Dict[str, Any]:
    progressive = None
    if params.progressive is not None and params.input_mode == InputMode.MAPPED_PROGRESSIVE:
        progressive = {
            "alpha": params.progressive.alpha,
            "alpha_max": params.progressive.alpha_max,
            "end_fraction": params.progressive.end_fraction,
        }
    return {
        "format": WEIGHTS_FORMAT,
        "version": 1,
        "input_mode": params.input_mode.value,
        "mapping": params.mapping.to_dict() if params.mapping is not None else None,
        "progressive": progressive,
        "layers": [
            {
                "w": layer.weight.tolist(),
                "b": layer.bias.tolist(),
                "act": layer.activation.value,
                "omega0": layer.omega0,
            }
            for layer in params.layers
        ],
    }


def params_from_document(doc: Dict[str, Any]) -> NetworkParams:
    if doc.get("format") != WEIGHTS_FORMAT:
        raise ValueError(f"Not a weight file: format={doc.get('format')!r}")
    mapping = FrequencyMatrix.from_dict(doc["mapping"]) if doc.get("mapping") else None
    layers = []
    for entry in doc["layers"]:
        weight = np.asarray(entry["w"], dtype=np.float64)
        if weight.ndim == 1:
            weight = weight[None, :]
        layers.append(Layer(weight, np.asarray(entry["b"], dtype=np.float64),
                            Activation(entry["act"]), float(entry.get("omega0", 1.0))))
    progressive = None
    if doc.get("progressive"):
        progressive = ProgressiveState(**doc["progressive"])
    return NetworkParams(layers=layers, input_mode=InputMode(doc["input_mode"]),
                         mapping=mapping, progressive=progressive)


def save_weights(params: NetworkParams, path: str) -> None:
    """Write JSON, or the little-endian binary layout when the path ends in .bin.

    Binary layout: magic b"FSNW", uint32 version, uint32 header length, a
    UTF-8 JSON header (the JSON document with array values removed), then
    every layer's weight and bias as little-endian float64 in layer order.
    """
    doc = params_to_document(params)
    if not str(path).endswith(".bin"):
        with open(path, "w") as f:
            json.dump(doc, f)
        return
    header = dict(doc)
    header["layers"] = [
        {"shape": list(layer.weight.shape), "act": layer.activation.value, "omega0": layer.omega0}
        for layer in params.layers
    ]
    encoded = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(BINARY_MAGIC)
        f.write(struct.pack("<II", BINARY_VERSION, len(encoded)))
        f.write(encoded)
        for layer in params.layers:
            f.write(layer.weight.astype("<f8").tobytes())
            f.write(layer.bias.astype("<f8").tobytes())


def load_weights(path: str) -> NetworkParams:
    with open(path, "rb") as f:
        payload = f.read()
    if not payload.startswith(BINARY_MAGIC):
        return params_from_document(json.loads(payload.decode("utf-8")))
    version, length = struct.unpack_from("<II", payload, len(BINARY_MAGIC))
    if version != BINARY_VERSION:
        raise ValueError(f"Unsupported binary weight version {version}")
    offset = len(BINARY_MAGIC) + 8
    header = json.loads(payload[offset:offset + length].decode("utf-8"))
    offset += length
    layers = []
    for entry in header["layers"]:
        rows, cols = entry["shape"]
        weight = np.frombuffer(payload, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += 8 * rows * cols
        bias = np.frombuffer(payload, dtype="<f8", count=rows, offset=offset)
        offset += 8 * rows
        layers.append({"w": weight.astype(np.float64), "b": bias.astype(np.float64),
                       "act": entry["act"], "omega0": entry["omega0"]})
    header["layers"] = layers
    return params_from_document(header)
