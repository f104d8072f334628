"""Dense MLP engine: forward, analytic backward and Adam on a flat parameter vector.

Parameters of a network live in one contiguous float64 vector; per-layer
weight matrices (out_dim x in_dim, row-major) and bias vectors are views
into it.  Adam therefore updates the whole network with a handful of
vector operations, which is what keeps single-core training fast.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

ACTIVATIONS = ("relu", "leaky_relu", "tanh", "sigmoid", "identity")


class ConfigError(ValueError):
    """Invalid configuration (topology, dataset, strategy or experiment)."""


class NumericError(FloatingPointError):
    """A non-finite value showed up where finite values are required."""


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "identity"
    slope: float = 0.2  # only used by leaky_relu

    def __post_init__(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError(f"layer dims must be >= 1, got {self.in_dim}->{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.activation == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ConfigError(f"leaky_relu slope must be in (0, 1), got {self.slope}")

    @property
    def n_params(self) -> int:
        return self.out_dim * self.in_dim + self.out_dim

    def to_dict(self) -> dict:
        d = {"in_dim": self.in_dim, "out_dim": self.out_dim, "activation": self.activation}
        if self.activation == "leaky_relu":
            d["slope"] = self.slope
        return d


def generator_topology(latent_dim: int = 32, hidden: int = 128) -> list[LayerSpec]:
    return [LayerSpec(latent_dim, hidden, "relu"), LayerSpec(hidden, 2, "tanh")]


def discriminator_topology(hidden: int = 128, slope: float = 0.2) -> list[LayerSpec]:
    return [LayerSpec(2, hidden, "leaky_relu", slope), LayerSpec(hidden, 1, "sigmoid")]


def _check_chain(topology: Sequence[LayerSpec]) -> tuple[LayerSpec, ...]:
    topology = tuple(topology)
    if not topology:
        raise ConfigError("topology must contain at least one layer")
    for i in range(len(topology) - 1):
        if topology[i].out_dim != topology[i + 1].in_dim:
            raise ConfigError(
                f"dimension chain broken between layer {i} (out_dim={topology[i].out_dim}) "
                f"and layer {i + 1} (in_dim={topology[i + 1].in_dim})"
            )
    return topology


class NetworkParams:
    """Flat parameter store for a fixed-topology MLP.

    ``flat`` owns the memory; ``weights[i]`` and ``biases[i]`` are views.
    The same class doubles as the container for gradients.
    """

    def __init__(self, topology: Sequence[LayerSpec], flat: np.ndarray | None = None):
        self.topology = _check_chain(topology)
        size = sum(layer.n_params for layer in self.topology)
        if flat is None:
            flat = np.zeros(size)
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (size,):
            raise ValueError(f"flat parameter vector must have shape ({size},), got {flat.shape}")
        self.flat = flat
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        offset = 0
        for layer in self.topology:
            n_w = layer.out_dim * layer.in_dim
            self.weights.append(flat[offset:offset + n_w].reshape(layer.out_dim, layer.in_dim))
            offset += n_w
            self.biases.append(flat[offset:offset + layer.out_dim])
            offset += layer.out_dim

    @property
    def in_dim(self) -> int:
        return self.topology[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.topology[-1].out_dim

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.topology, self.flat.copy())

    def __repr__(self) -> str:
        dims = "->".join([str(self.in_dim)] + [str(l.out_dim) for l in self.topology])
        return f"NetworkParams({dims}, n={self.flat.size})"


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_network(cls, net: NetworkParams, learning_rate: float = 3e-4, **kwargs) -> "AdamState":
        return cls(np.zeros_like(net.flat), np.zeros_like(net.flat),
                   learning_rate=learning_rate, **kwargs)

    def copy(self) -> "AdamState":
        return AdamState(self.first_moment.copy(), self.second_moment.copy(), self.step_count,
                         self.learning_rate, self.beta1, self.beta2, self.epsilon)


def init_network(topology: Sequence[LayerSpec], rng: np.random.Generator) -> NetworkParams:
    """Xavier-uniform weights, zero biases."""
    net = NetworkParams(topology)
    for layer, w in zip(net.topology, net.weights):
        limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        w[...] = rng.uniform(-limit, limit, size=w.shape)
    return net


def _activate(z: np.ndarray, layer: LayerSpec) -> np.ndarray:
    """Apply the layer's activation in place and return ``z``."""
    act = layer.activation
    if act == "relu":
        np.maximum(z, 0.0, out=z)
    elif act == "leaky_relu":
        np.maximum(z, layer.slope * z, out=z)
    elif act == "tanh":
        np.tanh(z, out=z)
    elif act == "sigmoid":
        expit(z, out=z)
    return z


def _scale_by_activation_grad(delta: np.ndarray, a: np.ndarray, layer: LayerSpec) -> None:
    """delta *= d activation / d pre-activation, written in terms of the output ``a``."""
    act = layer.activation
    if act == "relu":
        delta *= a > 0.0
    elif act == "leaky_relu":
        # output keeps the sign of the pre-activation
        delta *= layer.slope + (1.0 - layer.slope) * (a > 0.0)
    elif act == "tanh":
        delta *= 1.0 - a * a
    elif act == "sigmoid":
        delta *= a * (1.0 - a)


@dataclass
class ForwardCache:
    """Per-layer inputs and outputs of one forward pass."""
    inputs: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)


def forward(net: NetworkParams, x: np.ndarray, cache: ForwardCache | None = None) -> np.ndarray:
    """Evaluate ``net`` on a batch (rows are samples).

    Pass an empty ``ForwardCache`` to keep the activations needed by ``backward``.
    Raises ``NumericError`` naming the first layer whose output is not finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"input must be (n, {net.in_dim}), got {x.shape}")
    a = x
    outs = []
    with np.errstate(invalid="ignore", over="ignore"):
        for layer, w, b in zip(net.topology, net.weights, net.biases):
            z = a @ w.T
            z += b
            out = _activate(z, layer)
            if cache is not None:
                cache.inputs.append(a)
                cache.outputs.append(out)
            outs.append(out)
            a = out
    # NaN propagates through every activation, so one check on the output
    # catches it; inf can be squashed by tanh/sigmoid, hence the max test.
    if not np.isfinite(a).all() or (len(outs) > 1 and not np.isfinite(np.abs(outs[-2]).max())):
        for i, out in enumerate(outs):
            if not np.isfinite(out).all():
                raise NumericError(f"non-finite activation in layer {i}")
        raise NumericError(f"non-finite activation in layer {len(outs) - 1}")
    return a


def backward(
    net: NetworkParams,
    x: np.ndarray | None,
    output_gradient: np.ndarray,
    cache: ForwardCache | None = None,
    *,
    wrt_pre_activation: bool = False,
    param_grad: bool = True,
    input_grad: bool = True,
) -> tuple[NetworkParams | None, np.ndarray | None]:
    """Backpropagate ``output_gradient`` through ``net``.

    Returns ``(param_grad, input_grad)``.  ``param_grad`` has the layout of
    ``net`` (or is None when ``param_grad=False``, useful when only the input
    gradient is needed, e.g. the discriminator during a generator step);
    ``input_grad=False`` skips the gradient with respect to ``x``.

    With ``wrt_pre_activation=True`` the given gradient is taken to be with
    respect to the last layer's pre-activation (logits) rather than its output.
    """
    if cache is None or not cache.inputs:
        cache = ForwardCache()
        forward(net, x, cache)
    delta = np.array(output_gradient, dtype=np.float64)
    if delta.shape != cache.outputs[-1].shape:
        raise ValueError(f"output gradient shape {delta.shape} != output shape {cache.outputs[-1].shape}")

    grads = NetworkParams(net.topology) if param_grad else None
    last = len(net.topology) - 1
    for i in range(last, -1, -1):
        if not (i == last and wrt_pre_activation):
            _scale_by_activation_grad(delta, cache.outputs[i], net.topology[i])
        if grads is not None:
            np.matmul(delta.T, cache.inputs[i], out=grads.weights[i])
            np.sum(delta, axis=0, out=grads.biases[i])
        if i > 0 or input_grad:
            delta = delta @ net.weights[i]
    return grads, (delta if input_grad else None)


def adam_step(net: NetworkParams, grads: NetworkParams | np.ndarray, state: AdamState
              ) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update, applied in place to ``net`` and ``state``."""
    g = grads.flat if isinstance(grads, NetworkParams) else np.asarray(grads)
    if g.shape != net.flat.shape:
        raise ValueError(f"gradient shape {g.shape} != parameter shape {net.flat.shape}")
    if not np.isfinite(g).all():
        raise NumericError("non-finite gradient passed to adam_step")
    state.step_count += 1
    t = state.step_count
    m, v = state.first_moment, state.second_moment
    m *= state.beta1
    m += (1.0 - state.beta1) * g
    v *= state.beta2
    v += (1.0 - state.beta2) * (g * g)
    step_size = state.learning_rate / (1.0 - state.beta1 ** t)
    denom = np.sqrt(v / (1.0 - state.beta2 ** t))
    denom += state.epsilon
    net.flat -= step_size * (m / denom)
    return net, state


def clone_network(net: NetworkParams, state: AdamState | None = None):
    """Deep copy of a network (and its optimizer state when given)."""
    if state is None:
        return net.copy()
    return net.copy(), state.copy()


# -- parameter snapshots -------------------------------------------------------

SNAPSHOT_FORMAT = "coevo-gan-params"


def save_params(net: NetworkParams, path: str | Path, metadata: dict | None = None) -> None:
    """Write a JSON snapshot: topology header, then each layer's weights
    (row-major, nested lists) and biases.  Floats use repr, so a reload is exact."""
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": 1,
        "topology": [layer.to_dict() for layer in net.topology],
        "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(net.weights, net.biases)],
        "metadata": metadata or {},
    }
    Path(path).write_text(json.dumps(doc))


def load_params(path: str | Path) -> tuple[NetworkParams, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != SNAPSHOT_FORMAT:
        raise ConfigError(f"{path}: not a parameter snapshot")
    topology = [LayerSpec(**layer) for layer in doc["topology"]]
    net = NetworkParams(topology)
    for i, layer in enumerate(doc["layers"]):
        net.weights[i][...] = np.asarray(layer["weight"], dtype=np.float64)
        net.biases[i][...] = np.asarray(layer["bias"], dtype=np.float64)
    return net, doc.get("metadata", {})
