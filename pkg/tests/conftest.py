from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from coevo_gan import nn

GOLDEN = Path(__file__).parent / "golden"


def load_golden(name: str) -> dict:
    return json.loads((GOLDEN / name).read_text())


def reference_forward_row(net: nn.NetworkParams, row) -> list[float]:
    """Scalar re-evaluation of one sample with plain Python math."""
    a = [float(v) for v in row]
    for layer, w, b in zip(net.topology, net.weights, net.biases):
        z = [sum(w[o, i] * a[i] for i in range(layer.in_dim)) + b[o] for o in range(layer.out_dim)]
        if layer.activation == "relu":
            a = [max(v, 0.0) for v in z]
        elif layer.activation == "leaky_relu":
            a = [v if v > 0 else layer.slope * v for v in z]
        elif layer.activation == "tanh":
            a = [math.tanh(v) for v in z]
        elif layer.activation == "sigmoid":
            a = [1.0 / (1.0 + math.exp(-v)) for v in z]
        else:
            a = z
    return a


def central_difference(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Numerical gradient of scalar f at theta (theta is modified and restored in place)."""
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        old = theta[k]
        theta[k] = old + h
        up = f()
        theta[k] = old - h
        down = f()
        theta[k] = old
        grad[k] = (up - down) / (2 * h)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / denom).max())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
