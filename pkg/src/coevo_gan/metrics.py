"""Quality and diversity metrics for 2D generators.

Quality is the sliced 1-Wasserstein distance between generated and test
samples.  Diversity is measured against the ground-truth mixture: entropy of
the nearest-mode assignment, and the number of modes that receive enough
samples inside their own ``radius_multiplier * std`` ball.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import nn
from .datasets import MixtureSpec

N_PROJECTIONS = 128


@dataclass(frozen=True)
class MetricsReport:
    wd: float
    entropy: float
    coverage: int
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def wasserstein_1d(a, b) -> float:
    """Exact W1 between two equal-size empirical distributions on the line."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size != b.size or a.size == 0:
        raise ValueError(f"wasserstein_1d needs equal non-empty sizes, got {a.size} and {b.size}")
    return float(np.abs(a - b).mean())


def projection_directions(n_projections: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vectors at angles drawn uniformly from [0, pi), shape (n_projections, 2)."""
    if n_projections < 1:
        raise ValueError("n_projections must be >= 1")
    theta = rng.uniform(0.0, np.pi, size=n_projections)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def sliced_wasserstein(A, B, n_projections: int = N_PROJECTIONS, rng: np.random.Generator | None = None,
                       directions: np.ndarray | None = None) -> float:
    """Mean over projection directions of the 1D W1 between projected samples.

    Directions are drawn from ``rng`` unless given explicitly.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape or A.ndim != 2 or len(A) == 0:
        raise ValueError(f"sliced_wasserstein needs equal-shape point sets, got {A.shape} and {B.shape}")
    if directions is None:
        if rng is None:
            raise ValueError("pass either rng or directions")
        directions = projection_directions(n_projections, rng)
    pa = np.sort(A @ directions.T, axis=0)
    pb = np.sort(B @ directions.T, axis=0)
    return float(np.abs(pa - pb).mean())


def nearest_mode(samples, spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest center (lowest index wins ties) and the distance to it."""
    x = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    d2 = ((x[:, None, :] - spec.centers[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, np.sqrt(d2[np.arange(len(x)), idx])


def cluster_entropy(samples, spec: MixtureSpec) -> float:
    """Shannon entropy (nats) of the nearest-mode assignment of all samples."""
    idx, _ = nearest_mode(samples, spec)
    if idx.size == 0:
        raise ValueError("cluster_entropy needs at least one sample")
    p = np.bincount(idx, minlength=spec.n_modes) / idx.size
    p = p[p > 0]
    return float(max(0.0, -(p * np.log(p)).sum()))


def mode_coverage(samples, spec: MixtureSpec, radius_multiplier: float = 3.0,
                  min_fraction: float = 0.01) -> int:
    idx, dist = nearest_mode(samples, spec)
    n = idx.size
    if n == 0:
        raise ValueError("mode_coverage needs at least one sample")
    hit = dist <= radius_multiplier * spec.stds[idx]
    counts = np.bincount(idx[hit], minlength=spec.n_modes)
    need = max(1, math.ceil(min_fraction * n))
    return int((counts >= need).sum())


def generate(gen: nn.NetworkParams, n: int, rng: np.random.Generator) -> np.ndarray:
    return nn.forward(gen, rng.standard_normal((n, gen.in_dim)))


def evaluate_generator(gen: nn.NetworkParams, spec: MixtureSpec, test, rng: np.random.Generator,
                       n_projections: int = N_PROJECTIONS) -> MetricsReport:
    """Metric suite for one generator: as many samples as the test set, seeded by ``rng``.

    ``gen`` may also be any callable ``(n, rng) -> (n, 2) array``.
    """
    test = np.asarray(test, dtype=np.float64)
    if len(test) == 0:
        raise ValueError("evaluate_generator needs a non-empty test set")
    n = len(test)
    samples = gen(n, rng) if callable(gen) else generate(gen, n, rng)
    wd = sliced_wasserstein(samples, test, n_projections, rng)
    return MetricsReport(wd, cluster_entropy(samples, spec), mode_coverage(samples, spec), n)
