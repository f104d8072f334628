"""Synthetic 2D Gaussian-mixture datasets: blob-8 and the gaussian-k rings."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn import ConfigError

# Canonical blob-8 geometry; every run shares it.
BLOB8_LAYOUT_SEED = 20250607
BLOB8_STD = 0.15
BLOB8_EXTENT = 0.8

RING_RADIUS = 0.8
RING_SIGMA = 0.05

N_TRAIN = 10_000
N_TEST = 1_000


@dataclass(frozen=True)
class MixtureSpec:
    name: str
    centers: np.ndarray  # (k, 2)
    stds: np.ndarray  # (k,)

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 2)
        stds = np.asarray(self.stds, dtype=np.float64).reshape(-1)
        if len(centers) < 1:
            raise ConfigError("a mixture needs at least one mode")
        if len(stds) != len(centers):
            raise ConfigError("one std per mode required")
        if np.any(stds <= 0):
            raise ConfigError("mode stds must be positive")
        if np.any(np.abs(centers) > 1.0 + 1e-12):
            raise ConfigError("mode centers must lie in [-1, 1]^2")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "stds", stds)

    @property
    def n_modes(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    test: np.ndarray
    spec: MixtureSpec
    train_modes: np.ndarray | None = None
    test_modes: np.ndarray | None = None


def make_gaussian_ring(k: int, radius: float = RING_RADIUS, sigma: float = RING_SIGMA) -> MixtureSpec:
    """``k`` equal modes evenly spaced on a circle, the first on the positive x-axis."""
    if k < 1:
        raise ConfigError(f"ring needs k >= 1 modes, got {k}")
    if sigma <= 0 or radius <= 0:
        raise ConfigError("radius and sigma must be positive")
    if radius + 3 * sigma > 1.0 + 1e-12:
        raise ConfigError(f"radius + 3*sigma = {radius + 3 * sigma:g} exceeds 1")
    angles = 2.0 * np.pi * np.arange(k) / k
    centers = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return MixtureSpec(f"gaussian{k}", centers, np.full(k, sigma))


def make_blob8(layout_seed: int = BLOB8_LAYOUT_SEED) -> MixtureSpec:
    rng = np.random.default_rng(layout_seed)
    centers = rng.uniform(-BLOB8_EXTENT, BLOB8_EXTENT, size=(8, 2))
    return MixtureSpec("blob8", centers, np.full(8, BLOB8_STD))


DATASETS = ("blob8", "gaussian2", "gaussian4", "gaussian8")


def get_mixture(name: str) -> MixtureSpec:
    if name == "blob8":
        return make_blob8()
    if name in DATASETS:
        return make_gaussian_ring(int(name[len("gaussian"):]))
    raise ConfigError(f"unknown dataset {name!r}; expected one of {', '.join(DATASETS)}")


def sample(spec: MixtureSpec, n: int, rng: np.random.Generator, return_modes: bool = False):
    """Draw ``n`` points: a uniformly chosen mode plus isotropic noise of its std. No clipping."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    modes = rng.integers(0, spec.n_modes, size=n)
    noise = rng.standard_normal((n, 2))
    points = spec.centers[modes] + noise * spec.stds[modes, None]
    if return_modes:
        return points, modes
    return points


def make_split(spec: MixtureSpec, n_train: int = N_TRAIN, n_test: int = N_TEST,
               rng: np.random.Generator | None = None) -> DatasetSplit:
    if n_train < 1 or n_test < 1:
        raise ValueError("split sizes must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    train, train_modes = sample(spec, n_train, rng, return_modes=True)
    test, test_modes = sample(spec, n_test, rng, return_modes=True)
    return DatasetSplit(train, test, spec, train_modes, test_modes)


def min_center_distance(spec: MixtureSpec) -> float:
    c = spec.centers
    best = math.inf
    for i in range(len(c)):
        for j in range(i + 1, len(c)):
            best = min(best, float(np.hypot(*(c[i] - c[j]))))
    return best
