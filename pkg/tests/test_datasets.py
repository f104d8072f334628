import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coevo_gan import datasets, metrics
from coevo_gan.datasets import make_blob8, make_gaussian_ring, make_split, sample
from coevo_gan.nn import ConfigError

from conftest import load_golden


def test_ring_two_modes():
    spec = make_gaussian_ring(2, radius=0.8)
    np.testing.assert_allclose(spec.centers, [[0.8, 0.0], [-0.8, 0.0]], atol=1e-15)


def test_ring_four_modes():
    spec = make_gaussian_ring(4, radius=0.8)
    np.testing.assert_allclose(spec.centers, [[0.8, 0], [0, 0.8], [-0.8, 0], [0, -0.8]], atol=1e-15)
    assert np.all(spec.stds == datasets.RING_SIGMA)


def test_ring_eight_pairwise_distances():
    r = 0.8
    spec = make_gaussian_ring(8, radius=r)
    c = spec.centers
    for i in range(8):
        for j in range(8):
            sep = min((i - j) % 8, (j - i) % 8)
            assert math.isclose(np.hypot(*(c[i] - c[j])), 2 * r * math.sin(math.pi * sep / 8), abs_tol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 8, 10])
def test_ring_rotation_invariance(k):
    spec = make_gaussian_ring(k)
    a = 2 * np.pi / k
    rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    rotated = spec.centers @ rot.T
    # every rotated center coincides with some original center
    d = np.linalg.norm(rotated[:, None] - spec.centers[None], axis=2)
    assert d.min(axis=1).max() < 1e-12


def test_ring_rejects_overflowing_radius():
    with pytest.raises(ConfigError):
        make_gaussian_ring(4, radius=0.9, sigma=0.05)
    with pytest.raises(ConfigError):
        make_gaussian_ring(0)


def test_blob8_deterministic_and_in_range():
    a, b = make_blob8(), make_blob8()
    assert np.array_equal(a.centers, b.centers)
    assert a.n_modes == 8
    assert np.all(np.abs(a.centers) <= 0.8)
    assert np.all(a.stds == 0.15)
    assert not np.array_equal(make_blob8(1).centers, a.centers)


def test_blob8_golden_geometry():
    golden = load_golden("blob8.json")
    spec = make_blob8()
    assert golden["layout_seed"] == datasets.BLOB8_LAYOUT_SEED
    assert datasets.min_center_distance(spec) == pytest.approx(golden["min_center_distance"], abs=1e-12)


def test_sample_degenerate_mixture():
    spec = datasets.MixtureSpec("dot", [[0.0, 0.0]], [1e-12])
    pts = sample(spec, 50, np.random.default_rng(0))
    assert np.abs(pts).max() < 1e-10


def test_sample_mode_counts_binomial():
    n = 10_000
    _, modes = sample(make_gaussian_ring(2), n, np.random.default_rng(1), return_modes=True)
    bound = 3 * math.sqrt(n * 0.5 * 0.5)
    for k in (0, 1):
        assert abs((modes == k).sum() - n / 2) <= bound


def test_sample_single_mode_mean():
    spec = datasets.MixtureSpec("one", [[0.3, -0.2]], [0.1])
    n = 20_000
    pts = sample(spec, n, np.random.default_rng(2))
    assert np.all(np.abs(pts.mean(axis=0) - [0.3, -0.2]) <= 4 * 0.1 / math.sqrt(n))


def test_sample_no_clipping():
    spec = datasets.MixtureSpec("wide", [[0.9, 0.9]], [0.5])
    pts = sample(spec, 2000, np.random.default_rng(3))
    assert pts.max() > 1.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 300))
def test_sample_deterministic(seed, n):
    spec = make_gaussian_ring(8)
    a = sample(spec, n, np.random.default_rng(seed))
    b = sample(spec, n, np.random.default_rng(seed))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("name", ["gaussian2", "gaussian4", "gaussian8"])
def test_ring_samples_inside_envelope(name):
    pts = sample(datasets.get_mixture(name), 10_000, np.random.default_rng(4))
    inside = np.all(np.abs(pts) <= 1.25, axis=1).mean()
    assert inside > 0.99


def test_split_defaults_and_determinism():
    spec = make_gaussian_ring(8)
    a = make_split(spec, rng=np.random.default_rng(5))
    b = make_split(spec, rng=np.random.default_rng(5))
    assert a.train.shape == (10_000, 2) and a.test.shape == (1_000, 2)
    assert np.array_equal(a.train, b.train) and np.array_equal(a.test, b.test)
    assert a.spec is spec


def test_split_train_test_close_in_sliced_wasserstein():
    # measured 0.01864 for these seeds; frozen with 2x slack
    spec = make_gaussian_ring(8)
    split = make_split(spec, rng=np.random.default_rng(6))
    sub = split.train[:1000]
    sw = metrics.sliced_wasserstein(sub, split.test, 128, np.random.default_rng(0))
    assert sw < 0.05
    assert sw < 2 * 0.01864


def test_unknown_dataset():
    with pytest.raises(ConfigError):
        datasets.get_mixture("ring3")


def test_mixture_validation():
    with pytest.raises(ConfigError):
        datasets.MixtureSpec("bad", [[2.0, 0.0]], [0.1])
    with pytest.raises(ConfigError):
        datasets.MixtureSpec("bad", [[0.0, 0.0]], [0.0])
