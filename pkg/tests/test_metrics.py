import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from coevo_gan import datasets, metrics, nn
from coevo_gan.datasets import make_gaussian_ring
from coevo_gan.metrics import (cluster_entropy, evaluate_generator, mode_coverage, sliced_wasserstein,
                               wasserstein_1d)


def assignment_w1(a, b) -> float:
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / len(a))


def test_w1_identity_and_unit():
    a = np.random.default_rng(0).normal(size=20)
    assert wasserstein_1d(a, a) == 0.0
    assert wasserstein_1d([0.0], [1.0]) == 1.0


def test_w1_matches_assignment_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b = rng.normal(size=50), rng.normal(loc=rng.normal(), size=50)
        assert wasserstein_1d(a, b) == pytest.approx(assignment_w1(a, b), rel=1e-12, abs=1e-14)


def test_w1_size_mismatch():
    with pytest.raises(ValueError):
        wasserstein_1d([1.0, 2.0], [1.0])


def test_sliced_identity():
    A = np.random.default_rng(2).normal(size=(100, 2))
    assert sliced_wasserstein(A, A, 16, np.random.default_rng(0)) == 0.0


@pytest.mark.parametrize("t", [(0.3, 0.0), (0.2, -0.5), (-1.0, 1.0)])
def test_sliced_translation_expectation(t):
    A = np.random.default_rng(3).normal(size=(300, 2))
    sw = sliced_wasserstein(A, A + np.asarray(t), 4096, np.random.default_rng(4))
    expected = 2 / math.pi * math.hypot(*t)
    assert abs(sw - expected) <= 0.03 * expected


def test_sliced_single_axis_projection_reduces_to_1d():
    rng = np.random.default_rng(5)
    A, B = rng.normal(size=(40, 2)), rng.normal(size=(40, 2))
    sw = sliced_wasserstein(A, B, directions=np.array([[1.0, 0.0]]))
    assert sw == pytest.approx(wasserstein_1d(A[:, 0], B[:, 0]), rel=1e-14)


def test_sliced_scale_response():
    A = np.random.default_rng(6).normal(size=(200, 2))
    t = np.array([0.15, 0.1])
    one = sliced_wasserstein(A, A + t, 4096, np.random.default_rng(7))
    two = sliced_wasserstein(A, A + 2 * t, 4096, np.random.default_rng(7))
    assert two == pytest.approx(2 * one, rel=0.01)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 60))
def test_sliced_symmetry_and_triangle(seed, n):
    rng = np.random.default_rng(seed)
    A, B, C = (rng.normal(size=(n, 2)) * rng.uniform(0.1, 2) for _ in range(3))
    dirs = metrics.projection_directions(32, rng)
    ab = sliced_wasserstein(A, B, directions=dirs)
    assert ab == pytest.approx(sliced_wasserstein(B, A, directions=dirs), abs=1e-12)
    ac = sliced_wasserstein(A, C, directions=dirs)
    assert ac <= ab + sliced_wasserstein(B, C, directions=dirs) + 1e-9


def test_sliced_size_mismatch():
    with pytest.raises(ValueError):
        sliced_wasserstein(np.zeros((3, 2)), np.zeros((4, 2)), 4, np.random.default_rng(0))


def test_entropy_single_mode_is_zero():
    spec = make_gaussian_ring(8)
    pts = spec.centers[3] + np.random.default_rng(0).normal(scale=0.01, size=(100, 2))
    assert cluster_entropy(pts, spec) == 0.0


def test_entropy_uniform_maximum():
    spec = make_gaussian_ring(8)
    pts = np.repeat(spec.centers, 25, axis=0)
    assert cluster_entropy(pts, spec) == pytest.approx(math.log(8), abs=1e-12)


def test_entropy_seventy_thirty():
    spec = make_gaussian_ring(2)
    pts = np.vstack([np.repeat(spec.centers[:1], 700, axis=0), np.repeat(spec.centers[1:], 300, axis=0)])
    assert cluster_entropy(pts, spec) == pytest.approx(-(0.7 * math.log(0.7) + 0.3 * math.log(0.3)), abs=1e-12)
    assert cluster_entropy(pts, spec) == pytest.approx(0.6109, abs=1e-4)


def test_nearest_mode_ties_go_to_lowest_index():
    spec = make_gaussian_ring(2)
    idx, _ = metrics.nearest_mode([[0.0, 0.0]], spec)
    assert idx[0] == 0


def test_coverage_on_test_split():
    spec = make_gaussian_ring(8)
    split = datasets.make_split(spec, rng=np.random.default_rng(8))
    assert mode_coverage(split.test, spec) == 8


def test_coverage_point_mass_and_empty_region():
    spec = make_gaussian_ring(8)
    assert mode_coverage(np.repeat(spec.centers[:1], 500, axis=0), spec) == 1
    assert mode_coverage(np.full((500, 2), 10.0), spec) == 0


def test_coverage_min_fraction():
    spec = make_gaussian_ring(4)
    # 995 samples on mode 0, 5 on mode 1: 5 < ceil(0.01 * 1000)
    pts = np.vstack([np.repeat(spec.centers[:1], 995, axis=0), np.repeat(spec.centers[1:2], 5, axis=0)])
    assert mode_coverage(pts, spec) == 1
    assert mode_coverage(pts, spec, min_fraction=0.005) == 2


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 200), k=st.sampled_from([2, 4, 8]))
def test_diversity_bounds(seed, n, k):
    spec = make_gaussian_ring(k)
    pts = np.random.default_rng(seed).uniform(-1.2, 1.2, size=(n, 2))
    h = cluster_entropy(pts, spec)
    assert 0.0 <= h <= math.log(k) + 1e-12
    assert 0 <= mode_coverage(pts, spec) <= k


def constant_generator(point, latent_dim=4) -> nn.NetworkParams:
    net = nn.NetworkParams(nn.generator_topology(latent_dim, 8))
    net.biases[1][:] = np.arctanh(point)
    return net


def test_evaluate_memorizing_generator():
    spec = make_gaussian_ring(8)
    split = datasets.make_split(spec, rng=np.random.default_rng(9))
    rep = evaluate_generator(lambda n, rng: split.test.copy(), spec, split.test, np.random.default_rng(0))
    assert rep.wd == pytest.approx(0.0, abs=1e-15)
    assert rep.coverage == 8 and rep.n_samples == 1000


def test_evaluate_constant_generator():
    spec = make_gaussian_ring(4)
    split = datasets.make_split(spec, n_test=200, rng=np.random.default_rng(10))
    rep = evaluate_generator(constant_generator(spec.centers[1]), spec, split.test, np.random.default_rng(0))
    assert rep.entropy == 0.0 and rep.coverage == 1


def test_evaluate_deterministic():
    spec = make_gaussian_ring(4)
    split = datasets.make_split(spec, n_test=300, rng=np.random.default_rng(11))
    gen = nn.init_network(nn.generator_topology(6, 16), np.random.default_rng(1))
    a = evaluate_generator(gen, spec, split.test, np.random.default_rng(42))
    b = evaluate_generator(gen, spec, split.test, np.random.default_rng(42))
    assert a == b
