import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coevo_gan.stats import bonferroni, median_iqr, rank_sum_test


def enumerated_p(a, b) -> float:
    """Two-sided exact p from all C(n, n_a) splits of the pooled ranks (no ties)."""
    pooled = sorted(a + b)
    rank = {v: i + 1 for i, v in enumerate(pooled)}
    n, na = len(pooled), len(a)
    expected = na * (n + 1) / 2
    obs = abs(sum(rank[v] for v in a) - expected)
    splits = list(itertools.combinations(range(1, n + 1), na))
    return sum(abs(sum(s) - expected) >= obs - 1e-9 for s in splits) / len(splits)


@pytest.mark.parametrize("values,median,iqr", [([1, 2, 3], 2, 1), ([5], 5, 0), ([1, 2, 3, 4], 2.5, 1.5)])
def test_median_iqr(values, median, iqr):
    s = median_iqr(values)
    assert s.median == median and s.iqr == pytest.approx(iqr) and s.n == len(values)


def test_median_iqr_empty():
    with pytest.raises(ValueError):
        median_iqr([])


@settings(max_examples=30)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.randoms())
def test_median_iqr_permutation_invariant(values, rnd):
    shuffled = values[:]
    rnd.shuffle(shuffled)
    a, b = median_iqr(values), median_iqr(shuffled)
    assert a.median == b.median and a.iqr == pytest.approx(b.iqr, abs=1e-9)
    assert a.iqr >= 0


def test_rank_sum_identical_lists():
    assert rank_sum_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0
    assert rank_sum_test([2.0, 2.0], [2.0, 2.0, 2.0]) == 1.0


def test_rank_sum_separated_three_three():
    assert rank_sum_test([1, 2, 3], [4, 5, 6]) == pytest.approx(0.1, abs=1e-15)


def test_rank_sum_all_three_three_splits():
    values = [1, 2, 3, 4, 5, 6]
    for a in itertools.combinations(values, 3):
        b = [v for v in values if v not in a]
        assert rank_sum_test(list(a), b) == pytest.approx(enumerated_p(list(a), b), abs=1e-15)


def test_rank_sum_large_shift():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=30), rng.normal(3.0, 1.0, size=30)
    assert rank_sum_test(a, b) < 1e-6


def test_rank_sum_exact_vs_normal_at_twelve():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b = rng.normal(size=6), rng.normal(rng.uniform(0, 2), size=6)
        assert abs(rank_sum_test(a, b, "exact") - rank_sum_test(a, b, "normal")) < 0.02


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=9), st.lists(st.integers(0, 5), min_size=2, max_size=9))
def test_rank_sum_symmetric_and_bounded(a, b):
    p = rank_sum_test(a, b)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(rank_sum_test(b, a), abs=1e-12)


def test_rank_sum_ties_match_scipy():
    from scipy.stats import mannwhitneyu
    a, b = [1, 2, 2, 3, 5, 5, 6, 7, 9, 9, 10, 11], [2, 4, 6, 6, 8, 9, 12, 12, 13, 14]
    ref = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True).pvalue
    assert rank_sum_test(a, b) == pytest.approx(ref, rel=1e-10)


def test_rank_sum_needs_two_each():
    with pytest.raises(ValueError):
        rank_sum_test([1.0], [2.0, 3.0])


def test_bonferroni():
    assert bonferroni([0.01], 5) == [pytest.approx(0.05)]
    assert bonferroni([0.5], 3) == [1.0]
    assert bonferroni([0.001, 0.02], 2) == [pytest.approx(0.002), pytest.approx(0.04)]
    with pytest.raises(ValueError):
        bonferroni([0.1, 0.2, 0.3], 2)
    assert math.isclose(bonferroni([0.2, 0.3])[1], 0.6)
