"""Summary statistics and significance tests for result tables."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXACT_MAX_N = 12


@dataclass(frozen=True)
class SampleSummary:
    median: float
    iqr: float
    n: int

    def format(self, digits: int = 3) -> str:
        return f"{self.median:.{digits}f} ({self.iqr:.{digits}f})"


def median_iqr(values: Sequence[float]) -> SampleSummary:
    """Median and Q3 - Q1, quartiles by linear interpolation between closest ranks."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("median_iqr needs at least one value")
    q1, med, q3 = np.percentile(x, [25, 50, 75], method="linear")
    return SampleSummary(float(med), float(q3 - q1), int(x.size))


def rankdata(x: np.ndarray) -> np.ndarray:
    """Midranks (1-based), ties share the average rank."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_p(ranks: np.ndarray, n_a: int) -> float:
    n = len(ranks)
    expected = n_a * (n + 1) / 2.0
    observed = abs(ranks[:n_a].sum() - expected)
    extreme = total = 0
    for combo in itertools.combinations(range(n), n_a):
        total += 1
        if abs(ranks[list(combo)].sum() - expected) >= observed - 1e-9:
            extreme += 1
    return extreme / total


def _normal_p(ranks: np.ndarray, n_a: int, n_b: int) -> float:
    n = n_a + n_b
    u = ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float((counts ** 3 - counts).sum()) / (n * (n - 1))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = max(0.0, abs(u - n_a * n_b / 2.0) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def rank_sum_test(a: Sequence[float], b: Sequence[float], method: str = "auto") -> float:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value.

    ``method="auto"`` enumerates every assignment of the pooled midranks when
    ``len(a) + len(b) <= 12`` and otherwise uses the normal approximation with
    tie and continuity corrections.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("rank_sum_test needs at least two values per sample")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = rankdata(pooled)
    if method == "auto":
        method = "exact" if pooled.size <= EXACT_MAX_N else "normal"
    if method == "exact":
        return _exact_p(ranks, a.size)
    if method == "normal":
        return _normal_p(ranks, a.size, b.size)
    raise ValueError(f"unknown method {method!r}")


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list[float]:
    m = len(p_values) if m is None else m
    if m < len(p_values):
        raise ValueError(f"comparison count m={m} is smaller than the number of p-values")
    return [min(1.0, p * m) for p in p_values]
