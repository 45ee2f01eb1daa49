"""Shared helpers for the test suite.

The counting helpers here are deliberately naive (pairwise comparisons, no
searchsorted) so they stay independent of the code under test.
"""

from __future__ import annotations

import numpy as np

from postri.domain import Dataset, DomainSpec
from postri.expmech import IntervalSet, rng_stream


def pointwise_rank(values: np.ndarray, y) -> int:
    """#{x <= y} by direct comparison."""
    return int((np.asarray(values) <= y).sum())


def pointwise_median_utility(values: np.ndarray, y) -> float:
    return -abs(pointwise_rank(values, y) - len(values) / 2.0)


def pointwise_helper(values: np.ndarray, o: int, b: int) -> int:
    r_o = pointwise_rank(values, o)
    return min(
        pointwise_rank(values, o + b) - r_o,
        r_o - pointwise_rank(values, o - b),
    )


def neighbor_pair(rng: np.random.Generator, n: int, size: int):
    """Random dataset pair over {0..size} differing by one replacement."""
    dom = DomainSpec(size=size)
    vals = np.sort(rng.integers(0, size + 1, size=n))
    other = vals.copy()
    other[rng.integers(0, n)] = rng.integers(0, size + 1)
    return (
        Dataset.from_values(vals, dom),
        Dataset.from_values(np.sort(other), dom),
        dom,
    )


def random_interval_set(
    rng: np.random.Generator,
    max_intervals: int = 12,
    total_width: int = 200,
    utility_scale: float = 6.0,
    lo0: int | None = None,
) -> IntervalSet:
    """Random contiguous interval set with bounded total width."""
    k = int(rng.integers(2, max_intervals + 1))
    cuts = np.sort(rng.choice(np.arange(1, total_width), size=k - 1, replace=False))
    edges = np.concatenate(([0], cuts, [total_width]))
    start = int(rng.integers(0, 1000)) if lo0 is None else lo0
    lo = start + edges[:-1]
    hi = start + edges[1:] - 1
    utility = rng.uniform(-utility_scale, utility_scale, size=k)
    return IntervalSet.from_arrays(lo, hi, utility)


def empirical_counts(draws: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Counts of draws aligned with the (sorted, contiguous) element array."""
    offset = int(elements[0])
    counts = np.bincount(draws - offset, minlength=elements.size)
    assert counts.size == elements.size, "draw outside the interval set"
    return counts


def fresh_rng(*keys: int) -> np.random.Generator:
    return rng_stream(20260815, *keys)
