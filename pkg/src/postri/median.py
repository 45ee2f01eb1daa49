"""Stage 1: the private median via the exponential mechanism.

Utility of a candidate y is the negated rank distance -|rank(y) - n/2|,
with n/2 kept exact (a half-integer for even n) so the utility stays
symmetric. Because every candidate between two adjacent data points shares
one rank, the whole domain compresses into at most n+1 equal-utility runs
and selection is weighted by run width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Dataset, DomainSpec, rank
from .expmech import IntervalSet, sample


def gamma1(eps1: float, beta1: float, domain_size: int, delta_u: float = 1.0) -> float:
    """High-probability utility-error bound of the median mechanism:
    (2 * delta_u / eps1) * ln(domain_size / beta1).

    With probability at least 1 - beta1 the selected candidate's utility is
    within gamma1 of the best candidate's.
    """
    if eps1 <= 0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    if not 0.0 < beta1 < 1.0:
        raise ValueError(f"beta1 must lie in (0, 1), got {beta1}")
    return (2.0 * delta_u / eps1) * math.log(domain_size / beta1)


def median_utility(data: Dataset, y) -> float | np.ndarray:
    """-|rank(y) - n/2| for a scalar or an array of candidates."""
    r = rank(data, y)
    half = data.n / 2.0
    if np.ndim(y) == 0:
        return -abs(r - half)
    return -np.abs(r - half)


def build_median_intervals(data: Dataset, dom: DomainSpec) -> IntervalSet:
    """Partition {0..dom.size} into maximal runs of constant rank, each
    carrying the median utility of its elements.

    rank(y) only changes when y crosses a data point, so the runs are the
    gaps between distinct data values (at most n+1 of them).
    """
    v = data.values
    if v[0] < 0 or v[-1] > dom.size:
        raise ValueError("dataset does not lie within the given domain")
    uniq, counts = np.unique(v, return_counts=True)
    cum = np.cumsum(counts)
    half = data.n / 2.0

    # Run boundaries: [0, uniq[0]-1] has rank 0, [uniq[i], uniq[i+1]-1] has
    # rank cum[i], [uniq[-1], dom.size] has rank n.
    starts = [0] if uniq[0] > 0 else []
    starts.extend(int(u) for u in uniq)
    ranks = [0] if uniq[0] > 0 else []
    ranks.extend(int(c) for c in cum)

    lo = np.array(starts, dtype=np.int64)
    hi = np.empty_like(lo)
    hi[:-1] = lo[1:] - 1
    hi[-1] = dom.size
    utility = -np.abs(np.array(ranks, dtype=np.float64) - half)
    return IntervalSet.from_arrays(lo, hi, utility)


@dataclass(frozen=True)
class MedianResult:
    """Private median o (in the domain that was sampled) plus its error
    bound and the budget spent."""

    o: int
    gamma1: float
    eps1_used: float


def dp_median(
    data: Dataset,
    dom: DomainSpec,
    eps1: float,
    beta1: float,
    rng: np.random.Generator,
    delta_u: float = 1.0,
    bound_domain_size: int | None = None,
) -> MedianResult:
    """Sample a private median from the rank-based exponential mechanism.

    ``bound_domain_size`` overrides the domain size used inside the gamma1
    logarithm; by default it is the size of the domain actually sampled.
    """
    intervals = build_median_intervals(data, dom)
    o = sample(intervals, eps1, delta_u, rng)
    n_for_bound = dom.size if bound_domain_size is None else bound_domain_size
    return MedianResult(
        o=o,
        gamma1=gamma1(eps1, beta1, n_for_bound, delta_u),
        eps1_used=eps1,
    )
