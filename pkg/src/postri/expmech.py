"""Numerically stable exponential mechanism over a compressed domain.

The domain is represented as contiguous runs of equal utility, so selection
is weighted by how many elements share each utility. Sampling works entirely
in log space with the Gumbel-max trick: per-run key

    log(width) + eps * utility / (2 * delta) + Gumbel(0, 1)

and the run with the largest key wins, followed by a uniform draw inside the
run. Utilities scale with the dataset size here, so raw exponentiation would
under/overflow long before the interesting regimes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "UtilityInterval",
    "IntervalSet",
    "rng_stream",
    "trial_seed",
    "sample",
    "log_weights",
]

# Rows per block when drawing Gumbel keys for large batches; keeps peak
# memory around tens of MB even for wide interval sets.
_BATCH_ROWS = 1 << 14


@dataclass(frozen=True)
class UtilityInterval:
    """Inclusive integer interval [lo, hi] whose elements share one utility."""

    lo: int
    hi: int
    utility: float

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


class IntervalSet:
    """Ordered, gap-free cover of an integer range by utility intervals.

    Stored as parallel arrays for vectorized sampling. Construction checks
    that the intervals are sorted, disjoint, contiguous, and finite-valued.
    """

    __slots__ = ("lo", "hi", "utility")

    def __init__(self, intervals: Iterable[UtilityInterval]):
        items = list(intervals)
        if not items:
            raise ValueError("interval set must be non-empty")
        lo = np.array([iv.lo for iv in items], dtype=np.int64)
        hi = np.array([iv.hi for iv in items], dtype=np.int64)
        utility = np.array([iv.utility for iv in items], dtype=np.float64)
        if np.any(hi < lo):
            raise ValueError("interval set contains an empty interval")
        if np.any(lo[1:] != hi[:-1] + 1):
            raise ValueError("intervals must be sorted and contiguous with no gaps")
        if not np.all(np.isfinite(utility)):
            raise ValueError("utilities must be finite")
        lo.flags.writeable = False
        hi.flags.writeable = False
        utility.flags.writeable = False
        self.lo = lo
        self.hi = hi
        self.utility = utility

    @classmethod
    def from_arrays(cls, lo, hi, utility) -> "IntervalSet":
        obj = cls.__new__(cls)
        lo = np.asarray(lo, dtype=np.int64).copy()
        hi = np.asarray(hi, dtype=np.int64).copy()
        utility = np.asarray(utility, dtype=np.float64).copy()
        if lo.size == 0:
            raise ValueError("interval set must be non-empty")
        if np.any(hi < lo) or np.any(lo[1:] != hi[:-1] + 1):
            raise ValueError("intervals must be sorted and contiguous with no gaps")
        if not np.all(np.isfinite(utility)):
            raise ValueError("utilities must be finite")
        for a in (lo, hi, utility):
            a.flags.writeable = False
        obj.lo, obj.hi, obj.utility = lo, hi, utility
        return obj

    def __len__(self) -> int:
        return int(self.lo.size)

    def __iter__(self):
        for lo, hi, u in zip(self.lo, self.hi, self.utility):
            yield UtilityInterval(int(lo), int(hi), float(u))

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo + 1

    @property
    def total_width(self) -> int:
        return int(self.hi[-1] - self.lo[0] + 1)

    def __repr__(self):
        return (
            f"IntervalSet({len(self)} intervals covering "
            f"[{int(self.lo[0])}, {int(self.hi[-1])}])"
        )


def rng_stream(seed: int | None, *subkeys: int) -> np.random.Generator:
    """Deterministic generator: the same (seed, subkeys) always yields a
    bit-identical stream, and distinct subkeys give independent substreams.

    ``seed=None`` draws fresh OS entropy (non-reproducible), which is the
    right default for a production privacy release.
    """
    if seed is None:
        entropy = None
    elif subkeys:
        entropy = [int(seed), *map(int, subkeys)]
    else:
        entropy = int(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def trial_seed(master_seed: int, *subkeys: int) -> int:
    """Collapse (master seed, subkeys) into a single recordable 64-bit seed.

    ``rng_stream(trial_seed(m, *k))`` reproduces one trial from its logged
    seed alone.
    """
    seq = np.random.SeedSequence([int(master_seed), *map(int, subkeys)])
    return int(seq.generate_state(1, np.uint64)[0])


def log_weights(intervals: IntervalSet, eps: float, delta: float) -> np.ndarray:
    """Per-interval log selection weight, shifted so the maximum is zero.

    weight = width * exp(eps * utility / (2 * delta)); the shift is a common
    factor and leaves the sampling distribution unchanged while keeping every
    weight finite for utilities up to ~1e9.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    scaled = (eps / (2.0 * delta)) * intervals.utility
    logw = np.log(intervals.widths.astype(np.float64)) + scaled
    return logw - logw.max()


def sample(
    intervals: IntervalSet,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw domain elements with probability proportional to
    exp(eps * utility / (2 * delta)).

    An interval is selected by Gumbel-max over the log weights (ties broken
    toward the lowest index), then one element is drawn uniformly inside it.
    Returns a scalar int when ``size`` is None, else an int64 array.
    """
    logw = log_weights(intervals, eps, delta)
    lo, hi = intervals.lo, intervals.hi
    if size is None:
        keys = logw + rng.gumbel(size=logw.size)
        idx = int(np.argmax(keys))
        return int(rng.integers(lo[idx], hi[idx] + 1))

    if size < 0:
        raise ValueError("size must be non-negative")
    out = np.empty(size, dtype=np.int64)
    done = 0
    while done < size:
        m = min(_BATCH_ROWS, size - done)
        keys = rng.gumbel(size=(m, logw.size)) + logw
        idx = np.argmax(keys, axis=1)
        out[done : done + m] = rng.integers(lo[idx], hi[idx] + 1)
        done += m
    return out
