"""Domain model: integer output domain, sorted datasets, rank queries, and
the duplicate-removing remap onto an expanded domain.

All types are immutable after construction and safe to share across
parallel trial workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

# Largest value we allow inside the expanded domain; anything beyond this
# could silently wrap in int64 arithmetic.
_INT64_SAFE_MAX = 2**62


@dataclass(frozen=True)
class DomainSpec:
    """Integer output domain {0, 1, ..., size}.

    ``original_lower``/``original_upper`` record the declared (public) range
    of the raw data; raw values are shifted by ``-original_lower`` to land in
    the domain. The declared range is an assumption supplied by the caller,
    never inferred from the data.
    """

    size: int
    original_lower: int = 0
    original_upper: int | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"domain size must be >= 1, got {self.size}")
        upper = self.original_upper
        if upper is None:
            object.__setattr__(self, "original_upper", self.original_lower + self.size)
        elif upper <= self.original_lower:
            raise ValueError(
                f"declared range is empty: [{self.original_lower}, {upper}]"
            )
        elif upper - self.original_lower > self.size:
            raise ValueError(
                f"declared range [{self.original_lower}, {upper}] does not fit in a "
                f"domain of size {self.size}"
            )

    def to_domain(self, value):
        """Shift a raw value into {0..size}."""
        return value - self.original_lower

    def to_original(self, value):
        """Inverse of :meth:`to_domain`."""
        return value + self.original_lower


@dataclass(frozen=True)
class Dataset:
    """Sorted multiset of integers within some domain {0..N}.

    ``values`` is a read-only sorted int64 array; duplicates are allowed.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise DataError("dataset must be a non-empty 1-D sequence of integers")
        arr = np.sort(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, values, domain: DomainSpec) -> "Dataset":
        """Build a dataset, checking every value lies in {0..domain.size}."""
        data = cls(np.asarray(values))
        if data.values[0] < 0 or data.values[-1] > domain.size:
            bad = data.values[(data.values < 0) | (data.values > domain.size)]
            raise DataError(
                f"{bad.size} value(s) outside domain {{0..{domain.size}}}, "
                f"e.g. {int(bad[0])}"
            )
        return data

    @property
    def n(self) -> int:
        return int(self.values.size)


def rank(data: Dataset, y) -> int | np.ndarray:
    """Number of data points <= y.

    Saturates naturally outside the domain: y below every point gives 0 and
    y above every point gives n, which is what the interval mechanisms rely
    on when probing beyond the domain edge. Accepts a scalar or an array.
    """
    out = np.searchsorted(data.values, y, side="right")
    if np.ndim(y) == 0:
        return int(out)
    return out


def true_median(data: Dataset) -> float:
    """Deterministic reference median: middle element for odd n, mean of the
    two middle elements for even n (so it may be a half-integer)."""
    v = data.values
    mid = v.size // 2
    if v.size % 2 == 1:
        return float(v[mid])
    return (float(v[mid - 1]) + float(v[mid])) / 2.0


@dataclass(frozen=True)
class DedupMap:
    """Injection of an n-element multiset over {0..N} into an expanded
    domain where no value repeats.

    The k-th repetition (k = 1, 2, ...) of a value x maps to n*x + (k-1);
    after the remap every rank-based utility is 1-Lipschitz. The inverse is
    floor division by n. The expanded domain is {0..n*N + n-1}: the largest
    possible image is n*N + n-1 (the top value repeated n times), and the
    domain must not depend on the data, so it always allows for it.
    """

    n: int
    base_domain: DomainSpec
    expanded_domain: DomainSpec = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dedup map requires n >= 1")
        if self.n * (self.base_domain.size + 1) > _INT64_SAFE_MAX:
            raise OverflowError(
                f"expanded domain size n*N = {self.n}*{self.base_domain.size} "
                "exceeds the safe int64 range"
            )
        size = self.n * self.base_domain.size + self.n - 1
        object.__setattr__(
            self, "expanded_domain", DomainSpec(size, 0, size)
        )

    @property
    def expanded_size(self) -> int:
        return self.expanded_domain.size

    def map_back(self, y_expanded: int) -> int:
        """Collapse an expanded-domain value to its base-domain value."""
        return int(y_expanded) // self.n


def dedup_remap(data: Dataset, dom: DomainSpec) -> tuple[Dataset, DedupMap]:
    """Remap repeated values to consecutive elements of the expanded domain.

    Repetition indices are assigned in sorted order, so the output is
    deterministic given the multiset. Returns the all-distinct dataset and
    the map needed to invert it.
    """
    if data.values[-1] > dom.size or data.values[0] < 0:
        raise DataError("dataset does not lie within the given domain")
    v = data.values
    n = data.n
    if n * (dom.size + 1) > _INT64_SAFE_MAX:
        raise OverflowError(
            f"expanded domain size n*N = {n}*{dom.size} exceeds the safe int64 range"
        )
    first_occurrence = np.searchsorted(v, v, side="left")
    repetition = np.arange(v.size, dtype=np.int64) - first_occurrence
    expanded = n * v + repetition
    return Dataset(expanded), DedupMap(n=n, base_domain=dom)


def map_back(y_expanded: int, dmap: DedupMap) -> int:
    """Function form of :meth:`DedupMap.map_back`."""
    return dmap.map_back(y_expanded)


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy and accuracy parameters for the two-stage release.

    ``eps1`` drives the median stage, ``eps2`` the interval stage; they must
    sum to ``eps_total``. ``beta1``/``beta2`` split the confidence failure
    probability, ``step`` quantizes the candidate half-widths, and the
    sensitivities / Lipschitz bound are all 1 once the dedup remap has been
    applied.
    """

    eps_total: float
    eps1: float
    eps2: float
    beta_total: float
    beta1: float
    beta2: float
    step: int
    delta_u: float = 1.0
    delta_q: float = 1.0
    lipschitz: float = 1.0

    def __post_init__(self):
        if self.eps_total <= 0 or self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("all privacy budgets must be positive")
        if abs((self.eps1 + self.eps2) - self.eps_total) > 1e-9 * self.eps_total:
            raise ValueError(
                f"eps1 + eps2 = {self.eps1 + self.eps2} != eps_total = {self.eps_total}"
            )
        for name in ("beta_total", "beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {b}")
        if self.beta1 + self.beta2 > self.beta_total * (1.0 + 1e-12):
            raise ValueError(
                f"beta1 + beta2 = {self.beta1 + self.beta2} exceeds "
                f"beta_total = {self.beta_total}"
            )
        if not isinstance(self.step, (int, np.integer)) or self.step < 1:
            raise ValueError(f"step must be a positive integer, got {self.step!r}")
        object.__setattr__(self, "step", int(self.step))
        if self.delta_u <= 0 or self.delta_q <= 0 or self.lipschitz <= 0:
            raise ValueError("sensitivities and Lipschitz bound must be positive")
