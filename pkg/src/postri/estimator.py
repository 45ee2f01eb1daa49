"""End-to-end release pipeline and its estimator-style wrapper.

The pipeline always runs the dedup remap, even for distinct data: branching
on whether duplicates exist would make the output domain itself depend on
the private data. The total budget eps1 + eps2 and both beta shares are
fixed before touching the data.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array

from .domain import Dataset, DedupMap, DomainSpec, PrivacyParams, dedup_remap, true_median
from .errors import DataError
from .expmech import rng_stream
from .hyperparams import SplitPolicy, make_params
from .median import MedianResult, dp_median
from .ri import RIResult, dp_ri

__all__ = ["run_pipeline", "PostRI"]


def run_pipeline(
    data: Dataset,
    dom: DomainSpec,
    params: PrivacyParams,
    rng: np.random.Generator,
) -> tuple[MedianResult, RIResult, DedupMap]:
    """Dedup remap, private median, private half-width. Everything stays in
    domain coordinates; callers translate back to original units."""
    exp_data, dmap = dedup_remap(data, dom)
    med = dp_median(
        exp_data, dmap.expanded_domain, params.eps1, params.beta1, rng, params.delta_u
    )
    ri = dp_ri(exp_data, dmap.expanded_domain, med.o, dmap, params, rng)
    return med, ri, dmap


def _as_generator(random_state) -> np.random.Generator:
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, numbers.Integral):
        return rng_stream(None if random_state is None else int(random_state))
    raise ValueError(
        f"random_state must be None, an int, or a numpy Generator, "
        f"got {random_state!r}"
    )


def validate_values(X, data_range: tuple[int, int]) -> np.ndarray:
    """Coerce X to a 1-d int64 array and check it against the declared range.

    Accepts a sequence or a single-column 2-d array. Float inputs must be
    integer-valued; anything fractional, non-finite, or outside the declared
    range is rejected rather than silently rounded or clipped.
    """
    arr = check_array(X, ensure_2d=False, dtype=None, estimator="PostRI")
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DataError(
                f"expected a single column of values, got shape {arr.shape}"
            )
        arr = arr[:, 0]
    if arr.ndim != 1 or arr.size == 0:
        raise DataError("expected a non-empty 1-d sequence of values")
    if not np.issubdtype(arr.dtype, np.number):
        raise DataError(f"values must be numeric, got dtype {arr.dtype}")
    if np.issubdtype(arr.dtype, np.floating):
        if not np.all(arr == np.floor(arr)):
            raise DataError("values must be integer-valued")
    values = arr.astype(np.int64)
    lo, hi = data_range
    if values.min() < lo or values.max() > hi:
        bad = values[(values < lo) | (values > hi)]
        raise DataError(
            f"{bad.size} value(s) outside the declared range [{lo}, {hi}], "
            f"e.g. {int(bad[0])}"
        )
    return values


class PostRI(BaseEstimator):
    """Differentially private median with a randomized containment interval.

    Fitting spends the whole privacy budget once: ``eps1`` buys a private
    median estimate and ``eps2`` buys a symmetric half-width around it such
    that the interval contains the true median with probability at least
    ``1 - beta`` (over the mechanism's randomness only).

    Parameters
    ----------
    epsilon : total privacy budget, split across the two stages.
    beta : allowed probability that the interval misses the true median.
    data_range : declared public (lo, hi) bounds of the data. Required; it
        is an assumption about the data, never inferred from it.
    domain_size : size N of the integer output domain {0..N} the data is
        shifted into. The declared range must fit inside it.
    split : budget split policy: "default" (eps1 = eps2), "optimal"
        (width-minimizing fixed point), "median-focused" (eps1 = 9 * eps2),
        or "ratio=R" (eps1 = R * eps2).
    beta_split : fraction of beta assigned to the median stage.
    random_state : None for OS entropy (production), an int seed or a numpy
        Generator for reproducible runs.

    Attributes (set by fit, all in original data units)
    ----------
    median_ : released private median.
    lower_, upper_ : released interval endpoints.
    interval_ : (lower_, upper_) tuple.
    width_ : upper_ - lower_.
    params_ : the resolved PrivacyParams (eps1_, eps2_, step_ mirror it).
    result_ : full RIResult in domain coordinates, including diagnostics
        that depend on the private data and must not be published.
    """

    def __init__(
        self,
        epsilon: float = 1.0,
        beta: float = 0.01,
        data_range: tuple[int, int] | None = None,
        domain_size: int = 10**8,
        split: str = "default",
        beta_split: float = 0.5,
        random_state=None,
    ):
        self.epsilon = epsilon
        self.beta = beta
        self.data_range = data_range
        self.domain_size = domain_size
        self.split = split
        self.beta_split = beta_split
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.data_range is None:
            raise DataError(
                "data_range is required: the declared public bounds cannot be "
                "computed from the data without spending privacy budget"
            )
        lo, hi = (int(self.data_range[0]), int(self.data_range[1]))
        values = validate_values(X, (lo, hi))
        dom = DomainSpec(int(self.domain_size), lo, hi)
        data = Dataset.from_values(dom.to_domain(values), dom)

        exp_data, dmap = dedup_remap(data, dom)
        policy = self.split if isinstance(self.split, SplitPolicy) else SplitPolicy.parse(str(self.split))
        params = make_params(
            float(self.epsilon),
            float(self.beta),
            dmap.expanded_size,
            policy,
            float(self.beta_split),
        )
        rng = _as_generator(self.random_state)
        med = dp_median(
            exp_data, dmap.expanded_domain, params.eps1, params.beta1, rng,
            params.delta_u,
        )
        ri = dp_ri(exp_data, dmap.expanded_domain, med.o, dmap, params, rng)

        self.n_features_in_ = 1
        self.params_ = params
        self.eps1_ = params.eps1
        self.eps2_ = params.eps2
        self.step_ = params.step
        self.gamma1_ = med.gamma1
        self.gamma2_ = ri.gamma2
        self.median_result_ = med
        self.result_ = ri
        self.dedup_map_ = dmap
        self.median_ = float(dom.to_original(ri.center))
        self.lower_ = float(dom.to_original(ri.lower))
        self.upper_ = float(dom.to_original(ri.upper))
        self.interval_ = (self.lower_, self.upper_)
        self.width_ = self.upper_ - self.lower_
        # Diagnostic only: compares against the non-private true median.
        self.true_median_ = float(true_median(data)) + lo
        return self

    def predict(self, X=None):
        """Return the released median (X is ignored; present for API
        compatibility)."""
        if not hasattr(self, "median_"):
            raise RuntimeError("PostRI instance is not fitted yet")
        return self.median_
