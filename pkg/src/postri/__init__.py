"""Differentially private median estimation with a randomization interval.

The release is a triple (lower, median, upper): a private median from an
exponential mechanism over rank utility, then a private symmetric
half-width chosen by a second exponential mechanism so that the interval
contains the true median with probability at least 1 - beta.

Quick start::

    from postri import PostRI

    est = PostRI(epsilon=1.0, beta=0.01, data_range=(0, 1000), random_state=7)
    est.fit(values)
    est.median_, est.interval_
"""

from .bench import SweepSpec, TrialRecord, load_dataset, run_trials, summarize
from .domain import (
    Dataset,
    DedupMap,
    DomainSpec,
    PrivacyParams,
    dedup_remap,
    map_back,
    rank,
    true_median,
)
from .errors import ConvergenceError, DataError, DegenerateParameterError
from .estimator import PostRI, run_pipeline
from .expmech import IntervalSet, UtilityInterval, rng_stream, sample, trial_seed
from .hyperparams import SplitPolicy, make_params, optimal_split, optimal_step, solve_fixed_point
from .median import MedianResult, build_median_intervals, dp_median, gamma1, median_utility
from .ri import RIResult, build_b_candidates, build_ri_intervals, dp_ri, gamma2, helper_f, ri_utility

__version__ = "0.1.0"

__all__ = [
    "PostRI",
    "run_pipeline",
    "DomainSpec",
    "Dataset",
    "DedupMap",
    "PrivacyParams",
    "rank",
    "true_median",
    "dedup_remap",
    "map_back",
    "UtilityInterval",
    "IntervalSet",
    "rng_stream",
    "trial_seed",
    "sample",
    "MedianResult",
    "median_utility",
    "build_median_intervals",
    "dp_median",
    "gamma1",
    "RIResult",
    "helper_f",
    "gamma2",
    "ri_utility",
    "build_b_candidates",
    "build_ri_intervals",
    "dp_ri",
    "SplitPolicy",
    "optimal_split",
    "optimal_step",
    "solve_fixed_point",
    "make_params",
    "TrialRecord",
    "SweepSpec",
    "load_dataset",
    "run_trials",
    "summarize",
    "DataError",
    "DegenerateParameterError",
    "ConvergenceError",
    "__version__",
]
