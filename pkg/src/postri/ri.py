"""Stage 2: a one-shot private half-width around the released median.

Instead of estimating an upper and lower bound separately, a single
half-width b is selected from quantized candidates {s, 2s, ...}. The helper
count f(b) = min(rank(o+b) - rank(o), rank(o) - rank(o-b)) measures how many
data points the scarcer side of [o-b, o+b] covers; it has sensitivity 1 under
record replacement. The selection utility rewards candidates whose helper
count hits the target gamma1 + gamma2 + s*lipschitz, i.e. just enough rank
mass to absorb the worst-case error of both mechanisms plus quantization.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .domain import Dataset, DedupMap, DomainSpec, rank
from .errors import DegenerateParameterError
from .expmech import IntervalSet, sample
from .median import gamma1


def helper_f(data: Dataset, o: int, b) -> int | np.ndarray:
    """Smaller of the two one-sided rank counts between o and o +- b.

    Rank queries saturate at the domain edges, so b may run past them.
    Vectorized over b.
    """
    right = rank(data, o + np.asarray(b, dtype=np.int64)) - rank(data, o)
    left = rank(data, o) - rank(data, o - np.asarray(b, dtype=np.int64))
    out = np.minimum(np.abs(right), np.abs(left))
    if np.ndim(b) == 0:
        return int(out)
    return out


def gamma2(
    eps2: float,
    beta2: float,
    domain_size: int,
    step: int,
    delta_q: float = 1.0,
) -> float:
    """Utility-error bound of the half-width mechanism:
    (2 * delta_q / eps2) * ln(domain_size / (step * beta2)).

    The log argument is the candidate count domain_size/step divided by
    beta2; a non-positive log means the configuration is degenerate.
    """
    if eps2 <= 0:
        raise ValueError(f"eps2 must be positive, got {eps2}")
    if not 0.0 < beta2 < 1.0:
        raise ValueError(f"beta2 must lie in (0, 1), got {beta2}")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    arg = domain_size / (step * beta2)
    if arg <= 1.0:
        raise DegenerateParameterError(
            f"domain_size / (step * beta2) = {arg} <= 1; the error bound "
            "would be non-positive"
        )
    return (2.0 * delta_q / eps2) * math.log(arg)


def ri_utility(
    data: Dataset,
    o: int,
    b,
    gamma1: float,
    gamma2: float,
    step: int,
    lipschitz: float = 1.0,
) -> float | np.ndarray:
    """-|f(b) - (gamma1 + gamma2 + step * lipschitz)|, vectorized over b."""
    target = gamma1 + gamma2 + step * lipschitz
    f = helper_f(data, o, b)
    if np.ndim(b) == 0:
        return -abs(f - target)
    return -np.abs(f - target)


def build_b_candidates(domain_size: int, step: int) -> range:
    """Quantized half-width candidates {step, 2*step, ..., floor(N/step)*step}.

    Returned lazily as a range: at production scale there are ~N/step of
    them and they must never be materialized.
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if step > domain_size:
        raise DegenerateParameterError(
            f"step {step} exceeds domain size {domain_size}: no candidates"
        )
    count = domain_size // step
    return range(step, count * step + 1, step)


def build_ri_intervals(
    data: Dataset,
    o: int,
    candidates: range,
    target: float,
) -> IntervalSet:
    """Compress the candidate half-widths into runs of constant utility.

    The runs cover candidate *indices* 1..M (candidate j is b = j*step).
    f only changes when o+b or o-b crosses a data point, so each data point
    contributes one breakpoint and there are at most n+1 runs. Construction
    is O(n log n), independent of the candidate count.
    """
    if len(candidates) == 0:
        raise ValueError("candidate set must be non-empty")
    step = candidates.step
    m = len(candidates)
    v = data.values
    o = int(o)

    # Candidate index at which each data point enters one of the one-sided
    # counts: x > o enters the right count at b >= x - o, x <= o enters the
    # left count at b >= o - x + 1.
    above = v[v > o]
    below = v[v <= o]
    crit_up = (above - o + step - 1) // step
    crit_dn = (o - below + step) // step
    crit = np.concatenate((crit_up, crit_dn))
    crit = crit[(crit > 1) & (crit <= m)]
    starts = np.unique(np.concatenate(([1], crit)))

    b = starts * step
    r_o = rank(data, o)
    f = np.minimum(rank(data, o + b) - r_o, r_o - rank(data, o - b))
    utility = -np.abs(f.astype(np.float64) - target)

    hi = np.empty_like(starts)
    hi[:-1] = starts[1:] - 1
    hi[-1] = m
    return IntervalSet.from_arrays(starts, hi, utility)


@dataclass(frozen=True)
class RIResult:
    """Released interval (lower, center, upper) in the base domain, the
    expanded-domain half-width behind it, and per-run diagnostics."""

    lower: int
    center: int
    upper: int
    b_hat: int
    gamma2: float
    beta_total: float
    gamma1: float
    target: float
    o_expanded: int
    step: int
    covered_rank: bool

    def __post_init__(self):
        if not self.lower <= self.center <= self.upper:
            raise ValueError(
                f"interval out of order: ({self.lower}, {self.center}, {self.upper})"
            )


def dp_ri(
    data: Dataset,
    dom_expanded: DomainSpec,
    o: int,
    dedup: DedupMap,
    params,
    rng: np.random.Generator,
) -> RIResult:
    """Select the half-width privately and assemble the final interval.

    ``data`` and ``o`` live in the expanded (deduplicated) domain; the
    output triple is mapped back to the base domain, with the endpoints
    clamped to the domain before inversion. ``covered_rank`` records whether
    rank(o - b_hat) <= n/2 <= rank(o + b_hat) held on this draw; it depends
    on the private data, so it is a benchmarking diagnostic, not a value
    that may be published under the privacy budget.
    """
    g1 = gamma1(params.eps1, params.beta1, dom_expanded.size, params.delta_u)
    g2 = gamma2(
        params.eps2, params.beta2, dom_expanded.size, params.step, params.delta_q
    )
    target = g1 + g2 + params.step * params.lipschitz
    candidates = build_b_candidates(dom_expanded.size, params.step)
    runs = build_ri_intervals(data, o, candidates, target)
    j_hat = sample(runs, params.eps2, params.delta_q, rng)
    b_hat = j_hat * params.step

    half = data.n / 2.0
    covered = rank(data, o - b_hat) <= half <= rank(data, o + b_hat)

    lo_exp = min(max(o - b_hat, 0), dom_expanded.size)
    hi_exp = min(max(o + b_hat, 0), dom_expanded.size)
    return RIResult(
        lower=dedup.map_back(lo_exp),
        center=dedup.map_back(o),
        upper=dedup.map_back(hi_exp),
        b_hat=int(b_hat),
        gamma2=g2,
        beta_total=params.beta_total,
        gamma1=g1,
        target=target,
        o_expanded=int(o),
        step=params.step,
        covered_rank=bool(covered),
    )
