"""Closed-form hyperparameter selection for the two-stage release.

The interval's worst-case width scales with gamma1 + gamma2 + step * ell.
Minimizing it under eps1 + eps2 = eps gives the budget split

    eps1 = eps2 * sqrt(ln(N / beta1) / ln(N / (step * beta2)))

and minimizing over the quantization step gives step = 2 * delta_q /
(eps2 * ell). The two formulas depend on each other, so the defaults are
resolved by a short fixed-point iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import PrivacyParams
from .errors import ConvergenceError, DegenerateParameterError

_MAX_ITERATIONS = 100
_REL_TOL = 1e-6


@dataclass(frozen=True)
class SplitPolicy:
    """How the total budget divides between the median and interval stages.

    kind is one of "default" (even split), "optimal" (width-minimizing fixed
    point), "median-focused" (eps1 = 9 * eps2), or "ratio" (eps1 = ratio *
    eps2 for an explicit positive ratio).
    """

    kind: str
    ratio: float | None = None

    _KINDS = ("default", "optimal", "median-focused", "ratio")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown split policy {self.kind!r}")
        if self.kind == "ratio":
            if self.ratio is None or self.ratio <= 0:
                raise ValueError("ratio policy needs a positive ratio")
        elif self.ratio is not None:
            raise ValueError(f"policy {self.kind!r} does not take a ratio")

    @classmethod
    def parse(cls, text: str) -> "SplitPolicy":
        """Parse "default", "optimal", "median-focused", or "ratio=R"."""
        text = text.strip()
        if text.startswith("ratio="):
            return cls("ratio", float(text.split("=", 1)[1]))
        # Accept the underscore spelling too; config files tend to use it.
        return cls(text.replace("_", "-"))

    def label(self) -> str:
        if self.kind == "ratio":
            return f"ratio={self.ratio:g}"
        return self.kind


def optimal_step(eps2: float, delta_q: float = 1.0, lipschitz: float = 1.0) -> int:
    """Width-minimizing quantization step 2 * delta_q / (eps2 * lipschitz),
    rounded to the nearest positive integer."""
    if eps2 <= 0:
        raise ValueError(f"eps2 must be positive, got {eps2}")
    return max(1, round(2.0 * delta_q / (eps2 * lipschitz)))


def optimal_split(
    eps_total: float,
    beta1: float,
    beta2: float,
    step: int,
    domain_size: int,
) -> tuple[float, float]:
    """Unique (eps1, eps2) with eps1 + eps2 = eps_total satisfying the
    width-minimizing ratio for a fixed step."""
    if eps_total <= 0:
        raise ValueError(f"eps_total must be positive, got {eps_total}")
    log1 = math.log(domain_size / beta1)
    log2_arg = domain_size / (step * beta2)
    if log1 <= 0 or log2_arg <= 1.0:
        raise DegenerateParameterError(
            "degenerate logs in the split formula: need domain_size > beta1 "
            f"and domain_size > step * beta2 (got {domain_size}, {beta1}, "
            f"{step}, {beta2})"
        )
    ratio = math.sqrt(log1 / math.log(log2_arg))
    eps2 = eps_total / (1.0 + ratio)
    return eps_total - eps2, eps2


def solve_fixed_point(
    eps_total: float,
    beta1: float,
    beta2: float,
    domain_size: int,
    delta_q: float = 1.0,
    lipschitz: float = 1.0,
) -> tuple[float, float, int]:
    """Resolve the circular dependence between the optimal split and the
    optimal step by alternating the two formulas from an even split.

    Stops once eps1 moves by less than 1e-6 relative and the integer step
    repeats; raises ConvergenceError (with the trajectory) after 100
    iterations otherwise.
    """
    eps1 = eps2 = eps_total / 2.0
    step = optimal_step(eps2, delta_q, lipschitz)
    trajectory = [(eps1, eps2, step)]
    for _ in range(_MAX_ITERATIONS):
        new_step = optimal_step(eps2, delta_q, lipschitz)
        new_eps1, new_eps2 = optimal_split(
            eps_total, beta1, beta2, new_step, domain_size
        )
        converged = (
            abs(new_eps1 - eps1) < _REL_TOL * eps_total and new_step == step
        )
        eps1, eps2, step = new_eps1, new_eps2, new_step
        trajectory.append((eps1, eps2, step))
        if converged:
            return eps1, eps2, step
    raise ConvergenceError(
        f"hyperparameter fixed point did not converge in {_MAX_ITERATIONS} "
        "iterations",
        trajectory=trajectory,
    )


def make_params(
    eps_total: float,
    beta_total: float,
    domain_size: int,
    policy: SplitPolicy | str = "default",
    beta_split: float = 0.5,
) -> PrivacyParams:
    """Assemble validated parameters for a run.

    beta divides as beta1 = beta_split * beta, beta2 = (1 - beta_split) *
    beta. The step always follows the width-minimizing formula for the
    chosen eps2; the "optimal" policy additionally lets the split and step
    settle to their joint fixed point.
    """
    if isinstance(policy, str):
        policy = SplitPolicy.parse(policy)
    if not 0.0 < beta_split < 1.0:
        raise ValueError(f"beta_split must lie in (0, 1), got {beta_split}")
    beta1 = beta_split * beta_total
    beta2 = (1.0 - beta_split) * beta_total

    if policy.kind == "optimal":
        eps1, eps2, step = solve_fixed_point(eps_total, beta1, beta2, domain_size)
    else:
        if policy.kind == "default":
            eps2 = eps_total / 2.0
        elif policy.kind == "median-focused":
            eps2 = eps_total / 10.0
        else:
            eps2 = eps_total / (1.0 + policy.ratio)
        eps1 = eps_total - eps2
        step = optimal_step(eps2)

    return PrivacyParams(
        eps_total=eps_total,
        eps1=eps1,
        eps2=eps2,
        beta_total=beta_total,
        beta1=beta1,
        beta2=beta2,
        step=step,
    )
