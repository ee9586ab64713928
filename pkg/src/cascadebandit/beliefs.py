"""Bayesian updating of the good-state belief.

A failure has likelihood ``1 - pi`` in the good state and 1 in the bad state,
so ``k`` failures shift the log-odds by ``k * log(1 - pi)``. A success is
impossible in the bad state and therefore fully revealing.
"""

from __future__ import annotations

import math

from .model import Belief, as_belief


def failure_log_lr(pi: float) -> float:
    """Log-likelihood ratio (good vs bad) of one failure."""
    return math.log1p(-pi)


def posterior_after_failures(prior: Belief | float, pi: float, k: int) -> Belief:
    """Belief after ``k`` privately observed failures."""
    if k < 0:
        raise ValueError(f"failure count must be >= 0, got {k}")
    prior = as_belief(prior)
    if k == 0 or math.isinf(prior.log_odds):
        return prior
    return Belief.from_log_odds(prior.log_odds + k * failure_log_lr(pi))


def posterior_after_success() -> Belief:
    return Belief.from_prob(1.0)


def incorporate_switch_revelation(
    belief: Belief | float, pi: float, newly_revealed_failures: int
) -> Belief:
    """Update on failures inferred from another agent's switch to the safe arm.

    Draws are independent across agents given the state, so the update is the
    same likelihood tilt as for private failures.
    """
    if newly_revealed_failures < 0:
        raise ValueError(
            f"revealed failure count must be >= 0, got {newly_revealed_failures}"
        )
    return posterior_after_failures(belief, pi, newly_revealed_failures)


def posterior_direct(q: float, pi: float, k: int) -> float:
    """Probability-space form ``q(1-pi)^k / (q(1-pi)^k + 1 - q)``.

    Kept for cross-checking the log-odds path; underflows for large ``k``.
    """
    num = q * (1.0 - pi) ** k
    return num / (num + 1.0 - q)


def belief_trajectory(prior: Belief | float, pi: float, k_max: int) -> list[float]:
    """Beliefs after 0, 1, ..., ``k_max`` failures."""
    prior = as_belief(prior)
    return [posterior_after_failures(prior, pi, k).prob for k in range(k_max + 1)]
