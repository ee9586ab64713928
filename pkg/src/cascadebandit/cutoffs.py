"""Cutoff beliefs, stopping times and the sufficient existence check."""

from __future__ import annotations

from dataclasses import dataclass

from .beliefs import posterior_after_failures
from .model import UNBOUNDED, Belief, Params, Unbounded, as_belief


@dataclass(frozen=True)
class StoppingTimes:
    """Lone-agent and efficient (all arms pooled) stopping times at a prior."""

    tau_single: int | Unbounded
    tau_efficient: int | Unbounded


@dataclass(frozen=True)
class ExistenceCheck:
    holds: bool
    lhs: float
    rhs: float
    degenerate: bool
    bound_at_binding_belief: float


def single_agent_cutoff(params: Params) -> Belief:
    """Belief at which a lone agent is indifferent about one more risky period."""
    d, e1, e0 = params.delta, params.e_good, params.e_loss
    return Belief.from_prob((1 - d) * e0 / ((1 - d) * (e1 + e0) + d * params.pi * e1))


def efficient_cutoff(params: Params) -> Belief:
    """Cutoff for an agent who controls all ``n`` arms."""
    d, e1, e0 = params.delta, params.e_good, params.e_loss
    n = params.n_agents
    return Belief.from_prob((1 - d) * e0 / ((1 - d) * (e1 + e0) + d * n * params.pi * e1))


def stopping_time(
    prior: Belief | float, cutoff: Belief | float, pi: float, draws_per_period: int = 1
) -> int | Unbounded:
    """Number of all-failure periods explored before the belief drops below ``cutoff``.

    Exploration continues while the current belief is >= the cutoff, so a
    belief exactly at the cutoff explores one more period.
    """
    prior, cutoff = as_belief(prior), as_belief(cutoff)
    if not 0.0 < cutoff.prob < 1.0:
        raise ValueError(f"cutoff must lie in (0,1), got {cutoff.prob}")
    if prior.is_certain_good:
        return UNBOUNDED
    tau = 0
    while posterior_after_failures(prior, pi, draws_per_period * tau).prob >= cutoff.prob:
        tau += 1
    return tau


def is_on_boundary(
    prior: Belief | float, cutoff: Belief | float, pi: float, tol: float = 1e-9
) -> bool:
    """True when some failure-count posterior sits within ``tol`` of the cutoff."""
    prior, cutoff = as_belief(prior), as_belief(cutoff)
    if prior.is_certain_good or prior.prob == 0.0:
        return False
    tau = stopping_time(prior, cutoff, pi)
    assert isinstance(tau, int)
    for k in (tau - 1, tau):
        if k >= 0 and abs(posterior_after_failures(prior, pi, k).prob - cutoff.prob) <= tol:
            return True
    return False


def stopping_times(
    prior: Belief | float, params: Params, pooled_draws: bool = False
) -> StoppingTimes:
    """Both stopping times at ``prior``.

    By default the efficient time counts one failure per period against the
    efficient cutoff; ``pooled_draws=True`` instead counts all ``n`` draws
    per period.
    """
    prior = as_belief(prior)
    per = params.n_agents if pooled_draws else 1
    single = stopping_time(prior, single_agent_cutoff(params), params.pi)
    eff = stopping_time(prior, efficient_cutoff(params), params.pi, draws_per_period=per)
    if isinstance(single, int) and isinstance(eff, int):
        if params.n_agents * eff < single:
            raise AssertionError(
                f"n*tau_efficient={params.n_agents * eff} < tau_single={single}"
            )
    return StoppingTimes(single, eff)


def binding_belief(params: Params) -> Belief:
    """Smallest belief from which one more failure still leaves the agent at p^a."""
    pa = single_agent_cutoff(params).prob
    return Belief.from_prob(pa / (pa + (1 - params.pi) * (1 - pa)))


def deviation_lower_bound(p: Belief | float, params: Params) -> float:
    """Lower bound on the risky-minus-safe gain at belief ``p`` (symmetric cascade)."""
    p = as_belief(p).prob
    d, e1, e0 = params.delta, params.e_good, params.e_loss
    return (1 - d) * (p * e1 - (1 - p) * e0) - p * d * d * e1


def existence_condition(params: Params) -> ExistenceCheck:
    """Evaluate the payoff-ratio sufficient condition for a symmetric cascade.

    When the right-hand denominator is not positive the displayed inequality
    is meaningless; ``holds`` then falls back to the sign of the deviation
    bound at the binding belief.
    """
    d, pi = params.delta, params.pi
    lhs = params.e_good / params.e_loss
    denom = d + pi - (1 - pi) * (1 + d * pi / (1 - d))
    bound = deviation_lower_bound(binding_belief(params), params)
    if denom <= 0:
        return ExistenceCheck(bound >= 0, lhs, float("nan"), True, bound)
    rhs = (1 - pi) / denom
    return ExistenceCheck(lhs >= rhs, lhs, rhs, False, bound)
