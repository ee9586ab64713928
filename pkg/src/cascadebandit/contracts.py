"""Ex-ante buyout: the most optimistic agent buys every payoff stream and explores efficiently."""

from __future__ import annotations

from dataclasses import dataclass

from .cutoffs import stopping_times
from .model import Belief, Params, PriorProfile, ValidationError, as_belief

FORMS = ("closed", "literal")


class NoStrictOptimistError(ValidationError):
    """Two or more agents share the largest prior, so nobody outbids everyone."""


@dataclass(frozen=True)
class ContractOutcome:
    owner: int
    exploration_length: int
    total_payoff: float
    per_agent_willingness: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "exploration_length": self.exploration_length,
            "total_payoff": self.total_payoff,
            "per_agent_willingness": list(self.per_agent_willingness),
        }


def efficient_length(p: Belief | float, params: Params, pooled_draws: bool = False) -> int | None:
    """Efficient exploration length at prior ``p``; None when unbounded (p = 1)."""
    tau = stopping_times(p, params, pooled_draws=pooled_draws).tau_efficient
    return tau if isinstance(tau, int) else None


def total_expected_payoff(
    p: Belief | float, params: Params, form: str = "closed", pooled_draws: bool = False
) -> float:
    """Total payoff an owner of all ``n`` streams expects at prior ``p``.

    ``form="closed"`` is the compact expression
    ``n(1-d^(tau+1))[pE1-(1-p)E0] + n p [1-(1-pi)^(n tau)] d^(tau+1) E1``;
    ``form="literal"`` discounts each exploration period explicitly,
    replacing the first factor by ``1 - d^tau``. ``tau`` is the efficient
    stopping time at ``p``. A prior of 1 gives ``n E1`` in both forms.
    """
    if form not in FORMS:
        raise ValidationError(f"form must be one of {FORMS}, got {form!r}")
    q = as_belief(p).prob
    n, d, pi = params.n_agents, params.delta, params.pi
    e1, e0 = params.e_good, params.e_loss
    tau = efficient_length(p, params, pooled_draws)
    if tau is None:
        return n * e1
    myopic = q * e1 - (1 - q) * e0
    tail = n * q * (1 - (1 - pi) ** (n * tau)) * d ** (tau + 1) * e1
    head = 1 - d ** (tau + 1) if form == "closed" else 1 - d**tau
    return n * head * myopic + tail


def payoff_discrepancy(p: Belief | float, params: Params, pooled_draws: bool = False) -> float:
    """Closed form minus the explicitly discounted sum (zero only if the two agree)."""
    return total_expected_payoff(p, params, "closed", pooled_draws) - total_expected_payoff(
        p, params, "literal", pooled_draws
    )


def contract_outcome(priors: PriorProfile, params: Params, form: str = "closed") -> ContractOutcome:
    """Who buys the streams and how long she explores."""
    priors.check_against(params)
    probs = priors.probs
    top = max(probs)
    owners = [i for i, q in enumerate(probs) if q == top]
    if len(owners) > 1:
        raise NoStrictOptimistError(
            f"no strict optimist: agents {owners} share the largest prior {top}"
        )
    owner = owners[0]
    willingness = tuple(total_expected_payoff(b, params, form) for b in priors.priors)
    tau = efficient_length(priors.priors[owner], params)
    return ContractOutcome(
        owner,
        -1 if tau is None else tau,
        willingness[owner],
        willingness,
    )


def payoff_curve(
    params: Params, n_points: int = 101, form: str = "closed"
) -> list[tuple[float, int, float]]:
    """``(p, tau_e, total payoff)`` on an even grid over [0, 1]."""
    rows = []
    for k in range(n_points):
        p = k / (n_points - 1)
        tau = efficient_length(p, params)
        rows.append((p, -1 if tau is None else tau, total_expected_payoff(p, params, form)))
    return rows
