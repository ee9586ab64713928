"""Two worked heterogeneous-prior configurations: reversed cutoff order and over-exploration.

Each one has hand-derived risky-vs-safe gap formulas at its key decision
nodes. Here they are evaluated next to the exact gaps from the value
recursion, and a deterministic grid search looks for parameters where the
whole profile verifies.

Priors are parametrized by the lone-agent stopping time they induce: for a
target ``k`` and an offset ``u`` in ``(0, 1)`` the prior has log-odds
``L(p^a) - (k - 1 + u) * log(1 - pi)``, so exactly ``k`` failures are needed
to fall below ``p^a``; larger ``u`` means more optimistic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .cutoffs import single_agent_cutoff, stopping_time
from .equilibrium import CascadeGame, NodeCheck, verify_one_shot_deviations
from .model import Belief, CutoffProfile, GameState, Params, PriorProfile, Regime, ValidationError, as_belief
from .beliefs import posterior_after_failures

REVORDER_TAUS = (3, 1, 2)
REVORDER_SWAPPED = (3, 2, 1)
REVORDER_SINGLE = (4, 2, 2)
HETEXP_TAUS = (5, 5, 4)
HETEXP_SINGLE = (5, 5, 3)


@dataclass
class ScenarioResult:
    params: Params | None
    priors: PriorProfile | None
    cutoffs: CutoffProfile | None
    gaps: dict[str, Any] = field(default_factory=dict)
    verified: bool = False
    points_searched: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.params is not None

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "params": None if self.params is None else self.params.to_dict(),
            "e_good": None if self.params is None else self.params.e_good,
            "e_loss": None if self.params is None else self.params.e_loss,
            "priors": None if self.priors is None else list(self.priors.probs),
            "cutoffs": None if self.cutoffs is None else list(self.cutoffs.taus),
            "gaps": self.gaps,
            "verified": self.verified,
            "points_searched": self.points_searched,
            "notes": self.notes,
        }


def prior_for_stopping_time(params: Params, k: int, u: float) -> float:
    """Prior whose lone-agent stopping time is ``k``; ``u`` in (0,1) sets the position."""
    if not 0.0 < u < 1.0:
        raise ValidationError(f"offset u must lie in (0,1), got {u}")
    pa = single_agent_cutoff(params)
    lr = math.log1p(-params.pi)
    return Belief.from_log_odds(pa.log_odds - (k - 1 + u) * lr).prob


def risky_minus_safe(check: NodeCheck) -> float:
    """Value of risky minus value of safe at a checked node."""
    if check.node.prescribed == "risky":
        return check.value_prescribed - check.value_deviation
    return check.value_deviation - check.value_prescribed


def _cutoff_path_state(n: int, t: int) -> GameState:
    """On-path state at period ``t`` while everybody is still exploring."""
    return GameState(t, Regime.CUTOFF, (t - 1,) * n, (0,) * n, ())


# --- reversed cutoff order ----------------------------------------------------


def revorder_info_terms(p3: float, delta: float, pi: float, e_good: float) -> tuple[float, float]:
    """Information benefit of the third agent on path and after switching early."""
    i3p = delta**3 * p3 * (1 - (1 - pi) ** 3) * e_good
    i3d = delta**2 * p3 * (1 - (1 - pi) ** 2) * e_good
    return i3p, i3d


def _myopic_term(p: float, params: Params) -> float:
    return p * params.pi * params.e_good - (1 - p) * (1 - params.delta) * params.e_loss


def revorder_gaps(
    p2: Belief | float,
    p3: Belief | float,
    params: Params,
    priors: PriorProfile | None = None,
    cutoffs: Sequence[int] = REVORDER_TAUS,
) -> dict[str, float | None]:
    """Risky-vs-safe gaps of the two pessimists at period 2.

    ``p2``/``p3`` are their beliefs at period 2 (after one own failure).
    ``i2`` is not available in closed form; when ``priors`` is given it is
    backed out of the exact gap so that ``g2`` equals that gap. Without
    priors ``i2`` and ``g2`` are None.
    """
    p2, p3 = as_belief(p2).prob, as_belief(p3).prob
    i3p, i3d = revorder_info_terms(p3, params.delta, params.pi, params.e_good)
    g3 = _myopic_term(p3, params) + i3p - i3d
    out: dict[str, float | None] = {
        "i3p": i3p,
        "i3d": i3d,
        "g3": g3,
        "i2": None,
        "g2": None,
        "g3_exact": None,
    }
    if priors is not None:
        game = CascadeGame(params, priors, CutoffProfile.of(cutoffs))
        s = _cutoff_path_state(params.n_agents, 2)
        g2 = risky_minus_safe(game.check_node(s, 1, False))
        out["g2"] = g2
        out["i2"] = _myopic_term(p2, params) - g2
        out["g3_exact"] = risky_minus_safe(game.check_node(s, 2, False))
    return out


def default_revorder_grid() -> tuple[list[Params], list[tuple[float, float, float]]]:
    params = [
        Params.from_expectations(d, pi, e1, 1.0, 3)
        for d, pi, e1 in itertools.product(
            (0.5, 0.6, 0.65, 0.7, 0.8, 0.9, 0.95),
            (0.05, 0.1, 0.2, 0.3, 0.45),
            (1.0, 4.0, 16.0, 30.0, 64.0),
        )
    ]
    us = (0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.98)
    offsets = [(u1, u2, u3) for u1 in us for u2 in us for u3 in us if u3 < u2]
    return params, offsets


def search_revorder(
    params_grid: Iterable[Params] | None = None,
    prior_grid: Iterable[tuple[float, float, float]] | None = None,
) -> ScenarioResult:
    """First grid point (lexicographic) where the reversed-order profile verifies.

    ``prior_grid`` holds offsets ``(u1, u2, u3)``: agent 0 needs four
    failures to stop alone, agents 1 and 2 need two each, and ``u3 < u2``
    keeps agent 2 more pessimistic than agent 1. A point qualifies when the
    profile passes full verification and the closed-form gap of agent 2 is
    positive while the exact gap of agent 1 is negative.
    """
    if params_grid is None or prior_grid is None:
        dp, dg = default_revorder_grid()
        params_grid = dp if params_grid is None else params_grid
        prior_grid = dg if prior_grid is None else prior_grid
    prior_grid = list(prior_grid)
    cut = CutoffProfile.of(REVORDER_TAUS)
    searched = 0
    for params in params_grid:
        if params.n_agents != 3:
            raise ValidationError("reversed-order search needs n_agents = 3")
        for u1, u2, u3 in prior_grid:
            searched += 1
            priors = PriorProfile.of(
                prior_for_stopping_time(params, k, u)
                for k, u in zip(REVORDER_SINGLE, (u1, u2, u3))
            )
            if not priors.probs[0] > priors.probs[1] > priors.probs[2]:
                continue
            b2 = posterior_after_failures(priors.priors[1], params.pi, 1)
            b3 = posterior_after_failures(priors.priors[2], params.pi, 1)
            if revorder_gaps(b2, b3, params)["g3"] <= 0:  # type: ignore[operator]
                continue
            gaps = revorder_gaps(b2, b3, params, priors)
            if not gaps["g2"] < 0:  # type: ignore[operator]
                continue
            report = verify_one_shot_deviations(params, priors, cut, stop_at_first=True)
            if not report.is_equilibrium:
                continue
            swapped = verify_one_shot_deviations(params, priors, CutoffProfile.of(REVORDER_SWAPPED))
            gaps = {**gaps, "max_gain": report.max_gain, "swapped_max_gain": swapped.max_gain}
            notes = [
                "swapped profile (3,2,1) verifies"
                if swapped.is_equilibrium
                else "swapped profile (3,2,1) does not verify"
            ]
            result = ScenarioResult(params, priors, cut, gaps, True, searched, notes)
            result.gaps["swapped_verified"] = swapped.is_equilibrium
            return result
    return ScenarioResult(None, None, None, {}, False, searched, ["grid exhausted"])


# --- over-exploration with heterogeneous priors --------------------------------


def hetexp_condition(pi: float) -> float:
    """Sign of this decides the low agent's period-4 incentive as delta -> 1."""
    return (1 - pi) * (1 - (1 - pi) ** 11) - (1 - (1 - pi) ** 8)


def hetexp_low_agent_terms(p: float, delta: float, pi: float, e_good: float, e_loss: float) -> dict[str, float]:
    """Closed-form on-path and deviation payoffs of the pessimist at period 4."""
    d = delta
    on = p * ((1 - d) * e_good + d * pi * e_good + d * (1 - pi) * (1 - (1 - pi) ** 11) * d**2 * e_good) + (
        1 - p
    ) * (-(1 - d) * e_loss)
    dev = p * ((1 - (1 - pi) ** 8) * d**2 * e_good)
    return {"on_path": on, "deviation": dev, "gap": on - dev}


def hetexp_high_agent_terms(p: float, delta: float, pi: float, e_good: float, e_loss: float) -> dict[str, float]:
    """Closed-form on-path and deviation payoffs of an optimist at period 4."""
    d = delta
    on = p * (
        (1 - d**2) * e_good
        + d**3 * (1 - (1 - pi) ** 2) * (1 - d) * e_good
        + d**4 * (1 - (1 - pi) ** 7) * e_good
    ) + (1 - p) * (-(1 - d**2) * e_loss)
    dev = p * ((1 - (1 - pi) ** 4) * d**2 * e_good)
    return {"on_path": on, "deviation": dev, "gap": on - dev}


def last_period_gap(p: float, params: Params, reveal_next: float, reveal_after: float) -> float:
    """Risky-vs-safe gap in an agent's last exploration period when what the
    others know reaches her whatever she does.

    Given the good state, the others' successes become visible in time for
    the next period with probability ``reveal_next`` and, failing that, one
    period later with probability ``reveal_after``. Her own draw only
    matters when it beats that schedule.
    """
    d, pi, e1, e0 = params.delta, params.pi, params.e_good, params.e_loss
    own = p * pi * d * e1 * (1 - reveal_next) * (1 - d * reveal_after)
    return (1 - d) * (p * e1 - (1 - p) * e0) + own


def _check_hetexp_structure(params: Params, priors: PriorProfile) -> None:
    if params.n_agents != 3 or len(priors) != 3:
        raise ValidationError("over-exploration configuration needs exactly 3 agents")
    pa = single_agent_cutoff(params)
    taus = tuple(stopping_time(q, pa, params.pi) for q in priors.priors)
    if taus != HETEXP_SINGLE:
        raise ValidationError(
            f"priors must need 5, 5 and 3 failures to stop alone, got stopping times {taus}"
        )


def hetexp_gaps(params: Params, priors: PriorProfile) -> dict[str, Any]:
    """Closed-form and exact gaps at the three key nodes of the over-exploration profile.

    Agents 0 and 1 are the optimists, agent 2 the pessimist who explores
    four periods.
    """
    _check_hetexp_structure(params, priors)
    game = CascadeGame(params, priors, CutoffProfile.of(HETEXP_TAUS))
    d, pi, e1, e0 = params.delta, params.pi, params.e_good, params.e_loss
    s4 = _cutoff_path_state(3, 4)
    s5 = _cutoff_path_state(3, 5)

    p_low4 = posterior_after_failures(priors.priors[2], pi, 3).prob
    low = hetexp_low_agent_terms(p_low4, d, pi, e1, e0)
    low_exact = risky_minus_safe(game.check_node(s4, 2, False))

    p_high4 = posterior_after_failures(priors.priors[0], pi, 3).prob
    high = hetexp_high_agent_terms(p_high4, d, pi, e1, e0)
    high_exact = [risky_minus_safe(game.check_node(s4, i, False)) for i in (0, 1)]

    p_high5 = posterior_after_failures(priors.priors[0], pi, 4).prob
    # the pessimist's four draws show at period 5, the other optimist's five at period 6
    lone = last_period_gap(p_high5, params, 1 - (1 - pi) ** 4, 1 - (1 - pi) ** 5)
    exact5 = [risky_minus_safe(game.check_node(s5, i, False)) for i in (0, 1)]

    return {
        "low_t4": {**low, "exact_gap": low_exact, "difference": low_exact - low["gap"]},
        "high_t4": {
            **high,
            "exact_gap": high_exact,
            "difference": [g - high["gap"] for g in high_exact],
        },
        "high_t5": {
            "single_agent_gap": lone,
            "exact_gap": exact5,
            "difference": [g - lone for g in exact5],
        },
        "h_pi": hetexp_condition(pi),
    }


def default_hetexp_grid() -> tuple[list[Params], list[tuple[float, float]]]:
    params = [
        Params.from_expectations(d, pi, e1, 1.0, 3)
        for d, pi, e1 in itertools.product(
            (0.8, 0.81, 0.82, 0.85, 0.9, 0.95), (0.002, 0.005, 0.01, 0.05), (1.0, 10.0, 30.0, 100.0)
        )
    ]
    offsets = [(uh, ul) for uh in (0.7, 0.8, 0.9) for ul in (0.9, 0.95, 0.98, 0.99, 0.999)]
    return params, offsets


def search_hetexp(
    params_grid: Iterable[Params] | None = None,
    prior_grid: Iterable[tuple[float, float]] | None = None,
) -> ScenarioResult:
    """First grid point (lexicographic) where the over-exploration profile verifies.

    ``prior_grid`` holds offsets ``(u_high, u_low)`` for the two optimists
    (five failures to stop alone) and the pessimist (three failures).
    """
    if params_grid is None or prior_grid is None:
        dp, dg = default_hetexp_grid()
        params_grid = dp if params_grid is None else params_grid
        prior_grid = dg if prior_grid is None else prior_grid
    prior_grid = list(prior_grid)
    cut = CutoffProfile.of(HETEXP_TAUS)
    searched = 0
    for params in params_grid:
        if params.n_agents != 3:
            raise ValidationError("over-exploration search needs n_agents = 3")
        for uh, ul in prior_grid:
            searched += 1
            qh = prior_for_stopping_time(params, 5, uh)
            ql = prior_for_stopping_time(params, 3, ul)
            priors = PriorProfile.of((qh, qh, ql))
            report = verify_one_shot_deviations(params, priors, cut, stop_at_first=True)
            if not report.is_equilibrium:
                continue
            gaps = hetexp_gaps(params, priors)
            gaps["max_gain"] = report.max_gain
            pa = single_agent_cutoff(params)
            tau_low = stopping_time(priors.priors[2], pa, params.pi)
            notes = [f"pessimist explores 4 periods; alone she would explore {tau_low}"]
            return ScenarioResult(params, priors, cut, gaps, True, searched, notes)
    return ScenarioResult(None, None, None, {}, False, searched, ["grid exhausted"])
