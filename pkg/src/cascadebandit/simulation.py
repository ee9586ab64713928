"""Cascade outcomes for a fixed cutoff profile: exact enumeration and Monte Carlo.

Only the first-success time of each agent matters on the cascade path: a
success keeps her on the risky arm for good, so later draws never change an
action. Conditional on the state, the first-success times are independent
truncated geometrics, which makes exact enumeration cheap at desk scale.

All payoffs are normalized, ``(1 - delta) * sum_t delta**(t-1) * x_t``.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import CutoffProfile, Params, PriorProfile

RNG_NAME = "numpy Philox4x64-10, key=seed, counter=[0,0,0,path_index]"

DEFAULT_MAX_AGENTS = 6
DEFAULT_MAX_TAU = 12


class EnumerationLimitError(RuntimeError):
    """Exact mode would be too large; use Monte Carlo instead."""


@dataclass(frozen=True)
class OutcomeRecord:
    """Public outcome of one play-through of the cascade.

    ``switch_times[i]`` is the period in which agent ``i`` first plays safe
    (``None`` if never). ``revelation_time`` is the period in which an agent
    was seen not switching at her cutoff; everyone is risky from the next
    period on.
    """

    switch_times: tuple[int | None, ...]
    revelation_time: int | None
    revelation_cause: str
    state: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OutcomeDistribution:
    support: list[tuple[OutcomeRecord, float]]
    conditioning: str

    def total(self) -> float:
        return math.fsum(p for _, p in self.support)

    def as_dict(self) -> dict[OutcomeRecord, float]:
        return {rec: p for rec, p in self.support}

    def to_dict(self) -> dict:
        return {
            "conditioning": self.conditioning,
            "support": [{"outcome": rec.to_dict(), "probability": p} for rec, p in self.support],
        }


@dataclass
class PathRecord:
    seed: int
    path_index: int
    rng: str
    state: int
    actions: list[tuple[bool, ...]]
    draws: list[tuple[float | None, ...]]
    public_signals: list[tuple[str, ...]]
    outcome: OutcomeRecord
    payoffs: tuple[float, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outcome"] = self.outcome.to_dict()
        return d


def _check_limits(cutoffs: CutoffProfile, max_agents: int, max_tau: int) -> list[int]:
    if not cutoffs.is_finite:
        raise EnumerationLimitError("exact mode needs finite cutoffs")
    taus = [int(t) for t in cutoffs.taus]  # type: ignore[arg-type]
    if len(taus) > max_agents:
        raise EnumerationLimitError(
            f"n_agents = {len(taus)} exceeds the enumeration limit {max_agents}"
        )
    if taus and max(taus) > max_tau:
        raise EnumerationLimitError(f"max cutoff {max(taus)} exceeds the limit {max_tau}")
    return taus


def outcome_from_successes(
    taus: Sequence[int], successes: Sequence[bool], state: int
) -> OutcomeRecord:
    """Apply the cascade rules given which agents saw a success within their cutoff."""
    reveal = [tau + 1 for tau, s in zip(taus, successes) if s]
    r = min(reveal) if reveal else None
    switch: list[int | None] = []
    for tau, s in zip(taus, successes):
        if s or (r is not None and tau + 1 > r):
            switch.append(None)
        else:
            switch.append(tau + 1)
    return OutcomeRecord(tuple(switch), r, "success_run" if r else "none", state)


def outcome_payoffs(record: OutcomeRecord, params: Params) -> tuple[float, ...]:
    """Expected normalized payoff of each agent given the public outcome and state.

    Agent ``i`` is on the risky arm in periods ``1..s-1`` and from ``r+1`` on,
    where ``s`` is her switch period and ``r`` the revelation period.
    """
    d = params.delta
    mu = params.e_good if record.state == 1 else -params.e_loss
    out = []
    for s in record.switch_times:
        if s is None:
            out.append(mu)
            continue
        share = 1.0 - d ** (s - 1)
        if record.revelation_time is not None:
            share += d ** record.revelation_time
        out.append(mu * share)
    return tuple(out)


def _conditional(taus: list[int], pi: float, state: int) -> dict[OutcomeRecord, float]:
    if state == 0:
        return {outcome_from_successes(taus, [False] * len(taus), 0): 1.0}
    # first-success time in 1..tau or never; only "within tau" matters for the outcome
    per_agent = []
    for tau in taus:
        opts = [(True, pi * (1 - pi) ** (s - 1)) for s in range(1, tau + 1)]
        opts.append((False, (1 - pi) ** tau))
        per_agent.append(opts)
    acc: dict[OutcomeRecord, float] = defaultdict(float)
    for combo in itertools.product(*per_agent):
        prob = math.prod(p for _, p in combo)
        rec = outcome_from_successes(taus, [s for s, _ in combo], 1)
        acc[rec] += prob
    return dict(acc)


def exact_outcome_distribution(
    params: Params,
    priors: PriorProfile,
    cutoffs: CutoffProfile,
    conditioning: int | str = "marginal",
    evaluation_prior: float | None = None,
    max_agents: int = DEFAULT_MAX_AGENTS,
    max_tau: int = DEFAULT_MAX_TAU,
) -> OutcomeDistribution:
    """Full outcome distribution given the state, or mixed by ``evaluation_prior``.

    ``conditioning`` is 0, 1 or ``"marginal"``; the marginal mixes the two
    states with ``evaluation_prior`` (defaults to the first agent's prior).
    """
    priors.check_against(params)
    cutoffs.check_against(params, priors)
    taus = _check_limits(cutoffs, max_agents, max_tau)
    if conditioning in (0, 1):
        dist = _conditional(taus, params.pi, int(conditioning))
        label = f"state {conditioning}"
    elif conditioning == "marginal":
        q = priors.probs[0] if evaluation_prior is None else float(evaluation_prior)
        dist = {}
        for state, w in ((1, q), (0, 1.0 - q)):
            if w == 0.0:
                continue
            for rec, p in _conditional(taus, params.pi, state).items():
                dist[rec] = dist.get(rec, 0.0) + w * p
        label = f"marginal under prior {q}"
    else:
        raise ValueError(f"unknown conditioning {conditioning!r}")
    support = sorted(dist.items(), key=lambda kv: _sort_key(kv[0]))
    return OutcomeDistribution(support, label)


def _sort_key(rec: OutcomeRecord) -> tuple:
    big = 10**9
    return (
        rec.state,
        rec.revelation_time or big,
        tuple(s if s is not None else big for s in rec.switch_times),
    )


def expected_payoffs(
    params: Params,
    priors: PriorProfile,
    cutoffs: CutoffProfile,
    evaluation_prior_per_agent: Sequence[float] | None = None,
    max_agents: int = DEFAULT_MAX_AGENTS,
    max_tau: int = DEFAULT_MAX_TAU,
) -> list[float]:
    """Ex-ante expected payoff of each agent, each under her own prior."""
    priors.check_against(params)
    cutoffs.check_against(params, priors)
    taus = _check_limits(cutoffs, max_agents, max_tau)
    qs = list(priors.probs if evaluation_prior_per_agent is None else evaluation_prior_per_agent)
    by_state = {}
    for state in (0, 1):
        acc = np.zeros(len(taus))
        for rec, p in _conditional(taus, params.pi, state).items():
            acc += p * np.asarray(outcome_payoffs(rec, params))
        by_state[state] = acc
    return [float(q * by_state[1][i] + (1 - q) * by_state[0][i]) for i, q in enumerate(qs)]


def raw_discounted(value: float, params: Params) -> float:
    """Undo the ``(1 - delta)`` normalization."""
    return value / (1.0 - params.delta)


# --- Monte Carlo -----------------------------------------------------------


def _path_uniforms(seed: int, path_index: int, horizon: int, n: int) -> np.ndarray:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    bitgen = np.random.Philox(key=seed, counter=[0, 0, 0, path_index])
    return np.random.Generator(bitgen).random(horizon * n + 1).reshape(-1)


def _draw_state(u0: float, true_state: int | None, state_prior: float | None) -> int:
    if true_state is not None:
        if true_state not in (0, 1):
            raise ValueError(f"true_state must be 0 or 1, got {true_state}")
        return int(true_state)
    if state_prior is None:
        raise ValueError("either true_state or state_prior is required")
    return int(u0 < state_prior)


def simulate_path(
    params: Params,
    priors: PriorProfile,
    cutoffs: CutoffProfile,
    true_state: int | None,
    seed: int,
    path_index: int = 0,
    state_prior: float | None = None,
) -> PathRecord:
    """One sampled play-through, deterministic in (inputs, seed, path_index).

    Periods past the horizon ``max(tau) + 2`` are absorbing; the payoff of an
    agent still on the risky arm then is added at its expected value.
    """
    priors.check_against(params)
    cutoffs.check_against(params, priors)
    taus = [int(t) for t in cutoffs.taus]  # type: ignore[arg-type]
    n = len(taus)
    horizon = max(taus) + 2
    u = _path_uniforms(seed, path_index, horizon, n)
    state = _draw_state(float(u[0]), true_state, state_prior)
    grid = u[1:].reshape(horizon, n)

    d = params.delta
    had_success = [False] * n
    switched_at: list[int | None] = [None] * n
    revealed_at: int | None = None
    risky_forever_from: int | None = None
    actions, draws, signals = [], [], []
    totals = [0.0] * n
    for t in range(1, horizon + 1):
        acts = []
        for i in range(n):
            if risky_forever_from is not None and t >= risky_forever_from:
                acts.append(True)
            elif had_success[i]:
                acts.append(True)
            else:
                acts.append(t <= taus[i])
        row_draws: list[float | None] = []
        sig = []
        for i in range(n):
            if not acts[i]:
                row_draws.append(None)
                if switched_at[i] is None and revealed_at is None:
                    switched_at[i] = t
                    sig.append(f"switch:{i}")
                continue
            success = state == 1 and grid[t - 1, i] < params.pi
            x = params.x_high if success else params.x_low
            row_draws.append(x)
            totals[i] += (1 - d) * d ** (t - 1) * x
            had_success[i] = had_success[i] or success
        if revealed_at is None and risky_forever_from is None:
            late = [i for i in range(n) if acts[i] and t > taus[i]]
            if late:
                revealed_at = t
                risky_forever_from = t + 1
                sig.append("reveal:" + ",".join(map(str, late)))
        actions.append(tuple(acts))
        draws.append(tuple(row_draws))
        signals.append(tuple(sig))

    mu = params.e_good if state == 1 else -params.e_loss
    for i in range(n):
        if actions[-1][i]:
            totals[i] += d**horizon * mu

    switch_times = tuple(
        s if s is not None and (revealed_at is None or s <= revealed_at) else None
        for s in switched_at
    )
    outcome = OutcomeRecord(
        switch_times, revealed_at, "success_run" if revealed_at else "none", state
    )
    return PathRecord(seed, path_index, RNG_NAME, state, actions, draws, signals, outcome, tuple(totals))


@dataclass
class BatchResult:
    seed: int
    states: np.ndarray
    switch_times: np.ndarray  # -1 encodes "never"
    revelation_times: np.ndarray  # -1 encodes "never"
    payoffs: np.ndarray  # expected payoff given the sampled state and outcome
    taus: tuple[int, ...] = field(default=())

    def outcomes(self) -> list[OutcomeRecord]:
        recs = []
        for k in range(len(self.states)):
            sw = tuple(int(s) if s > 0 else None for s in self.switch_times[k])
            r = int(self.revelation_times[k])
            recs.append(
                OutcomeRecord(sw, r if r > 0 else None, "success_run" if r > 0 else "none", int(self.states[k]))
            )
        return recs

    def frequencies(self) -> dict[OutcomeRecord, float]:
        counts: dict[OutcomeRecord, int] = defaultdict(int)
        for rec in self.outcomes():
            counts[rec] += 1
        total = len(self.states)
        return {rec: c / total for rec, c in counts.items()}

    def csv_rows(self) -> Iterable[list]:
        for k in range(len(self.states)):
            yield (
                [self.seed, k, int(self.states[k])]
                + [int(s) if s > 0 else "" for s in self.switch_times[k]]
                + [int(self.revelation_times[k]) if self.revelation_times[k] > 0 else ""]
                + [repr(float(x)) for x in self.payoffs[k]]
            )

    def csv_header(self) -> list[str]:
        n = self.switch_times.shape[1]
        return (
            ["seed", "path", "state"]
            + [f"switch_{i}" for i in range(n)]
            + ["revelation"]
            + [f"payoff_{i}" for i in range(n)]
        )


def simulate_batch(
    params: Params,
    priors: PriorProfile,
    cutoffs: CutoffProfile,
    n_paths: int,
    seed: int,
    true_state: int | None = None,
    state_prior: float | None = None,
) -> BatchResult:
    """Many paths at once; path ``k`` uses the same substream as ``simulate_path(..., k)``.

    Payoffs here are expected values given the sampled state and public
    outcome, which is what the exact distribution folds over.
    """
    priors.check_against(params)
    cutoffs.check_against(params, priors)
    taus = np.array([int(t) for t in cutoffs.taus])  # type: ignore[arg-type]
    n = len(taus)
    horizon = int(taus.max()) + 2
    u = np.empty((n_paths, horizon * n + 1))
    for k in range(n_paths):
        u[k] = _path_uniforms(seed, k, horizon, n)
    if true_state is not None:
        states = np.full(n_paths, _draw_state(0.0, true_state, None))
    else:
        if state_prior is None:
            raise ValueError("either true_state or state_prior is required")
        states = (u[:, 0] < state_prior).astype(int)
    grid = u[:, 1:].reshape(n_paths, horizon, n)
    success = (grid < params.pi) & (states[:, None, None] == 1)
    t_idx = np.arange(1, horizon + 1)[None, :, None]
    within = success & (t_idx <= taus[None, None, :])
    hit = within.any(axis=1)  # (paths, n)

    reveal_cand = np.where(hit, taus[None, :] + 1, np.iinfo(np.int64).max)
    r = reveal_cand.min(axis=1)
    has_r = hit.any(axis=1)
    switch = np.where(hit | (has_r[:, None] & (taus[None, :] + 1 > r[:, None])), -1, taus[None, :] + 1)
    rev = np.where(has_r, r, -1)

    d = params.delta
    mu = np.where(states == 1, params.e_good, -params.e_loss)[:, None]
    share = np.where(switch < 0, 1.0, 1.0 - d ** (np.maximum(switch, 1) - 1))
    share = share + np.where((switch > 0) & has_r[:, None], d ** np.where(has_r, r, 0)[:, None], 0.0)
    payoffs = mu * share
    return BatchResult(seed, states, switch, rev, payoffs, tuple(int(x) for x in taus))


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
