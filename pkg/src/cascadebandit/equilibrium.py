"""Cascade strategy machine, exact continuation values and one-shot deviation checks.

The canonical strategy profile:

* on the cascade path agent ``i`` is risky in periods ``1..tau_i`` and then
  switches unless she has seen a success;
* a switch to the safe arm reveals that every risky draw of the switcher
  failed, and observers update on it;
* risky play where an all-failure agent would be safe is read as a success:
  observers jump to belief 1 and stay risky forever; the agent who caused
  it knows better and continues on her own single-agent rule;
* after an unexpected early switch, everybody is risky iff her belief
  (own failures plus revealed failures of others) is at least ``p^a``.

The game is finite in effect: without a pending deviation, play is absorbed
once every agent is safe, and after a revelation every continuation has a
closed form. Values are therefore exact.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .cutoffs import single_agent_cutoff, stopping_time
from .model import (
    Belief,
    CutoffProfile,
    GameState,
    Params,
    PriorProfile,
    Regime,
    ValidationError,
)

DEFAULT_TOLERANCE = 1e-9
MAX_AGENTS = 4
MAX_TAU = 10

Flags = tuple[bool, ...]


class ScaleLimitError(RuntimeError):
    """The requested game is beyond the desk-scale limits of exact verification."""


class UnreachableNodeError(ValueError):
    """A decision node that no draw sequence with at most one deviation reaches."""


class EmptyEquilibriumSetError(ValueError):
    pass


class NonGenericError(ValueError):
    """Some agent is (numerically) indifferent at an on-path decision node."""


@dataclass(frozen=True)
class DecisionNode:
    agent: int
    game_state: GameState
    has_success: bool
    private_belief: Belief
    prescribed: str  # "risky" or "safe"
    depth: int = 0  # 0 on path, 1 after one deviation

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "state": self.game_state.to_dict(),
            "has_success": self.has_success,
            "belief": self.private_belief.prob,
            "prescribed": self.prescribed,
            "depth": self.depth,
        }


@dataclass(frozen=True)
class NodeCheck:
    node: DecisionNode
    value_prescribed: float
    value_deviation: float

    @property
    def gain(self) -> float:
        return self.value_deviation - self.value_prescribed


@dataclass
class DeviationReport:
    nodes: list[NodeCheck]
    tolerance: float = DEFAULT_TOLERANCE
    complete: bool = True  # False when verification stopped at the first failure

    @property
    def max_gain(self) -> float:
        return max((c.gain for c in self.nodes), default=-math.inf)

    @property
    def is_equilibrium(self) -> bool:
        return self.max_gain <= self.tolerance

    @property
    def knife_edge(self) -> list[NodeCheck]:
        return [c for c in self.nodes if abs(c.gain) < self.tolerance]

    def worst(self) -> NodeCheck | None:
        return max(self.nodes, key=lambda c: c.gain, default=None)

    def to_dict(self, include_nodes: bool = False) -> dict:
        worst = self.worst()
        d = {
            "is_equilibrium": self.is_equilibrium,
            "max_gain": self.max_gain,
            "tolerance": self.tolerance,
            "n_nodes": len(self.nodes),
            "n_knife_edge": len(self.knife_edge),
            "complete": self.complete,
            "worst_node": None if worst is None else {**worst.node.to_dict(), "gain": worst.gain},
        }
        if include_nodes:
            d["nodes"] = [
                {
                    **c.node.to_dict(),
                    "value_prescribed": c.value_prescribed,
                    "value_deviation": c.value_deviation,
                    "gain": c.gain,
                }
                for c in self.nodes
            ]
        return d

    def trace_rows(self) -> Iterator[list]:
        for c in self.nodes:
            yield [
                c.node.agent,
                c.node.game_state.t,
                c.node.depth,
                c.node.game_state.regime.name.lower(),
                int(c.node.has_success),
                repr(c.node.private_belief.prob),
                c.node.prescribed,
                repr(c.value_prescribed),
                repr(c.value_deviation),
                repr(c.gain),
            ]

    TRACE_HEADER = [
        "agent", "t", "depth", "regime", "has_success", "belief",
        "prescribed", "value_prescribed", "value_deviation", "gain",
    ]


@dataclass(frozen=True)
class StrategyProfile:
    """Cutoffs plus the canonical off-path rules (the only rule set supported)."""

    params: Params
    priors: PriorProfile
    cutoffs: CutoffProfile
    off_path_rule: str = "canonical"

    def __post_init__(self) -> None:
        if self.off_path_rule != "canonical":
            raise ValidationError(f"unknown off-path rule {self.off_path_rule!r}")

    @cached_property
    def game(self) -> "CascadeGame":
        return CascadeGame(self.params, self.priors, self.cutoffs)


class CascadeGame:
    """Exact model of play under the canonical profile for one (params, priors, cutoffs)."""

    def __init__(
        self,
        params: Params,
        priors: PriorProfile,
        cutoffs: CutoffProfile,
        max_agents: int = MAX_AGENTS,
        max_tau: int = MAX_TAU,
    ) -> None:
        priors.check_against(params)
        cutoffs.check_against(params, priors)
        if params.n_agents > max_agents:
            raise ScaleLimitError(f"n_agents = {params.n_agents} exceeds the limit {max_agents}")
        if not cutoffs.is_finite:
            raise ScaleLimitError("exact verification needs finite cutoffs")
        if max(cutoffs.taus) > max_tau:  # type: ignore[type-var]
            raise ScaleLimitError(f"max cutoff {cutoffs.max_tau} exceeds the limit {max_tau}")
        for i, q in enumerate(priors.probs):
            if q == 1.0:
                raise ScaleLimitError(f"agent {i} has prior 1; play never terminates")

        self.params = params
        self.priors = priors
        self.n = params.n_agents
        self.taus: tuple[int, ...] = tuple(int(t) for t in cutoffs.taus)  # type: ignore[arg-type]
        self.delta = params.delta
        self.pi = params.pi
        self.e_good = params.e_good
        self.e_loss = params.e_loss
        self.cutoff = single_agent_cutoff(params).prob
        self._prior_lo = [b.log_odds for b in priors.priors]
        self._lr = math.log1p(-params.pi)
        self._belief_cache: dict[tuple[int, int], float] = {}
        self._values: dict[tuple[GameState, Flags, int], tuple[float, ...]] = {}

    # -- beliefs and actions -------------------------------------------------

    def belief_after(self, m: int, failures: int) -> float:
        """Good-state belief of agent ``m`` after ``failures`` failures in total."""
        key = (m, failures)
        b = self._belief_cache.get(key)
        if b is None:
            b = Belief.from_log_odds(self._prior_lo[m] + failures * self._lr).prob
            self._belief_cache[key] = b
        return b

    def explores(self, m: int, failures: int) -> bool:
        return self.belief_after(m, failures) >= self.cutoff

    def failures_seen(self, s: GameState, m: int) -> int:
        """Own risky draws plus failures revealed by everyone else's switches."""
        return s.risky_counts[m] + sum(s.revealed_failures) - s.revealed_failures[m]

    def is_observer(self, s: GameState, m: int) -> bool:
        return s.regime is Regime.REVEALED and any(j != m for j in s.triggered_by)

    def all_failure_action(self, s: GameState, m: int) -> bool:
        """Prescribed action of ``m`` if she has seen only failures (True = risky)."""
        if s.regime is Regime.CUTOFF:
            return s.t <= self.taus[m]
        if s.regime is Regime.REVEALED and self.is_observer(s, m):
            return True
        return self.explores(m, self.failures_seen(s, m))

    def prescribed(self, s: GameState, m: int, has_success: bool) -> bool:
        return has_success or self.all_failure_action(s, m)

    def actions(self, s: GameState, flags: Flags) -> tuple[bool, ...]:
        return tuple(self.prescribed(s, m, flags[m]) for m in range(self.n))

    def next_state(self, s: GameState, acts: Sequence[bool]) -> GameState:
        n = self.n
        risky = tuple(s.risky_counts[m] + (1 if acts[m] else 0) for m in range(n))
        if s.regime is Regime.REVEALED:
            return GameState(s.t + 1, Regime.REVEALED, risky, s.revealed_failures, s.triggered_by)
        revealed = tuple(
            s.revealed_failures[m] if acts[m] else s.risky_counts[m] for m in range(n)
        )
        expected = [self.all_failure_action(s, m) for m in range(n)]
        trig = tuple(m for m in range(n) if acts[m] and not expected[m])
        if trig:
            return GameState(s.t + 1, Regime.REVEALED, risky, revealed, trig)
        early = any(not acts[m] and expected[m] for m in range(n))
        regime = Regime.BELIEF if (s.regime is Regime.BELIEF or early) else Regime.CUTOFF
        return GameState(s.t + 1, regime, risky, revealed, ())

    def flag_outcomes(
        self, flags: Flags, acts: Sequence[bool], theta: int
    ) -> list[tuple[Flags, float]]:
        """Distribution of success flags after one period of draws."""
        if theta == 0:
            return [(flags, 1.0)]
        drawers = [m for m in range(self.n) if acts[m] and not flags[m]]
        if not drawers:
            return [(flags, 1.0)]
        out = []
        for hits in itertools.product((False, True), repeat=len(drawers)):
            f = list(flags)
            p = 1.0
            for m, h in zip(drawers, hits):
                f[m] = h
                p *= self.pi if h else 1.0 - self.pi
            out.append((tuple(f), p))
        return out

    # -- values --------------------------------------------------------------

    def _revealed_value(self, s: GameState, m: int, has_success: bool, theta: int) -> float:
        mu = self.e_good if theta == 1 else -self.e_loss
        if has_success or self.is_observer(s, m):
            return mu
        base = self.failures_seen(s, m)
        k = 0
        while self.explores(m, base + k):
            k += 1
        dk = self.delta**k
        if theta == 0:
            return -self.e_loss * (1.0 - dk)
        return self.e_good * ((1.0 - dk) + dk * (1.0 - (1.0 - self.pi) ** k))

    def values(self, s: GameState, flags: Flags, theta: int) -> tuple[float, ...]:
        """Normalized continuation value of every agent from period ``s.t`` on.

        Conditional on the state and all success flags, with everybody
        following the profile.
        """
        key = (s, flags, theta)
        hit = self._values.get(key)
        if hit is not None:
            return hit
        if s.regime is Regime.REVEALED:
            out = tuple(self._revealed_value(s, m, flags[m], theta) for m in range(self.n))
        else:
            acts = self.actions(s, flags)
            if not any(acts):
                out = (0.0,) * self.n
            else:
                out = self._step(s, flags, theta, acts)
        self._values[key] = out
        return out

    def _step(
        self, s: GameState, flags: Flags, theta: int, acts: Sequence[bool]
    ) -> tuple[float, ...]:
        mu = self.e_good if theta == 1 else -self.e_loss
        nxt = self.next_state(s, acts)
        cont = [0.0] * self.n
        for f2, p in self.flag_outcomes(flags, acts, theta):
            v = self.values(nxt, f2, theta)
            for m in range(self.n):
                cont[m] += p * v[m]
        d = self.delta
        return tuple(
            (1.0 - d) * (mu if acts[m] else 0.0) + d * cont[m] for m in range(self.n)
        )

    def deviation_values(
        self, s: GameState, flags: Flags, theta: int, agent: int
    ) -> tuple[float, ...]:
        """Values when ``agent`` flips her action this period and then reverts."""
        acts = list(self.actions(s, flags))
        acts[agent] = not acts[agent]
        return self._step(s, flags, theta, acts)

    # -- beliefs at decision nodes ---------------------------------------------

    def node_belief(self, s: GameState, agent: int, has_success: bool) -> Belief:
        if has_success or self.is_observer(s, agent):
            return Belief.from_prob(1.0)
        return Belief.from_log_odds(
            self._prior_lo[agent] + self.failures_seen(s, agent) * self._lr
        )

    def node_weights(
        self, s: GameState, agent: int, has_success: bool
    ) -> list[tuple[int, Flags, float]]:
        """Agent's posterior over (state, everybody's success flags) at a node."""
        q = self.node_belief(s, agent, has_success).prob
        others = [m for m in range(self.n) if m != agent]
        good: list[tuple[Flags, float]] = []
        if s.regime is Regime.REVEALED:
            # others' flags do not move anything after a revelation
            f = [False] * self.n
            f[agent] = has_success
            good = [(tuple(f), 1.0)]
        else:
            per = []
            for m in others:
                unknown = s.risky_counts[m] - s.revealed_failures[m]
                p_hit = 1.0 - (1.0 - self.pi) ** unknown
                per.append([(False, 1.0 - p_hit), (True, p_hit)] if p_hit > 0 else [(False, 1.0)])
            for combo in itertools.product(*per):
                f = [False] * self.n
                f[agent] = has_success
                p = 1.0
                for m, (h, w) in zip(others, combo):
                    f[m] = h
                    p *= w
                if p > 0:
                    good.append((tuple(f), p))
        out = [(1, f, q * w) for f, w in good if q > 0]
        if q < 1.0 and not has_success:
            out.append((0, (False,) * self.n, 1.0 - q))
        return out

    def check_node(self, s: GameState, agent: int, has_success: bool, depth: int = 0) -> NodeCheck:
        self._validate_node(s, agent, has_success)
        presc = dev = 0.0
        for theta, flags, w in self.node_weights(s, agent, has_success):
            presc += w * self.values(s, flags, theta)[agent]
            dev += w * self.deviation_values(s, flags, theta, agent)[agent]
        node = DecisionNode(
            agent,
            s,
            has_success,
            self.node_belief(s, agent, has_success),
            "risky" if self.prescribed(s, agent, has_success) else "safe",
            depth,
        )
        return NodeCheck(node, presc, dev)

    def _validate_node(self, s: GameState, agent: int, has_success: bool) -> None:
        if not 0 <= agent < self.n:
            raise UnreachableNodeError(f"no agent {agent}")
        if len(s.risky_counts) != self.n or s.t < 1:
            raise UnreachableNodeError(f"malformed state {s}")
        for m in range(self.n):
            if not 0 <= s.revealed_failures[m] <= s.risky_counts[m] <= s.t - 1:
                raise UnreachableNodeError(f"inconsistent counts for agent {m} in {s}")
        if has_success and s.risky_counts[agent] == 0:
            raise UnreachableNodeError("a success needs at least one risky draw")

    # -- reachable nodes -------------------------------------------------------

    def _successors(self, s: GameState, flags: Flags, acts: Sequence[bool]):
        nxt = self.next_state(s, acts)
        for f2, p in self.flag_outcomes(flags, acts, 1):
            if p > 0:
                yield (nxt, f2)

    def _settled(self, s: GameState, flags: Flags) -> bool:
        """No decision changes from here on under the profile."""
        if s.regime is Regime.REVEALED:
            return all(
                flags[m] or self.is_observer(s, m) or not self.all_failure_action(s, m)
                for m in range(self.n)
            )
        return not any(self.actions(s, flags))

    def _closure(self, starts, depth: int, seen: dict) -> None:
        queue = deque(x for x in starts if x not in seen)
        for x in queue:
            seen[x] = depth
        while queue:
            s, flags = queue.popleft()
            if self._settled(s, flags):
                continue
            for y in self._successors(s, flags, self.actions(s, flags)):
                if y not in seen:
                    seen[y] = depth
                    queue.append(y)

    def reachable(self) -> dict[tuple[GameState, Flags], int]:
        """Full states (public state, flags) reachable on path (0) or after one deviation (1)."""
        seen: dict[tuple[GameState, Flags], int] = {}
        root = (GameState.initial(self.n), (False,) * self.n)
        self._closure([root], 0, seen)
        on_path = [x for x, dep in seen.items() if dep == 0]
        for s, flags in on_path:
            base = self.actions(s, flags)
            for k in range(self.n):
                acts = list(base)
                acts[k] = not acts[k]
                self._closure(list(self._successors(s, flags, acts)), 1, seen)
        return seen

    def decision_nodes(self) -> list[tuple[GameState, int, bool, int]]:
        keys: dict[tuple[GameState, int, bool], int] = {}
        for (s, flags), depth in self.reachable().items():
            for m in range(self.n):
                k = (s, m, flags[m])
                if k not in keys or depth < keys[k]:
                    keys[k] = depth
        ordered = sorted(
            keys.items(),
            key=lambda kv: (kv[1], kv[0][0].t, kv[0][1], kv[0][2], _state_sort(kv[0][0])),
        )
        return [(s, m, f, dep) for (s, m, f), dep in ordered]

    def root_values(self) -> list[float]:
        s0 = GameState.initial(self.n)
        return [self.check_node(s0, i, False).value_prescribed for i in range(self.n)]


def _state_sort(s: GameState) -> tuple:
    return (int(s.regime), s.risky_counts, s.revealed_failures, s.triggered_by)


# --- public operations --------------------------------------------------------


def prescribed_action(profile: StrategyProfile, node: DecisionNode) -> str:
    game = profile.game
    game._validate_node(node.game_state, node.agent, node.has_success)
    return "risky" if game.prescribed(node.game_state, node.agent, node.has_success) else "safe"


def continuation_value(profile: StrategyProfile, node: DecisionNode) -> float:
    """Exact normalized continuation value of the node's agent under her beliefs."""
    return profile.game.check_node(node.game_state, node.agent, node.has_success).value_prescribed


def make_node(
    profile: StrategyProfile, state: GameState, agent: int, has_success: bool = False
) -> DecisionNode:
    return profile.game.check_node(state, agent, has_success).node


def verify_one_shot_deviations(
    params: Params,
    priors: PriorProfile,
    cutoffs: CutoffProfile,
    tolerance: float = DEFAULT_TOLERANCE,
    stop_at_first: bool = False,
) -> DeviationReport:
    """Check every reachable decision node (on path and after one deviation)."""
    game = CascadeGame(params, priors, cutoffs)
    checks = []
    for s, m, f, depth in game.decision_nodes():
        c = game.check_node(s, m, f, depth)
        checks.append(c)
        if stop_at_first and c.gain > tolerance:
            return DeviationReport(checks, tolerance, complete=False)
    return DeviationReport(checks, tolerance)


def is_cascade_equilibrium(
    params: Params, priors: PriorProfile, cutoffs: CutoffProfile, tolerance: float = DEFAULT_TOLERANCE
) -> bool:
    return verify_one_shot_deviations(params, priors, cutoffs, tolerance, stop_at_first=True).is_equilibrium


@dataclass
class EquilibriumSet:
    profiles: list[CutoffProfile]
    search_bounds: int
    priors: PriorProfile | None = None

    def __len__(self) -> int:
        return len(self.profiles)

    def agent_cutoffs(self, i: int) -> list[int]:
        """The set T(p_i, p_-i) of cutoffs agent ``i`` uses in some equilibrium."""
        return sorted({int(p.taus[i]) for p in self.profiles})  # type: ignore[arg-type]

    @property
    def max_cutoff(self) -> int | None:
        """Largest cutoff used by anybody in any member (tau-bar)."""
        if not self.profiles:
            return None
        return max(int(p.max_tau) for p in self.profiles)  # type: ignore[arg-type]

    def to_dict(self) -> dict:
        return {
            "profiles": [list(p.taus) for p in self.profiles],
            "search_bounds": self.search_bounds,
            "max_cutoff": self.max_cutoff,
        }


def enumerate_cascade_equilibria(
    params: Params,
    priors: PriorProfile,
    tau_max: int,
    budget: int = 4096,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquilibriumSet:
    """Verify every profile in ``{0..tau_max}^n`` and keep the ones that pass."""
    n = params.n_agents
    count = (tau_max + 1) ** n
    if count > budget:
        raise ScaleLimitError(f"{count} profiles exceed the enumeration budget {budget}")
    found = []
    for taus in itertools.product(range(tau_max + 1), repeat=n):
        cut = CutoffProfile(taus)
        if is_cascade_equilibrium(params, priors, cut, tolerance):
            found.append(cut)
    return EquilibriumSet(found, tau_max, priors)


def _max_prior_agents(priors: PriorProfile) -> list[int]:
    top = max(priors.probs)
    return [i for i, q in enumerate(priors.probs) if q == top]


def most_optimistic_last_violations(eq: EquilibriumSet, priors: PriorProfile) -> list[CutoffProfile]:
    tops = _max_prior_agents(priors)
    return [p for p in eq.profiles if max(p.taus[i] for i in tops) < p.max_tau]  # type: ignore[operator]


def check_most_optimistic_last(eq: EquilibriumSet, priors: PriorProfile) -> bool:
    """Every member's largest cutoff belongs to an agent with the largest prior."""
    if not eq.profiles:
        raise EmptyEquilibriumSetError("equilibrium set is empty")
    return not most_optimistic_last_violations(eq, priors)


def single_agent_dominance_violations(
    eq: EquilibriumSet, priors: PriorProfile, params: Params
) -> list[CutoffProfile]:
    tops = _max_prior_agents(priors)
    bound = stopping_time(priors.priors[tops[0]], single_agent_cutoff(params), params.pi)
    return [p for p in eq.profiles if any(p.taus[i] > bound for i in tops)]  # type: ignore[operator]


def check_single_agent_dominance(eq: EquilibriumSet, priors: PriorProfile, params: Params) -> bool:
    """The most optimistic agents never out-explore their lone-agent stopping time.

    With a common prior this is the statement that no cutoff in any member
    exceeds the lone-agent stopping time.
    """
    if not eq.profiles:
        raise EmptyEquilibriumSetError("equilibrium set is empty")
    if single_agent_dominance_violations(eq, priors, params):
        return False
    if priors.is_common:
        bound = stopping_time(priors.priors[0], single_agent_cutoff(params), params.pi)
        return eq.max_cutoff <= bound  # type: ignore[operator]
    return True


@dataclass
class ComparativeStatics:
    tau_single_top_a: int
    tau_single_top_b: int
    top_cutoffs_a: list[int]
    top_cutoffs_b: list[int]
    monotone: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def comparative_statics_tau1(
    params: Params, priors_a: PriorProfile, priors_b: PriorProfile, tau_max: int = 5
) -> ComparativeStatics:
    """Compare the top agent's stopping behaviour across two prior profiles.

    Reports the lone-agent stopping time at each top prior and the cutoffs
    the top agent uses across the enumerated equilibria.
    """
    pa = single_agent_cutoff(params)
    sets = []
    for pr in (priors_a, priors_b):
        eq = enumerate_cascade_equilibria(params, pr, tau_max)
        if not eq.profiles:
            raise EmptyEquilibriumSetError(f"no cascade equilibrium at priors {pr.probs}")
        sets.append(eq)
    ta = int(stopping_time(priors_a.priors[0], pa, params.pi))  # type: ignore[arg-type]
    tb = int(stopping_time(priors_b.priors[0], pa, params.pi))  # type: ignore[arg-type]
    qa, qb = priors_a.probs[0], priors_b.probs[0]
    if qb >= qa:
        mono = tb >= ta
    else:
        mono = ta >= tb
    return ComparativeStatics(
        ta,
        tb,
        sets[0].agent_cutoffs(0),
        sets[1].agent_cutoffs(0),
        mono,
    )


@dataclass
class RobustnessReport:
    center_prior: PriorProfile
    radius: float
    slack: float
    samples_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "center_prior": list(self.center_prior.probs),
            "radius": self.radius,
            "slack": self.slack,
            "samples_checked": self.samples_checked,
        }


def on_path_slack(params: Params, priors: PriorProfile, cutoffs: CutoffProfile) -> float:
    """Smallest margin by which a prescribed on-path action beats its deviation."""
    report = verify_one_shot_deviations(params, priors, cutoffs)
    return min(-c.gain for c in report.nodes if c.node.depth == 0)


def perturbed_priors(
    center: PriorProfile, eps: float, n_random: int, seed: int, symmetric_cutoffs: bool
) -> list[PriorProfile]:
    """Corners of the eps-box plus seeded interior points, kept valid."""
    c = np.array(center.probs)
    n = len(c)
    pts = [c + eps * np.array(signs) for signs in itertools.product((-1.0, 1.0), repeat=n)]
    rng = np.random.Generator(np.random.Philox(key=seed))
    pts += [c + eps * rng.uniform(-1.0, 1.0, n) for _ in range(n_random)]
    out = []
    for p in pts:
        if np.any(p <= 0) or np.any(p >= 1):
            continue
        if symmetric_cutoffs:
            p = np.sort(p)[::-1]
        elif np.any(np.diff(p) > 0):
            continue
        out.append(PriorProfile.of(float(x) for x in p))
    return out


def stopping_time_margin(params: Params, priors: PriorProfile) -> float:
    """Distance from the priors to the nearest prior that changes some lone-agent stopping time."""
    cutoff = single_agent_cutoff(params)
    pa = cutoff.prob
    step = -math.log1p(-params.pi)
    base = math.log(pa / (1 - pa))
    margin = math.inf
    for q in priors.probs:
        if q >= 1.0 or q <= 0.0:
            continue
        tau = stopping_time(q, cutoff, params.pi)
        for k in (tau - 1, tau):
            if k >= 0:
                edge = 1 / (1 + math.exp(-(base + k * step)))
                margin = min(margin, abs(q - edge))
    return margin


def robustness_ball(
    params: Params,
    center: PriorProfile,
    cutoffs: CutoffProfile,
    search_grid: Sequence[float] | None = None,
    n_random: int = 8,
    seed: int = 0,
    bisection_steps: int = 6,
    genericity: float = 1e-6,
) -> RobustnessReport:
    """Certify a radius around ``center`` within which ``cutoffs`` keeps verifying.

    The radius never reaches a prior at which some agent's lone-agent
    stopping time changes, since crossing one alters which posteriors sit
    above the cutoff and the sampled checks below say nothing beyond it.
    Within that cap, scans ``search_grid`` (descending) for the largest
    radius whose samples all re-verify, then bisects towards the next
    failing grid value.
    """
    report = verify_one_shot_deviations(params, center, cutoffs)
    if not report.is_equilibrium:
        raise ValueError("center profile does not verify")
    slack = min(-c.gain for c in report.nodes if c.node.depth == 0)
    if slack < genericity:
        raise NonGenericError(f"on-path slack {slack:.3g} below the genericity threshold {genericity}")

    symmetric = len(set(cutoffs.taus)) == 1
    edge = min(min(q, 1 - q) for q in center.probs)
    cap = stopping_time_margin(params, center)
    top = min(edge * 0.5, cap * (1 - 1e-6))
    grid = sorted(
        (e for e in (search_grid or [top / 2**k for k in range(16)]) if e < cap), reverse=True
    )
    checked = 0

    def passes(eps: float) -> bool:
        nonlocal checked
        for pr in perturbed_priors(center, eps, n_random, seed, symmetric):
            checked += 1
            if not is_cascade_equilibrium(params, pr, cutoffs):
                return False
        return True

    good, bad = 0.0, None
    for eps in grid:
        if passes(eps):
            good = eps
            break
        bad = eps
    if good > 0 and bad is not None:
        for _ in range(bisection_steps):
            mid = 0.5 * (good + bad)
            if passes(mid):
                good = mid
            else:
                bad = mid
    return RobustnessReport(center, good, slack, checked)
