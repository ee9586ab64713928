"""Domain types shared by every module: game primitives, beliefs, profiles, states."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping


class ValidationError(ValueError):
    """Raised when an input violates a model constraint; the message names it."""


class Unbounded(enum.Enum):
    """Sentinel for a stopping time that never arrives (prior exactly 1)."""

    UNBOUNDED = "unbounded"

    def __repr__(self) -> str:
        return "UNBOUNDED"


UNBOUNDED = Unbounded.UNBOUNDED


def _finite(name: str, value: Any) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return x


@dataclass(frozen=True)
class Params:
    """Game primitives.

    ``e_good`` is the expected per-draw payoff in the good state and
    ``e_loss`` the positive magnitude of the per-draw loss in the bad state.
    Both are derived from ``(pi, x_high, x_low)`` and cannot be set directly.
    """

    delta: float
    pi: float
    x_high: float
    x_low: float
    n_agents: int
    e_good: float = field(init=False)
    e_loss: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "e_good", self.pi * self.x_high + (1.0 - self.pi) * self.x_low)
        object.__setattr__(self, "e_loss", -self.x_low)

    @classmethod
    def from_expectations(
        cls, delta: float, pi: float, e_good: float, e_loss: float, n_agents: int
    ) -> "Params":
        """Build params from (E_1, E_0) instead of raw payoffs.

        Picks ``x_low = -e_loss`` and solves for ``x_high``.
        """
        x_low = -float(e_loss)
        x_high = (float(e_good) - (1.0 - pi) * x_low) / pi
        return validate_params(
            {"delta": delta, "pi": pi, "x_high": x_high, "x_low": x_low, "n_agents": n_agents}
        )

    def scaled(self, c: float) -> "Params":
        return validate_params(
            {**self.to_dict(), "x_high": self.x_high * c, "x_low": self.x_low * c}
        )

    def with_agents(self, n: int) -> "Params":
        return validate_params({**self.to_dict(), "n_agents": n})

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta": self.delta,
            "pi": self.pi,
            "x_high": self.x_high,
            "x_low": self.x_low,
            "n_agents": self.n_agents,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Params":
        return validate_params(json.loads(text))


PARAM_FIELDS = ("delta", "pi", "x_high", "x_low", "n_agents")


def validate_params(raw: Mapping[str, Any]) -> Params:
    """Check the five primitives and return a populated :class:`Params`."""
    missing = [k for k in PARAM_FIELDS if k not in raw]
    if missing:
        raise ValidationError(f"missing params field(s): {', '.join(missing)}")
    unknown = sorted(set(raw) - set(PARAM_FIELDS))
    if unknown:
        raise ValidationError(f"unknown params field(s): {', '.join(unknown)}")

    delta = _finite("delta", raw["delta"])
    pi = _finite("pi", raw["pi"])
    x_high = _finite("x_high", raw["x_high"])
    x_low = _finite("x_low", raw["x_low"])
    n_raw = raw["n_agents"]
    if isinstance(n_raw, bool) or not isinstance(n_raw, (int, float)) or float(n_raw) != int(n_raw):
        raise ValidationError(f"n_agents must be a positive integer, got {n_raw!r}")
    n_agents = int(n_raw)

    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie strictly inside (0,1), got {delta}")
    if not 0.0 < pi < 1.0:
        raise ValidationError(f"pi must lie strictly inside (0,1), got {pi}")
    if not x_high > 0.0:
        raise ValidationError(f"x_high must be > 0, got {x_high}")
    if not x_low < 0.0:
        raise ValidationError(f"x_low must be < 0, got {x_low}")
    if n_agents < 1:
        raise ValidationError(f"n_agents must be >= 1, got {n_agents}")

    params = Params(delta, pi, x_high, x_low, n_agents)
    if not params.e_good > 0.0:
        raise ValidationError(
            f"e_good = pi*x_high + (1-pi)*x_low must be > 0, got {params.e_good}"
        )
    return params


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class Belief:
    """Probability of the good state, carried with its log-odds.

    Use :meth:`from_prob` or :meth:`from_log_odds`; the endpoints map to
    ``-inf``/``+inf`` log-odds and are absorbing under updates.
    """

    prob: float
    log_odds: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.prob <= 1.0:
            raise ValidationError(f"belief must lie in [0,1], got {self.prob}")

    @classmethod
    def from_prob(cls, p: float) -> "Belief":
        p = float(p)
        if math.isnan(p) or not 0.0 <= p <= 1.0:
            raise ValidationError(f"belief must lie in [0,1], got {p}")
        if p == 0.0:
            return cls(0.0, -math.inf)
        if p == 1.0:
            return cls(1.0, math.inf)
        return cls(p, math.log(p) - math.log1p(-p))

    @classmethod
    def from_log_odds(cls, lo: float) -> "Belief":
        if math.isnan(lo):
            raise ValidationError("log-odds must not be NaN")
        if lo == math.inf:
            return cls(1.0, math.inf)
        if lo == -math.inf:
            return cls(0.0, -math.inf)
        return cls(_sigmoid(lo), lo)

    @property
    def is_certain_good(self) -> bool:
        return self.log_odds == math.inf

    def __float__(self) -> float:
        return self.prob


def as_belief(x: "Belief | float") -> Belief:
    return x if isinstance(x, Belief) else Belief.from_prob(x)


@dataclass(frozen=True)
class PriorProfile:
    """Commonly known priors, one per agent, in non-increasing order."""

    priors: tuple[Belief, ...]

    def __post_init__(self) -> None:
        if not self.priors:
            raise ValidationError("priors must be non-empty")
        probs = [b.prob for b in self.priors]
        for a, b in zip(probs, probs[1:]):
            if b > a:
                raise ValidationError(f"priors must be non-increasing, got {probs}")

    @classmethod
    def of(cls, values: Iterable["Belief | float"]) -> "PriorProfile":
        return cls(tuple(as_belief(v) for v in values))

    @classmethod
    def common(cls, p: float, n: int) -> "PriorProfile":
        return cls.of([p] * n)

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(b.prob for b in self.priors)

    def __len__(self) -> int:
        return len(self.priors)

    def check_against(self, params: Params) -> None:
        if len(self.priors) != params.n_agents:
            raise ValidationError(
                f"priors has {len(self.priors)} entries but n_agents = {params.n_agents}"
            )

    @property
    def is_common(self) -> bool:
        return len(set(self.probs)) == 1

    def to_dict(self) -> dict[str, Any]:
        return {"priors": list(self.probs)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PriorProfile":
        return cls.of(_finite("prior", v) for v in d["priors"])


@dataclass(frozen=True)
class CutoffProfile:
    """Per-agent cutoffs: the number of all-failure periods played risky."""

    taus: tuple[int | Unbounded, ...]

    def __post_init__(self) -> None:
        if not self.taus:
            raise ValidationError("taus must be non-empty")
        for tau in self.taus:
            if tau is UNBOUNDED:
                continue
            if isinstance(tau, bool) or not isinstance(tau, int) or tau < 0:
                raise ValidationError(f"cutoffs must be non-negative integers, got {tau!r}")

    @classmethod
    def of(cls, taus: Iterable[int | Unbounded]) -> "CutoffProfile":
        return cls(tuple(taus))

    def __len__(self) -> int:
        return len(self.taus)

    def __iter__(self):
        return iter(self.taus)

    def __getitem__(self, i: int) -> int | Unbounded:
        return self.taus[i]

    @property
    def is_finite(self) -> bool:
        return all(t is not UNBOUNDED for t in self.taus)

    @property
    def max_tau(self) -> int | Unbounded:
        if not self.is_finite:
            return UNBOUNDED
        return max(self.taus)  # type: ignore[type-var]

    def check_against(self, params: Params, priors: PriorProfile | None = None) -> None:
        if len(self.taus) != params.n_agents:
            raise ValidationError(
                f"taus has {len(self.taus)} entries but n_agents = {params.n_agents}"
            )
        if priors is not None:
            for i, (tau, q) in enumerate(zip(self.taus, priors.priors)):
                if tau is UNBOUNDED and q.prob != 1.0:
                    raise ValidationError(
                        f"agent {i}: unbounded cutoff requires prior exactly 1, got {q.prob}"
                    )

    def to_dict(self) -> dict[str, Any]:
        return {"taus": [t.value if t is UNBOUNDED else t for t in self.taus]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CutoffProfile":
        out: list[int | Unbounded] = []
        for t in d["taus"]:
            if t == UNBOUNDED.value:
                out.append(UNBOUNDED)
            elif isinstance(t, int) and not isinstance(t, bool):
                out.append(t)
            else:
                raise ValidationError(f"cutoff must be an integer or 'unbounded', got {t!r}")
        return cls(tuple(out))


class Regime(enum.IntEnum):
    """Which rule set currently drives play."""

    CUTOFF = 0  # on the cascade path: risky iff t <= tau_i
    BELIEF = 1  # after an unexpected early switch: risky iff belief >= p^a
    REVEALED = 2  # after a non-switch was read as a success: risky forever


class Status(enum.Enum):
    EXPLORING = "exploring"
    SWITCHED = "switched"
    RISKY_FOREVER = "risky_forever"


@dataclass(frozen=True)
class GameState:
    """Public state at the start of period ``t``.

    ``risky_counts[m]`` is the number of risky periods agent ``m`` has played;
    ``revealed_failures[m]`` the number of her failures the public has inferred
    from switches (``public_belief_basis``). ``triggered_by`` lists agents
    whose risky play was read as a success signal. Per-agent private draw
    information lives outside this object.
    """

    t: int
    regime: Regime
    risky_counts: tuple[int, ...]
    revealed_failures: tuple[int, ...]
    triggered_by: tuple[int, ...] = ()

    @classmethod
    def initial(cls, n: int) -> "GameState":
        return cls(1, Regime.CUTOFF, (0,) * n, (0,) * n, ())

    @property
    def public_belief_basis(self) -> tuple[int, ...]:
        return self.revealed_failures

    @property
    def revelation(self) -> str:
        if self.regime is not Regime.REVEALED:
            return "none"
        return "off_cutoff_risky"

    def status(self, m: int) -> Status:
        if self.regime is Regime.REVEALED:
            return Status.RISKY_FOREVER
        if self.t > 1 and self.revealed_failures[m] == self.risky_counts[m]:
            return Status.SWITCHED
        return Status.EXPLORING

    @property
    def statuses(self) -> tuple[Status, ...]:
        return tuple(self.status(m) for m in range(len(self.risky_counts)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "regime": self.regime.name.lower(),
            "risky_counts": list(self.risky_counts),
            "revealed_failures": list(self.revealed_failures),
            "triggered_by": list(self.triggered_by),
            "statuses": [s.value for s in self.statuses],
        }
