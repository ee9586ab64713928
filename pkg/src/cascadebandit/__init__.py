"""Exploration cascades among agents sharing a two-armed bandit with a common state."""

from .model import (
    UNBOUNDED,
    Belief,
    CutoffProfile,
    GameState,
    Params,
    PriorProfile,
    Regime,
    ValidationError,
    validate_params,
)

__all__ = [
    "UNBOUNDED",
    "Belief",
    "CutoffProfile",
    "GameState",
    "Params",
    "PriorProfile",
    "Regime",
    "ValidationError",
    "validate_params",
]
