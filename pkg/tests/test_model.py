import json
import math

import pytest
from hypothesis import given, strategies as st

from cascadebandit.model import (
    UNBOUNDED,
    Belief,
    CutoffProfile,
    GameState,
    Params,
    PriorProfile,
    ValidationError,
    validate_params,
)

RAW_A = {"delta": 0.2, "pi": 0.6, "x_high": 4.0, "x_low": -1.0, "n_agents": 3}


def test_derived_payoffs():
    p = validate_params(RAW_A)
    assert p.e_good == pytest.approx(2.0, abs=1e-15)
    assert p.e_loss == 1.0


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"pi": 0.5, "x_high": 1.0, "n_agents": 2}, "e_good"),
        ({"delta": 1.0}, "delta"),
        ({"delta": 0.0}, "delta"),
        ({"pi": 1.0}, "pi"),
        ({"x_high": 0.0}, "x_high"),
        ({"x_low": 0.5}, "x_low"),
        ({"n_agents": 0}, "n_agents"),
        ({"n_agents": 1.5}, "n_agents"),
        ({"delta": float("nan")}, "delta"),
        ({"x_high": float("inf")}, "x_high"),
        ({"pi": "abc"}, "pi"),
    ],
)
def test_invalid_params_name_the_field(patch, field):
    with pytest.raises(ValidationError, match=field):
        validate_params({**RAW_A, **patch})


def test_missing_and_unknown_fields():
    with pytest.raises(ValidationError, match="missing"):
        validate_params({k: v for k, v in RAW_A.items() if k != "pi"})
    with pytest.raises(ValidationError, match="unknown"):
        validate_params({**RAW_A, "gamma": 1})


def test_derived_fields_cannot_be_set():
    with pytest.raises(TypeError):
        Params(0.2, 0.6, 4.0, -1.0, 3, e_good=5.0)  # type: ignore[call-arg]


valid_raw = st.fixed_dictionaries(
    {
        "delta": st.floats(0.01, 0.99),
        "pi": st.floats(0.01, 0.99),
        "x_high": st.floats(0.1, 100.0),
        "x_low": st.floats(-10.0, -0.01),
        "n_agents": st.integers(1, 6),
    }
).filter(lambda r: r["pi"] * r["x_high"] + (1 - r["pi"]) * r["x_low"] > 1e-9)


@given(valid_raw)
def test_json_round_trip_is_exact(raw):
    p = validate_params(raw)
    q = Params.from_json(p.to_json())
    assert q == p
    for k in ("delta", "pi", "x_high", "x_low", "n_agents"):
        assert getattr(q, k) == getattr(p, k)


@given(valid_raw)
def test_good_plus_loss_identity(raw):
    p = validate_params(raw)
    lhs = p.e_good + p.e_loss
    rhs = p.pi * (p.x_high - p.x_low)
    assert math.isclose(lhs, rhs, rel_tol=1e-12)


def test_from_expectations_recovers_e_values():
    p = Params.from_expectations(0.3, 0.25, 2.5, 1.5, 2)
    assert p.e_good == pytest.approx(2.5, rel=1e-12)
    assert p.e_loss == pytest.approx(1.5, rel=1e-12)


@given(st.floats(0.0, 1.0))
def test_belief_log_odds_lockstep(p):
    b = Belief.from_prob(p)
    if 0 < p < 1:
        assert math.isclose(b.log_odds, math.log(p / (1 - p)), rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(Belief.from_log_odds(b.log_odds).prob, p, rel_tol=1e-12)
    else:
        assert math.isinf(b.log_odds)


def test_belief_rejects_out_of_range():
    with pytest.raises(ValidationError):
        Belief.from_prob(1.2)


def test_prior_profile_order_and_length(params_a):
    PriorProfile.of([0.6, 0.5, 0.5]).check_against(params_a)
    with pytest.raises(ValidationError):
        PriorProfile.of([0.4, 0.5, 0.6])
    with pytest.raises(ValidationError):
        PriorProfile.of([0.6, 0.5]).check_against(params_a)


def test_cutoff_profile_rules(params_a):
    CutoffProfile.of([1, 1, 0]).check_against(params_a)
    with pytest.raises(ValidationError):
        CutoffProfile.of([-1, 1, 1])
    priors = PriorProfile.of([0.9, 0.5, 0.5])
    with pytest.raises(ValidationError):
        CutoffProfile.of([UNBOUNDED, 1, 1]).check_against(params_a, priors)
    CutoffProfile.of([UNBOUNDED, 1, 1]).check_against(params_a, PriorProfile.of([1.0, 0.5, 0.5]))
    assert CutoffProfile.of([3, 1, 2]).max_tau == 3
    assert CutoffProfile.of([UNBOUNDED, 1]).max_tau is UNBOUNDED


def test_profiles_round_trip_json():
    pr = PriorProfile.of([0.7, 0.4])
    cu = CutoffProfile.of([UNBOUNDED, 2])
    assert PriorProfile.from_dict(json.loads(json.dumps(pr.to_dict()))) == pr
    assert CutoffProfile.from_dict(json.loads(json.dumps(cu.to_dict()))) == cu


def test_initial_game_state():
    s = GameState.initial(2)
    assert s.t == 1
    assert s.revelation == "none"
    assert s.public_belief_basis == (0, 0)
