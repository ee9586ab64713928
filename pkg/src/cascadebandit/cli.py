"""Command-line front end: JSON configs in, JSON reports and CSV plot data out.

Exit codes: 0 success, 1 invalid input, 2 budget or scale limit hit,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import secrets
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence, TextIO

import jsonschema

from . import contracts, cutoffs, equilibrium, scenarios, simulation
from .beliefs import belief_trajectory
from .model import CutoffProfile, Params, PriorProfile, ValidationError, validate_params

EXIT_OK, EXIT_INVALID, EXIT_LIMIT, EXIT_INVARIANT = 0, 1, 2, 3

COMMANDS = ("cutoffs", "simulate", "distribution", "verify", "enumerate", "scenario", "contracts", "sweep")

_PROB = {"type": "number", "minimum": 0, "maximum": 1}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["delta", "pi", "x_high", "x_low", "n_agents"],
            "properties": {
                "delta": {"type": "number"},
                "pi": {"type": "number"},
                "x_high": {"type": "number"},
                "x_low": {"type": "number"},
                "n_agents": {"type": "integer", "minimum": 1},
            },
        },
        "priors": {"type": "array", "minItems": 1, "items": _PROB},
        "cutoffs": {
            "type": "array",
            "minItems": 1,
            "items": {"anyOf": [{"type": "integer", "minimum": 0}, {"const": "unbounded"}]},
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau_max": {"type": "integer", "minimum": 0},
                "budget": {"type": "integer", "minimum": 1},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "paths": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "true_state": {"enum": [0, 1]},
                "state_prior": _PROB,
                "conditioning": {"enum": [0, 1, "marginal"]},
                "k_max": {"type": "integer", "minimum": 0},
                "n_points": {"type": "integer", "minimum": 2},
                "form": {"enum": list(contracts.FORMS)},
                "sweep_priors": {"type": "array", "minItems": 1, "items": _PROB},
            },
        },
    },
}

REPORT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["command", "result"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "result": {"type": "object"},
        "seed": {"type": "integer"},
    },
}

PLOT_COLUMNS: dict[str, tuple[str, ...]] = {
    "belief_trajectory": ("t", "belief"),
    "payoff_vs_prior": ("prior", "tau_efficient", "total_payoff"),
    "gap_surface": ("delta", "pi", "value"),
    "outcome_timeline": ("state", "revelation_time", "switch_times", "probability"),
}


class InvariantError(RuntimeError):
    pass


# --- plot data -------------------------------------------------------------------


def _plot_rows(report: dict, kind: str) -> Iterable[Sequence[Any]]:
    if kind == "belief_trajectory":
        return [(t, b) for t, b in enumerate(report.get("trajectory", []))]
    if kind == "payoff_vs_prior":
        return [tuple(r) for r in report.get("curve", [])]
    if kind == "gap_surface":
        return [(r["delta"], r["pi"], r["value"]) for r in report.get("surface", [])]
    if kind == "outcome_timeline":
        return [
            (
                r["state"],
                "" if r["revelation_time"] is None else r["revelation_time"],
                " ".join("-" if s is None else str(s) for s in r["switch_times"]),
                r["probability"],
            )
            for r in report.get("support", [])
        ]
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {sorted(PLOT_COLUMNS)}")


def emit_plot_data(report: dict, kind: str, out: TextIO | str | Path) -> None:
    """Write a headered CSV for ``kind``; columns are listed in ``PLOT_COLUMNS``."""
    rows = _plot_rows(report, kind)
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            _write_csv(fh, PLOT_COLUMNS[kind], rows)
    else:
        _write_csv(out, PLOT_COLUMNS[kind], rows)


def _write_csv(fh: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])


# --- config handling -------------------------------------------------------------


def load_config(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"config is not valid JSON: {e}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ValidationError(f"config {where}: {e.message}") from None
    return raw


def _params(cfg: dict) -> Params:
    if "params" not in cfg:
        raise ValidationError("config needs a 'params' object")
    return validate_params(cfg["params"])


def _priors(cfg: dict, params: Params) -> PriorProfile:
    if "priors" not in cfg:
        raise ValidationError("config needs 'priors'")
    pr = PriorProfile.of(cfg["priors"])
    pr.check_against(params)
    return pr


def _cutoffs(cfg: dict, params: Params, priors: PriorProfile) -> CutoffProfile:
    if "cutoffs" not in cfg:
        raise ValidationError("config needs 'cutoffs'")
    cut = CutoffProfile.from_dict({"taus": cfg["cutoffs"]})
    cut.check_against(params, priors)
    return cut


def _opt(cfg: dict, key: str, default: Any = None) -> Any:
    return cfg.get("options", {}).get(key, default)


# --- commands --------------------------------------------------------------------


def _cmd_cutoffs(cfg: dict, args) -> tuple[dict, dict]:
    params = _params(cfg)
    priors = [float(q) for q in cfg.get("priors", [])]
    pa, pe = cutoffs.single_agent_cutoff(params), cutoffs.efficient_cutoff(params)
    ex = cutoffs.existence_condition(params)
    rows = []
    for q in priors:
        st = cutoffs.stopping_times(q, params)
        rows.append(
            {
                "prior": q,
                "tau_single": _tau_json(st.tau_single),
                "tau_efficient": _tau_json(st.tau_efficient),
                "on_boundary": cutoffs.is_on_boundary(q, pa, params.pi)
                if 0 < q < 1
                else False,
            }
        )
    result: dict[str, Any] = {
        "p_a": pa.prob,
        "p_e": pe.prob,
        "existence": {
            "holds": ex.holds,
            "lhs": ex.lhs,
            "rhs": None if ex.degenerate else ex.rhs,
            "degenerate": ex.degenerate,
            "bound_at_binding_belief": ex.bound_at_binding_belief,
        },
        "priors": rows,
    }
    if len(rows) == 1:
        result.update({k: rows[0][k] for k in ("tau_single", "tau_efficient")})
    plot = {}
    if priors:
        plot = {"trajectory": belief_trajectory(priors[0], params.pi, _opt(cfg, "k_max", 10))}
    return result, plot


def _tau_json(t):
    return t if isinstance(t, int) else "unbounded"


def _state_args(cfg: dict, priors: PriorProfile) -> tuple[int | None, float | None]:
    ts = _opt(cfg, "true_state")
    if ts is not None:
        return int(ts), None
    return None, float(_opt(cfg, "state_prior", priors.probs[0]))


def _cmd_simulate(cfg: dict, args) -> tuple[dict, dict]:
    params = _params(cfg)
    priors = _priors(cfg, params)
    cut = _cutoffs(cfg, params, priors)
    paths = args.paths if args.paths is not None else _opt(cfg, "paths", 1000)
    ts, sp = _state_args(cfg, priors)
    batch = simulation.simulate_batch(params, priors, cut, paths, args.seed, true_state=ts, state_prior=sp)
    freq = batch.frequencies()
    mean = [float(x) for x in batch.payoffs.mean(axis=0)]
    result = {
        "paths": paths,
        "rng": simulation.RNG_NAME,
        "mean_payoffs": mean,
        "frequencies": [
            {**rec.to_dict(), "frequency": f}
            for rec, f in sorted(freq.items(), key=lambda kv: simulation._sort_key(kv[0]))
        ],
    }
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            _write_csv(fh, batch.csv_header(), batch.csv_rows())
    return result, {}


def _cmd_distribution(cfg: dict, args) -> tuple[dict, dict]:
    params = _params(cfg)
    priors = _priors(cfg, params)
    cut = _cutoffs(cfg, params, priors)
    cond = _opt(cfg, "conditioning", _opt(cfg, "true_state", "marginal"))
    ev = _opt(cfg, "state_prior", priors.probs[0]) if cond == "marginal" else None
    dist = simulation.exact_outcome_distribution(params, priors, cut, conditioning=cond, evaluation_prior=ev)
    support = [{**rec.to_dict(), "probability": p} for rec, p in dist.support]
    total = sum(p for _, p in dist.support)
    if support and abs(total - 1.0) > 1e-12:
        raise InvariantError(f"outcome probabilities sum to {total}")
    result = {
        "conditioning": cond,
        "support": support,
        "expected_payoffs": list(simulation.expected_payoffs(params, priors, cut)),
    }
    return result, {"support": support}


def _cmd_verify(cfg: dict, args) -> tuple[dict, dict]:
    params = _params(cfg)
    priors = _priors(cfg, params)
    cut = _cutoffs(cfg, params, priors)
    tol = _opt(cfg, "tolerance", equilibrium.DEFAULT_TOLERANCE)
    report = equilibrium.verify_one_shot_deviations(params, priors, cut, tol)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            _write_csv(fh, report.TRACE_HEADER, report.trace_rows())
    return report.to_dict(), {}


def _cmd_enumerate(cfg: dict, args) -> tuple[dict, dict]:
    params = _params(cfg)
    priors = _priors(cfg, params)
    tau_max = _opt(cfg, "tau_max", 4)
    eq = equilibrium.enumerate_cascade_equilibria(
        params, priors, tau_max, budget=_opt(cfg, "budget", 4096), tolerance=_opt(cfg, "tolerance", 1e-9)
    )
    result: dict[str, Any] = eq.to_dict()
    if eq.profiles:
        result["most_optimistic_last"] = equilibrium.check_most_optimistic_last(eq, priors)
        result["single_agent_dominance"] = equilibrium.check_single_agent_dominance(eq, priors, params)
    return result, {}


def _cmd_scenario(cfg: dict, args) -> tuple[dict, dict]:
    if args.which == "a1":
        res = scenarios.search_revorder()
    else:
        res = scenarios.search_hetexp()
    if res.verified:
        # cold re-verification guards against hidden state in the search
        again = equilibrium.verify_one_shot_deviations(res.params, res.priors, res.cutoffs)  # type: ignore[arg-type]
        if not again.is_equilibrium:
            raise InvariantError("scenario point failed re-verification")
    return res.to_dict(), {"surface": _gap_surface(args.which, res)}


def _gap_surface(which: str, res: scenarios.ScenarioResult) -> list[dict]:
    deltas = [0.5 + 0.05 * k for k in range(10)]
    pis = [0.01 * k for k in range(1, 11)] + [0.2, 0.3, 0.45, 0.6]
    rows = []
    for d in deltas:
        for pi in pis:
            if which == "a1":
                p3 = 0.4 if res.priors is None else res.priors.probs[2]
                i3p, i3d = scenarios.revorder_info_terms(p3, d, pi, 1.0)
                rows.append({"delta": d, "pi": pi, "value": i3p - i3d})
            else:
                p = 0.5 if res.priors is None else res.priors.probs[2]
                rows.append(
                    {"delta": d, "pi": pi, "value": scenarios.hetexp_low_agent_terms(p, d, pi, 1.0, 1.0)["gap"]}
                )
    return rows


def _cmd_contracts(cfg: dict, args) -> tuple[dict, dict]:
    params = _params(cfg)
    priors = _priors(cfg, params)
    form = _opt(cfg, "form", "closed")
    out = contracts.contract_outcome(priors, params, form)
    owner_prior = priors.priors[out.owner]
    result = {
        **out.to_dict(),
        "form": form,
        "closed_minus_literal": contracts.payoff_discrepancy(owner_prior, params),
    }
    curve = contracts.payoff_curve(params, _opt(cfg, "n_points", 101), form)
    return result, {"curve": curve}


def _cmd_sweep(cfg: dict, args) -> tuple[dict, dict]:
    """Verify the symmetric lone-agent profile across a list of common priors."""
    params = _params(cfg)
    qs = _opt(cfg, "sweep_priors") or cfg.get("priors")
    if not qs:
        raise ValidationError("sweep needs options.sweep_priors (or priors)")
    pa = cutoffs.single_agent_cutoff(params)
    rows = []
    for q in qs:
        tau = cutoffs.stopping_time(q, pa, params.pi)
        if not isinstance(tau, int):
            raise ValidationError("sweep priors must be below 1")
        rep = equilibrium.verify_one_shot_deviations(
            params, PriorProfile.common(q, params.n_agents), CutoffProfile.of([tau] * params.n_agents)
        )
        rows.append({"prior": q, "tau": tau, "is_equilibrium": rep.is_equilibrium, "max_gain": rep.max_gain})
    ex = cutoffs.existence_condition(params)
    return {"existence_holds": ex.holds, "degenerate": ex.degenerate, "rows": rows}, {}


HANDLERS = {
    "cutoffs": (_cmd_cutoffs, "belief_trajectory"),
    "simulate": (_cmd_simulate, None),
    "distribution": (_cmd_distribution, "outcome_timeline"),
    "verify": (_cmd_verify, None),
    "enumerate": (_cmd_enumerate, None),
    "scenario": (_cmd_scenario, "gap_surface"),
    "contracts": (_cmd_contracts, "payoff_vs_prior"),
    "sweep": (_cmd_sweep, None),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cascadebandit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "scenario":
            p.add_argument("which", choices=("a1", "a2"))
            p.add_argument("--config", help="optional; scenario grids are built in")
        else:
            p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--csv", help="write CSV plot data / per-path rows here")
        if name == "simulate":
            p.add_argument("--seed", type=int, help="RNG seed; chosen and printed when omitted")
            p.add_argument("--paths", type=int)
        if name == "verify":
            p.add_argument("--trace", help="CSV with one row per decision node")
    return ap


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID

    try:
        cfg = load_config(args.config) if args.config else {}
        report: dict[str, Any] = {"command": args.command}
        if args.command == "simulate":
            if args.seed is None:
                args.seed = _opt(cfg, "seed")
            if args.seed is None:
                args.seed = secrets.randbits(32)
                print(f"seed={args.seed}", file=stderr)
            report["seed"] = args.seed
        handler, plot_kind = HANDLERS[args.command]
        result, plot = handler(cfg, args)
        report["result"] = result
        try:
            jsonschema.validate(report, REPORT_SCHEMA)
        except jsonschema.ValidationError as e:
            raise InvariantError(f"report failed its schema: {e.message}") from None
        text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            stdout.write(text)
        if args.csv and plot_kind is not None:
            emit_plot_data(plot, plot_kind, args.csv)
        return EXIT_OK
    except (ValidationError, jsonschema.ValidationError) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_INVALID
    except (equilibrium.ScaleLimitError, simulation.EnumerationLimitError) as e:
        print(f"limit: {e}", file=stderr)
        return EXIT_LIMIT
    except (InvariantError, AssertionError) as e:
        print(f"invariant failure: {e}", file=stderr)
        return EXIT_INVARIANT


def _json_default(x: Any) -> Any:
    if hasattr(x, "to_dict"):
        return x.to_dict()
    if hasattr(x, "item"):
        return x.item()
    if hasattr(x, "value"):
        return x.value
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
