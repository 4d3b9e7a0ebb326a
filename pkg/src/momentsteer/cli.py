"""Command-line front end: scenario-driven simulate / plan / track / validate
pipelines emitting plot-ready CSV files and JSON summaries.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 threshold
violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError, SolverError
from .ensembles import ControlSignal, Kuramoto, simulate, mean_field
from .measures import (
    CDFTable,
    pushforward,
    sample_empirical,
    wasserstein,
    wasserstein_to_point_circular,
)
from .moments import (
    FOURIER,
    MONOMIAL_OUTPUT,
    MONOMIAL_PARAM,
    moment_metric_values,
    moments_density,
    moments_fourier,
    moments_output,
)
from .moment_systems import build_linear_moment_system
from .scenario import Scenario, load_scenario
from .tracking import (
    LQSetup,
    direct_shooting,
    exact_tracking_feedback,
    lq_tracking_tpbvp,
    terminal_profile_guess,
    tpbvp_ode_residual,
    tpbvp_optimality_gap,
)

__all__ = ["main"]


class ThresholdViolation(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _moment_header(q: int, prefix: str) -> list:
    cols = []
    for k in range(q + 1):
        cols += [f"{prefix}{k}_re", f"{prefix}{k}_im"]
    return cols


def _complex_row(vals) -> list:
    out = []
    for v in np.atleast_1d(vals):
        out += [float(np.real(v)), float(np.imag(v))]
    return out


def cmd_simulate(scn: Scenario, out: Path) -> int:
    model = scn.build_model()
    grid = scn.build_grid()
    x0 = scn.initial_state(grid)
    control = ControlSignal.zeros(model.n_inputs, scn.horizon)
    traj = simulate(model, x0, grid, control, scn.dt)
    header = ["t"] + [f"member_{j}" for j in range(grid.size)]
    rows = (np.concatenate([[t], s]) for t, s in zip(traj.times, traj.states))
    _write_csv(out / "trajectory.csv", header, rows)
    return 0


def cmd_plan(scn: Scenario, out: Path) -> int:
    grid = scn.build_grid()
    _, ref = scn.build_reference(grid)
    header = ["t"] + _moment_header(scn.q, "m") + _moment_header(scn.q, "dm")
    rows = (
        [t] + _complex_row(m) + _complex_row(dm)
        for t, m, dm in zip(ref.time_grid, ref.m_star, ref.dm_star)
    )
    _write_csv(out / "reference.csv", header, rows)
    return 0


def _check_thresholds(scn: Scenario, summary: dict) -> list:
    failures = []
    th = scn.thresholds
    if "max_residual" in th and summary["max_residual"] > th["max_residual"]:
        failures.append("max_residual")
    if "boundary_residual" in th:
        worst = max(
            summary.get("boundary_residual_start", 0.0),
            summary.get("boundary_residual_end", 0.0),
        )
        if worst > th["boundary_residual"]:
            failures.append("boundary_residual")
    if "final_order_parameter" in th and (
        summary.get("final_order_parameter", 1.0) < th["final_order_parameter"]
    ):
        failures.append("final_order_parameter")
    if "cost" in th and summary["cost"] > th["cost"]:
        failures.append("cost")
    return failures


def cmd_track(scn: Scenario, out: Path) -> int:
    t_start = time.monotonic()
    model = scn.build_model()
    grid = scn.build_grid()
    x0 = scn.initial_state(grid)
    method = scn.solver["method"]

    if method in ("exact", "tpbvp"):
        if scn.basis != MONOMIAL_PARAM:
            raise ConfigError(f"solver '{method}' tracks labeled density moments "
                              "(basis must be monomial_param)")
        if isinstance(model, Kuramoto):
            raise ConfigError(f"solver '{method}' needs the linear model")
        n_steps = int(round(scn.horizon / scn.dt))
        tgrid = np.linspace(0.0, scn.horizon, n_steps + 1)
        _, ref = scn.build_reference(grid, tgrid)
        sys_ = build_linear_moment_system(scn.q, model.n_inputs)
        if method == "exact":
            result = exact_tracking_feedback(sys_, ref, ref.m_star[0].real, scn.dt)
        else:
            setup = LQSetup(
                float(scn.solver.get("r_scale", 1.0)) * np.eye(model.n_inputs),
                ref.m_star[0].real,
                ref.m_star[-1].real,
            )
            result = lq_tracking_tpbvp(sys_, ref, setup, scn.dt)
            if scn.solver.get("verify", False):
                result.info["ode_residual"] = tpbvp_ode_residual(sys_, setup, ref, result)
                result.info["optimality_gap"] = tpbvp_optimality_gap(sys_, ref, setup, result)
    else:
        intervals = int(scn.solver.get("intervals", 50))
        tgrid = np.linspace(0.0, scn.horizon, intervals + 1)
        # the optimizer may run on a coarser member grid; for the linear
        # family the control generalizes exactly (members are uncoupled),
        # for the mean-field model it is a quadrature refinement
        opt_members = int(scn.solver.get("optimize_members", grid.size))
        if opt_members != grid.size:
            opt_grid = scn.build_grid_with(opt_members)
            opt_x0 = scn.initial_state(opt_grid)
        else:
            opt_grid, opt_x0 = grid, x0
        _, ref = scn.build_reference(opt_grid, tgrid)
        guess_kind = scn.solver.get("initial_guess", "zero")
        if guess_kind == "terminal_profile":
            if isinstance(model, Kuramoto):
                raise ConfigError("terminal_profile guesses apply to the linear model")
            from .measures import cdf, quantile

            mu1 = scn.resolve_measure(scn.target, "target")
            target_profile = np.asarray(
                quantile(cdf(mu1), scn.member_levels(opt_grid)), dtype=float)
            guess = terminal_profile_guess(
                model, opt_grid, opt_x0, target_profile, scn.horizon, intervals,
                float(scn.solver.get("guess_ridge", 1e-4)),
            )
        elif guess_kind == "zero":
            guess = None
        else:
            raise ConfigError(f"unknown initial_guess '{guess_kind}'")
        result = direct_shooting(
            model,
            opt_grid,
            opt_x0,
            scn.basis,
            scn.q,
            ref,
            n_intervals=intervals,
            energy_weight=float(scn.solver.get("energy_weight", 1e-3)),
            iterations=int(scn.solver.get("iterations", 300)),
            dt=scn.solver.get("optimize_dt"),
            initial_guess=guess,
        )

    # replay the synthesized control on the ensemble at full resolution
    traj = simulate(model, x0, grid, result.control, scn.dt)

    _write_csv(
        out / "control.csv",
        ["t"] + [f"u_{i}" for i in range(1, result.control.n_inputs + 1)],
        (np.concatenate([[t], u]) for t, u in
         zip(result.control.time_grid[:-1], result.control.values)),
    )
    _write_csv(
        out / "moments.csv",
        ["t"] + _moment_header(scn.q, "m"),
        ([t] + _complex_row(m) for t, m in zip(result.times, result.moments)),
    )
    _write_csv(
        out / "residual.csv",
        ["t", "residual"],
        ((t, r) for t, r in zip(result.times, result.residuals)),
    )
    header = ["t"] + [f"member_{j}" for j in range(grid.size)]
    _write_csv(out / "trajectory.csv", header,
               (np.concatenate([[t], s]) for t, s in zip(traj.times, traj.states)))

    summary = {
        "method": method,
        "cost": result.cost,
        "max_residual": float(np.max(result.residuals)),
        "final_residual": float(result.residuals[-1]),
        "converged": bool(result.converged),
        "runtime_s": time.monotonic() - t_start,
    }
    for key in ("boundary_residual_start", "boundary_residual_end", "matching_condition",
                "hht_condition", "ode_residual", "optimality_gap", "iterations"):
        if key in result.info:
            summary[key] = float(result.info[key])
    if isinstance(model, Kuramoto):
        r_final, _ = mean_field(traj.states[-1], grid)
        summary["final_order_parameter"] = float(r_final)
    failures = _check_thresholds(scn, summary)
    summary["threshold_failures"] = failures
    _write_json(out / "summary.json", summary)
    if failures:
        raise ThresholdViolation(", ".join(failures))
    return 0


def _target_power_moments(target, q: int) -> np.ndarray:
    from .measures import EmpiricalMeasure

    if isinstance(target, EmpiricalMeasure):
        return moments_output(target, q).values
    return moments_density(target, q).values  # identity output: same integral


def _final_states_from_csv(path: Path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("t,"):
            raise ConfigError(f"{path} is not a trajectory file")
        last = None
        for line in fh:
            if line.strip():
                last = line
    if last is None:
        raise ConfigError(f"{path} contains no data rows")
    return np.array([float(v) for v in last.strip().split(",")])[1:]


def cmd_validate(scn: Scenario, out: Path, results: Path, seed: int | None) -> int:
    grid = scn.build_grid()
    final = _final_states_from_csv(results / "trajectory.csv")
    if final.size != grid.size:
        raise ConfigError("trajectory members do not match the scenario grid")
    if scn.target is None:
        raise ConfigError("missing required field 'target' in scenario")
    rng = np.random.default_rng(scn.seed if seed is None else seed)
    payload: dict = {"basis": scn.basis}

    if scn.basis == FOURIER:
        theta_star = float(scn.target["value"])
        mu_final = pushforward(grid, np.mod(final, 2 * np.pi))
        sampled = sample_empirical(mu_final, scn.samples, rng)
        payload["w2"] = wasserstein_to_point_circular(sampled, theta_star)
        m_final = moments_fourier(mu_final, scn.q)
        m_target = np.exp(-1j * theta_star * np.arange(scn.q + 1))
        payload["d_m"] = moment_metric_values(m_final.values, m_target)
        r_final, _ = mean_field(final, grid)
        payload["final_order_parameter"] = float(r_final)
    elif scn.basis == MONOMIAL_OUTPUT:
        target = scn.resolve_measure(scn.target, "target")
        mu_final = pushforward(grid, final)
        sampled = sample_empirical(mu_final, scn.samples, rng)
        payload["w2"] = wasserstein(sampled, target)
        m_final = moments_output(mu_final, scn.q)
        m_target = _target_power_moments(target, scn.q)
        payload["d_m"] = moment_metric_values(m_final.values, m_target)
    else:
        target = scn.resolve_measure(scn.target, "target")
        clipped = np.clip(final, 0.0, None)
        payload["clipped_negative_mass"] = float(np.sum(final - clipped) * -1)
        inc = np.concatenate(
            [[0.0], np.cumsum((clipped[1:] + clipped[:-1]) / 2 * np.diff(grid.nodes))])
        total = inc[-1]
        if total <= 0:
            raise SolverError("final labeled profile has no mass")
        F_final = CDFTable(grid.nodes, np.minimum(inc / total, 1.0))
        payload["w2"] = wasserstein(F_final, target)
        ks = np.arange(scn.q + 1)
        m_final = (grid.nodes[None, :] ** ks[:, None] * final) @ grid.weights
        m_target = moments_density(target, scn.q)
        payload["d_m"] = moment_metric_values(m_final, m_target.values)

    threshold = scn.thresholds.get("w2")
    payload["threshold_w2"] = threshold
    payload["passed"] = bool(threshold is None or payload["w2"] <= threshold)
    _write_json(out / "validation.json", payload)
    if not payload["passed"]:
        raise ThresholdViolation(f"w2 {payload['w2']:.6g} above {threshold:.6g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="momentsteer",
        description="Distributional control pipelines for parameterized ensembles",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "plan", "track", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="sampling seed override")
        if name == "validate":
            sp.add_argument("--results", default=None,
                            help="directory holding trajectory.csv (default: --out)")
    args = parser.parse_args(argv)

    try:
        scn = load_scenario(args.scenario)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(scn, out)
        if args.command == "plan":
            return cmd_plan(scn, out)
        if args.command == "track":
            return cmd_track(scn, out)
        results = Path(args.results) if args.results else out
        return cmd_validate(scn, out, results, args.seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ThresholdViolation as exc:
        print(f"threshold violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
